mod common;

use confaudit::metrics::MetricKind;
use confaudit::reconstruct::ReportedMetrics;
use confaudit::rules::{check_result, evaluate_result, ConsistencyVerdict, Rule, Tolerances, VerdictTag};
use confaudit::{MetricRegistry, ReportedResult};
use proptest::prelude::*;
use proptest::sample::subsequence;

use common::fixtures::oracle_value;
use common::{q, round_to, Counts};

fn counts() -> impl Strategy<Value = Counts> {
    (1u64..150, 1u64..150, 1u64..150, 1u64..150).prop_map(|(a, b, c, d)| Counts::new(a, b, c, d))
}

fn result_from(c: &Counts, kinds: &[MetricKind], places: Option<u32>) -> ReportedResult {
    let mut m = ReportedMetrics::new();
    for &k in kinds {
        let v = oracle_value(c, k);
        m.insert(k, places.map_or(v.clone(), |p| round_to(&v, p)));
    }
    ReportedResult::new("p", "r", m)
}

fn rules_of(v: &ConsistencyVerdict) -> Vec<Rule> {
    v.violations().iter().map(|x| x.rule).collect()
}

/// Arbitrary reported values on a hundredths grid, some outside their range.
fn arbitrary_result() -> impl Strategy<Value = ReportedResult> {
    (
        proptest::collection::btree_map(proptest::sample::select(MetricKind::ALL.to_vec()), -20i64..=130, 0..=5),
        proptest::option::of(Just("manually flagged".to_string())),
    )
        .prop_map(|(values, note)| {
            let mut m = ReportedMetrics::new();
            for (k, v) in values {
                m.insert(k, q(v, 100));
            }
            let r = ReportedResult::new("p", "r", m);
            match note {
                Some(n) => r.with_annotation(n),
                None => r,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_reports_are_never_accused(c in counts(), kinds in subsequence(MetricKind::ALL.to_vec(), 1..=8)) {
        let verdict = check_result(&result_from(&c, &kinds, None), &Tolerances::default());
        prop_assert!(!verdict.is_inconsistent(), "{c:?} {kinds:?}: {verdict:?}");
    }

    #[test]
    fn two_place_rounding_is_never_accused(c in counts(), places in 2u32..=3) {
        use MetricKind::*;
        let kinds = [Precision, Recall, Fpr, FMeasure, Mcc, DefectDensity];
        let verdict = check_result(&result_from(&c, &kinds, Some(places)), &Tolerances::default());
        prop_assert_eq!(verdict, ConsistencyVerdict::ConsistentChecked, "{:?}", c);
    }

    #[test]
    fn verdicts_partition_results(r in arbitrary_result()) {
        let check = evaluate_result(&r, &Tolerances::default(), &MetricRegistry::default());
        let tag = check.verdict.tag();
        prop_assert_eq!(tag == VerdictTag::Inconsistent, !check.verdict.violations().is_empty());
        if tag == VerdictTag::NotCheckable {
            prop_assert!(check.reconstruction.is_underdetermined());
        }
        if tag == VerdictTag::ConsistentChecked {
            prop_assert!(check.reconstruction.is_unique());
        }
    }

    #[test]
    fn out_of_range_values_trigger_rule_1(r in arbitrary_result()) {
        let out_of_range = r.metrics.all_values().any(|(k, v)| {
            let lo = if k == MetricKind::Mcc { q(-1, 1) } else { q(0, 1) };
            *v < lo || *v > q(1, 1)
        });
        let rules = rules_of(&check_result(&r, &Tolerances::default()));
        prop_assert_eq!(out_of_range, rules.contains(&Rule::Range));
    }

    #[test]
    fn annotations_always_trigger_rule_6(r in arbitrary_result()) {
        let rules = rules_of(&check_result(&r, &Tolerances::default()));
        prop_assert_eq!(r.rule6_annotation.is_some(), rules.contains(&Rule::Manual));
    }

    #[test]
    fn verdicts_do_not_depend_on_identifiers(r in arbitrary_result(), paper in "[A-Z]{1,4}", id in "[0-9]{1,3}") {
        let mut renamed = r.clone();
        renamed.paper_id = paper;
        renamed.result_id = id;
        prop_assert_eq!(check_result(&r, &Tolerances::default()), check_result(&renamed, &Tolerances::default()));
    }
}

#[test]
fn zero_density_is_rule_2() {
    // All-negative matrix: recall and precision undefined, FPR 1/4. Only a
    // zero density tolerance pins it; at 0.1 the density could reach 0.1.
    let m = ReportedMetrics::new().with(MetricKind::Fpr, q(1, 4)).with(MetricKind::Accuracy, q(3, 4)).with_density(q(0, 1));
    let r = ReportedResult::new("p", "r", m);
    let exact = Tolerances { metric: q(0, 1), density: q(0, 1) };
    assert_eq!(rules_of(&check_result(&r, &exact)), vec![Rule::ZeroDensity]);
    assert_eq!(check_result(&r, &Tolerances::default()), ConsistencyVerdict::NotCheckable);
}

#[test]
fn density_off_by_more_than_tolerance_is_rule_3() {
    // 1/1/1/3 has density 1/3.
    let c = Counts::new(1, 1, 1, 3);
    let mut r = result_from(&c, &[MetricKind::Precision, MetricKind::Recall, MetricKind::Fpr], None);
    r.metrics = r.metrics.clone().with_density(q(1, 3) + q(11, 100));
    assert_eq!(rules_of(&check_result(&r, &Tolerances::default())), vec![Rule::DensityMismatch]);
    r.metrics = r.metrics.clone().with_density(q(1, 3) + q(9, 100));
    assert_eq!(check_result(&r, &Tolerances::default()), ConsistencyVerdict::ConsistentChecked);
}

#[test]
fn contradicted_extra_metric_is_rule_4() {
    let c = Counts::new(1, 1, 1, 3);
    let mut r = result_from(&c, &[MetricKind::Precision, MetricKind::Recall, MetricKind::Fpr], None);
    r.metrics.insert(MetricKind::Accuracy, c.accuracy() + q(6, 100));
    assert!(rules_of(&check_result(&r, &Tolerances::default())).contains(&Rule::MetricMismatch));
    r.metrics.insert(MetricKind::Accuracy, c.accuracy() + q(4, 100));
    assert_eq!(check_result(&r, &Tolerances::default()), ConsistencyVerdict::ConsistentChecked);
}

#[test]
fn ill_conditioned_rounding_is_not_accused() {
    // Recall 1/18 and FPR 1/41 round to 0.06 and 0.02; the matrix solved from
    // precision, recall and FPR then misses accuracy by more than 0.05.
    let c = Counts::new(1, 17, 1, 40);
    let r = result_from(&c, &MetricKind::ALL, Some(2));
    assert_eq!(check_result(&r, &Tolerances::default()), ConsistencyVerdict::ConsistentChecked);
}
