mod common;

use std::sync::OnceLock;

use confaudit::metrics::{ConfusionMatrix, MetricKind};
use confaudit::number::{to_f64, Rational};
use confaudit::reconstruct::{
    closed_form_prf, feasibility_search, reconstruct, round_trip_verify, ReconstructionOutcome, ReportedMetrics,
};
use confaudit::rules::Tolerances;
use num_traits::Signed;
use proptest::prelude::*;
use proptest::sample::subsequence;

use common::fixtures::oracle_value;
use common::{enumerate_all, enumerate_positive, q, round_to, Counts, Q};

const SEARCH_GRID: u32 = 1000;

fn tolerances(t: &Q) -> Tolerances {
    Tolerances { metric: t.clone(), density: t.clone() }
}

fn counts() -> impl Strategy<Value = Counts> {
    (1u64..60, 1u64..60, 1u64..60, 1u64..60).prop_map(|(a, b, c, d)| Counts::new(a, b, c, d))
}

fn tolerance() -> impl Strategy<Value = Q> {
    prop_oneof![Just(q(0, 1)), Just(q(1, 1000)), Just(q(1, 100)), Just(q(1, 20))]
}

/// Metrics reported from a matrix, exact (`None`) or rounded to some places.
fn rounded_report() -> impl Strategy<Value = (Counts, ReportedMetrics, Option<u32>)> {
    (counts(), subsequence(MetricKind::ALL.to_vec(), 1..=4), prop_oneof![Just(None), Just(Some(2u32)), Just(Some(3))])
        .prop_map(|(c, kinds, places)| {
            let mut r = ReportedMetrics::new();
            for k in kinds {
                let v = oracle_value(&c, k);
                r.insert(k, places.map_or(v.clone(), |p| round_to(&v, p)));
            }
            (c, r, places)
        })
}

fn report() -> impl Strategy<Value = (Counts, ReportedMetrics)> {
    rounded_report().prop_map(|(c, r, _)| (c, r))
}

/// Reports with arbitrary values, many of them infeasible.
fn arbitrary_report() -> impl Strategy<Value = ReportedMetrics> {
    proptest::collection::btree_map(proptest::sample::select(MetricKind::ALL.to_vec()), 0i64..=100, 1..=4).prop_map(|m| {
        let mut r = ReportedMetrics::new();
        for (k, v) in m {
            let v = if k == MetricKind::Mcc { q(2 * v - 100, 100) } else { q(v, 100) };
            r.insert(k, v);
        }
        r
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn unique_outcomes_round_trip((_, reported) in report(), t in tolerance()) {
        if let ReconstructionOutcome::Unique { matrix, .. } = reconstruct(&reported, &tolerances(&t)) {
            prop_assert!(round_trip_verify(&matrix, &reported, &t));
            prop_assert!(matrix.defects().is_empty());
        }
    }

    #[test]
    fn exact_reports_are_never_infeasible((_, reported, places) in rounded_report(), t in tolerance()) {
        // MCC carries six-place rounding, so a zero tolerance is excluded.
        prop_assume!(places.is_none() && t > q(0, 1));
        let outcome = reconstruct(&reported, &tolerances(&t));
        prop_assert!(!outcome.is_infeasible(), "{outcome:?}");
    }

    #[test]
    fn infeasibility_is_monotone_in_tolerance(reported in arbitrary_report(), a in tolerance(), b in tolerance()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if reconstruct(&reported, &tolerances(&hi)).is_infeasible() {
            prop_assert!(reconstruct(&reported, &tolerances(&lo)).is_infeasible());
        }
    }

    #[test]
    fn underdetermined_density_contains_the_truth((c, reported) in report(), t in tolerance()) {
        let tol = tolerances(&t);
        if let ReconstructionOutcome::Underdetermined { density } = feasibility_search(&reported, &tol, SEARCH_GRID) {
            if satisfies(&exact_matrix(&c), &reported, &t) {
                prop_assert!(density.contains(&c.density()), "{density} misses {}", c.density());
            }
        }
    }
}

fn exact_matrix(c: &Counts) -> ConfusionMatrix {
    ConfusionMatrix::counts(c.tp, c.fn_, c.fp, c.tn).expect("valid").normalize()
}

fn satisfies(m: &ConfusionMatrix, reported: &ReportedMetrics, t: &Q) -> bool {
    let density_ok = reported.density().map_or(true, |d| {
        let recomputed = m.tp() + m.fn_();
        (recomputed - d).abs() <= *t
    });
    density_ok && round_trip_verify(m, reported, t)
}

/// Every matrix with N ≤ 60 and its metric values as floats (NaN when undefined).
struct Table {
    counts: Vec<Counts>,
    values: Vec<[f64; 8]>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let counts = enumerate_all(60);
        let values = counts
            .iter()
            .map(|c| {
                let (tp, fn_, fp, tn) = (c.tp as f64, c.fn_ as f64, c.fp as f64, c.tn as f64);
                let n = tp + fn_ + fp + tn;
                let div = |a: f64, b: f64| if b == 0.0 { f64::NAN } else { a / b };
                let p = div(tp, tp + fp);
                let r = div(tp, tp + fn_);
                let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
                MetricKind::ALL.map(|k| match k {
                    MetricKind::Recall => r,
                    MetricKind::Precision => p,
                    MetricKind::Fpr => div(fp, fp + tn),
                    MetricKind::FMeasure => div(2.0 * p * r, p + r),
                    MetricKind::Mcc => div(tp * tn - fp * fn_, den),
                    MetricKind::Accuracy => (tp + tn) / n,
                    MetricKind::Specificity => div(tn, fp + tn),
                    MetricKind::DefectDensity => (tp + fn_) / n,
                })
            })
            .collect();
        Table { counts, values }
    })
}

/// Matrices with N ≤ 60 satisfying the report: screened in floating point
/// with a small margin, then confirmed exactly.
fn satisfying_matrices(reported: &ReportedMetrics, t: &Q) -> Vec<ConfusionMatrix> {
    let t64 = to_f64(t) + 1e-9;
    let targets: Vec<(usize, f64)> = reported
        .all_values()
        .map(|(k, v)| (MetricKind::ALL.iter().position(|x| *x == k).expect("listed"), to_f64(v)))
        .collect();
    let data = table();
    data.counts
        .iter()
        .zip(&data.values)
        .filter(|(_, vals)| targets.iter().all(|(i, v)| (vals[*i] - v).abs() <= t64))
        .map(|(c, _)| exact_matrix(c))
        .filter(|m| satisfies(m, reported, t))
        .collect()
}

fn max_cell_spread(ms: &[ConfusionMatrix]) -> Rational {
    (0..4)
        .map(|i| {
            let lo = ms.iter().map(|m| &m.cells()[i]).min().expect("non-empty");
            let hi = ms.iter().map(|m| &m.cells()[i]).max().expect("non-empty");
            hi - lo
        })
        .max()
        .expect("four cells")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_is_not_unique_when_distant_matrices_fit(
        (_, reported) in report(),
        t in prop_oneof![Just(q(0, 1)), Just(q(1, 1000)), Just(q(1, 100))],
    ) {
        let outcome = feasibility_search(&reported, &tolerances(&t), SEARCH_GRID);
        let fits = satisfying_matrices(&reported, &t);
        // The grid cannot separate matrices closer than one grid step.
        let resolution = std::cmp::max(t.clone(), q(1, SEARCH_GRID as i64));
        if fits.len() >= 2 && max_cell_spread(&fits) > resolution {
            prop_assert!(!outcome.is_unique(), "{} fitting matrices, outcome {outcome:?}", fits.len());
        }
        if !fits.is_empty() {
            prop_assert!(!outcome.is_infeasible(), "{} fitting matrices, outcome {outcome:?}", fits.len());
        }
    }
}

#[test]
fn closed_form_recovers_every_small_matrix() {
    for c in enumerate_positive(30) {
        let m = closed_form_prf(&c.precision(), &c.recall(), &c.fpr()).expect("interior values");
        assert_eq!(m.cells()[..], c.normalized()[..], "{c:?}");
    }
}

#[test]
fn closed_form_matches_brute_force_family() {
    // Matrices with N ≤ 24 reporting precision = recall = 1/2 and FPR = 1/4.
    let hits: Vec<Counts> = enumerate_all(24)
        .into_iter()
        .filter(|c| {
            c.tp + c.fp > 0 && c.tp + c.fn_ > 0 && c.fp + c.tn > 0
                && c.precision() == q(1, 2)
                && c.recall() == q(1, 2)
                && c.fpr() == q(1, 4)
        })
        .collect();
    assert_eq!(hits.len(), 4);
    assert!(hits.iter().all(|c| c.normalized() == Counts::new(1, 1, 1, 3).normalized()));
    let m = closed_form_prf(&q(1, 2), &q(1, 2), &q(1, 4)).unwrap();
    assert_eq!(m.cells()[..], hits[0].normalized()[..]);
}

#[test]
fn balanced_report_has_a_balanced_search_solution() {
    // Brute force: matrices with N ≤ 200 where F, accuracy and density are all 1/2.
    let mut found = Vec::new();
    for n in (4..=200u64).step_by(2) {
        for tp in 0..=n / 2 {
            let fn_ = n / 2 - tp;
            for fp in 0..=n / 2 {
                let tn = n / 2 - fp;
                let c = Counts::new(tp, fn_, fp, tn);
                if tp + tn == n / 2 && 4 * tp == 2 * tp + fp + fn_ {
                    found.push(c);
                }
            }
        }
    }
    assert!(!found.is_empty());
    assert!(found.iter().all(|c| c.normalized() == [q(1, 4), q(1, 4), q(1, 4), q(1, 4)]));
    let reported = ReportedMetrics::new()
        .with(MetricKind::FMeasure, q(1, 2))
        .with(MetricKind::Accuracy, q(1, 2))
        .with_density(q(1, 2));
    match feasibility_search(&reported, &tolerances(&q(0, 1)), 10_000) {
        ReconstructionOutcome::Unique { matrix, .. } => assert_eq!(matrix.cells()[..], found[0].normalized()[..]),
        other => panic!("{other:?}"),
    }
}
