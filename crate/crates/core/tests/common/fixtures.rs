//! Generated corpora for the acceptance and corpus tests.

use std::fmt::Write as _;
use std::path::Path;

use confaudit::metrics::MetricKind;
use confaudit::nhst::{AdjustmentClaim, AdjustmentMethod, NhstRecord};
use confaudit::reconstruct::ReportedMetrics;
use confaudit::ReportedResult;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{q, round_to, Counts, Q};

pub fn random_counts(rng: &mut ChaCha8Rng, max_cell: u64) -> Counts {
    Counts::new(rng.gen_range(1..=max_cell), rng.gen_range(1..=max_cell), rng.gen_range(1..=max_cell), rng.gen_range(1..=max_cell))
}

/// Exact value of a metric computed by the oracle; MCC is rounded to six places.
pub fn oracle_value(c: &Counts, kind: MetricKind) -> Q {
    match kind {
        MetricKind::Recall => c.recall(),
        MetricKind::Precision => c.precision(),
        MetricKind::Fpr => c.fpr(),
        MetricKind::Specificity => c.specificity(),
        MetricKind::FMeasure => c.f_measure(),
        MetricKind::Accuracy => c.accuracy(),
        MetricKind::DefectDensity => c.density(),
        MetricKind::Mcc => c.mcc_rounded(6),
    }
}

/// Determining metric sets paired with the metrics that may be reported
/// alongside them and checked against the matrix they fix.
fn templates() -> Vec<(Vec<MetricKind>, Vec<MetricKind>)> {
    use MetricKind::*;
    vec![
        (vec![Recall, Precision, Fpr], vec![Specificity, FMeasure, Accuracy, Mcc, DefectDensity]),
        (vec![Recall, Precision, Specificity], vec![FMeasure, Accuracy, Mcc, DefectDensity]),
        (vec![Recall, Fpr, FMeasure], vec![Accuracy, Mcc, DefectDensity]),
    ]
}

pub struct Planted {
    pub control: ReportedResult,
    pub perturbed: ReportedResult,
    pub target: MetricKind,
    pub shift: Q,
}

/// `count` clean determined results, each paired with a copy in which one
/// checked metric is moved by more than its tolerance plus 0.005.
pub fn planted_errors(rng: &mut ChaCha8Rng, count: usize, metric_tol: &Q, density_tol: &Q) -> Vec<Planted> {
    let templates = templates();
    (0..count)
        .map(|i| {
            let counts = random_counts(rng, 200);
            let (inputs, extras) = templates.choose(rng).expect("templates").clone();
            let mut checked: Vec<MetricKind> = extras.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
            if checked.is_empty() {
                checked.push(*extras.choose(rng).expect("extras"));
            }
            let mut metrics = ReportedMetrics::new();
            for kind in inputs.iter().chain(&checked) {
                metrics.insert(*kind, oracle_value(&counts, *kind));
            }
            let target = *checked.choose(rng).expect("checked");
            let tol = if target == MetricKind::DefectDensity { density_tol } else { metric_tol };
            let margin = tol + q(5, 1000) + q(rng.gen_range(1..=1000), 10_000);
            let shift = if rng.gen_bool(0.5) { margin } else { -margin };
            let mut bad = metrics.clone();
            let original = bad.remove(target).expect("target reported");
            bad.insert(target, &original + &shift);
            let id = format!("r{i:05}");
            Planted {
                control: ReportedResult::new("planted", format!("{id}-clean"), metrics),
                perturbed: ReportedResult::new("planted", format!("{id}-bad"), bad),
                target,
                shift,
            }
        })
        .collect()
}

pub fn clean_result(rng: &mut ChaCha8Rng, paper: &str, id: &str) -> ReportedResult {
    let c = random_counts(rng, 120);
    let m = ReportedMetrics::new()
        .with(MetricKind::Precision, round_to(&c.precision(), 3))
        .with(MetricKind::Recall, round_to(&c.recall(), 3))
        .with(MetricKind::Fpr, round_to(&c.fpr(), 3))
        .with(MetricKind::FMeasure, round_to(&c.f_measure(), 3))
        .with_density(round_to(&c.density(), 3));
    ReportedResult::new(paper, id, m)
}

pub fn inconsistent_result(rng: &mut ChaCha8Rng, paper: &str, id: &str) -> ReportedResult {
    let mut r = clean_result(rng, paper, id);
    if rng.gen_bool(0.5) {
        r.metrics.insert(MetricKind::Mcc, q(6, 5));
    } else {
        let f = r.metrics.remove(MetricKind::FMeasure).expect("reported");
        let moved = if f > q(1, 2) { f - q(3, 10) } else { f + q(3, 10) };
        r.metrics.insert(MetricKind::FMeasure, moved);
    }
    r
}

pub fn unchecked_result(rng: &mut ChaCha8Rng, paper: &str, id: &str) -> ReportedResult {
    let c = random_counts(rng, 120);
    let m = if rng.gen_bool(0.5) {
        ReportedMetrics::new().with(MetricKind::Recall, round_to(&c.recall(), 3))
    } else {
        ReportedMetrics::new()
            .with(MetricKind::Precision, round_to(&c.precision(), 3))
            .with(MetricKind::Recall, round_to(&c.recall(), 3))
    };
    ReportedResult::new(paper, id, m)
}

pub fn nhst_record(paper: &str, n_tests: u64, claims: &[(AdjustmentMethod, u64)]) -> NhstRecord {
    let claims =
        claims.iter().map(|(method, tests_covered)| AdjustmentClaim { method: method.clone(), tests_covered: *tests_covered }).collect();
    NhstRecord::new(paper, n_tests, q(1, 20), claims, None).expect("valid record")
}

pub struct SyntheticCorpus {
    pub results: Vec<ReportedResult>,
    pub nhst: Vec<NhstRecord>,
}

/// 49 papers: 16 with an inconsistent result, 19 consistent, 14 with no
/// checkable result. Seven use NHST without full adjustment (one, three
/// and three in those groups), five adjust fully and one runs a single test.
pub fn synthetic_49(rng: &mut ChaCha8Rng) -> SyntheticCorpus {
    use AdjustmentMethod::*;
    let mut results = Vec::new();
    let mut nhst = Vec::new();
    for i in 1..=49u32 {
        let paper = format!("P{i:02}");
        let k = rng.gen_range(1..=3);
        for j in 0..k {
            let id = format!("{j}");
            let r = match i {
                1..=16 if j == 0 => inconsistent_result(rng, &paper, &id),
                1..=35 => clean_result(rng, &paper, &id),
                _ => unchecked_result(rng, &paper, &id),
            };
            results.push(r);
        }
        let record = match i {
            1 | 17 | 18 | 36 | 37 | 38 => Some(nhst_record(&paper, rng.gen_range(2..=2000), &[])),
            19 => Some(nhst_record(&paper, 184, &[(Nemenyi, 100)])),
            2 | 20 | 39 => Some(nhst_record(&paper, 100, &[(BenjaminiHochberg, 100)])),
            3 => Some(nhst_record(&paper, 150, &[(Nemenyi, 100), (Bonferroni, 50)])),
            21 => Some(nhst_record(&paper, 12, &[(Bonferroni, 12)])),
            22 => Some(nhst_record(&paper, 1, &[])),
            _ => None,
        };
        nhst.extend(record);
    }
    results.shuffle(rng);
    SyntheticCorpus { results, nhst }
}

/// Exact decimal rendering; panics if `x` needs more than six places.
pub fn decimal(x: &Q) -> String {
    let scale = Q::from_integer(1_000_000.into());
    let scaled = x.abs() * &scale;
    assert!(scaled.is_integer(), "{x} is not a six-place decimal");
    let n = scaled.to_integer();
    let million = num_bigint::BigInt::from(1_000_000);
    let (int, frac) = (&n / &million, &n % &million);
    let sign = if x.is_negative() { "-" } else { "" };
    let frac = format!("{:0>6}", frac.to_string());
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Writes results in the documented CSV schema. Values are rounded to six places.
pub fn write_results_csv(path: &Path, results: &[ReportedResult]) {
    let columns = ["recall", "precision", "fpr", "f_measure", "mcc", "accuracy", "specificity"];
    let mut s = String::from("paper_id,result_id,dataset_name,");
    s.push_str(&columns.join(","));
    s.push_str(",reported_density,n,rule6_annotation\n");
    let cell = |v: Option<&Q>| v.map(|v| decimal(&round_to(v, 6))).unwrap_or_default();
    for r in results {
        let _ = write!(s, "{},{},{},", r.paper_id, r.result_id, r.dataset_name.clone().unwrap_or_default());
        let values: Vec<String> =
            columns.iter().map(|c| cell(r.metrics.get(MetricKind::from_name(c).expect("metric")))).collect();
        s.push_str(&values.join(","));
        let n = r.metrics.dataset_size().map(|n| n.to_string()).unwrap_or_default();
        let _ = writeln!(s, ",{},{},{}", cell(r.metrics.density()), n, r.rule6_annotation.clone().unwrap_or_default());
    }
    std::fs::write(path, s).expect("write results");
}

pub fn write_nhst_csv(path: &Path, records: &[NhstRecord]) {
    let mut s = String::from("paper_id,n_tests,alpha,adjustment_method,tests_covered,p_values\n");
    for r in records {
        let alpha = decimal(r.alpha());
        if r.claims().is_empty() {
            let _ = writeln!(s, "{},{},{},,,", r.paper_id(), r.n_tests(), alpha);
        }
        for c in r.claims() {
            let _ = writeln!(s, "{},{},{},{},{},", r.paper_id(), r.n_tests(), alpha, c.method, c.tests_covered);
        }
    }
    std::fs::write(path, s).expect("write nhst");
}
