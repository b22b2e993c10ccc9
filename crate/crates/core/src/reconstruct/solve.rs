use num_traits::{One, Zero};

use super::ReportedMetrics;
use crate::metrics::MetricKind;
use crate::number::Rational;

/// Cells `(tp, fn, fp, tn)` solved exactly, with the metrics that determined them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub cells: [Rational; 4],
    pub inputs: Vec<MetricKind>,
}

/// Order in which reported metrics are taken as inputs. Density comes last
/// so that it stays available as an independent check whenever possible.
const INPUT_PRIORITY: [MetricKind; 7] = [
    MetricKind::Recall,
    MetricKind::Precision,
    MetricKind::Fpr,
    MetricKind::Specificity,
    MetricKind::FMeasure,
    MetricKind::Accuracy,
    MetricKind::DefectDensity,
];

type Row = [Rational; 5];

/// The metric as a linear equation over the normalized cells
/// `[tp, fn, fp, tn | rhs]`. MCC is not linear and has no row.
fn linear_row(kind: MetricKind, v: &Rational) -> Option<Row> {
    let z = Rational::zero;
    let one = Rational::one();
    let two = Rational::from_integer(2.into());
    let row = match kind {
        MetricKind::Recall => [&one - v, -v.clone(), z(), z(), z()],
        MetricKind::Precision => [&one - v, z(), -v.clone(), z(), z()],
        MetricKind::Fpr => [z(), z(), &one - v, -v.clone(), z()],
        MetricKind::Specificity => [z(), z(), -v.clone(), &one - v, z()],
        // F = 2tp / (2tp + fp + fn)
        MetricKind::FMeasure => [&two * (&one - v), -v.clone(), -v.clone(), z(), z()],
        MetricKind::Accuracy => [one.clone(), z(), z(), one.clone(), v.clone()],
        MetricKind::DefectDensity => [one.clone(), one.clone(), z(), z(), v.clone()],
        MetricKind::Mcc => return None,
    };
    Some(row)
}

/// Incrementally reduced row-echelon system over four unknowns.
struct System {
    pivots: Vec<(usize, Row)>,
}

impl System {
    fn new() -> Self {
        let one = Rational::one();
        let mut s = Self { pivots: Vec::with_capacity(4) };
        s.add([one.clone(), one.clone(), one.clone(), one.clone(), one]);
        s
    }

    fn is_determined(&self) -> bool {
        self.pivots.len() == 4
    }

    /// Adds the row if it is independent of those already held.
    fn add(&mut self, mut row: Row) -> bool {
        for (col, pivot) in &self.pivots {
            if !row[*col].is_zero() {
                let factor = row[*col].clone();
                for j in 0..5 {
                    row[j] -= &factor * &pivot[j];
                }
            }
        }
        let Some(col) = (0..4).find(|&j| !row[j].is_zero()) else {
            return false;
        };
        let lead = row[col].clone();
        for x in row.iter_mut() {
            *x /= &lead;
        }
        for (_, pivot) in self.pivots.iter_mut() {
            if !pivot[col].is_zero() {
                let factor = pivot[col].clone();
                for j in 0..5 {
                    pivot[j] -= &factor * &row[j];
                }
            }
        }
        self.pivots.push((col, row));
        true
    }

    fn solution(&self) -> [Rational; 4] {
        let mut x: [Rational; 4] = std::array::from_fn(|_| Rational::zero());
        for (col, row) in &self.pivots {
            x[*col] = row[4].clone();
        }
        x
    }
}

fn interior(v: &Rational) -> bool {
    v > &Rational::zero() && v < &Rational::one()
}

/// Finds a subset of the reported metrics that determines the normalized
/// matrix and solves it exactly.
///
/// With the cells constrained to sum to one, every metric but MCC is a
/// linear equation in the cells, so three independent reported values fix
/// the matrix. Inputs are taken in a fixed priority order (recall,
/// precision, FPR, specificity, F-measure, accuracy, then density) and
/// skipped when they add no information. Values exactly at 0 or 1 are never
/// used as inputs. Returns `None` when no determined subset exists.
///
/// The cells are not checked for sign here.
pub fn solve_determined(reported: &ReportedMetrics) -> Option<Solution> {
    let mut system = System::new();
    let mut inputs = Vec::with_capacity(3);
    for kind in INPUT_PRIORITY {
        if system.is_determined() {
            break;
        }
        let Some(value) = reported.get(kind).filter(|v| interior(v)) else {
            continue;
        };
        let row = linear_row(kind, value).expect("linear metric");
        if system.add(row) {
            inputs.push(kind);
        }
    }
    system.is_determined().then(|| Solution { cells: system.solution(), inputs })
}

/// Every determined subset of the reported metrics, solved, in priority
/// order of their inputs. The first entry is what [`solve_determined`] returns.
pub fn solve_all_determined(reported: &ReportedMetrics) -> Vec<Solution> {
    let candidates: Vec<(MetricKind, Row)> = INPUT_PRIORITY
        .iter()
        .filter_map(|&kind| reported.get(kind).filter(|v| interior(v)).map(|v| (kind, linear_row(kind, v).expect("linear metric"))))
        .collect();
    let mut out: Vec<Solution> = Vec::new();
    let n = candidates.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut system = System::new();
                let independent = [i, j, k].iter().all(|&x| system.add(candidates[x].1.clone()));
                if independent {
                    let cells = system.solution();
                    if out.iter().all(|s| s.cells != cells) {
                        out.push(Solution { cells, inputs: vec![candidates[i].0, candidates[j].0, candidates[k].0] });
                    }
                }
            }
        }
    }
    out
}
