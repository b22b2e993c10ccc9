//! Rebuilding a normalized confusion matrix from partially reported metrics.
//!
//! Every normalized matrix is described by three parameters: defect density
//! `d`, recall `r` and false positive rate `f`, with
//!
//! ```text
//! tp = r·d   fn = (1 − r)·d   fp = f·(1 − d)   tn = (1 − f)·(1 − d)
//! ```
//!
//! When the reported metrics pin all three parameters the matrix is solved
//! exactly ([`solve`]); otherwise [`feasibility_search`] scans the parameter
//! cube for regions compatible with every reported value.

mod search;
mod solve;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::ReconstructError;
use crate::metrics::{
    compute_metric, metric_range, rounding_interval, ConfusionMatrix, MatrixMode, MetricKind, MetricValue,
};
use crate::number::{Interval, Rational};
use crate::rules::Tolerances;

pub use search::{feasibility_search, DEFAULT_GRID};
pub use solve::{solve_all_determined, solve_determined, Solution};

/// The metric values reported for one experimental result.
///
/// Defect density is held apart from the other metrics: it is checked
/// against its own tolerance and only used as a reconstruction input when
/// the remaining metrics leave the matrix undetermined.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportedMetrics {
    values: BTreeMap<MetricKind, Rational>,
    density: Option<Rational>,
    dataset_size: Option<u64>,
}

impl ReportedMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a value, replacing any earlier one for the same kind.
    /// [`MetricKind::DefectDensity`] sets the reported density.
    pub fn insert(&mut self, kind: MetricKind, value: Rational) -> Option<Rational> {
        match kind {
            MetricKind::DefectDensity => self.density.replace(value),
            _ => self.values.insert(kind, value),
        }
    }

    pub fn with(mut self, kind: MetricKind, value: Rational) -> Self {
        self.insert(kind, value);
        self
    }

    pub fn with_density(mut self, density: Rational) -> Self {
        self.density = Some(density);
        self
    }

    pub fn with_dataset_size(mut self, n: u64) -> Self {
        self.dataset_size = Some(n);
        self
    }

    pub fn get(&self, kind: MetricKind) -> Option<&Rational> {
        match kind {
            MetricKind::DefectDensity => self.density.as_ref(),
            _ => self.values.get(&kind),
        }
    }

    pub fn remove(&mut self, kind: MetricKind) -> Option<Rational> {
        match kind {
            MetricKind::DefectDensity => self.density.take(),
            _ => self.values.remove(&kind),
        }
    }

    /// Reported metrics other than density, in kind order.
    pub fn values(&self) -> impl Iterator<Item = (MetricKind, &Rational)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    /// Every reported value including density.
    pub fn all_values(&self) -> impl Iterator<Item = (MetricKind, &Rational)> {
        self.values().chain(self.density.iter().map(|d| (MetricKind::DefectDensity, d)))
    }

    pub fn density(&self) -> Option<&Rational> {
        self.density.as_ref()
    }

    pub fn dataset_size(&self) -> Option<u64> {
        self.dataset_size
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty() && self.density.is_none()
    }
}

/// How a unique matrix was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    /// Solved exactly from the listed metrics.
    ClosedForm { inputs: Vec<MetricKind> },
    Search,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReconstructionOutcome {
    Unique { matrix: ConfusionMatrix, route: Route },
    /// Too little information; `density` is the range of defect densities still compatible.
    Underdetermined { density: Interval },
    /// No matrix fits. `candidate` is the matrix determined by a solvable
    /// subset of the inputs when the remaining reported values contradict it.
    Infeasible { candidate: Option<ConfusionMatrix> },
}

impl ReconstructionOutcome {
    pub fn matrix(&self) -> Option<&ConfusionMatrix> {
        match self {
            ReconstructionOutcome::Unique { matrix, .. } => Some(matrix),
            _ => None,
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, ReconstructionOutcome::Unique { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, ReconstructionOutcome::Infeasible { .. })
    }

    pub fn is_underdetermined(&self) -> bool {
        matches!(self, ReconstructionOutcome::Underdetermined { .. })
    }
}

/// Normalized matrix from the `(d, r, f)` parameterization.
pub(crate) fn matrix_from_params(d: &Rational, r: &Rational, f: &Rational) -> ConfusionMatrix {
    let one = Rational::one();
    ConfusionMatrix::unchecked(
        [r * d, (&one - r) * d, f * (&one - d), (&one - f) * (&one - d)],
        MatrixMode::Normalized,
    )
}

/// Rebuilds the normalized matrix from precision, recall and false positive rate:
/// `d = p·f / (p·f + r·(1 − p))`, `tp = r·d`, `fn = (1 − r)·d`,
/// `fp = r·d·(1 − p)/p`, `tn = fp·(1 − f)/f`.
///
/// The result is returned only if it reproduces all three inputs exactly.
pub fn closed_form_prf(p: &Rational, r: &Rational, f: &Rational) -> Result<ConfusionMatrix, ReconstructError> {
    let zero = Rational::zero();
    let one = Rational::one();
    if [p, r, f].iter().any(|v| **v <= zero || **v > one) {
        return Err(ReconstructError::BoundaryDegenerate);
    }
    let d = p * f / (p * f + r * (&one - p));
    let tp = r * &d;
    let fn_ = (&one - r) * &d;
    let fp = &tp * (&one - p) / p;
    let tn = &fp * (&one - f) / f;
    let m = ConfusionMatrix::normalized(tp, fn_, fp, tn).map_err(|_| ReconstructError::Infeasible)?;
    let reported = ReportedMetrics::new()
        .with(MetricKind::Precision, p.clone())
        .with(MetricKind::Recall, r.clone())
        .with(MetricKind::Fpr, f.clone());
    if round_trip_verify(&m, &reported, &zero) {
        Ok(m)
    } else {
        Err(ReconstructError::Infeasible)
    }
}

/// True iff every reported metric other than density recomputes from `m`
/// into its rounding interval. Density has its own tolerance and is
/// checked separately.
pub fn round_trip_verify(m: &ConfusionMatrix, reported: &ReportedMetrics, tol: &Rational) -> bool {
    reported.values().all(|(kind, value)| matches_reported(m, kind, value, tol))
}

pub(crate) fn matches_reported(m: &ConfusionMatrix, kind: MetricKind, value: &Rational, tol: &Rational) -> bool {
    match compute_metric(kind, m) {
        MetricValue::Defined(v) => rounding_interval(value, tol).contains_real(&v),
        MetricValue::Undefined => false,
    }
}

fn density_matches(m: &ConfusionMatrix, reported: &ReportedMetrics, tol: &Rational) -> bool {
    match reported.density() {
        None => true,
        Some(d) => {
            let recomputed = m.tp() + m.fn_();
            (recomputed - d).abs() <= *tol
        }
    }
}

/// Reconstructs the normalized matrix behind a set of reported metrics.
///
/// A solvable subset of the inputs is solved exactly; the other reported
/// metrics must then recompute within `tol.metric` of their reported values,
/// or the result is [`ReconstructionOutcome::Infeasible`] with the solved
/// matrix attached. Without a solvable subset the parameter space is searched.
pub fn reconstruct(reported: &ReportedMetrics, tol: &Tolerances) -> ReconstructionOutcome {
    if reported.is_empty() {
        return ReconstructionOutcome::Underdetermined { density: Interval::unit() };
    }
    let attainable = reported.all_values().all(|(kind, value)| {
        let t = if kind == MetricKind::DefectDensity { &tol.density } else { &tol.metric };
        rounding_interval(value, t).intersect(&metric_range(kind)).is_some()
    });
    if !attainable {
        return ReconstructionOutcome::Infeasible { candidate: None };
    }
    if let Some(solution) = solve_determined(reported) {
        let m = ConfusionMatrix::unchecked(solution.cells, MatrixMode::Normalized);
        if m.defects().is_empty() {
            if round_trip_verify(&m, reported, &tol.metric) {
                return ReconstructionOutcome::Unique { matrix: m, route: Route::ClosedForm { inputs: solution.inputs } };
            }
            // Rounded inputs can make the preferred subset ill-conditioned; another
            // determined subset may still reproduce every reported value.
            for alt in solve_all_determined(reported) {
                let candidate = ConfusionMatrix::unchecked(alt.cells, MatrixMode::Normalized);
                if candidate.defects().is_empty() && verifies(&candidate, reported, tol) {
                    return ReconstructionOutcome::Unique { matrix: candidate, route: Route::ClosedForm { inputs: alt.inputs } };
                }
            }
            return ReconstructionOutcome::Infeasible { candidate: Some(m) };
        }
    }
    feasibility_search(reported, tol, DEFAULT_GRID)
}

pub(crate) fn verifies(m: &ConfusionMatrix, reported: &ReportedMetrics, tol: &Tolerances) -> bool {
    round_trip_verify(m, reported, &tol.metric) && density_matches(m, reported, &tol.density)
}
