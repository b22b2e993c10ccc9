//! Grid feasibility search over the `(d, r, f)` parameter cube.
//!
//! Each grid cell is a box in parameter space. A box is discarded only when
//! a bound on some reported metric over the whole box misses that metric's
//! rounding interval, so no feasible point is ever lost: an `Infeasible`
//! answer is a proof up to float round-off, which [`SLACK`] absorbs.

use num_traits::{One, Signed};
use rayon::prelude::*;

use super::{matrix_from_params, verifies, ReconstructionOutcome, ReportedMetrics, Route};
use crate::metrics::{metric_range, rounding_interval, ConfusionMatrix, MetricKind};
use crate::number::{from_f64, to_f64, Interval, Rational};
use crate::rules::Tolerances;

/// Grid points per free parameter.
pub const DEFAULT_GRID: u32 = 10_000;

/// Outward widening applied to every interval test.
const SLACK: f64 = 1e-9;

/// Coarse scans use about `grid · CELL_BUDGET` boxes in total.
const CELL_BUDGET: u64 = 100;

const D: usize = 0;
const R: usize = 1;
const F: usize = 2;

type ParamBox = [[f64; 2]; 3];

struct Constraint {
    kind: MetricKind,
    lo: f64,
    hi: f64,
}

fn ratio(num: f64, den: f64, if_undefined: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        if_undefined
    }
}

fn corners(b: &ParamBox) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    (0..8).map(move |i| (b[D][i & 1], b[R][(i >> 1) & 1], b[F][(i >> 2) & 1]))
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Range of `x·(1 − x)` over `[lo, hi]`.
fn bernoulli_variance(lo: f64, hi: f64) -> (f64, f64) {
    let g = |x: f64| x * (1.0 - x);
    let min = g(lo).min(g(hi));
    let max = if lo <= 0.5 && 0.5 <= hi { 0.25 } else { g(lo).max(g(hi)) };
    (min.max(0.0), max)
}

/// Bounds on a metric over a parameter box, taken over the points where the
/// metric is defined. `None` when it is undefined everywhere on the box.
fn metric_bounds(kind: MetricKind, b: &ParamBox) -> Option<(f64, f64)> {
    let [d, r, f] = *b;
    Some(match kind {
        MetricKind::Recall => {
            if d[1] <= 0.0 {
                return None;
            }
            (r[0], r[1])
        }
        MetricKind::Fpr => {
            if d[0] >= 1.0 {
                return None;
            }
            (f[0], f[1])
        }
        MetricKind::Specificity => {
            if d[0] >= 1.0 {
                return None;
            }
            (1.0 - f[1], 1.0 - f[0])
        }
        MetricKind::DefectDensity => (d[0], d[1]),
        // Increasing in d and r, decreasing in f.
        MetricKind::Precision => {
            let lo = ratio(r[0] * d[0], r[0] * d[0] + f[1] * (1.0 - d[0]), 0.0);
            let hi = ratio(r[1] * d[1], r[1] * d[1] + f[0] * (1.0 - d[1]), 1.0);
            (lo, hi)
        }
        MetricKind::FMeasure => {
            let lo = ratio(2.0 * r[0] * d[0], r[0] * d[0] + d[0] + f[1] * (1.0 - d[0]), 0.0);
            let hi = ratio(2.0 * r[1] * d[1], r[1] * d[1] + d[1] + f[0] * (1.0 - d[1]), 1.0);
            (lo, hi)
        }
        // Multilinear, so extremes sit at corners.
        MetricKind::Accuracy => min_max(corners(b).map(|(d, r, f)| r * d + (1.0 - f) * (1.0 - d))),
        // MCC = (r − f)·√(d(1 − d)) / √(q(1 − q)) with q = r·d + f·(1 − d),
        // bounded by interval arithmetic.
        MetricKind::Mcc => {
            let (q_lo, q_hi) = min_max(corners(b).map(|(d, r, f)| r * d + f * (1.0 - d)));
            let (qv_lo, qv_hi) = bernoulli_variance(q_lo.max(0.0), q_hi.min(1.0));
            if qv_lo <= 0.0 {
                return Some((-1.0, 1.0));
            }
            let (dv_lo, dv_hi) = bernoulli_variance(d[0], d[1]);
            let spread = [r[0] - f[1], r[1] - f[0]];
            let scale = [dv_lo.sqrt() / qv_hi.sqrt(), dv_lo.sqrt() / qv_lo.sqrt(), dv_hi.sqrt() / qv_hi.sqrt(), dv_hi.sqrt() / qv_lo.sqrt()];
            let (lo, hi) = min_max(spread.iter().flat_map(|s| scale.iter().map(move |k| s * k)));
            (lo.max(-1.0), hi.min(1.0))
        }
    })
}

fn box_feasible(constraints: &[Constraint], b: &ParamBox) -> bool {
    constraints.iter().all(|c| match metric_bounds(c.kind, b) {
        Some((lo, hi)) => hi >= c.lo - SLACK && lo <= c.hi + SLACK,
        None => false,
    })
}

/// Bounding box of surviving cells, in parameter space.
#[derive(Clone, Copy, Debug)]
struct Survivors {
    count: u64,
    bbox: ParamBox,
}

impl Survivors {
    fn empty() -> Self {
        Self { count: 0, bbox: [[f64::INFINITY, f64::NEG_INFINITY]; 3] }
    }

    fn add(mut self, b: &ParamBox) -> Self {
        self.count += 1;
        for i in 0..3 {
            self.bbox[i][0] = self.bbox[i][0].min(b[i][0]);
            self.bbox[i][1] = self.bbox[i][1].max(b[i][1]);
        }
        self
    }

    fn merge(mut self, other: Survivors) -> Self {
        self.count += other.count;
        for i in 0..3 {
            self.bbox[i][0] = self.bbox[i][0].min(other.bbox[i][0]);
            self.bbox[i][1] = self.bbox[i][1].max(other.bbox[i][1]);
        }
        self
    }
}

/// Splits each non-degenerate parameter range into `res` cells and keeps
/// the cells that may hold a feasible point.
fn scan(region: &[Interval; 3], res: u64, constraints: &[Constraint]) -> Survivors {
    let edges: Vec<Vec<f64>> = region
        .iter()
        .map(|iv| {
            let (lo, hi) = (to_f64(iv.lo()), to_f64(iv.hi()));
            if iv.lo() == iv.hi() {
                vec![lo, lo]
            } else {
                (0..=res).map(|i| if i == res { hi } else { lo + (hi - lo) * (i as f64) / (res as f64) }).collect()
            }
        })
        .collect();
    let cells = |axis: usize| edges[axis].len() - 1;
    (0..cells(D))
        .into_par_iter()
        .map(|i| {
            let mut acc = Survivors::empty();
            for j in 0..cells(R) {
                for k in 0..cells(F) {
                    let b = [
                        [edges[D][i], edges[D][i + 1]],
                        [edges[R][j], edges[R][j + 1]],
                        [edges[F][k], edges[F][k + 1]],
                    ];
                    if box_feasible(constraints, &b) {
                        acc = acc.add(&b);
                    }
                }
            }
            acc
        })
        .reduce(Survivors::empty, Survivors::merge)
}

/// Largest per-cell spread of the matrices in a parameter box.
fn cell_diameter(b: &ParamBox) -> f64 {
    let [d, r, f] = *b;
    let spans = [
        r[1] * d[1] - r[0] * d[0],
        (1.0 - r[0]) * d[1] - (1.0 - r[1]) * d[0],
        f[1] * (1.0 - d[0]) - f[0] * (1.0 - d[1]),
        (1.0 - f[0]) * (1.0 - d[0]) - (1.0 - f[1]) * (1.0 - d[1]),
    ];
    spans.into_iter().fold(0.0, f64::max)
}

/// The rational with the smallest denominator in `[lo, hi]`, `0 ≤ lo ≤ hi`.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let ceil = lo.ceil();
    if &ceil <= hi {
        return ceil;
    }
    let floor = lo.floor();
    let one = Rational::one();
    floor.clone() + &one / simplest_between(&(&one / (hi - &floor)), &(&one / (lo - &floor)))
}

/// Exact sub-range of `within` covering `[lo, hi]`.
fn clip(within: &Interval, lo: f64, hi: f64) -> Interval {
    if within.lo() == within.hi() {
        return within.clone();
    }
    let lo = from_f64(lo).max(within.lo().clone()).min(within.hi().clone());
    let hi = from_f64(hi).min(within.hi().clone()).max(lo.clone());
    Interval::new(lo, hi).expect("ordered")
}

fn scan_resolution(region: &[Interval; 3], grid: u32) -> u64 {
    let free = region.iter().filter(|iv| iv.lo() != iv.hi()).count() as i32;
    if free == 0 {
        return 1;
    }
    let budget = (grid as u64 * CELL_BUDGET) as f64;
    (budget.powf(1.0 / free as f64).floor() as u64).clamp(1, grid as u64)
}

fn param_region(reported: &ReportedMetrics, tol: &Tolerances) -> Option<[Interval; 3]> {
    let one = Rational::one();
    let within = |kind: MetricKind| {
        let t = if kind == MetricKind::DefectDensity { &tol.density } else { &tol.metric };
        reported.get(kind).map(|v| rounding_interval(v, t))
    };
    let mut d = Interval::unit();
    let mut r = Interval::unit();
    let mut f = Interval::unit();
    if let Some(iv) = within(MetricKind::DefectDensity) {
        d = d.intersect(&iv)?;
    }
    if let Some(iv) = within(MetricKind::Recall) {
        r = r.intersect(&iv)?;
    }
    if let Some(iv) = within(MetricKind::Fpr) {
        f = f.intersect(&iv)?;
    }
    if let Some(iv) = within(MetricKind::Specificity) {
        let flipped = Interval::new(&one - iv.hi(), &one - iv.lo()).expect("ordered");
        f = f.intersect(&flipped)?;
    }
    Some([d, r, f])
}

/// Scans the parameter cube for matrices compatible with every reported value.
///
/// Recall, FPR, specificity and density restrict their parameter directly;
/// the remaining parameters are scanned over `[0, 1]`. Each free parameter
/// gets up to `grid` cells (fewer when several are free, keeping the total
/// near `100·grid`), and the scan is repeated once over the bounding box of
/// the surviving cells. The outcome is `Unique` when the survivors span less
/// than `max(tol.metric / 10, 1 / grid)` in every cell and a representative
/// matrix verifies exactly against the reported values.
///
/// # Panics
///
/// If `grid < 100`.
pub fn feasibility_search(reported: &ReportedMetrics, tol: &Tolerances, grid: u32) -> ReconstructionOutcome {
    assert!(grid >= 100, "grid resolution must be at least 100");
    let infeasible = ReconstructionOutcome::Infeasible { candidate: None };
    let mut constraints = Vec::new();
    for (kind, value) in reported.all_values() {
        let t = if kind == MetricKind::DefectDensity { &tol.density } else { &tol.metric };
        let Some(iv) = rounding_interval(value, t).intersect(&metric_range(kind)) else {
            return infeasible;
        };
        constraints.push(Constraint { kind, lo: to_f64(iv.lo()), hi: to_f64(iv.hi()) });
    }
    let Some(region) = param_region(reported, tol) else {
        return infeasible;
    };

    let res = scan_resolution(&region, grid);
    let coarse = scan(&region, res, &constraints);
    if coarse.count == 0 {
        return infeasible;
    }
    let refined_region: [Interval; 3] = std::array::from_fn(|i| {
        let pad = (to_f64(&region[i].width()) / res as f64).max(0.0);
        clip(&region[i], coarse.bbox[i][0] - pad, coarse.bbox[i][1] + pad)
    });
    let fine = scan(&refined_region, scan_resolution(&refined_region, grid), &constraints);
    if fine.count == 0 {
        return infeasible;
    }

    let bounds: [Interval; 3] = std::array::from_fn(|i| clip(&refined_region[i], fine.bbox[i][0], fine.bbox[i][1]));
    let threshold = (to_f64(&tol.metric) / 10.0).max(1.0 / grid as f64);
    let diameter = cell_diameter(&fine.bbox);
    if diameter == 0.0 || diameter < threshold {
        if let Some(matrix) = representative(&bounds, reported, tol) {
            return ReconstructionOutcome::Unique { matrix, route: Route::Search };
        }
    }
    ReconstructionOutcome::Underdetermined { density: bounds[D].clone() }
}

/// Tries the simplest rational point of the surviving box, then its midpoint.
fn representative(bounds: &[Interval; 3], reported: &ReportedMetrics, tol: &Tolerances) -> Option<ConfusionMatrix> {
    let simplest: [Rational; 3] = std::array::from_fn(|i| {
        let iv = &bounds[i];
        if iv.lo().is_negative() {
            iv.lo().clone()
        } else {
            simplest_between(iv.lo(), iv.hi())
        }
    });
    let two = Rational::from_integer(2.into());
    let midpoint: [Rational; 3] = std::array::from_fn(|i| (bounds[i].lo() + bounds[i].hi()) / &two);
    [simplest, midpoint].into_iter().find_map(|[d, r, f]| {
        let m = matrix_from_params(&d, &r, &f);
        (m.defects().is_empty() && verifies(&m, reported, tol)).then_some(m)
    })
}
