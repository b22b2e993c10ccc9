//! Binary confusion matrices and the classification metrics defined on them.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MatrixError, MetricError};
use crate::number::{display_rational, integer, ExactReal, Interval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixMode {
    Counts,
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Tp,
    Fn,
    Fp,
    Tn,
}

impl Cell {
    pub const ALL: [Cell; 4] = [Cell::Tp, Cell::Fn, Cell::Fp, Cell::Tn];

    pub fn name(self) -> &'static str {
        match self {
            Cell::Tp => "TP",
            Cell::Fn => "FN",
            Cell::Fp => "FP",
            Cell::Tn => "TN",
        }
    }
}

/// A breach of the confusion-matrix invariants, as found by [`ConfusionMatrix::defects`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixDefect {
    NegativeCell(Cell, Rational),
    CellAboveOne(Cell, Rational),
    SumNotOne(Rational),
    NonIntegerCell(Cell, Rational),
    EmptyCounts,
}

impl fmt::Display for MatrixDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixDefect::NegativeCell(c, v) => write!(f, "{} = {} is negative", c.name(), display_rational(v)),
            MatrixDefect::CellAboveOne(c, v) => write!(f, "{} = {} exceeds 1", c.name(), display_rational(v)),
            MatrixDefect::SumNotOne(s) => write!(f, "cells sum to {}, not 1", display_rational(s)),
            MatrixDefect::NonIntegerCell(c, v) => write!(f, "{} = {} is not a whole count", c.name(), display_rational(v)),
            MatrixDefect::EmptyCounts => write!(f, "matrix holds no instances"),
        }
    }
}

/// The four cells of a binary confusion matrix, either as counts or as proportions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    cells: [Rational; 4],
    mode: MatrixMode,
}

impl ConfusionMatrix {
    pub fn counts(tp: u64, fn_: u64, fp: u64, tn: u64) -> Result<Self, MatrixError> {
        let m = Self::unchecked(
            [tp, fn_, fp, tn].map(|c| Rational::from_integer(BigInt::from(c))),
            MatrixMode::Counts,
        );
        if m.total().is_zero() {
            return Err(MatrixError::EmptyCounts);
        }
        Ok(m)
    }

    pub fn normalized(tp: Rational, fn_: Rational, fp: Rational, tn: Rational) -> Result<Self, MatrixError> {
        let m = Self::unchecked([tp, fn_, fp, tn], MatrixMode::Normalized);
        if m.cells.iter().any(Signed::is_negative) {
            return Err(MatrixError::NegativeCell);
        }
        let total = m.total();
        if !total.is_one() {
            return Err(MatrixError::NotNormalized(display_rational(&total)));
        }
        Ok(m)
    }

    /// Builds a matrix without enforcing any invariant, so that broken
    /// reconstructions can still be inspected with [`Self::defects`].
    pub fn unchecked(cells: [Rational; 4], mode: MatrixMode) -> Self {
        Self { cells, mode }
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn cell(&self, cell: Cell) -> &Rational {
        &self.cells[cell as usize]
    }

    pub fn tp(&self) -> &Rational {
        &self.cells[0]
    }

    pub fn fn_(&self) -> &Rational {
        &self.cells[1]
    }

    pub fn fp(&self) -> &Rational {
        &self.cells[2]
    }

    pub fn tn(&self) -> &Rational {
        &self.cells[3]
    }

    pub fn cells(&self) -> &[Rational; 4] {
        &self.cells
    }

    pub fn total(&self) -> Rational {
        self.cells.iter().fold(Rational::zero(), |acc, c| acc + c)
    }

    /// Proportions; a normalized matrix is returned unchanged.
    pub fn normalize(&self) -> ConfusionMatrix {
        match self.mode {
            MatrixMode::Normalized => self.clone(),
            MatrixMode::Counts => {
                let total = self.total();
                Self::unchecked(self.cells.clone().map(|c| c / &total), MatrixMode::Normalized)
            }
        }
    }

    pub fn defects(&self) -> Vec<MatrixDefect> {
        let mut out = Vec::new();
        for cell in Cell::ALL {
            let v = self.cell(cell);
            if v.is_negative() {
                out.push(MatrixDefect::NegativeCell(cell, v.clone()));
            }
        }
        match self.mode {
            MatrixMode::Normalized => {
                for cell in Cell::ALL {
                    let v = self.cell(cell);
                    if v > &Rational::one() {
                        out.push(MatrixDefect::CellAboveOne(cell, v.clone()));
                    }
                }
                let total = self.total();
                if !total.is_one() {
                    out.push(MatrixDefect::SumNotOne(total));
                }
            }
            MatrixMode::Counts => {
                for cell in Cell::ALL {
                    let v = self.cell(cell);
                    if !v.is_integer() {
                        out.push(MatrixDefect::NonIntegerCell(cell, v.clone()));
                    }
                }
                if !self.total().is_positive() {
                    out.push(MatrixDefect::EmptyCounts);
                }
            }
        }
        out
    }

    /// Swaps the roles of the two classes: (tp, fn, fp, tn) → (tn, fp, fn, tp).
    pub fn swap_classes(&self) -> ConfusionMatrix {
        let [tp, fn_, fp, tn] = self.cells.clone();
        Self::unchecked([tn, fp, fn_, tp], self.mode)
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP={} FN={} FP={} TN={}",
            display_rational(self.tp()),
            display_rational(self.fn_()),
            display_rational(self.fp()),
            display_rational(self.tn())
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    Recall,
    Precision,
    Fpr,
    FMeasure,
    Mcc,
    Accuracy,
    Specificity,
    DefectDensity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::Recall,
        MetricKind::Precision,
        MetricKind::Fpr,
        MetricKind::FMeasure,
        MetricKind::Mcc,
        MetricKind::Accuracy,
        MetricKind::Specificity,
        MetricKind::DefectDensity,
    ];

    /// Canonical snake_case name, also used as the input column header.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Recall => "recall",
            MetricKind::Precision => "precision",
            MetricKind::Fpr => "fpr",
            MetricKind::FMeasure => "f_measure",
            MetricKind::Mcc => "mcc",
            MetricKind::Accuracy => "accuracy",
            MetricKind::Specificity => "specificity",
            MetricKind::DefectDensity => "defect_density",
        }
    }

    pub fn from_name(name: &str) -> Option<MetricKind> {
        MetricKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MetricValue {
    Defined(ExactReal),
    Undefined,
}

impl MetricValue {
    fn ratio(num: Rational, den: Rational) -> MetricValue {
        if den.is_zero() {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(ExactReal::from_rational(num / den))
        }
    }

    pub fn as_real(&self) -> Option<&ExactReal> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    /// The exact rational value; `None` when undefined or irrational.
    pub fn to_rational(&self) -> Option<Rational> {
        self.as_real().and_then(ExactReal::to_rational)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Defined(v) => v.fmt(f),
            MetricValue::Undefined => f.write_str("undefined"),
        }
    }
}

fn recall(m: &ConfusionMatrix) -> MetricValue {
    MetricValue::ratio(m.tp().clone(), m.tp() + m.fn_())
}

fn precision(m: &ConfusionMatrix) -> MetricValue {
    MetricValue::ratio(m.tp().clone(), m.tp() + m.fp())
}

pub fn compute_metric(kind: MetricKind, m: &ConfusionMatrix) -> MetricValue {
    match kind {
        MetricKind::Recall => recall(m),
        MetricKind::Precision => precision(m),
        MetricKind::Fpr => MetricValue::ratio(m.fp().clone(), m.fp() + m.tn()),
        MetricKind::FMeasure => {
            let (Some(p), Some(r)) = (precision(m).to_rational(), recall(m).to_rational()) else {
                return MetricValue::Undefined;
            };
            let two = integer(2);
            MetricValue::ratio(two * &p * &r, p + r)
        }
        MetricKind::Mcc => {
            let num = m.tp() * m.tn() - m.fp() * m.fn_();
            let den = (m.tp() + m.fp()) * (m.tp() + m.fn_()) * (m.tn() + m.fp()) * (m.tn() + m.fn_());
            if den.is_zero() {
                MetricValue::Undefined
            } else {
                let negative = num.is_negative();
                MetricValue::Defined(ExactReal::signed_sqrt(negative, &num * &num / den))
            }
        }
        MetricKind::Accuracy => MetricValue::ratio(m.tp() + m.tn(), m.total()),
        MetricKind::Specificity => MetricValue::ratio(m.tn().clone(), m.fp() + m.tn()),
        MetricKind::DefectDensity => MetricValue::ratio(m.tp() + m.fn_(), m.total()),
    }
}

/// Attainable values of a metric: `[-1, 1]` for MCC, `[0, 1]` otherwise.
pub fn metric_range(kind: MetricKind) -> Interval {
    match kind {
        MetricKind::Mcc => Interval::new(integer(-1), integer(1)).expect("ordered"),
        _ => Interval::unit(),
    }
}

/// `[reported − tol, reported + tol]`.
pub fn rounding_interval(reported: &Rational, tol: &Rational) -> Interval {
    assert!(!tol.is_negative(), "rounding tolerance must be non-negative");
    Interval::new(reported - tol, reported + tol).expect("non-negative tolerance")
}

pub type MetricFormula = fn(&ConfusionMatrix) -> MetricValue;

#[derive(Clone, Debug)]
pub struct MetricDef {
    pub name: String,
    pub range: Interval,
    pub formula: MetricFormula,
    pub builtin: Option<MetricKind>,
}

/// Metric definitions keyed by canonical name. Starts with the eight
/// built-in kinds; corpus-specific metrics can be added with [`Self::register`].
#[derive(Clone, Debug)]
pub struct MetricRegistry {
    defs: BTreeMap<String, MetricDef>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        fn builtin(kind: MetricKind) -> MetricFormula {
            match kind {
                MetricKind::Recall => |m| compute_metric(MetricKind::Recall, m),
                MetricKind::Precision => |m| compute_metric(MetricKind::Precision, m),
                MetricKind::Fpr => |m| compute_metric(MetricKind::Fpr, m),
                MetricKind::FMeasure => |m| compute_metric(MetricKind::FMeasure, m),
                MetricKind::Mcc => |m| compute_metric(MetricKind::Mcc, m),
                MetricKind::Accuracy => |m| compute_metric(MetricKind::Accuracy, m),
                MetricKind::Specificity => |m| compute_metric(MetricKind::Specificity, m),
                MetricKind::DefectDensity => |m| compute_metric(MetricKind::DefectDensity, m),
            }
        }
        let defs = MetricKind::ALL
            .into_iter()
            .map(|kind| {
                let def = MetricDef {
                    name: kind.name().to_string(),
                    range: metric_range(kind),
                    formula: builtin(kind),
                    builtin: Some(kind),
                };
                (def.name.clone(), def)
            })
            .collect();
        Self { defs }
    }
}

impl MetricRegistry {
    pub fn register(&mut self, name: &str, range: Interval, formula: MetricFormula) -> Result<(), MetricError> {
        if self.defs.contains_key(name) {
            return Err(MetricError::DuplicateMetric(name.to_string()));
        }
        let def = MetricDef { name: name.to_string(), range, formula, builtin: None };
        self.defs.insert(name.to_string(), def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&MetricDef, MetricError> {
        self.defs.get(name).ok_or_else(|| MetricError::UnknownMetric(name.to_string()))
    }

    pub fn range(&self, name: &str) -> Result<&Interval, MetricError> {
        self.get(name).map(|d| &d.range)
    }

    pub fn evaluate(&self, name: &str, m: &ConfusionMatrix) -> Result<MetricValue, MetricError> {
        self.get(name).map(|d| (d.formula)(m))
    }

    /// Registered metrics that are not built in, in name order.
    pub fn custom(&self) -> impl Iterator<Item = &MetricDef> {
        self.defs.values().filter(|d| d.builtin.is_none())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }
}
