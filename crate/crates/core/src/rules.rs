//! The six integrity rules and the three-way consistency verdict.
//!
//! Rules are phrased as conditions that should be false for honestly
//! reported results:
//!
//! 1. a reported metric lies outside its attainable range;
//! 2. the recomputed defect density is zero;
//! 3. the recomputed density differs from the reported one by more than the density tolerance;
//! 4. a recomputed metric differs from its reported value by more than the metric tolerance;
//! 5. the recomputed matrix is internally inconsistent (or no matrix exists at all);
//! 6. another reporting error, supplied as a manual annotation.
//!
//! All rules are evaluated; a result may carry several violations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::corpus::ReportedResult;
use crate::metrics::{compute_metric, metric_range, rounding_interval, ConfusionMatrix, MetricKind, MetricRegistry, MetricValue};
use crate::number::{display_rational, rational, Rational};
use crate::reconstruct::{reconstruct, ReconstructionOutcome, ReportedMetrics};

/// Tolerances applied when comparing recomputed and reported values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tolerances {
    /// Allowed gap between a recomputed and a reported metric (default 0.05).
    pub metric: Rational,
    /// Allowed gap between recomputed and reported defect density (default 0.1).
    pub density: Rational,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { metric: rational(1, 20), density: rational(1, 10) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Rule {
    Range = 1,
    ZeroDensity = 2,
    DensityMismatch = 3,
    MetricMismatch = 4,
    Internal = 5,
    Manual = 6,
}

impl Rule {
    pub const ALL: [Rule; 6] =
        [Rule::Range, Rule::ZeroDensity, Rule::DensityMismatch, Rule::MetricMismatch, Rule::Internal, Rule::Manual];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn summary(self) -> &'static str {
        match self {
            Rule::Range => "Reported metric outside its valid range",
            Rule::ZeroDensity => "Reconstructed matrix has no positive instances",
            Rule::DensityMismatch => "Reconstructed density disagrees with the reported density",
            Rule::MetricMismatch => "Reconstructed metric disagrees with its reported value",
            Rule::Internal => "No valid matrix reproduces the reported values",
            Rule::Manual => "Manually annotated reporting error",
        }
    }
}

impl From<Rule> for u8 {
    fn from(rule: Rule) -> u8 {
        rule.id()
    }
}

impl TryFrom<u8> for Rule {
    type Error = String;

    fn try_from(id: u8) -> Result<Self, Self::Error> {
        Rule::ALL.into_iter().find(|r| r.id() == id).ok_or_else(|| format!("no rule {id}"))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Automatic,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OffendingValue {
    pub name: String,
    pub reported: Option<String>,
    pub recomputed: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: Rule,
    pub description: String,
    pub offending_values: Vec<OffendingValue>,
    pub provenance: Provenance,
}

impl RuleViolation {
    fn automatic(rule: Rule, description: String, offending_values: Vec<OffendingValue>) -> Self {
        Self { rule, description, offending_values, provenance: Provenance::Automatic }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictTag {
    Inconsistent,
    ConsistentChecked,
    NotCheckable,
}

impl VerdictTag {
    pub fn name(self) -> &'static str {
        match self {
            VerdictTag::Inconsistent => "inconsistent",
            VerdictTag::ConsistentChecked => "consistent_checked",
            VerdictTag::NotCheckable => "not_checkable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "violations", rename_all = "snake_case")]
pub enum ConsistencyVerdict {
    /// Holds at least one violation.
    Inconsistent(Vec<RuleViolation>),
    ConsistentChecked,
    NotCheckable,
}

impl ConsistencyVerdict {
    pub fn tag(&self) -> VerdictTag {
        match self {
            ConsistencyVerdict::Inconsistent(_) => VerdictTag::Inconsistent,
            ConsistencyVerdict::ConsistentChecked => VerdictTag::ConsistentChecked,
            ConsistencyVerdict::NotCheckable => VerdictTag::NotCheckable,
        }
    }

    pub fn violations(&self) -> &[RuleViolation] {
        match self {
            ConsistencyVerdict::Inconsistent(v) => v,
            _ => &[],
        }
    }

    pub fn is_inconsistent(&self) -> bool {
        matches!(self, ConsistencyVerdict::Inconsistent(_))
    }
}

/// A verdict together with the reconstruction it was based on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultCheck {
    pub verdict: ConsistencyVerdict,
    pub reconstruction: ReconstructionOutcome,
}

fn offending(name: &str, reported: Option<&Rational>, recomputed: Option<String>) -> OffendingValue {
    OffendingValue { name: name.to_string(), reported: reported.map(display_rational), recomputed }
}

/// Rule 1: one violation per reported value outside its metric's range.
pub fn rule1_range(metrics: &ReportedMetrics) -> Vec<RuleViolation> {
    metrics
        .all_values()
        .filter(|(kind, value)| !metric_range(*kind).contains(value))
        .map(|(kind, value)| {
            let range = metric_range(kind);
            RuleViolation::automatic(
                Rule::Range,
                format!("{kind} = {} outside {range}", display_rational(value)),
                vec![offending(kind.name(), Some(value), None)],
            )
        })
        .collect()
}

fn recomputed_density(m: &ConfusionMatrix) -> Rational {
    let n = m.normalize();
    n.tp() + n.fn_()
}

/// Rule 2: fires when the reconstructed matrix has no positive instances.
pub fn rule2_zero_density(m: &ConfusionMatrix) -> Option<RuleViolation> {
    let d = recomputed_density(m);
    d.is_zero().then(|| {
        RuleViolation::automatic(
            Rule::ZeroDensity,
            "recomputed defect density is zero".to_string(),
            vec![offending(MetricKind::DefectDensity.name(), None, Some("0".to_string()))],
        )
    })
}

/// Rule 3: fires when `|recomputed d − reported d| > density_tol` (strictly).
pub fn rule3_density_mismatch(m: &ConfusionMatrix, reported_density: &Rational, density_tol: &Rational) -> Option<RuleViolation> {
    let d = recomputed_density(m);
    let gap = (&d - reported_density).abs();
    (gap > *density_tol).then(|| {
        RuleViolation::automatic(
            Rule::DensityMismatch,
            format!(
                "recomputed defect density {} differs from reported {} by {} > {}",
                display_rational(&d),
                display_rational(reported_density),
                display_rational(&gap),
                display_rational(density_tol)
            ),
            vec![offending(MetricKind::DefectDensity.name(), Some(reported_density), Some(display_rational(&d)))],
        )
    })
}

fn mismatch(name: &str, reported: &Rational, recomputed: &MetricValue, tol: &Rational) -> Option<RuleViolation> {
    let within = match recomputed {
        MetricValue::Defined(v) => rounding_interval(reported, tol).contains_real(v),
        MetricValue::Undefined => false,
    };
    (!within).then(|| {
        RuleViolation::automatic(
            Rule::MetricMismatch,
            format!(
                "{name} recomputed as {recomputed}, reported {} (tolerance {})",
                display_rational(reported),
                display_rational(tol)
            ),
            vec![offending(name, Some(reported), Some(recomputed.to_string()))],
        )
    })
}

/// Rule 4: one violation per reported metric (density excluded) whose
/// recomputed value leaves `[reported − tol, reported + tol]`. Metrics used
/// to build `m` are checked too.
pub fn rule4_metric_mismatch(m: &ConfusionMatrix, metrics: &ReportedMetrics, metric_tol: &Rational) -> Vec<RuleViolation> {
    metrics
        .values()
        .filter_map(|(kind, value)| mismatch(kind.name(), value, &compute_metric(kind, m), metric_tol))
        .collect()
}

/// Rule 5: one violation per broken matrix invariant.
pub fn rule5_internal(m: &ConfusionMatrix) -> Vec<RuleViolation> {
    m.defects()
        .into_iter()
        .map(|defect| RuleViolation::automatic(Rule::Internal, defect.to_string(), vec![]))
        .collect()
}

/// Rule 6: wraps a human-supplied annotation. Blank annotations produce nothing.
pub fn rule6_manual(annotation: &str) -> Option<RuleViolation> {
    let text = annotation.trim();
    (!text.is_empty()).then(|| RuleViolation {
        rule: Rule::Manual,
        description: text.to_string(),
        offending_values: vec![],
        provenance: Provenance::Manual,
    })
}

fn no_matrix_violation() -> RuleViolation {
    RuleViolation::automatic(
        Rule::Internal,
        "no confusion matrix reproduces the reported values within tolerance".to_string(),
        vec![],
    )
}

fn matrix_rules(
    m: &ConfusionMatrix,
    metrics: &ReportedMetrics,
    custom: &BTreeMap<String, Rational>,
    registry: &MetricRegistry,
    tol: &Tolerances,
) -> Vec<RuleViolation> {
    let mut out = Vec::new();
    out.extend(rule2_zero_density(m));
    if let Some(d) = metrics.density() {
        out.extend(rule3_density_mismatch(m, d, &tol.density));
    }
    out.extend(rule4_metric_mismatch(m, metrics, &tol.metric));
    for (name, value) in custom {
        if let Ok(recomputed) = registry.evaluate(name, m) {
            out.extend(mismatch(name, value, &recomputed, &tol.metric));
        }
    }
    out.extend(rule5_internal(m));
    out
}

/// Runs every rule on one result, using the built-in metric registry.
pub fn check_result(result: &ReportedResult, tol: &Tolerances) -> ConsistencyVerdict {
    evaluate_result(result, tol, &MetricRegistry::default()).verdict
}

/// Runs rules 1–6 on one result and returns the verdict with its reconstruction.
///
/// Values failing rule 1 are left out of the reconstruction. A matrix that
/// was solved from part of the report but contradicted by the rest is still
/// put through rules 2–5 so the disagreeing values are itemized.
pub fn evaluate_result(result: &ReportedResult, tol: &Tolerances, registry: &MetricRegistry) -> ResultCheck {
    let mut violations = rule1_range(&result.metrics);
    let mut screened = result.metrics.clone();
    for v in &violations {
        for value in &v.offending_values {
            if let Some(kind) = MetricKind::from_name(&value.name) {
                screened.remove(kind);
            }
        }
    }
    let mut custom = BTreeMap::new();
    for (name, value) in &result.custom_metrics {
        match registry.range(name) {
            Ok(range) if !range.contains(value) => violations.push(RuleViolation::automatic(
                Rule::Range,
                format!("{name} = {} outside {range}", display_rational(value)),
                vec![offending(name, Some(value), None)],
            )),
            Ok(_) => {
                custom.insert(name.clone(), value.clone());
            }
            Err(_) => {}
        }
    }

    let reconstruction = reconstruct(&screened, tol);
    match &reconstruction {
        ReconstructionOutcome::Unique { matrix, .. } => {
            violations.extend(matrix_rules(matrix, &screened, &custom, registry, tol));
        }
        ReconstructionOutcome::Infeasible { candidate: Some(matrix) } => {
            let found = matrix_rules(matrix, &screened, &custom, registry, tol);
            if found.is_empty() {
                violations.push(no_matrix_violation());
            }
            violations.extend(found);
        }
        ReconstructionOutcome::Infeasible { candidate: None } => violations.push(no_matrix_violation()),
        ReconstructionOutcome::Underdetermined { .. } => {}
    }
    if let Some(annotation) = &result.rule6_annotation {
        violations.extend(rule6_manual(annotation));
    }

    let verdict = if !violations.is_empty() {
        ConsistencyVerdict::Inconsistent(violations)
    } else if reconstruction.is_underdetermined() {
        ConsistencyVerdict::NotCheckable
    } else {
        ConsistencyVerdict::ConsistentChecked
    };
    ResultCheck { verdict, reconstruction }
}
