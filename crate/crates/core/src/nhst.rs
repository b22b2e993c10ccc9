//! Multiple-comparison corrections and the per-paper adjustment verdict.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::NhstError;
use crate::number::{display_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentMethod {
    Bonferroni,
    BenjaminiHochberg,
    Nemenyi,
    /// Any other named procedure; it does not count as an adjustment.
    Unrecognized(String),
}

impl AdjustmentMethod {
    /// Parses a method name. Blank and `none` mean no adjustment was claimed.
    pub fn parse(name: &str) -> Option<AdjustmentMethod> {
        let key: String = name.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "" | "none" | "no" => None,
            "bonferroni" => Some(AdjustmentMethod::Bonferroni),
            "bh" | "fdr" | "benjaminihochberg" => Some(AdjustmentMethod::BenjaminiHochberg),
            "nemenyi" => Some(AdjustmentMethod::Nemenyi),
            _ => Some(AdjustmentMethod::Unrecognized(name.trim().to_string())),
        }
    }

    pub fn is_recognized(&self) -> bool {
        !matches!(self, AdjustmentMethod::Unrecognized(_))
    }
}

impl fmt::Display for AdjustmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdjustmentMethod::Bonferroni => f.write_str("bonferroni"),
            AdjustmentMethod::BenjaminiHochberg => f.write_str("benjamini-hochberg"),
            AdjustmentMethod::Nemenyi => f.write_str("nemenyi"),
            AdjustmentMethod::Unrecognized(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdjustmentClaim {
    pub method: AdjustmentMethod,
    pub tests_covered: u64,
}

/// How one paper handled its significance tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NhstRecord {
    paper_id: String,
    n_tests: u64,
    alpha: Rational,
    claims: Vec<AdjustmentClaim>,
    p_values: Option<Vec<Rational>>,
}

impl NhstRecord {
    pub fn new(
        paper_id: impl Into<String>,
        n_tests: u64,
        alpha: Rational,
        claims: Vec<AdjustmentClaim>,
        p_values: Option<Vec<Rational>>,
    ) -> Result<Self, NhstError> {
        if n_tests == 0 {
            return Err(NhstError::ZeroTests);
        }
        if !alpha.is_positive() || alpha >= Rational::one() {
            return Err(NhstError::AlphaOutOfRange);
        }
        let covered: u64 = claims.iter().map(|c| c.tests_covered).sum();
        if covered > n_tests {
            return Err(NhstError::OverCoverage { covered, n_tests });
        }
        if let Some(ps) = &p_values {
            if ps.len() as u64 > n_tests {
                return Err(NhstError::TooManyPValues { count: ps.len(), n_tests });
            }
            if let Some(bad) = ps.iter().find(|p| p.is_negative() || **p > Rational::one()) {
                return Err(NhstError::PValueOutOfRange(display_rational(bad)));
            }
        }
        Ok(Self { paper_id: paper_id.into(), n_tests, alpha, claims, p_values })
    }

    pub fn paper_id(&self) -> &str {
        &self.paper_id
    }

    pub fn n_tests(&self) -> u64 {
        self.n_tests
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn claims(&self) -> &[AdjustmentClaim] {
        &self.claims
    }

    pub fn p_values(&self) -> Option<&[Rational]> {
        self.p_values.as_deref()
    }

    /// Tests covered by recognized correction procedures.
    pub fn covered_tests(&self) -> u64 {
        self.claims.iter().filter(|c| c.method.is_recognized()).map(|c| c.tests_covered).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NhstVerdict {
    NotApplicable,
    NoAdjustment,
    PartialAdjustment,
    Adjusted,
}

impl NhstVerdict {
    pub fn is_error(self) -> bool {
        matches!(self, NhstVerdict::NoAdjustment | NhstVerdict::PartialAdjustment)
    }
}

/// `alpha / n`.
pub fn bonferroni_alpha(alpha: &Rational, n: u64) -> Result<Rational, NhstError> {
    if n == 0 {
        return Err(NhstError::ZeroTests);
    }
    Ok(alpha / Rational::from_integer(BigInt::from(n)))
}

/// Indices (ascending) of p-values at or below `alpha / m`.
pub fn bonferroni_rejections(p_values: &[Rational], alpha: &Rational) -> Vec<usize> {
    if p_values.is_empty() {
        return Vec::new();
    }
    let threshold = bonferroni_alpha(alpha, p_values.len() as u64).expect("non-empty");
    (0..p_values.len()).filter(|&i| p_values[i] <= threshold).collect()
}

/// Benjamini–Hochberg step-up procedure.
///
/// With the p-values sorted as `p(1) ≤ … ≤ p(m)`, finds the largest `k` with
/// `p(k) ≤ k·alpha/m` and rejects every hypothesis whose p-value is at most
/// `p(k)`, so values tied with `p(k)` are all rejected. Returns the rejected
/// indices in ascending order.
pub fn benjamini_hochberg(p_values: &[Rational], alpha: &Rational) -> Vec<usize> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].cmp(&p_values[b]));
    let m_big = Rational::from_integer(BigInt::from(m));
    let cutoff = (1..=m).rev().find_map(|k| {
        let p = &p_values[order[k - 1]];
        let bound = alpha * Rational::from_integer(BigInt::from(k)) / &m_big;
        (p <= &bound).then(|| p.clone())
    });
    match cutoff {
        Some(t) => (0..m).filter(|&i| p_values[i] <= t).collect(),
        None => Vec::new(),
    }
}

/// Single tests need no correction; otherwise the verdict depends on how
/// many of the tests recognized procedures cover.
pub fn classify_adjustment(rec: &NhstRecord) -> NhstVerdict {
    if rec.n_tests == 1 {
        return NhstVerdict::NotApplicable;
    }
    let covered = rec.covered_tests();
    if covered == 0 {
        NhstVerdict::NoAdjustment
    } else if covered < rec.n_tests {
        NhstVerdict::PartialAdjustment
    } else {
        NhstVerdict::Adjusted
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NhstTally {
    pub not_applicable: u64,
    pub no_adjustment: u64,
    pub partial_adjustment: u64,
    pub adjusted: u64,
}

impl NhstTally {
    pub fn add(&mut self, verdict: NhstVerdict) {
        match verdict {
            NhstVerdict::NotApplicable => self.not_applicable += 1,
            NhstVerdict::NoAdjustment => self.no_adjustment += 1,
            NhstVerdict::PartialAdjustment => self.partial_adjustment += 1,
            NhstVerdict::Adjusted => self.adjusted += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.not_applicable + self.no_adjustment + self.partial_adjustment + self.adjusted
    }

    /// Papers running several tests without full correction.
    pub fn papers_in_error(&self) -> u64 {
        self.no_adjustment + self.partial_adjustment
    }

    /// Papers running more than one test.
    pub fn multiple_testing(&self) -> u64 {
        self.total() - self.not_applicable
    }
}

pub fn audit_nhst_corpus(records: &[NhstRecord]) -> NhstTally {
    let mut tally = NhstTally::default();
    for rec in records {
        tally.add(classify_adjustment(rec));
    }
    tally
}

/// Rejection counts for a record's p-values under each procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionSummary {
    pub p_values: usize,
    pub unadjusted: usize,
    pub bonferroni: usize,
    pub benjamini_hochberg: usize,
}

pub fn rejection_summary(rec: &NhstRecord) -> Option<RejectionSummary> {
    let ps = rec.p_values()?;
    let alpha = rec.alpha();
    Some(RejectionSummary {
        p_values: ps.len(),
        unadjusted: ps.iter().filter(|p| *p <= alpha).count(),
        bonferroni: bonferroni_rejections(ps, alpha).len(),
        benjamini_hochberg: benjamini_hochberg(ps, alpha).len(),
    })
}
