//! Corpus-level auditing: per-result checks, paper classification and the
//! error co-occurrence table.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricRegistry;
use crate::nhst::{classify_adjustment, NhstRecord, NhstTally, NhstVerdict};
use crate::number::{display_rational, Rational};
use crate::reconstruct::ReportedMetrics;
use crate::rules::{evaluate_result, ConsistencyVerdict, Rule, Tolerances, VerdictTag};

mod load;
mod report;

pub use load::{load_corpus, load_corpus_with, load_nhst, Diagnostic, LoadedCorpus, RESULT_COLUMNS};
pub use report::{compare_with_published, emit_report, render_report, Divergence, Published, ReportFormat, PUBLISHED};

/// One experimental result as reported in a paper.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportedResult {
    pub paper_id: String,
    pub result_id: String,
    pub dataset_name: Option<String>,
    pub metrics: ReportedMetrics,
    /// Values of metrics registered beyond the built-in ones, keyed by name.
    pub custom_metrics: BTreeMap<String, Rational>,
    pub rule6_annotation: Option<String>,
}

impl ReportedResult {
    pub fn new(paper_id: impl Into<String>, result_id: impl Into<String>, metrics: ReportedMetrics) -> Self {
        Self {
            paper_id: paper_id.into(),
            result_id: result_id.into(),
            dataset_name: None,
            metrics,
            custom_metrics: BTreeMap::new(),
            rule6_annotation: None,
        }
    }

    pub fn with_dataset(mut self, name: impl Into<String>) -> Self {
        self.dataset_name = Some(name.into());
        self
    }

    pub fn with_annotation(mut self, text: impl Into<String>) -> Self {
        self.rule6_annotation = Some(text.into());
        self
    }

    pub fn with_custom(mut self, name: impl Into<String>, value: Rational) -> Self {
        self.custom_metrics.insert(name.into(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTallies {
    pub inconsistent: u64,
    pub consistent_checked: u64,
    pub not_checkable: u64,
    pub total: u64,
}

impl ResultTallies {
    fn add(&mut self, tag: VerdictTag) {
        match tag {
            VerdictTag::Inconsistent => self.inconsistent += 1,
            VerdictTag::ConsistentChecked => self.consistent_checked += 1,
            VerdictTag::NotCheckable => self.not_checkable += 1,
        }
        self.total += 1;
    }
}

/// `violations` counts every violation of the rule; `first_rule_results`
/// counts inconsistent results whose lowest-numbered violation is this rule,
/// so those sum to the number of inconsistent results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTally {
    pub rule: Rule,
    pub violations: u64,
    pub first_rule_results: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixStatus {
    Inconsistent,
    Consistent,
    /// No result of the paper could be checked.
    Incomplete,
}

impl MatrixStatus {
    pub const ALL: [MatrixStatus; 3] = [MatrixStatus::Inconsistent, MatrixStatus::Consistent, MatrixStatus::Incomplete];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NhstStatus {
    Error,
    NoError,
    NotUsed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperClassification {
    pub matrix_status: MatrixStatus,
    pub nhst_status: NhstStatus,
    pub results: u64,
    pub inconsistent_results: u64,
    pub nhst_verdict: Option<NhstVerdict>,
}

impl PaperClassification {
    pub fn has_error(&self) -> bool {
        self.matrix_status == MatrixStatus::Inconsistent || self.nhst_status == NhstStatus::Error
    }
}

/// Verdict for one result, as listed in the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub paper_id: String,
    pub result_id: String,
    pub dataset_name: Option<String>,
    pub outcome: ConsistencyVerdict,
    /// Reconstructed normalized cells `tp, fn, fp, tn`, when unique.
    pub matrix: Option<Vec<String>>,
}

/// Rows: inconsistent, consistent, incomplete matrix reporting.
/// Columns: NHST error, no NHST error (including papers without NHST).
pub type Cooccurrence = [[u64; 2]; 3];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub metric_tolerance: String,
    pub density_tolerance: String,
    pub result_tallies: ResultTallies,
    pub rule_tallies: Vec<RuleTally>,
    pub nhst_tallies: NhstTally,
    pub paper_classification: BTreeMap<String, PaperClassification>,
    pub cooccurrence: Cooccurrence,
    pub papers_with_any_error: u64,
    pub results: Vec<ResultEntry>,
}

pub fn audit_corpus(results: &[ReportedResult], nhst_records: &[NhstRecord], tol: &Tolerances) -> CorpusReport {
    audit_corpus_with(results, nhst_records, tol, &MetricRegistry::default())
}

/// Checks every result and NHST record and aggregates them.
///
/// Results are checked in parallel; the aggregation is a sequential fold
/// over the results sorted by `(paper_id, result_id)`, so the report does
/// not depend on input order or scheduling.
pub fn audit_corpus_with(
    results: &[ReportedResult],
    nhst_records: &[NhstRecord],
    tol: &Tolerances,
    registry: &MetricRegistry,
) -> CorpusReport {
    let mut sorted: Vec<&ReportedResult> = results.iter().collect();
    sorted.sort_by(|a, b| (&a.paper_id, &a.result_id).cmp(&(&b.paper_id, &b.result_id)));

    let checks: Vec<_> = sorted.par_iter().map(|r| evaluate_result(r, tol, registry)).collect();

    let mut result_tallies = ResultTallies::default();
    let mut violations = [0u64; 6];
    let mut first_rule = [0u64; 6];
    let mut per_paper: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
    let mut entries = Vec::with_capacity(sorted.len());
    for (r, check) in sorted.iter().zip(checks) {
        let tag = check.verdict.tag();
        result_tallies.add(tag);
        let rules: BTreeSet<u8> = check.verdict.violations().iter().map(|v| v.rule.id()).collect();
        for v in check.verdict.violations() {
            violations[v.rule.id() as usize - 1] += 1;
        }
        if let Some(first) = rules.first() {
            first_rule[*first as usize - 1] += 1;
        }
        let counts = per_paper.entry(r.paper_id.clone()).or_default();
        counts.0 += 1;
        match tag {
            VerdictTag::Inconsistent => counts.1 += 1,
            VerdictTag::ConsistentChecked => counts.2 += 1,
            VerdictTag::NotCheckable => {}
        }
        entries.push(ResultEntry {
            paper_id: r.paper_id.clone(),
            result_id: r.result_id.clone(),
            dataset_name: r.dataset_name.clone(),
            matrix: check.reconstruction.matrix().map(|m| m.cells().iter().map(display_rational).collect()),
            outcome: check.verdict,
        });
    }

    let mut nhst_tallies = NhstTally::default();
    let mut nhst_by_paper: BTreeMap<&str, NhstVerdict> = BTreeMap::new();
    for rec in nhst_records {
        let verdict = classify_adjustment(rec);
        nhst_tallies.add(verdict);
        nhst_by_paper
            .entry(rec.paper_id())
            .and_modify(|v| {
                if verdict.is_error() && !v.is_error() {
                    *v = verdict;
                }
            })
            .or_insert(verdict);
    }

    let papers: BTreeSet<&str> =
        per_paper.keys().map(String::as_str).chain(nhst_by_paper.keys().copied()).collect();
    let mut paper_classification = BTreeMap::new();
    for paper in papers {
        let (n, inconsistent, consistent) = per_paper.get(paper).copied().unwrap_or_default();
        let matrix_status = if inconsistent > 0 {
            MatrixStatus::Inconsistent
        } else if consistent > 0 {
            MatrixStatus::Consistent
        } else {
            MatrixStatus::Incomplete
        };
        let nhst_verdict = nhst_by_paper.get(paper).copied();
        let nhst_status = match nhst_verdict {
            None => NhstStatus::NotUsed,
            Some(v) if v.is_error() => NhstStatus::Error,
            Some(_) => NhstStatus::NoError,
        };
        paper_classification.insert(
            paper.to_string(),
            PaperClassification { matrix_status, nhst_status, results: n, inconsistent_results: inconsistent, nhst_verdict },
        );
    }

    let cooccurrence = cooccurrence_from(&paper_classification);
    let papers_with_any_error = paper_classification.values().filter(|p| p.has_error()).count() as u64;
    CorpusReport {
        metric_tolerance: display_rational(&tol.metric),
        density_tolerance: display_rational(&tol.density),
        result_tallies,
        rule_tallies: Rule::ALL
            .iter()
            .map(|&rule| RuleTally {
                rule,
                violations: violations[rule.id() as usize - 1],
                first_rule_results: first_rule[rule.id() as usize - 1],
            })
            .collect(),
        nhst_tallies,
        paper_classification,
        cooccurrence,
        papers_with_any_error,
        results: entries,
    }
}

fn cooccurrence_from(papers: &BTreeMap<String, PaperClassification>) -> Cooccurrence {
    let mut table = [[0u64; 2]; 3];
    for p in papers.values() {
        let row = MatrixStatus::ALL.iter().position(|s| *s == p.matrix_status).expect("listed status");
        let col = usize::from(p.nhst_status != NhstStatus::Error);
        table[row][col] += 1;
    }
    table
}

/// Papers by matrix status (rows) and NHST error (columns).
pub fn cooccurrence_table(report: &CorpusReport) -> Cooccurrence {
    cooccurrence_from(&report.paper_classification)
}

impl CorpusReport {
    pub fn papers(&self) -> u64 {
        self.paper_classification.len() as u64
    }

    /// True when any result or paper was found in error.
    pub fn has_findings(&self) -> bool {
        self.result_tallies.inconsistent > 0 || self.papers_with_any_error > 0
    }
}
