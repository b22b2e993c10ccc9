//! CSV ingestion with row-level diagnostics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use serde::{Deserialize, Serialize};

use super::ReportedResult;
use crate::error::CorpusError;
use crate::metrics::{MetricKind, MetricRegistry};
use crate::nhst::{AdjustmentClaim, AdjustmentMethod, NhstRecord};
use crate::number::{parse_decimal, rational, Rational};
use crate::reconstruct::ReportedMetrics;

/// Fixed columns of the results file. Columns named after registered
/// custom metrics may follow.
pub const RESULT_COLUMNS: [&str; 13] = [
    "paper_id",
    "result_id",
    "dataset_name",
    "recall",
    "precision",
    "fpr",
    "f_measure",
    "mcc",
    "accuracy",
    "specificity",
    "reported_density",
    "n",
    "rule6_annotation",
];

const NHST_COLUMNS: [&str; 6] = ["paper_id", "n_tests", "alpha", "adjustment_method", "tests_covered", "p_values"];

/// A rejected input row. `line` is the 1-based line in the file, the header being line 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub results: Vec<ReportedResult>,
    pub nhst: Vec<NhstRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Loads with the built-in metrics and a default alpha of 0.05.
pub fn load_corpus(results_path: &Path, nhst_path: Option<&Path>) -> Result<LoadedCorpus, CorpusError> {
    load_corpus_with(results_path, nhst_path, &MetricRegistry::default(), &rational(1, 20))
}

/// Reads a results file and, optionally, an NHST file.
///
/// Malformed rows are reported as diagnostics and left out; all other rows
/// are kept. Missing files and unusable headers are errors.
pub fn load_corpus_with(
    results_path: &Path,
    nhst_path: Option<&Path>,
    registry: &MetricRegistry,
    default_alpha: &Rational,
) -> Result<LoadedCorpus, CorpusError> {
    let mut corpus = LoadedCorpus::default();
    let custom: Vec<String> = registry.custom().map(|d| d.name.clone()).collect();
    read_results(results_path, &custom, &mut corpus)?;
    if let Some(path) = nhst_path {
        read_nhst(path, default_alpha, &mut corpus)?;
    }
    sort_diagnostics(&mut corpus.diagnostics);
    Ok(corpus)
}

/// Reads only an NHST file.
pub fn load_nhst(path: &Path, default_alpha: &Rational) -> Result<(Vec<NhstRecord>, Vec<Diagnostic>), CorpusError> {
    let mut corpus = LoadedCorpus::default();
    read_nhst(path, default_alpha, &mut corpus)?;
    sort_diagnostics(&mut corpus.diagnostics);
    Ok((corpus.nhst, corpus.diagnostics))
}

fn sort_diagnostics(diagnostics: &mut [Diagnostic]) {
    diagnostics.sort_by(|a, b| (&a.file, a.line).cmp(&(&b.file, b.line)));
}

struct Table {
    file: String,
    columns: BTreeMap<String, usize>,
    width: usize,
}

impl Table {
    fn field<'r>(&self, record: &'r StringRecord, name: &str) -> &'r str {
        self.columns.get(name).and_then(|&i| record.get(i)).unwrap_or("")
    }

    fn diagnostic(&self, line: u64, message: impl Into<String>) -> Diagnostic {
        Diagnostic { file: self.file.clone(), line, message: message.into() }
    }
}

fn open(path: &Path, known: &[&str], required: &[&str]) -> Result<(csv::Reader<File>, Table), CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let mut reader = ReaderBuilder::new().flexible(true).trim(Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|source| CorpusError::Csv { path: path.to_path_buf(), source })?.clone();
    let header_error = |message: String| CorpusError::Header { path: path.to_path_buf(), message };
    if headers.iter().all(str::is_empty) {
        return Err(header_error("missing header row".into()));
    }
    let mut columns = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        let name = name.to_ascii_lowercase();
        if !known.contains(&name.as_str()) {
            return Err(header_error(format!("unknown column {name:?}; expected some of {}", known.join(", "))));
        }
        if columns.insert(name.clone(), i).is_some() {
            return Err(header_error(format!("column {name:?} appears twice")));
        }
    }
    if let Some(missing) = required.iter().find(|c| !columns.contains_key(**c)) {
        return Err(header_error(format!("missing required column {missing:?}")));
    }
    let table = Table { file: path.display().to_string(), columns, width: headers.len() };
    Ok((reader, table))
}

/// Yields `(line, record)` pairs; malformed records become diagnostics.
fn rows(
    path: &Path,
    reader: &mut csv::Reader<File>,
    table: &Table,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<Vec<(u64, StringRecord)>, CorpusError> {
    let mut out = Vec::new();
    for item in reader.records() {
        match item {
            Ok(record) => {
                let line = record.position().map_or(0, |p| p.line());
                if record.iter().all(str::is_empty) {
                    continue;
                }
                if record.len() != table.width {
                    diagnostics.push(table.diagnostic(line, format!("expected {} fields, found {}", table.width, record.len())));
                    continue;
                }
                out.push((line, record));
            }
            Err(e) if !e.is_io_error() => {
                let line = e.position().map_or(0, |p| p.line());
                diagnostics.push(table.diagnostic(line, e.to_string()));
            }
            Err(source) => return Err(CorpusError::Csv { path: path.to_path_buf(), source }),
        }
    }
    Ok(out)
}

fn optional_text(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn read_results(path: &Path, custom: &[String], corpus: &mut LoadedCorpus) -> Result<(), CorpusError> {
    let mut known: Vec<&str> = RESULT_COLUMNS.to_vec();
    known.extend(custom.iter().map(String::as_str));
    let (mut reader, table) = open(path, &known, &["paper_id", "result_id"])?;
    let mut seen = HashSet::new();
    for (line, record) in rows(path, &mut reader, &table, &mut corpus.diagnostics)? {
        match parse_result(&table, &record, custom) {
            Ok(result) => {
                if seen.insert((result.paper_id.clone(), result.result_id.clone())) {
                    corpus.results.push(result);
                } else {
                    corpus.diagnostics.push(table.diagnostic(
                        line,
                        format!("duplicate result {}/{}", result.paper_id, result.result_id),
                    ));
                }
            }
            Err(problems) => corpus.diagnostics.push(table.diagnostic(line, problems.join("; "))),
        }
    }
    Ok(())
}

fn parse_result(table: &Table, record: &StringRecord, custom: &[String]) -> Result<ReportedResult, Vec<String>> {
    let mut problems = Vec::new();
    let paper_id = table.field(record, "paper_id");
    let result_id = table.field(record, "result_id");
    if paper_id.is_empty() {
        problems.push("paper_id is empty".to_string());
    }
    if result_id.is_empty() {
        problems.push("result_id is empty".to_string());
    }
    let mut value = |column: &str| -> Option<Rational> {
        let text = table.field(record, column);
        if text.is_empty() {
            return None;
        }
        parse_decimal(text).map_err(|e| problems.push(format!("{column}: {e}"))).ok()
    };

    let mut metrics = ReportedMetrics::new();
    for kind in MetricKind::ALL {
        if kind == MetricKind::DefectDensity {
            continue;
        }
        if let Some(v) = value(kind.name()) {
            metrics.insert(kind, v);
        }
    }
    if let Some(d) = value("reported_density") {
        metrics.insert(MetricKind::DefectDensity, d);
    }
    let mut custom_metrics = BTreeMap::new();
    for name in custom {
        if let Some(v) = value(name) {
            custom_metrics.insert(name.clone(), v);
        }
    }
    let n = table.field(record, "n");
    if !n.is_empty() {
        match n.parse::<u64>() {
            Ok(size) if size > 0 => metrics = metrics.with_dataset_size(size),
            _ => problems.push(format!("n: expected a positive integer, found {n:?}")),
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    Ok(ReportedResult {
        paper_id: paper_id.to_string(),
        result_id: result_id.to_string(),
        dataset_name: optional_text(table.field(record, "dataset_name")),
        metrics,
        custom_metrics,
        rule6_annotation: optional_text(table.field(record, "rule6_annotation")),
    })
}

#[derive(Default)]
struct PendingPaper {
    line: u64,
    n_tests: Option<u64>,
    alpha: Option<Rational>,
    claims: Vec<(AdjustmentMethod, Option<u64>)>,
    p_values: Option<Vec<Rational>>,
    broken: bool,
}

struct NhstRow {
    n_tests: Option<u64>,
    alpha: Option<Rational>,
    claim: Option<(AdjustmentMethod, Option<u64>)>,
    p_values: Vec<Rational>,
}

fn parse_nhst_row(table: &Table, record: &StringRecord) -> Result<NhstRow, Vec<String>> {
    let mut problems = Vec::new();
    let count = |column: &str, problems: &mut Vec<String>| -> Option<u64> {
        let text = table.field(record, column);
        if text.is_empty() {
            return None;
        }
        text.parse::<u64>().map_err(|_| problems.push(format!("{column}: expected an integer, found {text:?}"))).ok()
    };
    let n_tests = count("n_tests", &mut problems);
    let covered = count("tests_covered", &mut problems);
    let alpha_text = table.field(record, "alpha");
    let alpha = if alpha_text.is_empty() {
        None
    } else {
        parse_decimal(alpha_text).map_err(|e| problems.push(format!("alpha: {e}"))).ok()
    };
    let claim = match AdjustmentMethod::parse(table.field(record, "adjustment_method")) {
        Some(method) => Some((method, covered)),
        None if covered.is_some_and(|c| c > 0) => {
            problems.push("tests_covered given without adjustment_method".to_string());
            None
        }
        None => None,
    };
    let mut p_values = Vec::new();
    for part in table.field(record, "p_values").split(';').map(str::trim).filter(|s| !s.is_empty()) {
        match parse_decimal(part) {
            Ok(p) => p_values.push(p),
            Err(e) => problems.push(format!("p_values: {e}")),
        }
    }
    if problems.is_empty() {
        Ok(NhstRow { n_tests, alpha, claim, p_values })
    } else {
        Err(problems)
    }
}

/// Rows sharing a `paper_id` are merged into one record. A paper with any
/// malformed row is rejected as a whole.
fn read_nhst(path: &Path, default_alpha: &Rational, corpus: &mut LoadedCorpus) -> Result<(), CorpusError> {
    let (mut reader, table) = open(path, &NHST_COLUMNS, &["paper_id", "n_tests"])?;
    let mut papers: BTreeMap<String, PendingPaper> = BTreeMap::new();
    for (line, record) in rows(path, &mut reader, &table, &mut corpus.diagnostics)? {
        let paper_id = table.field(&record, "paper_id");
        if paper_id.is_empty() {
            corpus.diagnostics.push(table.diagnostic(line, "paper_id is empty"));
            continue;
        }
        let pending = papers.entry(paper_id.to_string()).or_insert_with(|| PendingPaper { line, ..Default::default() });
        let row = match parse_nhst_row(&table, &record) {
            Ok(row) => row,
            Err(problems) => {
                corpus.diagnostics.push(table.diagnostic(line, problems.join("; ")));
                pending.broken = true;
                continue;
            }
        };
        let mut conflicts = Vec::new();
        if let Some(n) = row.n_tests {
            match pending.n_tests {
                Some(prev) if prev != n => conflicts.push(format!("n_tests {n} conflicts with earlier {prev}")),
                _ => pending.n_tests = Some(n),
            }
        }
        if let Some(a) = row.alpha {
            match &pending.alpha {
                Some(prev) if *prev != a => conflicts.push("alpha conflicts with an earlier row".to_string()),
                _ => pending.alpha = Some(a),
            }
        }
        if !conflicts.is_empty() {
            corpus.diagnostics.push(table.diagnostic(line, conflicts.join("; ")));
            pending.broken = true;
            continue;
        }
        pending.claims.extend(row.claim);
        if !row.p_values.is_empty() {
            pending.p_values.get_or_insert_with(Vec::new).extend(row.p_values);
        }
    }

    for (paper_id, pending) in papers {
        if pending.broken {
            corpus.diagnostics.push(table.diagnostic(pending.line, format!("NHST record for {paper_id} rejected")));
            continue;
        }
        let Some(n_tests) = pending.n_tests else {
            corpus.diagnostics.push(table.diagnostic(pending.line, format!("no n_tests given for {paper_id}")));
            continue;
        };
        let claims = pending
            .claims
            .into_iter()
            .map(|(method, covered)| AdjustmentClaim { method, tests_covered: covered.unwrap_or(n_tests) })
            .collect();
        let alpha = pending.alpha.unwrap_or_else(|| default_alpha.clone());
        match NhstRecord::new(paper_id.as_str(), n_tests, alpha, claims, pending.p_values) {
            Ok(rec) => corpus.nhst.push(rec),
            Err(e) => corpus.diagnostics.push(table.diagnostic(pending.line, format!("{paper_id}: {e}"))),
        }
    }
    Ok(())
}
