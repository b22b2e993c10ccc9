use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusReport, MatrixStatus};
use crate::error::ReportError;
use crate::number::{format_fixed, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?} (expected json, md or csv)")),
        }
    }
}

/// Tallies from the original audit of the 49-paper defect-prediction corpus.
pub struct Published {
    pub inconsistent: u64,
    pub consistent_checked: u64,
    pub not_checkable: u64,
    pub total: u64,
    pub rule_violations: [u64; 6],
    pub nhst: [u64; 4],
    pub cooccurrence: [[u64; 2]; 3],
    pub papers_with_any_error: u64,
}

pub const PUBLISHED: Published = Published {
    inconsistent: 262,
    consistent_checked: 1479,
    not_checkable: 715,
    total: 2456,
    rule_violations: [171, 7, 60, 3, 19, 2],
    nhst: [1, 6, 1, 5],
    cooccurrence: [[1, 15], [3, 16], [3, 11]],
    papers_with_any_error: 22,
};

/// One compared quantity. `observed - published` is the divergence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub quantity: String,
    pub published: u64,
    pub observed: u64,
}

impl Divergence {
    pub fn difference(&self) -> i128 {
        self.observed as i128 - self.published as i128
    }
}

/// Every published tally next to the report's value, in a fixed order.
pub fn compare_with_published(report: &CorpusReport) -> Vec<Divergence> {
    let mut rows = Vec::new();
    let mut push = |quantity: String, published: u64, observed: u64| rows.push(Divergence { quantity, published, observed });
    let t = &report.result_tallies;
    push("inconsistent results".into(), PUBLISHED.inconsistent, t.inconsistent);
    push("consistent results".into(), PUBLISHED.consistent_checked, t.consistent_checked);
    push("not checkable results".into(), PUBLISHED.not_checkable, t.not_checkable);
    push("total results".into(), PUBLISHED.total, t.total);
    for (tally, published) in report.rule_tallies.iter().zip(PUBLISHED.rule_violations) {
        push(format!("rule {} violations", tally.rule.id()), published, tally.violations);
    }
    let n = &report.nhst_tallies;
    let observed = [n.not_applicable, n.no_adjustment, n.partial_adjustment, n.adjusted];
    for ((name, published), observed) in ["not applicable", "no", "partial", "yes"].iter().zip(PUBLISHED.nhst).zip(observed) {
        push(format!("NHST adjustment: {name}"), published, observed);
    }
    let rows_names = ["inconsistent", "consistent", "incomplete"];
    for (i, row) in rows_names.iter().enumerate() {
        for (j, col) in ["NHST error", "no NHST error"].iter().enumerate() {
            push(format!("papers {row} / {col}"), PUBLISHED.cooccurrence[i][j], report.cooccurrence[i][j]);
        }
    }
    push("papers with any error".into(), PUBLISHED.papers_with_any_error, report.papers_with_any_error);
    rows
}

/// `count / total` as a percentage rounded half-up to one decimal.
fn percent(count: u64, total: u64) -> String {
    if total == 0 {
        return "n/a".to_string();
    }
    let value = Rational::new((count * 100).into(), total.into());
    format!("{}%", format_fixed(&value, 1))
}

fn markdown(report: &CorpusReport, compare: bool) -> String {
    let mut s = String::new();
    let t = &report.result_tallies;
    let _ = writeln!(s, "# Consistency audit\n");
    let _ = writeln!(s, "Tolerances: metric {}, density {}.\n", report.metric_tolerance, report.density_tolerance);

    let _ = writeln!(s, "## Rule violations\n");
    let _ = writeln!(s, "| Rule | Count | Results (first rule) |");
    let _ = writeln!(s, "|---|---:|---:|");
    for tally in &report.rule_tallies {
        let _ = writeln!(
            s,
            "| **{}:** {} | {} | {} |",
            tally.rule.id(),
            tally.rule.summary(),
            tally.violations,
            tally.first_rule_results
        );
    }
    let _ = writeln!(s, "| All inconsistent results | {} | {} |", t.inconsistent, t.inconsistent);
    let _ = writeln!(s, "| Checked and consistent results | {} | |\n", t.consistent_checked);

    let _ = writeln!(s, "## Result verdicts\n");
    let _ = writeln!(s, "| Result | Count | % of total |");
    let _ = writeln!(s, "|---|---:|---:|");
    let other = t.total - t.inconsistent;
    for (label, count) in [
        ("Inconsistent results", t.inconsistent),
        ("Other results", other),
        ("Not checkable", t.not_checkable),
        ("Checked and consistent", t.consistent_checked),
        ("Total", t.total),
    ] {
        let _ = writeln!(s, "| {label} | {count} | {} |", percent(count, t.total));
    }
    s.push('\n');

    let n = &report.nhst_tallies;
    let _ = writeln!(s, "## Multiple-testing adjustment\n");
    let _ = writeln!(s, "| Adjust? | Count |");
    let _ = writeln!(s, "|---|---:|");
    let _ = writeln!(s, "| No | {} |", n.no_adjustment);
    let _ = writeln!(s, "| Partial | {} |", n.partial_adjustment);
    let _ = writeln!(s, "| Yes | {} |", n.adjusted);
    let _ = writeln!(s, "| **Total** | {} |\n", n.multiple_testing());
    let _ = writeln!(
        s,
        "Papers using NHST: {}; single test only: {}; in error: {}.\n",
        n.total(),
        n.not_applicable,
        n.papers_in_error()
    );

    let _ = writeln!(s, "## Errors by paper\n");
    let _ = writeln!(s, "| | NHST Error | No NHST Error |");
    let _ = writeln!(s, "|---|---:|---:|");
    for (status, row) in MatrixStatus::ALL.iter().zip(report.cooccurrence) {
        let label = match status {
            MatrixStatus::Inconsistent => "Inconsistent confusion matrix",
            MatrixStatus::Consistent => "Consistent confusion matrix",
            MatrixStatus::Incomplete => "Incomplete reporting",
        };
        let _ = writeln!(s, "| {label} | {} | {} |", row[0], row[1]);
    }
    let _ = writeln!(s, "\nPapers with any error: {} of {}.", report.papers_with_any_error, report.papers());

    if compare {
        let _ = writeln!(s, "\n## Comparison with published tallies\n");
        let _ = writeln!(s, "| Quantity | Published | Observed | Difference |");
        let _ = writeln!(s, "|---|---:|---:|---:|");
        for d in compare_with_published(report) {
            let _ = writeln!(s, "| {} | {} | {} | {:+} |", d.quantity, d.published, d.observed, d.difference());
        }
    }
    s
}

fn csv_rows(report: &CorpusReport) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["paper_id", "result_id", "verdict", "rules"])?;
    for entry in &report.results {
        let rules: Vec<String> = entry.outcome.violations().iter().map(|v| v.rule.id().to_string()).collect();
        writer.write_record([
            entry.paper_id.as_str(),
            entry.result_id.as_str(),
            entry.outcome.tag().name(),
            rules.join(";").as_str(),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders the report. `compare` appends the comparison with the published
/// tallies to the Markdown rendering.
pub fn render_report(report: &CorpusReport, format: ReportFormat, compare: bool) -> Result<String, ReportError> {
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(report, compare),
        ReportFormat::Csv => csv_rows(report)?,
    })
}

pub fn emit_report(
    report: &CorpusReport,
    format: ReportFormat,
    compare: bool,
    out: &mut dyn Write,
) -> Result<(), ReportError> {
    out.write_all(render_report(report, format, compare)?.as_bytes())?;
    out.flush()?;
    Ok(())
}
