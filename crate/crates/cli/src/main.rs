use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use confaudit::corpus::{audit_corpus, emit_report, load_corpus_with, ReportFormat};
use confaudit::metrics::{MetricKind, MetricRegistry};
use confaudit::number::{display_rational, integer, parse_decimal, Rational};
use confaudit::reconstruct::{ReconstructionOutcome, ReportedMetrics, Route, DEFAULT_GRID};
use confaudit::rules::{evaluate_result, ConsistencyVerdict, Tolerances};
use confaudit::ReportedResult;

#[derive(Parser)]
#[command(name = "confaudit", version, about = "Audit reported classifier results for internal consistency")]
struct Cli {
    #[command(flatten)]
    config: Config,

    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    show_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Config {
    /// Allowed gap between reported and recomputed metrics.
    #[arg(long, global = true, env = "CONFAUDIT_METRIC_TOL", default_value = "0.05", value_parser = non_negative)]
    metric_tol: Rational,

    /// Allowed gap between reported and recomputed defect density.
    #[arg(long, global = true, env = "CONFAUDIT_DENSITY_TOL", default_value = "0.1", value_parser = non_negative)]
    density_tol: Rational,

    /// Significance level assumed for NHST records that leave alpha blank.
    #[arg(long, global = true, env = "CONFAUDIT_ALPHA", default_value = "0.05", value_parser = probability)]
    alpha: Rational,
}

impl Config {
    fn tolerances(&self) -> Tolerances {
        Tolerances { metric: self.metric_tol.clone(), density: self.density_tol.clone() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Audit a corpus of results and optional NHST records.
    Audit(AuditArgs),
    /// Check a single result given on the command line.
    CheckOne(CheckOneArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// Results CSV.
    #[arg(long)]
    results: PathBuf,
    /// NHST CSV.
    #[arg(long)]
    nhst: Option<PathBuf>,
    /// Output format: json, md or csv.
    #[arg(long, default_value = "json")]
    emit: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a comparison with the published tallies (Markdown only).
    #[arg(long)]
    compare_published: bool,
    /// Treat rejected input rows as an input error.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CheckOneArgs {
    #[arg(long, value_parser = decimal)]
    precision: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    recall: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    fpr: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    f_measure: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    mcc: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    accuracy: Option<Rational>,
    #[arg(long, value_parser = decimal)]
    specificity: Option<Rational>,
    /// Reported defect density.
    #[arg(long, value_parser = decimal)]
    density: Option<Rational>,
    /// Dataset size.
    #[arg(long)]
    n: Option<u64>,
    /// Manually identified reporting error.
    #[arg(long)]
    annotation: Option<String>,
}

fn decimal(s: &str) -> Result<Rational, String> {
    parse_decimal(s).map_err(|e| e.to_string())
}

fn non_negative(s: &str) -> Result<Rational, String> {
    let v = decimal(s)?;
    if v < integer(0) {
        return Err("must not be negative".into());
    }
    Ok(v)
}

fn probability(s: &str) -> Result<Rational, String> {
    let v = decimal(s)?;
    if v <= integer(0) || v >= integer(1) {
        return Err("must lie strictly between 0 and 1".into());
    }
    Ok(v)
}

const FINDINGS: u8 = 1;
const INPUT_ERROR: u8 = 2;

fn show_config(config: &Config) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "metric_tol = {}    (CONFAUDIT_METRIC_TOL)", display_rational(&config.metric_tol))?;
    writeln!(out, "density_tol = {}    (CONFAUDIT_DENSITY_TOL)", display_rational(&config.density_tol))?;
    writeln!(out, "alpha = {}    (CONFAUDIT_ALPHA)", display_rational(&config.alpha))?;
    writeln!(out, "search_grid = {DEFAULT_GRID}")?;
    writeln!(out, "max_fraction_digits = {}", confaudit::number::MAX_FRACTION_DIGITS)
}

fn audit(config: &Config, args: &AuditArgs) -> Result<u8> {
    let registry = MetricRegistry::default();
    let corpus = load_corpus_with(&args.results, args.nhst.as_deref(), &registry, &config.alpha)?;
    for d in &corpus.diagnostics {
        eprintln!("warning: {d}");
    }
    if args.strict && !corpus.diagnostics.is_empty() {
        bail!("{} input rows rejected", corpus.diagnostics.len());
    }
    let report = audit_corpus(&corpus.results, &corpus.nhst, &config.tolerances());
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            emit_report(&report, args.emit, args.compare_published, &mut BufWriter::new(file))?;
        }
        None => emit_report(&report, args.emit, args.compare_published, &mut io::stdout().lock())?,
    }
    Ok(if report.has_findings() { FINDINGS } else { 0 })
}

fn describe_route(route: &Route) -> String {
    match route {
        Route::ClosedForm { inputs } => {
            let names: Vec<_> = inputs.iter().map(|k| k.name()).collect();
            format!("solved from {}", names.join(", "))
        }
        Route::Search => "grid search".to_string(),
    }
}

fn check_one(config: &Config, args: &CheckOneArgs) -> Result<u8> {
    let mut metrics = ReportedMetrics::new();
    for (kind, value) in [
        (MetricKind::Precision, &args.precision),
        (MetricKind::Recall, &args.recall),
        (MetricKind::Fpr, &args.fpr),
        (MetricKind::FMeasure, &args.f_measure),
        (MetricKind::Mcc, &args.mcc),
        (MetricKind::Accuracy, &args.accuracy),
        (MetricKind::Specificity, &args.specificity),
        (MetricKind::DefectDensity, &args.density),
    ] {
        if let Some(v) = value {
            metrics.insert(kind, v.clone());
        }
    }
    if let Some(n) = args.n {
        metrics = metrics.with_dataset_size(n);
    }
    if metrics.is_empty() && args.annotation.is_none() {
        bail!("no metrics given");
    }
    let mut result = ReportedResult::new("cli", "1", metrics);
    result.rule6_annotation = args.annotation.clone();
    let check = evaluate_result(&result, &config.tolerances(), &MetricRegistry::default());

    let mut out = io::stdout().lock();
    match &check.reconstruction {
        ReconstructionOutcome::Unique { matrix, route } => {
            writeln!(out, "matrix: {matrix}  ({})", describe_route(route))?;
            if let Some(n) = args.n {
                let cells: Vec<_> =
                    matrix.cells().iter().map(|c| display_rational(&(c * Rational::from_integer(n.into())))).collect();
                writeln!(out, "counts at n = {n}: tp {}, fn {}, fp {}, tn {}", cells[0], cells[1], cells[2], cells[3])?;
            }
        }
        ReconstructionOutcome::Underdetermined { density } => {
            writeln!(out, "matrix: not determined; defect density in {density}")?;
        }
        ReconstructionOutcome::Infeasible { candidate: Some(m) } => {
            writeln!(out, "matrix: none fits all values; solved from a subset: {m}")?;
        }
        ReconstructionOutcome::Infeasible { candidate: None } => writeln!(out, "matrix: none fits the reported values")?,
    }
    writeln!(out, "verdict: {}", check.verdict.tag().name())?;
    for v in check.verdict.violations() {
        writeln!(out, "  {}: {}", v.rule, v.description)?;
    }
    Ok(if matches!(check.verdict, ConsistencyVerdict::Inconsistent(_)) { FINDINGS } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.show_config {
        let _ = show_config(&cli.config);
        return ExitCode::SUCCESS;
    }
    let outcome = match &cli.command {
        Some(Command::Audit(args)) => audit(&cli.config, args),
        Some(Command::CheckOne(args)) => check_one(&cli.config, args),
        None => {
            eprintln!("error: a subcommand is required (audit or check-one); see --help");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
