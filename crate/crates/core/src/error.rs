use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseValueError {
    #[error("empty value")]
    Empty,
    #[error("not a decimal number: {0:?}")]
    Malformed(String),
    #[error("{text:?} has more than {max} fractional digits")]
    TooPrecise { text: String, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("metric {0:?} is already registered")]
    DuplicateMetric(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("confusion matrix cells must be non-negative")]
    NegativeCell,
    #[error("count-mode confusion matrix must hold at least one instance")]
    EmptyCounts,
    #[error("normalized confusion matrix cells sum to {0}, not 1")]
    NotNormalized(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("precision, recall and false positive rate must lie in (0, 1]")]
    BoundaryDegenerate,
    #[error("reported values admit no confusion matrix")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NhstError {
    #[error("number of tests must be positive")]
    ZeroTests,
    #[error("alpha must lie strictly between 0 and 1")]
    AlphaOutOfRange,
    #[error("adjustment claims cover {covered} tests but only {n_tests} were run")]
    OverCoverage { covered: u64, n_tests: u64 },
    #[error("{count} p-values supplied for {n_tests} tests")]
    TooManyPValues { count: usize, n_tests: u64 },
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Header { path: PathBuf, message: String },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
