//! Consistency auditing for reported classifier results.
//!
//! Confusion matrices are rebuilt from partially reported metrics with exact
//! rational arithmetic and checked against six integrity rules; papers using
//! significance tests are checked for multiple-comparison adjustment; both are
//! aggregated into corpus reports.

pub mod corpus;
pub mod error;
pub mod metrics;
pub mod nhst;
pub mod number;
pub mod reconstruct;
pub mod rules;

pub use corpus::{audit_corpus, load_corpus, CorpusReport, ReportFormat, ReportedResult};
pub use metrics::{compute_metric, ConfusionMatrix, MetricKind, MetricRegistry, MetricValue};
pub use nhst::{benjamini_hochberg, bonferroni_alpha, classify_adjustment, NhstRecord, NhstVerdict};
pub use number::{parse_decimal, Rational};
pub use reconstruct::{reconstruct, ReconstructionOutcome, ReportedMetrics};
pub use rules::{check_result, evaluate_result, ConsistencyVerdict, Rule, Tolerances};
