//! Non-visual feature extraction.
//!
//! [`parse`] turns templated questions into structured roles, [`stats`] fits
//! per-fold frequency and log-moment tables on training samples only,
//! [`extract`] expands a task's feature plan against those tables, and
//! [`tfidf`] backs the generic fallback path for questions that match no
//! template. Everything is a pure function of (sample, statistics, spec), so
//! featurization is embarrassingly parallel and bit-reproducible.

pub mod extract;
pub mod parse;
pub mod stats;
pub mod tfidf;

pub use extract::{FeatureSchema, Featurizer, GenericFeaturizer};
pub use parse::{parse_template, OptionData, ParsedQuestion, SpatialKeyword, TemplateParser};
pub use stats::{fit_fold_statistics, FoldStatistics, TaskStatistics, ValueStats};
pub use tfidf::TfIdfModel;

/// Log-space floor: values are logged as ln(max(v, EPS)).
pub const LOG_EPS: f64 = 1e-6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sample '{id}' ({task_type}): question does not match any template pattern")]
    Unparseable { id: String, task_type: String },
    #[error("template pattern error: {0}")]
    Pattern(String),
    #[error("cannot fit fold statistics on an empty training set")]
    EmptyTrainingSet,
}

/// Safe natural log with the crate-wide floor.
#[inline]
pub fn log_value(v: f64) -> f64 {
    v.max(LOG_EPS).ln()
}

/// Canonical category form: trimmed, lowercased.
pub fn normalize_category(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Sorted-pair key; mirrored inputs map to the same key.
pub fn pair_key(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}|{b}")
    } else {
        format!("{b}|{a}")
    }
}
