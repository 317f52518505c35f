//! Benchmark data model: samples, answers, predictions, and scoring.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Validation happens at load time (see [`crate::io`]); the rest of
//! the toolkit assumes a [`Benchmark`] that already satisfies its invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registry::{Registry, Scoring, TaskSpec};

/// Relative-error floor used when a ground-truth value is zero or negative on
/// a non-log task.
pub const REL_ERR_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate sample id '{0}'")]
    DuplicateId(String),
    #[error("unknown task_type '{task_type}' for sample '{id}'")]
    UnknownTaskType { id: String, task_type: String },
    #[error("sample '{id}': answer kind {found} does not match task '{task_type}' ({expected})")]
    AnswerKindMismatch {
        id: String,
        task_type: String,
        expected: AnswerKind,
        found: AnswerKind,
    },
    #[error("sample '{id}': multiple-choice index {index} out of range for {n_options} options")]
    IndexOutOfRange {
        id: String,
        index: usize,
        n_options: usize,
    },
    #[error("sample '{id}': multiple-choice answer requires an options list with >= 2 entries")]
    MissingOptions { id: String },
    #[error("sample '{id}': numeric answer must be finite, got {value}")]
    NonFiniteAnswer { id: String, value: f64 },
    #[error("sample '{id}': numeric answer must be > 0 on log-space task '{task_type}', got {value}")]
    NonPositiveAnswer {
        id: String,
        task_type: String,
        value: f64,
    },
    #[error("prediction kind {found} does not match answer kind {expected}")]
    ScoreKindMismatch {
        expected: AnswerKind,
        found: AnswerKind,
    },
    #[error("prediction for unknown sample id '{0}'")]
    UnknownPredictionId(String),
    #[error("duplicate prediction for sample id '{0}'")]
    DuplicatePrediction(String),
}

/// Answer payload. The `kind` tag is part of the wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Answer {
    MultipleChoice {
        mc_index: usize,
    },
    Numeric {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Categorical {
        label: String,
    },
}

impl Answer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Answer::MultipleChoice { .. } => AnswerKind::MultipleChoice,
            Answer::Numeric { .. } => AnswerKind::Numeric,
            Answer::Categorical { .. } => AnswerKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerKind {
    MultipleChoice,
    Numeric,
    Categorical,
}

impl fmt::Display for AnswerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AnswerKind::MultipleChoice => "multiple-choice",
            AnswerKind::Numeric => "numeric",
            AnswerKind::Categorical => "categorical",
        };
        f.write_str(s)
    }
}

/// One benchmark record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub task_type: String,
    pub question: String,
    pub answer: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<bool>,
}

impl Sample {
    /// Number of multiple-choice options, 0 when not an MC sample.
    pub fn option_count(&self) -> usize {
        self.options.as_ref().map_or(0, Vec::len)
    }

    /// Canonical label of the ground-truth answer, used for majority
    /// statistics and group keys. MC answers resolve to their option text.
    pub fn answer_label(&self) -> Option<String> {
        match &self.answer {
            Answer::MultipleChoice { mc_index } => self
                .options
                .as_ref()
                .and_then(|opts| opts.get(*mc_index))
                .map(|o| o.trim().to_string()),
            Answer::Categorical { label } => Some(label.trim().to_string()),
            Answer::Numeric { .. } => None,
        }
    }

    /// Ground-truth numeric value, also defined for MC tasks whose options
    /// are numbers (the value of the correct option).
    pub fn numeric_value(&self) -> Option<f64> {
        match &self.answer {
            Answer::Numeric { value, .. } => Some(*value),
            Answer::MultipleChoice { mc_index } => self
                .options
                .as_ref()
                .and_then(|opts| opts.get(*mc_index))
                .and_then(|o| o.trim().parse::<f64>().ok()),
            Answer::Categorical { .. } => None,
        }
    }

    /// Validate this sample against its task spec.
    pub fn validate(&self, spec: &TaskSpec) -> Result<(), ModelError> {
        let expected = spec.answer_kind;
        if self.answer.kind() != expected {
            return Err(ModelError::AnswerKindMismatch {
                id: self.id.clone(),
                task_type: self.task_type.clone(),
                expected,
                found: self.answer.kind(),
            });
        }
        match &self.answer {
            Answer::MultipleChoice { mc_index } => {
                let n = self.option_count();
                if n < 2 {
                    return Err(ModelError::MissingOptions { id: self.id.clone() });
                }
                if *mc_index >= n {
                    return Err(ModelError::IndexOutOfRange {
                        id: self.id.clone(),
                        index: *mc_index,
                        n_options: n,
                    });
                }
            }
            Answer::Numeric { value, .. } => {
                if !value.is_finite() {
                    return Err(ModelError::NonFiniteAnswer {
                        id: self.id.clone(),
                        value: *value,
                    });
                }
                if spec.log_space && *value <= 0.0 {
                    return Err(ModelError::NonPositiveAnswer {
                        id: self.id.clone(),
                        task_type: self.task_type.clone(),
                        value: *value,
                    });
                }
            }
            Answer::Categorical { .. } => {}
        }
        Ok(())
    }
}

/// An ordered set of samples plus the task specs that govern them.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub samples: Vec<Sample>,
    pub task_specs: Registry,
}

impl Benchmark {
    /// Build a benchmark from samples, validating every record.
    pub fn new(name: &str, samples: Vec<Sample>, specs: Registry) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.id.clone()) {
                return Err(ModelError::DuplicateId(s.id.clone()));
            }
            let spec = specs.get(&s.task_type).ok_or_else(|| ModelError::UnknownTaskType {
                id: s.id.clone(),
                task_type: s.task_type.clone(),
            })?;
            s.validate(spec)?;
        }
        Ok(Benchmark {
            name: name.to_string(),
            samples,
            task_specs: specs,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn spec_for(&self, sample: &Sample) -> &TaskSpec {
        self.task_specs
            .get(&sample.task_type)
            .expect("validated benchmark has a spec for every sample")
    }

    /// Task types present, in sorted order.
    pub fn task_types(&self) -> Vec<String> {
        let mut set: BTreeSet<String> = BTreeSet::new();
        for s in &self.samples {
            set.insert(s.task_type.clone());
        }
        set.into_iter().collect()
    }

    /// A benchmark with the given ids removed, preserving sample order.
    pub fn without_ids(&self, remove: &BTreeSet<String>) -> Benchmark {
        Benchmark {
            name: self.name.clone(),
            samples: self
                .samples
                .iter()
                .filter(|s| !remove.contains(&s.id))
                .cloned()
                .collect(),
            task_specs: self.task_specs.clone(),
        }
    }
}

/// Which input condition a prediction set was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Vision,
    Blind,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Vision => f.write_str("vision"),
            Condition::Blind => f.write_str("blind"),
        }
    }
}

/// Model predictions over a benchmark, keyed by sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model_name: String,
    pub condition: Condition,
    pub entries: BTreeMap<String, Answer>,
}

/// Score one prediction against a sample's ground truth.
///
/// MC and categorical answers score exact-match {0, 1}. Numeric answers score
/// the mean, over the spec's relative-accuracy thresholds, of the indicator
/// `|predicted - truth| / truth < 1 - threshold`.
pub fn score_sample(sample: &Sample, spec: &TaskSpec, predicted: &Answer) -> Result<f64, ModelError> {
    if predicted.kind() != sample.answer.kind() {
        return Err(ModelError::ScoreKindMismatch {
            expected: sample.answer.kind(),
            found: predicted.kind(),
        });
    }
    let score = match (&sample.answer, predicted) {
        (Answer::MultipleChoice { mc_index: truth }, Answer::MultipleChoice { mc_index: pred }) => {
            if truth == pred {
                1.0
            } else {
                0.0
            }
        }
        (Answer::Categorical { label: truth }, Answer::Categorical { label: pred }) => {
            if truth.trim() == pred.trim() {
                1.0
            } else {
                0.0
            }
        }
        (Answer::Numeric { value: truth, .. }, Answer::Numeric { value: pred, .. }) => {
            debug_assert_eq!(spec.scoring, Scoring::Mra);
            mean_relative_accuracy(*pred, *truth, &spec.mra_thresholds)
        }
        _ => unreachable!("kind equality checked above"),
    };
    Ok(score)
}

/// Mean relative accuracy of `predicted` against `truth` over `thresholds`.
pub fn mean_relative_accuracy(predicted: f64, truth: f64, thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    let denom = truth.abs().max(REL_ERR_EPS);
    let rel_err = (predicted - truth).abs() / denom;
    let hits = thresholds.iter().filter(|t| rel_err < 1.0 - **t).count();
    hits as f64 / thresholds.len() as f64
}
