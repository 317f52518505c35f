//! File protocol for external diagnostics.
//!
//! `export_folds` writes `fold_{i}/train.jsonl` and `fold_{i}/val.jsonl`
//! record files plus the assignment itself; an external model trains on each
//! fold's train split and writes `fold_{i}/predictions.jsonl` with per-option
//! confidences (MC), a value (numeric), or per-label confidences
//! (categorical). `import_fold_predictions` re-verifies the leakage contract
//! on the way in: a prediction for any sample outside its validation fold is
//! a hard error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Answer, AnswerKind, Benchmark, Sample};
use crate::tst::engine::{
    baselines, DiagnosticPath, SampleDiagnosis, TstResult,
};
use crate::tst::{FoldAssignment, TstError};

fn io_err(e: impl std::fmt::Display) -> TstError {
    TstError::Io(e.to_string())
}

pub const ASSIGNMENT_FILE: &str = "folds.json";

fn fold_dir(dir: &Path, fold: usize) -> std::path::PathBuf {
    dir.join(format!("fold_{fold}"))
}

/// Write per-fold train/validation record files and the fold assignment.
pub fn export_folds(
    benchmark: &Benchmark,
    folds: &FoldAssignment,
    dir: &Path,
) -> Result<(), TstError> {
    folds.verify_partition(benchmark)?;
    fs::create_dir_all(dir).map_err(io_err)?;
    let assignment = serde_json::to_string_pretty(folds).map_err(io_err)?;
    fs::write(dir.join(ASSIGNMENT_FILE), assignment).map_err(io_err)?;

    for fold in 0..folds.k {
        let fdir = fold_dir(dir, fold);
        fs::create_dir_all(&fdir).map_err(io_err)?;
        let (train, val): (Vec<&Sample>, Vec<&Sample>) = benchmark
            .samples
            .iter()
            .partition(|s| folds.fold_of[&s.id] != fold);
        write_records(&fdir.join("train.jsonl"), &train)?;
        write_records(&fdir.join("val.jsonl"), &val)?;
    }
    Ok(())
}

fn write_records(path: &Path, samples: &[&Sample]) -> Result<(), TstError> {
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    for s in samples {
        let line = serde_json::to_string(s).map_err(io_err)?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// One line of a predictions file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PredictionLine {
    Mc { id: String, probs: Vec<f64> },
    Categorical { id: String, probs: BTreeMap<String, f64> },
    Numeric { id: String, value: f64 },
}

impl PredictionLine {
    fn id(&self) -> &str {
        match self {
            PredictionLine::Mc { id, .. } => id,
            PredictionLine::Categorical { id, .. } => id,
            PredictionLine::Numeric { id, .. } => id,
        }
    }
}

/// Write the built-in diagnostic's own predictions in the external format,
/// closing the protocol loop for round-trip checks and comparisons.
pub fn write_fold_predictions(
    result: &TstResult,
    benchmark: &Benchmark,
    folds: &FoldAssignment,
    dir: &Path,
) -> Result<(), TstError> {
    folds.verify_partition(benchmark)?;
    for fold in 0..folds.k {
        let fdir = fold_dir(dir, fold);
        fs::create_dir_all(&fdir).map_err(io_err)?;
        let file = fs::File::create(fdir.join("predictions.jsonl")).map_err(io_err)?;
        let mut w = std::io::BufWriter::new(file);
        for s in &benchmark.samples {
            if folds.fold_of[&s.id] != fold {
                continue;
            }
            let d = result
                .per_sample
                .get(&s.id)
                .ok_or_else(|| TstError::MissingPrediction { fold, id: s.id.clone() })?;
            let line = match (&s.answer, &d.probs, &d.label_probs) {
                (Answer::MultipleChoice { .. }, Some(probs), _) => PredictionLine::Mc {
                    id: s.id.clone(),
                    probs: probs.clone(),
                },
                (Answer::Categorical { .. }, _, Some(probs)) => PredictionLine::Categorical {
                    id: s.id.clone(),
                    probs: probs.clone(),
                },
                (Answer::Numeric { .. }, _, _) => match &d.prediction {
                    Answer::Numeric { value, .. } => PredictionLine::Numeric {
                        id: s.id.clone(),
                        value: *value,
                    },
                    _ => unreachable!("numeric task has numeric prediction"),
                },
                _ => {
                    return Err(TstError::BadPrediction {
                        fold,
                        id: s.id.clone(),
                        message: "diagnosis lacks confidences for its answer kind".into(),
                    })
                }
            };
            let json = serde_json::to_string(&line).map_err(io_err)?;
            writeln!(w, "{json}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    Ok(())
}

/// Read per-fold prediction files and reconstruct a [`TstResult`] as if the
/// external model were the diagnostic.
pub fn import_fold_predictions(
    dir: &Path,
    benchmark: &Benchmark,
) -> Result<TstResult, TstError> {
    let assignment_path = dir.join(ASSIGNMENT_FILE);
    let raw = fs::read_to_string(&assignment_path)
        .map_err(|_| TstError::MissingFold(assignment_path.display().to_string()))?;
    let folds: FoldAssignment = serde_json::from_str(&raw).map_err(io_err)?;
    folds.verify_partition(benchmark)?;

    let mut per_sample: BTreeMap<String, SampleDiagnosis> = BTreeMap::new();
    let mut fold_train_ids: Vec<BTreeSet<String>> = Vec::with_capacity(folds.k);

    for fold in 0..folds.k {
        let train_ids: BTreeSet<String> = benchmark
            .samples
            .iter()
            .filter(|s| folds.fold_of[&s.id] != fold)
            .map(|s| s.id.clone())
            .collect();
        let val_ids: BTreeSet<&str> = benchmark
            .samples
            .iter()
            .filter(|s| folds.fold_of[&s.id] == fold)
            .map(|s| s.id.as_str())
            .collect();

        let path = fold_dir(dir, fold).join("predictions.jsonl");
        let file = fs::File::open(&path)
            .map_err(|_| TstError::MissingFold(path.display().to_string()))?;
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: PredictionLine =
                serde_json::from_str(&line).map_err(|e| TstError::BadPrediction {
                    fold,
                    id: String::new(),
                    message: e.to_string(),
                })?;
            let id = parsed.id().to_string();
            // A prediction for a sample outside this validation fold means
            // the external model saw held-out data: reject the import.
            if !val_ids.contains(id.as_str()) {
                return Err(TstError::Leakage { fold, id });
            }
            if !seen.insert(id.clone()) {
                return Err(TstError::BadPrediction {
                    fold,
                    id,
                    message: "duplicate prediction".into(),
                });
            }
            let sample = benchmark.sample(&id).expect("verified against benchmark");
            let spec = benchmark.spec_for(sample);
            let diagnosis = diagnosis_from_line(sample, spec, &parsed, fold)?;
            per_sample.insert(id, diagnosis);
        }
        for id in val_ids {
            if !per_sample.contains_key(id) {
                return Err(TstError::MissingPrediction { fold, id: id.to_string() });
            }
        }
        fold_train_ids.push(train_ids);
    }

    let baselines = baselines(benchmark, &folds)?;
    let fold_importances = vec![BTreeMap::new(); folds.k];
    let result = crate::tst::engine::finalize(
        benchmark,
        &folds,
        per_sample,
        fold_importances,
        Vec::new(),
        fold_train_ids,
        baselines,
    );
    result.verify_held_out()?;
    Ok(result)
}

fn diagnosis_from_line(
    sample: &Sample,
    spec: &crate::registry::TaskSpec,
    line: &PredictionLine,
    fold: usize,
) -> Result<SampleDiagnosis, TstError> {
    let bad = |message: String| TstError::BadPrediction {
        fold,
        id: sample.id.to_string(),
        message,
    };
    match (&sample.answer.kind(), line) {
        (AnswerKind::MultipleChoice, PredictionLine::Mc { probs, .. }) => {
            if probs.len() != sample.option_count() {
                return Err(bad(format!(
                    "{} confidences for {} options",
                    probs.len(),
                    sample.option_count()
                )));
            }
            if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad("confidences must be finite and non-negative".into()));
            }
            let probs_vec = probs.clone();
            let gt = match &sample.answer {
                Answer::MultipleChoice { mc_index } => *mc_index,
                _ => unreachable!(),
            };
            let bias_score = probs_vec.get(gt).copied().unwrap_or(0.0);
            let prediction = Answer::MultipleChoice {
                mc_index: crate::forest::argmax(&probs_vec),
            };
            let accuracy_score = crate::model::score_sample(sample, spec, &prediction)?;
            Ok(SampleDiagnosis {
                fold,
                bias_score,
                accuracy_score,
                prediction,
                probs: Some(probs_vec),
                label_probs: None,
                path: DiagnosticPath::Templated,
            })
        }
        (AnswerKind::Categorical, PredictionLine::Categorical { probs, .. }) => {
            let labels: Vec<String> = probs.keys().cloned().collect();
            let values: Vec<f64> = probs.values().copied().collect();
            if values.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad("confidences must be finite and non-negative".into()));
            }
            let gt = sample.answer_label().unwrap_or_default();
            let bias_score = probs.get(&gt).copied().unwrap_or(0.0);
            let prediction = Answer::Categorical {
                label: labels
                    .get(crate::forest::argmax(&values))
                    .cloned()
                    .unwrap_or_default(),
            };
            let accuracy_score = crate::model::score_sample(sample, spec, &prediction)?;
            Ok(SampleDiagnosis {
                fold,
                bias_score,
                accuracy_score,
                prediction,
                probs: None,
                label_probs: Some(probs.clone()),
                path: DiagnosticPath::Templated,
            })
        }
        (AnswerKind::Numeric, PredictionLine::Numeric { value, .. }) => {
            if !value.is_finite() {
                return Err(bad("predicted value must be finite".into()));
            }
            let unit = match &sample.answer {
                Answer::Numeric { unit, .. } => unit.clone(),
                _ => None,
            };
            let prediction = Answer::Numeric { value: *value, unit };
            let accuracy_score = crate::model::score_sample(sample, spec, &prediction)?;
            Ok(SampleDiagnosis {
                fold,
                bias_score: accuracy_score,
                accuracy_score,
                prediction,
                probs: None,
                label_probs: None,
                path: DiagnosticPath::Templated,
            })
        }
        (kind, _) => Err(bad(format!("prediction shape does not match {kind} answer"))),
    }
}
