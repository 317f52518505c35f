//! The cross-validated diagnostic run.
//!
//! Per fold and task type we fit fold statistics on the training folds, train
//! one diagnostic (a classifier for discrete answers, a log-space regressor
//! for numeric ones), and score the held-out fold. A sample's bias score is
//! the diagnostic's confidence in the ground truth; its accuracy score is the
//! benchmark score of the diagnostic's prediction. Task types with too little
//! training data fall back to the training-fold majority, and samples whose
//! questions match no template are handled by a generic tf-idf model, so the
//! audit always covers the full test set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::stats::MajorityAnswer;
use crate::features::{fit_fold_statistics, Featurizer, FoldStatistics, GenericFeaturizer};
use crate::forest::{argmax, train_classifier, train_regressor, Forest, ForestParams};
use crate::model::{score_sample, Answer, AnswerKind, Benchmark, Sample};
use crate::registry::TaskSpec;
use crate::rng::{hash_str, mix};
use crate::tst::{FoldAssignment, TstError};

pub const TST_RESULT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticPath {
    Templated,
    Generic,
    MajorityFallback,
}

/// Held-out diagnosis of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnosis {
    pub fold: usize,
    /// s(x): the diagnostic's confidence in the ground-truth answer.
    pub bias_score: f64,
    /// Benchmark score of the diagnostic's prediction.
    pub accuracy_score: f64,
    pub prediction: Answer,
    /// Per-option confidences, aligned to the sample's options (MC tasks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    /// Per-label confidences (categorical tasks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_probs: Option<BTreeMap<String, f64>>,
    pub path: DiagnosticPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub n_samples: usize,
    pub accuracy: f64,
    pub mean_bias_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackRecord {
    pub fold: usize,
    pub task_type: String,
    pub reason: String,
}

/// Chance and majority context for a diagnostic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// Mean of 1/option-count over MC samples; None when the benchmark has
    /// no MC samples. Numeric tasks carry no chance level and are excluded.
    pub chance: Option<f64>,
    pub n_chance_samples: usize,
    /// Cross-validated score of predicting the training-fold modal answer
    /// (discrete) or log-space median (numeric), over all samples.
    pub majority: f64,
    pub per_task_majority: BTreeMap<String, f64>,
}

/// Everything a stress-test run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstResult {
    pub version: u32,
    pub benchmark_name: String,
    pub n_samples: usize,
    pub k: usize,
    pub per_sample: BTreeMap<String, SampleDiagnosis>,
    pub per_task: BTreeMap<String, TaskSummary>,
    /// Mean per-sample accuracy score: the overall non-visual solvability.
    pub aggregate_accuracy: f64,
    pub mean_bias_score: f64,
    /// Pooled accuracy per fold, plus their mean and sample std.
    pub per_fold_accuracy: Vec<f64>,
    pub fold_accuracy_mean: f64,
    pub fold_accuracy_std: f64,
    pub baselines: Baselines,
    /// fold -> task -> feature -> importance.
    pub fold_importances: Vec<BTreeMap<String, BTreeMap<String, f64>>>,
    pub fallbacks: Vec<FallbackRecord>,
    /// Ids each fold's diagnostics trained on, for leakage audits.
    pub fold_train_ids: Vec<BTreeSet<String>>,
}

impl TstResult {
    /// id -> s(x).
    pub fn bias_scores(&self) -> BTreeMap<String, f64> {
        self.per_sample
            .iter()
            .map(|(id, d)| (id.clone(), d.bias_score))
            .collect()
    }

    pub fn max_bias_score(&self) -> f64 {
        self.per_sample
            .values()
            .map(|d| d.bias_score)
            .fold(0.0, f64::max)
    }

    /// Every sample was scored by a fold whose training ids exclude it.
    pub fn verify_held_out(&self) -> Result<(), TstError> {
        for (id, d) in &self.per_sample {
            let train = self
                .fold_train_ids
                .get(d.fold)
                .ok_or_else(|| TstError::MissingFold(format!("fold {}", d.fold)))?;
            if train.contains(id) {
                return Err(TstError::Leakage {
                    fold: d.fold,
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Run the stress test: one diagnostic per task type per fold.
pub fn run_tst(
    benchmark: &Benchmark,
    params: &ForestParams,
    folds: &FoldAssignment,
) -> Result<TstResult, TstError> {
    folds.verify_partition(benchmark)?;

    let mut per_sample: BTreeMap<String, SampleDiagnosis> = BTreeMap::new();
    let mut fold_importances = Vec::with_capacity(folds.k);
    let mut fallbacks = Vec::new();
    let mut fold_train_ids = Vec::with_capacity(folds.k);

    for fold in 0..folds.k {
        let (train, val): (Vec<&Sample>, Vec<&Sample>) = benchmark
            .samples
            .iter()
            .partition(|s| folds.fold_of[&s.id] != fold);
        fold_train_ids.push(train.iter().map(|s| s.id.to_string()).collect());

        let mut importances: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        if val.is_empty() {
            fold_importances.push(importances);
            continue;
        }

        let stats = match fit_fold_statistics(&train, &benchmark.task_specs) {
            Ok(stats) => Some(stats),
            Err(crate::features::FeatureError::EmptyTrainingSet) => None,
            Err(e) => return Err(e.into()),
        };

        for task in benchmark.task_types() {
            let val_t: Vec<&Sample> = val
                .iter()
                .filter(|s| s.task_type == task)
                .copied()
                .collect();
            if val_t.is_empty() {
                continue;
            }
            let train_t: Vec<&Sample> = train
                .iter()
                .filter(|s| s.task_type == task)
                .copied()
                .collect();
            let spec = benchmark
                .task_specs
                .get(&task)
                .expect("validated benchmark");

            diagnose_task(
                spec,
                &train_t,
                &val_t,
                stats.as_ref(),
                params,
                fold,
                &mut per_sample,
                &mut importances,
                &mut fallbacks,
            )?;
        }
        fold_importances.push(importances);
    }

    let baselines = baselines(benchmark, folds)?;
    Ok(finalize(
        benchmark,
        folds,
        per_sample,
        fold_importances,
        fallbacks,
        fold_train_ids,
        baselines,
    ))
}

pub(crate) fn finalize(
    benchmark: &Benchmark,
    folds: &FoldAssignment,
    per_sample: BTreeMap<String, SampleDiagnosis>,
    fold_importances: Vec<BTreeMap<String, BTreeMap<String, f64>>>,
    fallbacks: Vec<FallbackRecord>,
    fold_train_ids: Vec<BTreeSet<String>>,
    baselines: Baselines,
) -> TstResult {
    let n = per_sample.len();
    let aggregate_accuracy = mean(per_sample.values().map(|d| d.accuracy_score));
    let mean_bias_score = mean(per_sample.values().map(|d| d.bias_score));

    let mut per_task: BTreeMap<String, TaskSummary> = BTreeMap::new();
    for sample in &benchmark.samples {
        let d = &per_sample[&sample.id];
        let entry = per_task
            .entry(sample.task_type.clone())
            .or_insert(TaskSummary {
                n_samples: 0,
                accuracy: 0.0,
                mean_bias_score: 0.0,
            });
        entry.n_samples += 1;
        entry.accuracy += d.accuracy_score;
        entry.mean_bias_score += d.bias_score;
    }
    for summary in per_task.values_mut() {
        summary.accuracy /= summary.n_samples as f64;
        summary.mean_bias_score /= summary.n_samples as f64;
    }

    let per_fold_accuracy: Vec<f64> = (0..folds.k)
        .map(|f| {
            mean(
                per_sample
                    .values()
                    .filter(|d| d.fold == f)
                    .map(|d| d.accuracy_score),
            )
        })
        .collect();
    let fold_accuracy_mean = mean(per_fold_accuracy.iter().copied());
    let fold_accuracy_std = sample_std(&per_fold_accuracy, fold_accuracy_mean);

    TstResult {
        version: TST_RESULT_VERSION,
        benchmark_name: benchmark.name.clone(),
        n_samples: n,
        k: folds.k,
        per_sample,
        per_task,
        aggregate_accuracy,
        mean_bias_score,
        per_fold_accuracy,
        fold_accuracy_mean,
        fold_accuracy_std,
        baselines,
        fold_importances,
        fallbacks,
        fold_train_ids,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn diagnose_task(
    spec: &TaskSpec,
    train_t: &[&Sample],
    val_t: &[&Sample],
    stats: Option<&FoldStatistics>,
    params: &ForestParams,
    fold: usize,
    per_sample: &mut BTreeMap<String, SampleDiagnosis>,
    importances: &mut BTreeMap<String, BTreeMap<String, f64>>,
    fallbacks: &mut Vec<FallbackRecord>,
) -> Result<(), TstError> {
    let task_stats = stats.and_then(|s| s.task(&spec.task_type));

    if train_t.len() < 2 || task_stats.is_none() {
        fallbacks.push(FallbackRecord {
            fold,
            task_type: spec.task_type.clone(),
            reason: format!("{} training samples", train_t.len()),
        });
        for s in val_t {
            let d = majority_diagnosis(s, spec, task_stats, fold)?;
            per_sample.insert(s.id.clone(), d);
        }
        return Ok(());
    }
    let stats = stats.expect("checked above");
    let task_stats = task_stats.expect("checked above");

    // Split train and validation by parseability.
    let mut templated_train: Vec<(&Sample, crate::features::ParsedQuestion)> = Vec::new();
    let mut templated_val: Vec<(&Sample, crate::features::ParsedQuestion)> = Vec::new();
    let mut generic_val: Vec<&Sample> = Vec::new();

    if spec.is_templated() {
        let featurizer = Featurizer::fit(spec, task_stats)?;
        for s in train_t {
            if let Ok(p) = featurizer.parse(s) {
                templated_train.push((s, p));
            }
        }
        for s in val_t {
            match featurizer.parse(s) {
                Ok(p) => templated_val.push((s, p)),
                Err(_) => generic_val.push(s),
            }
        }

        if !templated_val.is_empty() {
            if templated_train.len() >= 2 {
                run_diagnostic(
                    spec,
                    &featurizer,
                    &templated_train,
                    &templated_val,
                    task_stats,
                    params,
                    fold,
                    DiagnosticPath::Templated,
                    per_sample,
                    importances,
                )?;
            } else {
                fallbacks.push(FallbackRecord {
                    fold,
                    task_type: spec.task_type.clone(),
                    reason: format!("{} parseable training samples", templated_train.len()),
                });
                for (s, _) in &templated_val {
                    let d = majority_diagnosis(s, spec, Some(task_stats), fold)?;
                    per_sample.insert(s.id.clone(), d);
                }
            }
        }
    } else {
        generic_val.extend(val_t.iter().copied());
    }

    if !generic_val.is_empty() {
        run_generic_diagnostic(
            spec,
            train_t,
            &generic_val,
            stats,
            task_stats,
            params,
            fold,
            per_sample,
            importances,
            fallbacks,
        )?;
    }
    Ok(())
}

/// Seed for the (fold, task) diagnostic stream.
fn diagnostic_seed(base: u64, fold: usize, task: &str, generic: bool) -> u64 {
    let domain = if generic { 0x6E0E_u64 } else { 0x7E3A_u64 };
    mix(mix(base, domain ^ fold as u64), hash_str(task))
}

#[allow(clippy::too_many_arguments)]
fn run_diagnostic(
    spec: &TaskSpec,
    featurizer: &Featurizer<'_>,
    train: &[(&Sample, crate::features::ParsedQuestion)],
    val: &[(&Sample, crate::features::ParsedQuestion)],
    task_stats: &crate::features::TaskStatistics,
    params: &ForestParams,
    fold: usize,
    path: DiagnosticPath,
    per_sample: &mut BTreeMap<String, SampleDiagnosis>,
    importances: &mut BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<(), TstError> {
    let x: Vec<Vec<f64>> = train.iter().map(|(s, p)| featurizer.extract(s, p)).collect();
    let seed = diagnostic_seed(params.seed, fold, &spec.task_type, false);
    let params = params.clone().with_seed(seed);
    let schema = featurizer.schema();

    match spec.answer_kind {
        AnswerKind::MultipleChoice => {
            let n_classes = task_stats.max_options.max(2);
            let y: Vec<usize> = train
                .iter()
                .map(|(s, _)| match &s.answer {
                    Answer::MultipleChoice { mc_index } => *mc_index,
                    _ => unreachable!("validated MC task"),
                })
                .collect();
            let forest = train_classifier(&x, &y, n_classes, &params)?;
            record_importance(importances, &spec.task_type, schema, &forest);
            for (s, p) in val {
                let class_probs = forest.predict_proba(&featurizer.extract(s, p))?;
                let d = mc_diagnosis(s, spec, &class_probs, fold, path)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
        AnswerKind::Categorical => {
            let labels: Vec<String> = {
                let set: BTreeSet<String> = train
                    .iter()
                    .filter_map(|(s, _)| s.answer_label())
                    .collect();
                set.into_iter().collect()
            };
            let y: Vec<usize> = train
                .iter()
                .map(|(s, _)| {
                    let label = s.answer_label().expect("categorical answers have labels");
                    labels.binary_search(&label).expect("label in set")
                })
                .collect();
            let forest = train_classifier(&x, &y, labels.len().max(1), &params)?;
            record_importance(importances, &spec.task_type, schema, &forest);
            for (s, p) in val {
                let class_probs = forest.predict_proba(&featurizer.extract(s, p))?;
                let d = categorical_diagnosis(s, spec, &labels, &class_probs, fold, path)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
        AnswerKind::Numeric => {
            let y: Vec<f64> = train
                .iter()
                .map(|(s, _)| crate::features::log_value(s.numeric_value().unwrap_or(1.0)))
                .collect();
            let forest = train_regressor(&x, &y, &params)?;
            record_importance(importances, &spec.task_type, schema, &forest);
            for (s, p) in val {
                let log_pred = forest.predict_value(&featurizer.extract(s, p))?;
                let d = numeric_diagnosis(s, spec, log_pred.exp(), fold, path)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_generic_diagnostic(
    spec: &TaskSpec,
    train_t: &[&Sample],
    val: &[&Sample],
    stats: &FoldStatistics,
    task_stats: &crate::features::TaskStatistics,
    params: &ForestParams,
    fold: usize,
    per_sample: &mut BTreeMap<String, SampleDiagnosis>,
    importances: &mut BTreeMap<String, BTreeMap<String, f64>>,
    fallbacks: &mut Vec<FallbackRecord>,
) -> Result<(), TstError> {
    if train_t.len() < 2 {
        fallbacks.push(FallbackRecord {
            fold,
            task_type: spec.task_type.clone(),
            reason: format!("{} training samples for generic path", train_t.len()),
        });
        for s in val {
            let d = majority_diagnosis(s, spec, Some(task_stats), fold)?;
            per_sample.insert(s.id.clone(), d);
        }
        return Ok(());
    }

    let generic = GenericFeaturizer::new(&spec.task_type, stats);
    let x: Vec<Vec<f64>> = train_t.iter().map(|s| generic.extract(s)).collect();
    let seed = diagnostic_seed(params.seed, fold, &spec.task_type, true);
    let params = params.clone().with_seed(seed);
    let importance_key = format!("{}:generic", spec.task_type);

    match spec.answer_kind {
        AnswerKind::MultipleChoice => {
            let n_classes = train_t.iter().map(|s| s.option_count()).max().unwrap_or(2).max(2);
            let y: Vec<usize> = train_t
                .iter()
                .map(|s| match &s.answer {
                    Answer::MultipleChoice { mc_index } => *mc_index,
                    _ => unreachable!(),
                })
                .collect();
            let forest = train_classifier(&x, &y, n_classes, &params)?;
            record_importance(importances, &importance_key, generic.schema(), &forest);
            for s in val {
                let probs = forest.predict_proba(&generic.extract(s))?;
                let d = mc_diagnosis(s, spec, &probs, fold, DiagnosticPath::Generic)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
        AnswerKind::Categorical => {
            let labels: Vec<String> = {
                let set: BTreeSet<String> =
                    train_t.iter().filter_map(|s| s.answer_label()).collect();
                set.into_iter().collect()
            };
            let y: Vec<usize> = train_t
                .iter()
                .map(|s| {
                    let label = s.answer_label().expect("categorical");
                    labels.binary_search(&label).expect("in set")
                })
                .collect();
            let forest = train_classifier(&x, &y, labels.len().max(1), &params)?;
            record_importance(importances, &importance_key, generic.schema(), &forest);
            for s in val {
                let probs = forest.predict_proba(&generic.extract(s))?;
                let d =
                    categorical_diagnosis(s, spec, &labels, &probs, fold, DiagnosticPath::Generic)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
        AnswerKind::Numeric => {
            let y: Vec<f64> = train_t
                .iter()
                .map(|s| crate::features::log_value(s.numeric_value().unwrap_or(1.0)))
                .collect();
            let forest = train_regressor(&x, &y, &params)?;
            record_importance(importances, &importance_key, generic.schema(), &forest);
            for s in val {
                let log_pred = forest.predict_value(&generic.extract(s))?;
                let d = numeric_diagnosis(s, spec, log_pred.exp(), fold, DiagnosticPath::Generic)?;
                per_sample.insert(s.id.clone(), d);
            }
        }
    }
    Ok(())
}

fn record_importance(
    importances: &mut BTreeMap<String, BTreeMap<String, f64>>,
    key: &str,
    schema: &crate::features::FeatureSchema,
    forest: &Forest,
) {
    let weights = forest.feature_importance();
    let map: BTreeMap<String, f64> = schema
        .names
        .iter()
        .cloned()
        .zip(weights)
        .collect();
    importances.insert(key.to_string(), map);
}

/// Diagnosis of an MC sample from class probabilities indexed by option.
fn mc_diagnosis(
    sample: &Sample,
    spec: &TaskSpec,
    class_probs: &[f64],
    fold: usize,
    path: DiagnosticPath,
) -> Result<SampleDiagnosis, TstError> {
    let n_options = sample.option_count();
    let probs: Vec<f64> = (0..n_options)
        .map(|i| class_probs.get(i).copied().unwrap_or(0.0))
        .collect();
    let gt = match &sample.answer {
        Answer::MultipleChoice { mc_index } => *mc_index,
        _ => unreachable!("validated MC task"),
    };
    let bias_score = probs.get(gt).copied().unwrap_or(0.0);
    let prediction = Answer::MultipleChoice { mc_index: argmax(&probs) };
    let accuracy_score = score_sample(sample, spec, &prediction)?;
    Ok(SampleDiagnosis {
        fold,
        bias_score,
        accuracy_score,
        prediction,
        probs: Some(probs),
        label_probs: None,
        path,
    })
}

fn categorical_diagnosis(
    sample: &Sample,
    spec: &TaskSpec,
    labels: &[String],
    class_probs: &[f64],
    fold: usize,
    path: DiagnosticPath,
) -> Result<SampleDiagnosis, TstError> {
    let label_probs: BTreeMap<String, f64> = labels
        .iter()
        .cloned()
        .zip(class_probs.iter().copied())
        .collect();
    let gt = sample.answer_label().unwrap_or_default();
    let bias_score = label_probs.get(&gt).copied().unwrap_or(0.0);
    let predicted_label = labels
        .get(argmax(class_probs))
        .cloned()
        .unwrap_or_default();
    let prediction = Answer::Categorical { label: predicted_label };
    let accuracy_score = score_sample(sample, spec, &prediction)?;
    Ok(SampleDiagnosis {
        fold,
        bias_score,
        accuracy_score,
        prediction,
        probs: None,
        label_probs: Some(label_probs),
        path,
    })
}

fn numeric_diagnosis(
    sample: &Sample,
    spec: &TaskSpec,
    value: f64,
    fold: usize,
    path: DiagnosticPath,
) -> Result<SampleDiagnosis, TstError> {
    let unit = match &sample.answer {
        Answer::Numeric { unit, .. } => unit.clone(),
        _ => None,
    };
    let prediction = Answer::Numeric { value, unit };
    let accuracy_score = score_sample(sample, spec, &prediction)?;
    Ok(SampleDiagnosis {
        fold,
        // The regressor's score against ground truth doubles as s(x),
        // keeping numeric bias scores in [0, 1].
        bias_score: accuracy_score,
        accuracy_score,
        prediction,
        probs: None,
        label_probs: None,
        path,
    })
}

/// Majority prediction for a sample given (possibly missing) task stats.
fn majority_prediction(
    sample: &Sample,
    task_stats: Option<&crate::features::TaskStatistics>,
) -> Answer {
    let majority = task_stats.and_then(|t| t.majority.clone());
    match (&sample.answer, majority) {
        (Answer::MultipleChoice { .. }, Some(MajorityAnswer::Label(label))) => {
            let index = sample
                .options
                .as_ref()
                .and_then(|opts| opts.iter().position(|o| o.trim() == label))
                .unwrap_or(0);
            Answer::MultipleChoice { mc_index: index }
        }
        (Answer::MultipleChoice { .. }, _) => Answer::MultipleChoice { mc_index: 0 },
        (Answer::Categorical { .. }, Some(MajorityAnswer::Label(label))) => {
            Answer::Categorical { label }
        }
        (Answer::Categorical { .. }, _) => Answer::Categorical { label: String::new() },
        (Answer::Numeric { unit, .. }, Some(MajorityAnswer::Value(v))) => Answer::Numeric {
            value: v,
            unit: unit.clone(),
        },
        (Answer::Numeric { unit, .. }, _) => Answer::Numeric {
            value: 1.0,
            unit: unit.clone(),
        },
    }
}

fn majority_diagnosis(
    sample: &Sample,
    spec: &TaskSpec,
    task_stats: Option<&crate::features::TaskStatistics>,
    fold: usize,
) -> Result<SampleDiagnosis, TstError> {
    let prediction = majority_prediction(sample, task_stats);
    let accuracy_score = score_sample(sample, spec, &prediction)?;
    let (probs, label_probs) = match &prediction {
        Answer::MultipleChoice { mc_index } => {
            let mut p = vec![0.0; sample.option_count()];
            if *mc_index < p.len() {
                p[*mc_index] = 1.0;
            }
            (Some(p), None)
        }
        Answer::Categorical { label } => {
            let mut m = BTreeMap::new();
            m.insert(label.clone(), 1.0);
            (None, Some(m))
        }
        Answer::Numeric { .. } => (None, None),
    };
    Ok(SampleDiagnosis {
        fold,
        bias_score: accuracy_score,
        accuracy_score,
        prediction,
        probs,
        label_probs,
        path: DiagnosticPath::MajorityFallback,
    })
}

/// Chance and cross-validated majority baselines.
pub fn baselines(benchmark: &Benchmark, folds: &FoldAssignment) -> Result<Baselines, TstError> {
    folds.verify_partition(benchmark)?;

    let mut chance_sum = 0.0;
    let mut n_mc = 0usize;
    for s in &benchmark.samples {
        if s.answer.kind() == AnswerKind::MultipleChoice {
            chance_sum += 1.0 / s.option_count() as f64;
            n_mc += 1;
        }
    }
    let chance = if n_mc > 0 { Some(chance_sum / n_mc as f64) } else { None };

    let mut total = 0.0;
    let mut n = 0usize;
    let mut per_task_sum: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for fold in 0..folds.k {
        let (train, val): (Vec<&Sample>, Vec<&Sample>) = benchmark
            .samples
            .iter()
            .partition(|s| folds.fold_of[&s.id] != fold);
        if val.is_empty() {
            continue;
        }
        let stats = fit_fold_statistics(&train, &benchmark.task_specs).ok();
        for s in val {
            let spec = benchmark.spec_for(s);
            let task_stats = stats.as_ref().and_then(|st| st.task(&s.task_type));
            let prediction = majority_prediction(s, task_stats);
            let score = score_sample(s, spec, &prediction)?;
            total += score;
            n += 1;
            let e = per_task_sum.entry(s.task_type.clone()).or_insert((0.0, 0));
            e.0 += score;
            e.1 += 1;
        }
    }

    Ok(Baselines {
        chance,
        n_chance_samples: n_mc,
        majority: if n == 0 { 0.0 } else { total / n as f64 },
        per_task_majority: per_task_sum
            .into_iter()
            .map(|(t, (sum, count))| (t, sum / count as f64))
            .collect(),
    })
}
