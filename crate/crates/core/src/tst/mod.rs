//! The test-set stress-test protocol.
//!
//! The benchmark is partitioned into k disjoint folds; per fold, statistics
//! and a diagnostic model are fit on the other k-1 folds and evaluated on the
//! held-out fold, so every sample's bias score comes from a model that never
//! saw it. [`engine`] runs the protocol with the built-in forest diagnostic;
//! [`protocol`] exports the fold splits and re-imports predictions from an
//! external diagnostic under the same leakage guarantees.

pub mod engine;
pub mod protocol;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::forest::ForestError;
use crate::model::{Benchmark, ModelError};
use crate::rng::{hash_str, mix, Stream};

pub use engine::{
    baselines, run_tst, Baselines, DiagnosticPath, FallbackRecord, SampleDiagnosis, TaskSummary,
    TstResult,
};
pub use protocol::{export_folds, import_fold_predictions, write_fold_predictions};

#[derive(Debug, thiserror::Error)]
pub enum TstError {
    #[error("fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("benchmark is empty")]
    EmptyBenchmark,
    #[error("fold assignment does not cover sample '{0}'")]
    UnassignedSample(String),
    #[error("fold assignment references unknown sample '{0}'")]
    UnknownSample(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("missing fold directory or file: {0}")]
    MissingFold(String),
    #[error("leakage: prediction for sample '{id}' outside its validation fold {fold}")]
    Leakage { fold: usize, id: String },
    #[error("fold {fold}: no prediction for validation sample '{id}'")]
    MissingPrediction { fold: usize, id: String },
    #[error("fold {fold}: bad prediction for '{id}': {message}")]
    BadPrediction {
        fold: usize,
        id: String,
        message: String,
    },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StratifyKey {
    TaskType,
    AnswerClass,
}

/// A disjoint, covering assignment of samples to folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub stratify_keys: Vec<StratifyKey>,
    pub fold_of: BTreeMap<String, usize>,
    /// Strata smaller than k, noted rather than rejected.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    pub fn validation_ids(&self, fold: usize) -> impl Iterator<Item = &String> {
        self.fold_of
            .iter()
            .filter(move |(_, f)| **f == fold)
            .map(|(id, _)| id)
    }

    /// Check the assignment is a partition of exactly the benchmark's ids.
    pub fn verify_partition(&self, benchmark: &Benchmark) -> Result<(), TstError> {
        for s in &benchmark.samples {
            if !self.fold_of.contains_key(&s.id) {
                return Err(TstError::UnassignedSample(s.id.clone()));
            }
        }
        if self.fold_of.len() != benchmark.len() {
            let known: std::collections::BTreeSet<&str> =
                benchmark.samples.iter().map(|s| s.id.as_str()).collect();
            let extra = self
                .fold_of
                .keys()
                .find(|id| !known.contains(id.as_str()))
                .cloned()
                .unwrap_or_default();
            return Err(TstError::UnknownSample(extra));
        }
        Ok(())
    }
}

/// Partition a benchmark into k folds: a deterministic per-stratum shuffle
/// followed by round-robin assignment, so fold sizes within each stratum
/// differ by at most one.
pub fn assign_folds(
    benchmark: &Benchmark,
    k: usize,
    seed: u64,
    stratify_keys: &[StratifyKey],
) -> Result<FoldAssignment, TstError> {
    if k < 2 {
        return Err(TstError::BadFoldCount(k));
    }
    if benchmark.is_empty() {
        return Err(TstError::EmptyBenchmark);
    }

    let mut strata: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for sample in &benchmark.samples {
        let mut key_parts = Vec::new();
        for key in stratify_keys {
            match key {
                StratifyKey::TaskType => key_parts.push(sample.task_type.clone()),
                StratifyKey::AnswerClass => {
                    key_parts.push(sample.answer_label().unwrap_or_else(|| "<numeric>".into()))
                }
            }
        }
        strata
            .entry(key_parts.join("|"))
            .or_default()
            .push(sample.id.as_str());
    }

    let mut fold_of = BTreeMap::new();
    let mut warnings = Vec::new();
    for (stratum, mut ids) in strata {
        if ids.len() < k {
            warnings.push(format!(
                "stratum '{stratum}' has {} samples for {k} folds",
                ids.len()
            ));
        }
        let mut rng = Stream::new(mix(seed, hash_str(&stratum)));
        rng.shuffle(&mut ids);
        for (pos, id) in ids.into_iter().enumerate() {
            fold_of.insert(id.to_string(), pos % k);
        }
    }

    Ok(FoldAssignment {
        k,
        seed,
        stratify_keys: stratify_keys.to_vec(),
        fold_of,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Answer, Sample};
    use crate::registry::Registry;

    fn bench(task_counts: &[(&str, usize)]) -> Benchmark {
        let mut samples = Vec::new();
        for (task, n) in task_counts {
            for i in 0..*n {
                samples.push(Sample {
                    id: format!("{task}-{i}"),
                    task_type: task.to_string(),
                    question: "How many chair(s) are in this room?".into(),
                    answer: Answer::Numeric { value: 2.0, unit: None },
                    options: None,
                    metadata: None,
                    planted: None,
                });
            }
        }
        Benchmark::new("t", samples, Registry::builtin()).unwrap()
    }

    #[test]
    fn ten_samples_one_stratum_five_folds_of_two() {
        let b = bench(&[("object_counting", 10)]);
        let folds = assign_folds(&b, 5, 1, &[StratifyKey::TaskType]).unwrap();
        for fold in 0..5 {
            assert_eq!(folds.validation_ids(fold).count(), 2);
        }
    }

    #[test]
    fn stratification_spreads_each_task_across_folds() {
        let b = bench(&[("object_counting", 5), ("room_size_estimation", 5)]);
        let folds = assign_folds(&b, 5, 3, &[StratifyKey::TaskType]).unwrap();
        for fold in 0..5 {
            let ids: Vec<&String> = folds.validation_ids(fold).collect();
            assert_eq!(ids.len(), 2);
            let counting = ids.iter().filter(|i| i.starts_with("object_counting")).count();
            assert_eq!(counting, 1);
        }
    }

    #[test]
    fn folds_partition_any_benchmark() {
        for n in [7usize, 23, 40] {
            for k in [2usize, 3, 5] {
                let b = bench(&[("object_counting", n)]);
                let folds = assign_folds(&b, k, n as u64, &[StratifyKey::TaskType]).unwrap();
                folds.verify_partition(&b).unwrap();
                let total: usize = (0..k).map(|f| folds.validation_ids(f).count()).sum();
                assert_eq!(total, n);
                // Size balance within the single stratum.
                let sizes: Vec<usize> = (0..k).map(|f| folds.validation_ids(f).count()).collect();
                let max = sizes.iter().max().unwrap();
                let min = sizes.iter().min().unwrap();
                assert!(max - min <= 1);
            }
        }
    }

    #[test]
    fn k_below_two_rejected() {
        let b = bench(&[("object_counting", 4)]);
        assert!(matches!(
            assign_folds(&b, 1, 0, &[StratifyKey::TaskType]),
            Err(TstError::BadFoldCount(1))
        ));
    }

    #[test]
    fn small_strata_warned_not_rejected() {
        let b = bench(&[("object_counting", 3)]);
        let folds = assign_folds(&b, 5, 0, &[StratifyKey::TaskType]).unwrap();
        assert!(!folds.warnings.is_empty());
        folds.verify_partition(&b).unwrap();
    }
}
