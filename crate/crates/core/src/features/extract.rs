//! Expanding a task's feature plan into dense vectors.
//!
//! A [`Featurizer`] is fit per (task, fold round): it freezes the one-hot
//! vocabularies and option-slot count from the training fold, so every sample
//! of the task shares one schema within the round. Unseen categories land in
//! an unknown slot and numeric lookups fall back to global statistics, so
//! extraction is total and never emits NaN.

use std::collections::BTreeMap;

use crate::features::parse::{OptionData, ParsedQuestion, SpatialKeyword, TemplateParser};
use crate::features::stats::{FoldStatistics, TaskStatistics};
use crate::features::{log_value, FeatureError};
use crate::model::{AnswerKind, Sample};
use crate::registry::{FeatureDescriptor, TaskSpec};

/// Ordered feature names shared by all vectors of one task in one fold round.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureSchema {
    pub task_type: String,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

struct Block {
    descriptor: FeatureDescriptor,
    /// Category -> one-hot slot, for categorical blocks.
    vocab: Option<BTreeMap<String, usize>>,
    width: usize,
}

/// Plan-driven extractor for one task type, bound to one fold's statistics.
pub struct Featurizer<'a> {
    stats: &'a TaskStatistics,
    parser: TemplateParser<'a>,
    blocks: Vec<Block>,
    schema: FeatureSchema,
    n_slots: usize,
}

fn vocab_map<'v>(vocab: impl Iterator<Item = &'v String>) -> BTreeMap<String, usize> {
    vocab
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect()
}

impl<'a> Featurizer<'a> {
    pub fn fit(spec: &'a TaskSpec, stats: &'a TaskStatistics) -> Result<Self, FeatureError> {
        let parser = TemplateParser::new(spec)?;
        let n_slots = stats.max_options;
        let mut blocks = Vec::new();
        let mut names = Vec::new();

        for descriptor in &spec.feature_plan {
            let (block_names, vocab) = expand(descriptor, stats, n_slots);
            blocks.push(Block {
                descriptor: descriptor.clone(),
                vocab,
                width: block_names.len(),
            });
            names.extend(block_names);
        }

        Ok(Featurizer {
            stats,
            parser,
            blocks,
            schema: FeatureSchema {
                task_type: spec.task_type.clone(),
                names,
            },
            n_slots,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn parser(&self) -> &TemplateParser<'a> {
        &self.parser
    }

    pub fn parse(&self, sample: &Sample) -> Result<ParsedQuestion, FeatureError> {
        self.parser.parse(sample)
    }

    /// Extract the plan's features for a parsed sample.
    pub fn extract(&self, sample: &Sample, parsed: &ParsedQuestion) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.schema.len());
        for block in &self.blocks {
            let before = out.len();
            self.fill(block, sample, parsed, &mut out);
            debug_assert_eq!(out.len() - before, block.width);
        }
        debug_assert!(out.iter().all(|v| v.is_finite()));
        out
    }

    fn one_hot(&self, block: &Block, category: Option<&str>, out: &mut Vec<f64>) {
        let vocab = block.vocab.as_ref().expect("categorical block has vocab");
        let width = vocab.len() + 1;
        let mut v = vec![0.0; width];
        let slot = category
            .and_then(|c| vocab.get(c).copied())
            .unwrap_or(width - 1);
        v[slot] = 1.0;
        out.extend(v);
    }

    fn global_log_mean(&self) -> f64 {
        self.stats.global_values.as_ref().map_or(0.0, |g| g.log_mean)
    }

    fn global_log_std(&self) -> f64 {
        self.stats.global_values.as_ref().map_or(0.0, |g| g.log_std)
    }

    fn option_slot(parsed: &ParsedQuestion, i: usize) -> Option<&OptionData> {
        parsed.options.get(i)
    }

    fn fill(&self, block: &Block, sample: &Sample, parsed: &ParsedQuestion, out: &mut Vec<f64>) {
        use FeatureDescriptor as F;
        let stats = self.stats;
        match &block.descriptor {
            F::CategoricalRole { role } => {
                self.one_hot(block, parsed.role(*role), out);
            }
            F::CategoricalDifficulty => {
                self.one_hot(block, parsed.difficulty.as_deref(), out);
            }
            F::CategoricalPair => {
                self.one_hot(block, parsed.object_pair_key().as_deref(), out);
            }
            F::CategoricalOptionObjects => {
                let vocab = block.vocab.as_ref().expect("vocab");
                let width = vocab.len() + 1;
                for i in 0..self.n_slots {
                    let mut v = vec![0.0; width];
                    if let Some(cat) = Self::option_slot(parsed, i).and_then(OptionData::category)
                    {
                        let slot = vocab.get(cat).copied().unwrap_or(width - 1);
                        v[slot] = 1.0;
                    }
                    out.extend(v);
                }
            }
            F::CategoricalOptionRoutes => {
                let vocab = block.vocab.as_ref().expect("vocab");
                let width = vocab.len() + 1;
                for i in 0..self.n_slots {
                    let mut v = vec![0.0; width];
                    if let Some(OptionData::Route(r)) = Self::option_slot(parsed, i) {
                        let slot = vocab.get(r.as_str()).copied().unwrap_or(width - 1);
                        v[slot] = 1.0;
                    }
                    out.extend(v);
                }
            }
            F::CategoricalOptionSequences => {
                let vocab = block.vocab.as_ref().expect("vocab");
                let width = vocab.len() + 1;
                for i in 0..self.n_slots {
                    let mut v = vec![0.0; width];
                    if let Some(OptionData::Sequence(seq)) = Self::option_slot(parsed, i) {
                        let key = seq.join("|");
                        let slot = vocab.get(key.as_str()).copied().unwrap_or(width - 1);
                        v[slot] = 1.0;
                    }
                    out.extend(v);
                }
            }
            F::ObjCount { role } => {
                let count = parsed
                    .role(*role)
                    .and_then(|c| stats.category_mentions.get(c))
                    .copied()
                    .unwrap_or(0);
                out.push(count as f64);
            }
            F::ObjValLogMean { role } => {
                let v = parsed
                    .role(*role)
                    .and_then(|c| stats.role_stats(*role, c))
                    .map_or_else(|| self.global_log_mean(), |s| s.log_mean);
                out.push(v);
            }
            F::ObjValLogStd { role } => {
                let v = parsed
                    .role(*role)
                    .and_then(|c| stats.role_stats(*role, c))
                    .map_or_else(|| self.global_log_std(), |s| s.log_std);
                out.push(v);
            }
            F::ObjValLogRatio { role } => {
                let v = parsed
                    .role(*role)
                    .and_then(|c| stats.role_stats(*role, c))
                    .map(|s| s.log_ratio())
                    .unwrap_or_else(|| {
                        stats
                            .global_values
                            .as_ref()
                            .map_or(0.0, |g| g.log_ratio())
                    });
                out.push(v);
            }
            F::GlobalMeanLog => out.push(self.global_log_mean()),
            F::GlobalStdLog => out.push(self.global_log_std()),
            F::PairCount => {
                let count = parsed
                    .object_pair_key()
                    .and_then(|p| stats.pair_mentions.get(&p).copied())
                    .unwrap_or(0);
                out.push(count as f64);
            }
            F::PairValLogMean => {
                let v = parsed
                    .object_pair_key()
                    .and_then(|p| stats.pair_values.get(&p))
                    .map_or_else(|| self.global_log_mean(), |s| s.log_mean);
                out.push(v);
            }
            F::PairValLogStd => {
                let v = parsed
                    .object_pair_key()
                    .and_then(|p| stats.pair_values.get(&p))
                    .map_or_else(|| self.global_log_std(), |s| s.log_std);
                out.push(v);
            }
            F::NumOptions => out.push(sample.option_count() as f64),
            F::OptObjFreq => {
                let mut max = 0.0f64;
                for i in 0..self.n_slots {
                    let f = Self::option_slot(parsed, i)
                        .and_then(OptionData::category)
                        .map(|c| stats.option_correct.smoothed(c))
                        .unwrap_or(0.0);
                    max = max.max(f);
                    out.push(f);
                }
                out.push(max);
            }
            F::OptPairFreq { target } => {
                let target_cat = parsed.role(*target);
                let mut max = 0.0f64;
                for i in 0..self.n_slots {
                    let f = match (target_cat, Self::option_slot(parsed, i).and_then(OptionData::category)) {
                        (Some(t), Some(c)) => {
                            stats.target_pair_correct.smoothed(&format!("{t}|{c}"))
                        }
                        _ => 0.0,
                    };
                    max = max.max(f);
                    out.push(f);
                }
                out.push(max);
            }
            F::ObjFreqScore { roles } => {
                let score: f64 = roles
                    .iter()
                    .filter_map(|r| parsed.role(*r))
                    .map(|c| stats.presence_freq(c))
                    .sum();
                out.push(score);
            }
            F::OptRouteFreq => {
                for i in 0..self.n_slots {
                    let f = match Self::option_slot(parsed, i) {
                        Some(OptionData::Route(r)) => stats.route_correct.smoothed(r),
                        _ => 0.0,
                    };
                    out.push(f);
                }
            }
            F::NumSteps => out.push(parsed.num_steps.unwrap_or(0) as f64),
            F::NumChoices => out.push(parsed.num_choices.unwrap_or(0) as f64),
            F::SeqScores => {
                for i in 0..self.n_slots {
                    let seq = Self::option_slot(parsed, i).and_then(OptionData::sequence);
                    let (pos, adj, comb) = match seq {
                        Some(seq) if !seq.is_empty() => {
                            let pos: f64 = seq
                                .iter()
                                .enumerate()
                                .map(|(j, c)| stats.sequences.position_freq(c, j))
                                .sum();
                            let adj: f64 = seq
                                .windows(2)
                                .map(|w| stats.sequences.adjacent_freq(&w[0], &w[1]))
                                .sum();
                            let mut comb = 0.0;
                            for j in 0..seq.len() {
                                for k in (j + 1)..seq.len() {
                                    comb += stats.sequences.order_freq(&seq[j], &seq[k]);
                                }
                            }
                            (pos, adj, comb)
                        }
                        _ => (0.0, 0.0, 0.0),
                    };
                    out.push(pos);
                    out.push(adj);
                    out.push(comb);
                    out.push((pos + adj + comb) / 3.0);
                }
            }
            F::OptDistFromObjMean { role } => {
                let mean = parsed
                    .role(*role)
                    .and_then(|c| stats.role_stats(*role, c))
                    .map_or_else(|| self.global_log_mean(), |s| s.log_mean);
                for i in 0..self.n_slots {
                    let d = match Self::option_slot(parsed, i) {
                        Some(OptionData::Value(Some(v))) => (log_value(*v) - mean).abs(),
                        _ => 0.0,
                    };
                    out.push(d);
                }
            }
            F::OptDistFromGlobalMean => {
                let mean = self.global_log_mean();
                for i in 0..self.n_slots {
                    let d = match Self::option_slot(parsed, i) {
                        Some(OptionData::Value(Some(v))) => (log_value(*v) - mean).abs(),
                        _ => 0.0,
                    };
                    out.push(d);
                }
            }
            F::QuestionLength => out.push(parsed.question_length as f64),
            F::SpatialKeywords => {
                let mut count = 0.0;
                for k in SpatialKeyword::ALL {
                    let present = parsed.spatial_keywords.contains(&k);
                    out.push(if present { 1.0 } else { 0.0 });
                    if present {
                        count += 1.0;
                    }
                }
                out.push(count);
            }
        }
    }
}

fn expand(
    descriptor: &FeatureDescriptor,
    stats: &TaskStatistics,
    n_slots: usize,
) -> (Vec<String>, Option<BTreeMap<String, usize>>) {
    use FeatureDescriptor as F;

    fn one_hot_names(prefix: &str, vocab: &BTreeMap<String, usize>) -> Vec<String> {
        let mut names = vec![String::new(); vocab.len() + 1];
        for (cat, i) in vocab {
            names[*i] = format!("{prefix}={cat}");
        }
        names[vocab.len()] = format!("{prefix}=<unk>");
        names
    }

    fn per_option_one_hot(
        prefix: &str,
        vocab: &BTreeMap<String, usize>,
        n_slots: usize,
    ) -> Vec<String> {
        let mut names = Vec::new();
        for i in 1..=n_slots {
            names.extend(one_hot_names(&format!("{prefix}_{i}"), vocab));
        }
        names
    }

    match descriptor {
        F::CategoricalRole { role } => {
            let vocab = vocab_map(
                stats
                    .role_vocab
                    .get(role)
                    .map(|s| s.iter())
                    .into_iter()
                    .flatten(),
            );
            let names = one_hot_names(role.key(), &vocab);
            (names, Some(vocab))
        }
        F::CategoricalDifficulty => {
            let vocab = vocab_map(stats.difficulty_vocab.iter());
            let names = one_hot_names("difficulty", &vocab);
            (names, Some(vocab))
        }
        F::CategoricalPair => {
            let vocab = vocab_map(stats.pair_mentions.keys());
            let names = one_hot_names("object_pair", &vocab);
            (names, Some(vocab))
        }
        F::CategoricalOptionObjects => {
            let vocab = vocab_map(stats.option_vocab.iter());
            let names = per_option_one_hot("object", &vocab, n_slots);
            (names, Some(vocab))
        }
        F::CategoricalOptionRoutes => {
            let vocab = vocab_map(stats.route_vocab.iter());
            let names = per_option_one_hot("opt", &vocab, n_slots);
            (names, Some(vocab))
        }
        F::CategoricalOptionSequences => {
            let vocab = vocab_map(stats.sequence_vocab.iter());
            let names = per_option_one_hot("opt_seq", &vocab, n_slots);
            (names, Some(vocab))
        }
        F::ObjCount { .. } => (vec!["obj_count".into()], None),
        F::ObjValLogMean { .. } => (vec!["obj_val_log_mean".into()], None),
        F::ObjValLogStd { .. } => (vec!["obj_val_log_std".into()], None),
        F::ObjValLogRatio { .. } => (vec!["obj_val_log_ratio".into()], None),
        F::GlobalMeanLog => (vec!["global_mean_log".into()], None),
        F::GlobalStdLog => (vec!["global_std_log".into()], None),
        F::PairCount => (vec!["pair_count".into()], None),
        F::PairValLogMean => (vec!["pair_val_mean_log".into()], None),
        F::PairValLogStd => (vec!["pair_val_std_log".into()], None),
        F::NumOptions => (vec!["n_options".into()], None),
        F::OptObjFreq => {
            let mut names: Vec<String> =
                (1..=n_slots).map(|i| format!("opt_{i}_obj_freq")).collect();
            names.push("max_opt_obj_freq".into());
            (names, None)
        }
        F::OptPairFreq { .. } => {
            let mut names: Vec<String> =
                (1..=n_slots).map(|i| format!("opt_{i}_pair_freq")).collect();
            names.push("max_opt_pair_freq".into());
            (names, None)
        }
        F::ObjFreqScore { .. } => (vec!["obj_freq_score".into()], None),
        F::OptRouteFreq => (
            (1..=n_slots).map(|i| format!("opt_{i}_freq_score")).collect(),
            None,
        ),
        F::NumSteps => (vec!["num_steps".into()], None),
        F::NumChoices => (vec!["num_choices".into()], None),
        F::SeqScores => {
            let mut names = Vec::new();
            for i in 1..=n_slots {
                names.push(format!("seq_{i}_pos_score"));
                names.push(format!("seq_{i}_adj_pair_score"));
                names.push(format!("seq_{i}_comb_pair_score"));
                names.push(format!("seq_{i}_score"));
            }
            (names, None)
        }
        F::OptDistFromObjMean { .. } => (
            (1..=n_slots)
                .map(|i| format!("opt_{i}_dist_from_obj_mean"))
                .collect(),
            None,
        ),
        F::OptDistFromGlobalMean => (
            (1..=n_slots)
                .map(|i| format!("opt_{i}_dist_from_global_mean"))
                .collect(),
            None,
        ),
        F::QuestionLength => (vec!["question_length".into()], None),
        F::SpatialKeywords => {
            let mut names: Vec<String> = SpatialKeyword::ALL
                .iter()
                .map(|k| format!("contains_{}", k.word()))
                .collect();
            names.push("spatial_keyword_count".into());
            (names, None)
        }
    }
}

/// Fallback features for samples with no usable template: tf-idf over the
/// question text plus structural facts.
pub struct GenericFeaturizer<'a> {
    stats: &'a FoldStatistics,
    schema: FeatureSchema,
}

impl<'a> GenericFeaturizer<'a> {
    pub fn new(task_type: &str, stats: &'a FoldStatistics) -> Self {
        let mut names: Vec<String> = stats
            .tfidf
            .terms()
            .iter()
            .map(|t| format!("tfidf:{t}"))
            .collect();
        names.push("question_length".into());
        names.push("option_count".into());
        names.push("is_multiple_choice".into());
        names.push("is_numeric".into());
        names.push("is_categorical".into());
        GenericFeaturizer {
            stats,
            schema: FeatureSchema {
                task_type: task_type.to_string(),
                names,
            },
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn extract(&self, sample: &Sample) -> Vec<f64> {
        let mut v = self.stats.tfidf.transform(&sample.question);
        v.push(sample.question.chars().count() as f64);
        v.push(sample.option_count() as f64);
        let kind = sample.answer.kind();
        v.push(if kind == AnswerKind::MultipleChoice { 1.0 } else { 0.0 });
        v.push(if kind == AnswerKind::Numeric { 1.0 } else { 0.0 });
        v.push(if kind == AnswerKind::Categorical { 1.0 } else { 0.0 });
        v
    }
}

/// One-shot generic extraction, per the fallback contract.
pub fn generic_features(sample: &Sample, stats: &FoldStatistics) -> Vec<f64> {
    GenericFeaturizer::new(&sample.task_type, stats).extract(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::stats::fit_fold_statistics;
    use crate::model::Answer;
    use crate::registry::Registry;

    fn rel_sample(id: &str, target: &str, options: &[&str], correct: usize) -> Sample {
        Sample {
            id: id.into(),
            task_type: "object_rel_distance".into(),
            question: format!(
                "Measuring from the closest point of each object, which of these objects is the closest to the {target}?"
            ),
            answer: Answer::MultipleChoice { mc_index: correct },
            options: Some(options.iter().map(|s| s.to_string()).collect()),
            metadata: None,
            planted: None,
        }
    }

    fn count_sample(id: &str, object: &str, value: f64) -> Sample {
        Sample {
            id: id.into(),
            task_type: "object_counting".into(),
            question: format!("How many {object}(s) are in this room?"),
            answer: Answer::Numeric { value, unit: None },
            options: None,
            metadata: None,
            planted: None,
        }
    }

    fn feature(schema: &FeatureSchema, values: &[f64], name: &str) -> f64 {
        let idx = schema
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("missing feature {name}"));
        values[idx]
    }

    #[test]
    fn option_freqs_follow_training_counts() {
        let mut samples = Vec::new();
        for i in 0..10 {
            let correct = if i < 9 { 1 } else { 0 };
            samples.push(rel_sample(&format!("s{i}"), "desk", &["chair", "lamp"], correct));
        }
        let refs: Vec<&Sample> = samples.iter().collect();
        let reg = Registry::builtin();
        let stats = fit_fold_statistics(&refs, &reg).unwrap();
        let spec = reg.get("object_rel_distance").unwrap();
        let fz = Featurizer::fit(spec, stats.task("object_rel_distance").unwrap()).unwrap();

        let probe = rel_sample("probe", "desk", &["sofa", "lamp"], 0);
        let parsed = fz.parse(&probe).unwrap();
        let values = fz.extract(&probe, &parsed);
        let schema = fz.schema();

        // lamp correct 9 of 10 offered: (9+1)/(10+2).
        let lamp = feature(schema, &values, "opt_2_obj_freq");
        assert!((lamp - 10.0 / 12.0).abs() < 1e-12, "{lamp}");
        // sofa never seen: smoothed prior.
        let sofa = feature(schema, &values, "opt_1_obj_freq");
        assert!((sofa - 0.5).abs() < 1e-12);
        let max = feature(schema, &values, "max_opt_obj_freq");
        assert!((max - 10.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_category_falls_back_to_globals() {
        let samples = vec![
            count_sample("a", "chair", 4.0),
            count_sample("b", "chair", 6.0),
            count_sample("c", "lamp", 2.0),
        ];
        let refs: Vec<&Sample> = samples.iter().collect();
        let reg = Registry::builtin();
        let stats = fit_fold_statistics(&refs, &reg).unwrap();
        let task = stats.task("object_counting").unwrap();
        let spec = reg.get("object_counting").unwrap();
        let fz = Featurizer::fit(spec, task).unwrap();

        let probe = count_sample("p", "zebra statue", 1.0);
        let parsed = fz.parse(&probe).unwrap();
        let values = fz.extract(&probe, &parsed);
        let schema = fz.schema();

        let global_mean = task.global_values.as_ref().unwrap().log_mean;
        assert_eq!(feature(schema, &values, "obj_count"), 0.0);
        assert!((feature(schema, &values, "obj_val_log_mean") - global_mean).abs() < 1e-12);
        assert_eq!(feature(schema, &values, "object=<unk>"), 1.0);
        assert_eq!(feature(schema, &values, "object=chair"), 0.0);
    }

    #[test]
    fn schema_is_stable_across_samples() {
        let samples = vec![
            rel_sample("a", "desk", &["chair", "lamp"], 0),
            rel_sample("b", "sofa", &["table", "bed"], 1),
        ];
        let refs: Vec<&Sample> = samples.iter().collect();
        let reg = Registry::builtin();
        let stats = fit_fold_statistics(&refs, &reg).unwrap();
        let spec = reg.get("object_rel_distance").unwrap();
        let fz = Featurizer::fit(spec, stats.task("object_rel_distance").unwrap()).unwrap();
        for s in &samples {
            let parsed = fz.parse(s).unwrap();
            assert_eq!(fz.extract(s, &parsed).len(), fz.schema().len());
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let samples = vec![
            rel_sample("a", "desk", &["chair", "lamp"], 0),
            rel_sample("b", "desk", &["lamp", "chair"], 1),
        ];
        let refs: Vec<&Sample> = samples.iter().collect();
        let reg = Registry::builtin();
        let stats1 = fit_fold_statistics(&refs, &reg).unwrap();
        let stats2 = fit_fold_statistics(&refs, &reg).unwrap();
        let spec = reg.get("object_rel_distance").unwrap();
        let fz1 = Featurizer::fit(spec, stats1.task("object_rel_distance").unwrap()).unwrap();
        let fz2 = Featurizer::fit(spec, stats2.task("object_rel_distance").unwrap()).unwrap();
        let parsed = fz1.parse(&samples[0]).unwrap();
        let a = serde_json::to_vec(&fz1.extract(&samples[0], &parsed)).unwrap();
        let b = serde_json::to_vec(&fz2.extract(&samples[0], &parsed)).unwrap();
        assert_eq!(a, b);
        assert_eq!(fz1.schema(), fz2.schema());
    }

    #[test]
    fn perfect_position_history_scores_full_sum() {
        // Four objects each seen at their claimed position in every GT
        // sequence: the position score sums four frequencies of 1.0.
        let seq = "bed, chair, desk, clock";
        let mk = |id: &str, correct: usize| Sample {
            id: id.into(),
            task_type: "appearance_order".into(),
            question: "What will be the first-time appearance order of the following categories in the video: bed, chair, clock, desk?".into(),
            answer: Answer::MultipleChoice { mc_index: correct },
            options: Some(vec![
                seq.to_string(),
                "chair, bed, desk, clock".to_string(),
            ]),
            metadata: None,
            planted: None,
        };
        let samples: Vec<Sample> = (0..5).map(|i| mk(&format!("s{i}"), 0)).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let reg = Registry::builtin();
        let stats = fit_fold_statistics(&refs, &reg).unwrap();
        let spec = reg.get("appearance_order").unwrap();
        let fz = Featurizer::fit(spec, stats.task("appearance_order").unwrap()).unwrap();
        let probe = mk("p", 0);
        let parsed = fz.parse(&probe).unwrap();
        let values = fz.extract(&probe, &parsed);
        let schema = fz.schema();
        assert_eq!(feature(schema, &values, "seq_1_pos_score"), 4.0);
        assert_eq!(feature(schema, &values, "seq_1_adj_pair_score"), 3.0);
        assert_eq!(feature(schema, &values, "seq_1_comb_pair_score"), 6.0);
        let avg = feature(schema, &values, "seq_1_score");
        assert!((avg - (4.0 + 3.0 + 6.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn generic_features_cover_structure() {
        let samples = vec![
            count_sample("a", "chair", 4.0),
            count_sample("b", "chair", 6.0),
        ];
        let refs: Vec<&Sample> = samples.iter().collect();
        let stats = fit_fold_statistics(&refs, &Registry::builtin()).unwrap();
        let v = generic_features(&samples[0], &stats);
        let gf = GenericFeaturizer::new("object_counting", &stats);
        assert_eq!(v.len(), gf.schema().len());
        let qlen_idx = gf.schema().names.iter().position(|n| n == "question_length").unwrap();
        assert_eq!(v[qlen_idx], samples[0].question.chars().count() as f64);
    }
}
