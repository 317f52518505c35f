//! Synthetic benchmarks with planted statistical biases of known strength.
//!
//! Four archetypes mirror the bias families the diagnostics hunt for:
//! long-tailed counting answers, category-answer correlation in
//! multiple-choice options, category-position correlation in appearance
//! order, and low-variance numeric answers per category. A planted sample
//! follows its archetype rule with probability `strength`; otherwise (and for
//! all clean samples) its answer is drawn independently of every extractable
//! feature. Questions render from the same templates the parsers consume, so
//! generated benchmarks parse with zero generic-path fallbacks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Answer, Benchmark, Sample};
use crate::registry::Registry;
use crate::rng::{mix, Stream};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("archetype weights must sum to 1, got {0}")]
    BadWeights(f64),
    #[error("bias strength must lie in [0, 1], got {0}")]
    BadStrength(f64),
    #[error("fraction_planted must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("vocabulary_size must be at least {min} for the requested mix, got {got}")]
    VocabularyTooSmall { min: usize, got: usize },
    #[error("n_samples must be positive")]
    Empty,
    #[error("option_count must be at least 2, got {0}")]
    BadOptionCount(usize),
    #[error("sample '{0}' carries no planted flag; benchmark was not generated here")]
    MissingPlantedFlag(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    LongTailCounting,
    CategoryAnswerCorrelation,
    CategoryPositionOrder,
    LowVarianceNumeric,
}

impl Archetype {
    pub fn task_type(&self) -> &'static str {
        match self {
            Archetype::LongTailCounting => "object_counting",
            Archetype::CategoryAnswerCorrelation => "object_rel_distance",
            Archetype::CategoryPositionOrder => "appearance_order",
            Archetype::LowVarianceNumeric => "object_size_estimation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeMix {
    pub archetype: Archetype,
    pub weight: f64,
    /// Probability that the planted rule determines the ground-truth answer.
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericParams {
    pub log_mean: f64,
    pub log_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub archetypes: Vec<ArchetypeMix>,
    #[serde(default = "default_vocab")]
    pub vocabulary_size: usize,
    #[serde(default = "default_options")]
    pub option_count: usize,
    /// Category log-means are drawn uniformly from this range unless
    /// overridden per category.
    #[serde(default = "default_log_mean_range")]
    pub log_mean_range: (f64, f64),
    /// Per-category log-std for planted numeric answers.
    #[serde(default = "default_log_std")]
    pub numeric_log_std: f64,
    /// Log-std of the category-independent clean numeric distribution.
    #[serde(default = "default_clean_log_std")]
    pub clean_log_std: f64,
    /// Fraction of samples carrying the planted bias (exact count).
    #[serde(default = "default_fraction")]
    pub fraction_planted: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, NumericParams>,
    #[serde(default)]
    pub seed: u64,
}

fn default_vocab() -> usize {
    30
}
fn default_options() -> usize {
    4
}
fn default_log_mean_range() -> (f64, f64) {
    (10.0_f64.ln(), 300.0_f64.ln())
}
fn default_log_std() -> f64 {
    0.05
}
fn default_clean_log_std() -> f64 {
    1.0
}
fn default_fraction() -> f64 {
    1.0
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_samples: 1000,
            archetypes: vec![
                ArchetypeMix { archetype: Archetype::LongTailCounting, weight: 0.25, strength: 1.0 },
                ArchetypeMix { archetype: Archetype::CategoryAnswerCorrelation, weight: 0.25, strength: 1.0 },
                ArchetypeMix { archetype: Archetype::CategoryPositionOrder, weight: 0.25, strength: 1.0 },
                ArchetypeMix { archetype: Archetype::LowVarianceNumeric, weight: 0.25, strength: 1.0 },
            ],
            vocabulary_size: default_vocab(),
            option_count: default_options(),
            log_mean_range: default_log_mean_range(),
            numeric_log_std: default_log_std(),
            clean_log_std: default_clean_log_std(),
            fraction_planted: default_fraction(),
            overrides: BTreeMap::new(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// A one-archetype spec, the common test shape.
    pub fn single(archetype: Archetype, n_samples: usize, strength: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            n_samples,
            archetypes: vec![ArchetypeMix { archetype, weight: 1.0, strength }],
            seed,
            ..SynthSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_samples == 0 {
            return Err(SynthError::Empty);
        }
        let total: f64 = self.archetypes.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.archetypes.is_empty() {
            return Err(SynthError::BadWeights(total));
        }
        for a in &self.archetypes {
            if !(0.0..=1.0).contains(&a.strength) {
                return Err(SynthError::BadStrength(a.strength));
            }
        }
        if !(0.0..=1.0).contains(&self.fraction_planted) {
            return Err(SynthError::BadFraction(self.fraction_planted));
        }
        if self.option_count < 2 {
            return Err(SynthError::BadOptionCount(self.option_count));
        }
        // Both the biased and the neutral category pool must be able to fill
        // an option list plus a distinct target.
        let min_vocab = (2 * (self.option_count + 1)).max(SEQUENCE_LEN);
        if self.vocabulary_size < min_vocab {
            return Err(SynthError::VocabularyTooSmall {
                min: min_vocab,
                got: self.vocabulary_size,
            });
        }
        Ok(())
    }

    /// The deterministic per-category tables behind a generation run.
    pub fn model(&self) -> SynthModel {
        SynthModel::derive(self)
    }
}

const SEQUENCE_LEN: usize = 4;
const COUNT_MAX: u32 = 20;

// Stream domains.
const DOMAIN_PLANT: u64 = 0xB1A5;
const DOMAIN_RANK: u64 = 0xC0DE;
const DOMAIN_ORDER: u64 = 0x0DE5;
const DOMAIN_VALUES: u64 = 0x57A7;
const DOMAIN_SAMPLE: u64 = 0x5EED;

const NOUNS: [&str; 48] = [
    "armchair", "backpack", "basket", "bed", "bench", "bicycle", "blanket", "bookshelf",
    "cabinet", "chair", "clock", "couch", "curtain", "cushion", "desk", "dishwasher",
    "door", "dresser", "fan", "fireplace", "fridge", "heater", "kettle", "ladder",
    "lamp", "laptop", "microwave", "mirror", "monitor", "mug", "nightstand", "ottoman",
    "oven", "painting", "piano", "pillow", "plant", "printer", "radiator", "rug",
    "shelf", "sink", "sofa", "stool", "table", "telephone", "television", "vase",
];

/// Category names and their planted structure.
#[derive(Debug, Clone)]
pub struct SynthModel {
    pub categories: Vec<String>,
    /// Categories that participate in the answer-correlation bias. Planted
    /// correlation questions draw their options here; clean ones draw from
    /// the neutral remainder, mirroring how real benchmarks are biased for
    /// certain categories rather than uniformly.
    pub biased_pool: Vec<String>,
    pub neutral_pool: Vec<String>,
    /// Answer-correlation dominance: lower rank wins when queried.
    pub dominance_rank: BTreeMap<String, usize>,
    /// Canonical appearance-order rank.
    pub position_rank: BTreeMap<String, usize>,
    pub numeric: BTreeMap<String, NumericParams>,
    pub global_log_mean: f64,
    pub clean_log_std: f64,
}

impl SynthModel {
    fn derive(spec: &SynthSpec) -> SynthModel {
        let categories: Vec<String> = (0..spec.vocabulary_size)
            .map(|i| {
                let base = NOUNS[i % NOUNS.len()];
                if i < NOUNS.len() {
                    base.to_string()
                } else {
                    format!("{base} mk{}", i / NOUNS.len() + 1)
                }
            })
            .collect();

        let mut rank_order: Vec<usize> = (0..categories.len()).collect();
        Stream::derived(spec.seed, DOMAIN_RANK).shuffle(&mut rank_order);
        let dominance_rank: BTreeMap<String, usize> = categories
            .iter()
            .cloned()
            .zip(rank_order.iter().copied())
            .collect();

        // Lower-ranked half carries the correlation bias.
        let mut by_rank = categories.clone();
        by_rank.sort_by_key(|c| dominance_rank[c]);
        let biased_n = categories.len().div_ceil(2);
        let biased_pool = by_rank[..biased_n].to_vec();
        let neutral_pool = by_rank[biased_n..].to_vec();

        let mut pos_order: Vec<usize> = (0..categories.len()).collect();
        Stream::derived(spec.seed, DOMAIN_ORDER).shuffle(&mut pos_order);
        let position_rank = categories
            .iter()
            .cloned()
            .zip(pos_order.iter().copied())
            .collect();

        let mut values = Stream::derived(spec.seed, DOMAIN_VALUES);
        let (lo, hi) = spec.log_mean_range;
        let numeric: BTreeMap<String, NumericParams> = categories
            .iter()
            .map(|c| {
                let params = spec.overrides.get(c).copied().unwrap_or(NumericParams {
                    log_mean: lo + (hi - lo) * values.next_f64(),
                    log_std: spec.numeric_log_std,
                });
                (c.clone(), params)
            })
            .collect();

        let global_log_mean = (lo + hi) / 2.0;
        SynthModel {
            categories,
            biased_pool,
            neutral_pool,
            dominance_rank,
            position_rank,
            numeric,
            global_log_mean,
            clean_log_std: spec.clean_log_std,
        }
    }

    /// The option category that wins a planted answer-correlation question.
    pub fn dominant<'c>(&self, options: &'c [String]) -> &'c String {
        options
            .iter()
            .min_by_key(|c| self.dominance_rank.get(*c).copied().unwrap_or(usize::MAX))
            .expect("non-empty options")
    }

    /// Categories sorted into their canonical appearance order.
    pub fn canonical_order(&self, categories: &[String]) -> Vec<String> {
        let mut sorted = categories.to_vec();
        sorted.sort_by_key(|c| self.position_rank.get(c).copied().unwrap_or(usize::MAX));
        sorted
    }
}

/// Generate a benchmark from a spec. Identical specs yield identical
/// benchmarks; every sample carries a `planted` flag.
pub fn generate(spec: &SynthSpec) -> Result<Benchmark, SynthError> {
    spec.validate()?;
    let model = spec.model();

    let planted_count = (spec.fraction_planted * spec.n_samples as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.n_samples).collect();
    Stream::derived(spec.seed, DOMAIN_PLANT).shuffle(&mut order);
    let planted_set: BTreeSet<usize> = order.into_iter().take(planted_count).collect();

    let cumulative: Vec<(f64, &ArchetypeMix)> = {
        let mut acc = 0.0;
        spec.archetypes
            .iter()
            .map(|a| {
                acc += a.weight;
                (acc, a)
            })
            .collect()
    };

    let mut samples = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let mut rng = Stream::new(mix(mix(spec.seed, DOMAIN_SAMPLE), i as u64));
        let pick = rng.next_f64();
        let mix_entry = cumulative
            .iter()
            .find(|(edge, _)| pick < *edge)
            .map(|(_, a)| *a)
            .unwrap_or(spec.archetypes.last().expect("non-empty"));
        let planted = planted_set.contains(&i);
        let coin = rng.next_f64();
        let follow_rule = planted && coin < mix_entry.strength;

        let id = format!("synth-{i:06}");
        let sample = match mix_entry.archetype {
            Archetype::LongTailCounting => counting_sample(id, planted, follow_rule, &model, &mut rng),
            Archetype::CategoryAnswerCorrelation => {
                correlation_sample(id, planted, follow_rule, spec, &model, &mut rng)
            }
            Archetype::CategoryPositionOrder => {
                order_sample(id, planted, follow_rule, spec, &model, &mut rng)
            }
            Archetype::LowVarianceNumeric => {
                size_sample(id, planted, follow_rule, &model, &mut rng)
            }
        };
        samples.push(sample);
    }

    Ok(Benchmark::new("synthetic", samples, Registry::builtin())?)
}

fn pick_category<'m>(model: &'m SynthModel, rng: &mut Stream) -> &'m String {
    &model.categories[rng.index(model.categories.len())]
}

fn pick_distinct(
    pool: &[String],
    n: usize,
    exclude: Option<&str>,
    rng: &mut Stream,
) -> Vec<String> {
    let pool: Vec<&String> = pool
        .iter()
        .filter(|c| Some(c.as_str()) != exclude)
        .collect();
    let picks = rng.sample_indices(pool.len(), n);
    let mut chosen: Vec<String> = picks.into_iter().map(|i| pool[i].clone()).collect();
    rng.shuffle(&mut chosen);
    chosen
}

/// Long-tail skew over small counts: P(1)=.5, P(2)=.3, P(3)=.2.
fn skewed_count(rng: &mut Stream) -> u32 {
    let u = rng.next_f64();
    if u < 0.5 {
        1
    } else if u < 0.8 {
        2
    } else {
        3
    }
}

fn counting_sample(
    id: String,
    planted: bool,
    follow_rule: bool,
    model: &SynthModel,
    rng: &mut Stream,
) -> Sample {
    let category = pick_category(model, rng).clone();
    let count = if follow_rule {
        skewed_count(rng)
    } else {
        rng.range_u32(1, COUNT_MAX)
    };
    Sample {
        id,
        task_type: "object_counting".into(),
        question: format!("How many {category}(s) are in this room?"),
        answer: Answer::Numeric { value: f64::from(count), unit: None },
        options: None,
        metadata: None,
        planted: Some(planted),
    }
}

fn correlation_sample(
    id: String,
    planted: bool,
    follow_rule: bool,
    spec: &SynthSpec,
    model: &SynthModel,
    rng: &mut Stream,
) -> Sample {
    let target = pick_category(model, rng).clone();
    // Planted questions are about the biased categories; clean ones about
    // the neutral remainder.
    let pool = if planted {
        &model.biased_pool
    } else {
        &model.neutral_pool
    };
    let options = pick_distinct(pool, spec.option_count, Some(&target), rng);
    let correct = if follow_rule {
        let winner = model.dominant(&options);
        options.iter().position(|c| c == winner).expect("winner present")
    } else {
        rng.index(options.len())
    };
    Sample {
        id,
        task_type: "object_rel_distance".into(),
        question: format!(
            "Measuring from the closest point of each object, which of these objects is the closest to the {target}?"
        ),
        answer: Answer::MultipleChoice { mc_index: correct },
        options: Some(options),
        metadata: None,
        planted: Some(planted),
    }
}

fn random_permutation(items: &[String], rng: &mut Stream) -> Vec<String> {
    let mut p = items.to_vec();
    rng.shuffle(&mut p);
    p
}

fn order_sample(
    id: String,
    planted: bool,
    follow_rule: bool,
    spec: &SynthSpec,
    model: &SynthModel,
    rng: &mut Stream,
) -> Sample {
    let categories = pick_distinct(&model.categories, SEQUENCE_LEN, None, rng);
    let gt = if follow_rule {
        model.canonical_order(&categories)
    } else {
        random_permutation(&categories, rng)
    };

    let mut option_seqs: Vec<Vec<String>> = vec![gt.clone()];
    while option_seqs.len() < spec.option_count {
        let candidate = random_permutation(&categories, rng);
        if !option_seqs.contains(&candidate) {
            option_seqs.push(candidate);
        }
    }
    rng.shuffle(&mut option_seqs);
    let correct = option_seqs.iter().position(|s| *s == gt).expect("gt kept");

    let mut listed = categories.clone();
    listed.sort();
    Sample {
        id,
        task_type: "appearance_order".into(),
        question: format!(
            "What will be the first-time appearance order of the following categories in the video: {}?",
            listed.join(", ")
        ),
        answer: Answer::MultipleChoice { mc_index: correct },
        options: Some(option_seqs.iter().map(|s| s.join(", ")).collect()),
        metadata: None,
        planted: Some(planted),
    }
}

fn size_sample(
    id: String,
    planted: bool,
    follow_rule: bool,
    model: &SynthModel,
    rng: &mut Stream,
) -> Sample {
    let category = pick_category(model, rng).clone();
    let value = if follow_rule {
        let p = model.numeric[&category];
        (p.log_mean + p.log_std * rng.normal()).exp()
    } else {
        (model.global_log_mean + model.clean_log_std * rng.normal()).exp()
    };
    Sample {
        id,
        task_type: "object_size_estimation".into(),
        question: format!(
            "What is the length of the longest dimension (length, width, or height) of the {category}, measured in centimeters?"
        ),
        answer: Answer::Numeric { value, unit: Some("cm".into()) },
        options: None,
        metadata: None,
        planted: Some(planted),
    }
}

/// The planted flags, the oracle acceptance tests grade against.
pub fn planted_labels(benchmark: &Benchmark) -> Result<BTreeMap<String, bool>, SynthError> {
    let mut out = BTreeMap::new();
    for s in &benchmark.samples {
        let flag = s
            .planted
            .ok_or_else(|| SynthError::MissingPlantedFlag(s.id.clone()))?;
        out.insert(s.id.clone(), flag);
    }
    Ok(out)
}

/// Whether a generated sample currently satisfies its archetype rule.
/// Used to verify strength calibration.
pub fn rule_satisfied(model: &SynthModel, sample: &Sample) -> Option<bool> {
    match sample.task_type.as_str() {
        "object_counting" => sample.numeric_value().map(|v| v <= 3.0),
        "object_rel_distance" => {
            let options = sample.options.as_ref()?;
            let Answer::MultipleChoice { mc_index } = &sample.answer else {
                return None;
            };
            let winner = model.dominant(options);
            Some(options.get(*mc_index)? == winner)
        }
        "appearance_order" => {
            let options = sample.options.as_ref()?;
            let Answer::MultipleChoice { mc_index } = &sample.answer else {
                return None;
            };
            let gt: Vec<String> = options
                .get(*mc_index)?
                .split(',')
                .map(|s| s.trim().to_string())
                .collect();
            Some(model.canonical_order(&gt) == gt)
        }
        "object_size_estimation" => {
            let value = sample.numeric_value()?;
            let category = sample
                .question
                .strip_prefix("What is the length of the longest dimension (length, width, or height) of the ")?
                .strip_suffix(", measured in centimeters?")?;
            let p = model.numeric.get(category)?;
            Some((value.ln() - p.log_mean).abs() <= 3.0 * p.log_std.max(1e-9))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::parse_template;

    #[test]
    fn identical_specs_generate_identical_benchmarks() {
        let spec = SynthSpec { n_samples: 200, seed: 42, ..SynthSpec::default() };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn planted_fraction_is_exact() {
        let spec = SynthSpec {
            n_samples: 1000,
            fraction_planted: 0.6,
            seed: 3,
            ..SynthSpec::default()
        };
        let b = generate(&spec).unwrap();
        let labels = planted_labels(&b).unwrap();
        let n_planted = labels.values().filter(|p| **p).count();
        assert_eq!(n_planted, 600);
        assert_eq!(labels.len(), 1000);
    }

    #[test]
    fn every_generated_question_parses() {
        let spec = SynthSpec { n_samples: 400, seed: 9, ..SynthSpec::default() };
        let b = generate(&spec).unwrap();
        for s in &b.samples {
            let spec = b.spec_for(s);
            parse_template(s, spec).unwrap_or_else(|e| panic!("{}: {e}", s.id));
        }
    }

    #[test]
    fn full_strength_long_tail_keeps_counts_low() {
        let spec = SynthSpec::single(Archetype::LongTailCounting, 1000, 1.0, 5);
        let b = generate(&spec).unwrap();
        let low = b
            .samples
            .iter()
            .filter(|s| s.numeric_value().is_some_and(|v| v <= 3.0))
            .count();
        assert!(low as f64 / b.len() as f64 >= 0.5, "low fraction {low}");
    }

    #[test]
    fn strength_calibration_within_two_points() {
        for strength in [0.95, 1.0] {
            let spec = SynthSpec::single(Archetype::CategoryAnswerCorrelation, 2000, strength, 7);
            let model = spec.model();
            let b = generate(&spec).unwrap();
            let satisfied = b
                .samples
                .iter()
                .filter(|s| rule_satisfied(&model, s) == Some(true))
                .count();
            let rate = satisfied as f64 / b.len() as f64;
            assert!(
                (rate - strength).abs() <= 0.02,
                "strength {strength}: satisfaction {rate}"
            );
        }
    }

    #[test]
    fn zero_strength_answers_are_uniform_over_options() {
        let spec = SynthSpec::single(Archetype::CategoryAnswerCorrelation, 4000, 0.0, 13);
        let b = generate(&spec).unwrap();
        let mut counts = [0usize; 4];
        for s in &b.samples {
            if let Answer::MultipleChoice { mc_index } = &s.answer {
                counts[*mc_index] += 1;
            }
        }
        for c in counts {
            let frac = c as f64 / b.len() as f64;
            assert!((frac - 0.25).abs() < 0.03, "index fraction {frac}");
        }
    }

    #[test]
    fn low_variance_numeric_has_small_cv() {
        let spec = SynthSpec::single(Archetype::LowVarianceNumeric, 4000, 1.0, 21);
        let b = generate(&spec).unwrap();
        let mut by_cat: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for s in &b.samples {
            let parsed = parse_template(s, b.spec_for(s)).unwrap();
            let cat = parsed.role(crate::registry::Role::Object).unwrap().to_string();
            by_cat.entry(cat).or_default().push(s.numeric_value().unwrap());
        }
        let mut cvs = Vec::new();
        for values in by_cat.values().filter(|v| v.len() >= 50) {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            cvs.push(var.sqrt() / mean);
        }
        assert!(!cvs.is_empty());
        let mean_cv = cvs.iter().sum::<f64>() / cvs.len() as f64;
        // Log-normal CV is approximately sigma for small sigma.
        assert!((mean_cv - 0.05).abs() < 0.02, "mean cv {mean_cv}");
    }

    #[test]
    fn bad_weights_rejected() {
        let mut spec = SynthSpec::default();
        spec.archetypes[0].weight = 0.5;
        assert!(matches!(generate(&spec), Err(SynthError::BadWeights(_))));
    }
}
