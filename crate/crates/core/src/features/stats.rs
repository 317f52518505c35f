//! Train-fold statistics.
//!
//! Every table here is computed from training-fold samples only; the engine
//! never lets a sample see statistics it contributed to. Frequency tables of
//! the form "X was correct given X was offered" are Laplace-smoothed with
//! alpha = 1 over the binary outcome space, i.e. (hits + 1) / (trials + 2);
//! answer-distribution tables are smoothed over their observed key space,
//! (count + 1) / (total + #keys). Sequence position/order tables are kept as
//! raw conditional tallies so that a category seen at one position 100% of
//! the time scores exactly 1.0.

use std::collections::{BTreeMap, BTreeSet};

use crate::features::parse::{OptionData, ParsedQuestion, TemplateParser};
use crate::features::tfidf::TfIdfModel;
use crate::features::{log_value, FeatureError};
use crate::model::Sample;
use crate::registry::{Registry, Role};

/// Count plus log-space moments of a group of ground-truth values.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueStats {
    pub count: usize,
    pub log_mean: f64,
    pub log_std: f64,
}

impl ValueStats {
    pub fn from_values(values: &[f64]) -> ValueStats {
        let n = values.len();
        let logs: Vec<f64> = values.iter().map(|v| log_value(*v)).collect();
        let mean = if n == 0 {
            0.0
        } else {
            logs.iter().sum::<f64>() / n as f64
        };
        // Sample standard deviation; a singleton group has zero spread.
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = logs.iter().map(|l| (l - mean) * (l - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        ValueStats {
            count: n,
            log_mean: mean,
            log_std: std,
        }
    }

    /// log_std / log_mean, guarded against a zero mean.
    pub fn log_ratio(&self) -> f64 {
        if self.log_mean.abs() < 1e-12 {
            0.0
        } else {
            self.log_std / self.log_mean
        }
    }
}

/// hits/trials table with binomial Laplace smoothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CondTable {
    map: BTreeMap<String, (u64, u64)>,
}

impl CondTable {
    pub fn record(&mut self, key: &str, hit: bool) {
        let e = self.map.entry(key.to_string()).or_insert((0, 0));
        e.1 += 1;
        if hit {
            e.0 += 1;
        }
    }

    /// (hits + 1) / (trials + 2); the unseen-key prior is 0.5.
    pub fn smoothed(&self, key: &str) -> f64 {
        let (h, t) = self.map.get(key).copied().unwrap_or((0, 0));
        (h as f64 + 1.0) / (t as f64 + 2.0)
    }

    pub fn counts(&self, key: &str) -> Option<(u64, u64)> {
        self.map.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }
}

/// Answer-distribution table with categorical Laplace smoothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl CatTable {
    pub fn record(&mut self, key: &str) {
        *self.counts.entry(key.to_string()).or_insert(0) += 1;
        self.total += 1;
    }

    /// (count + 1) / (total + #keys) over the observed key space.
    pub fn smoothed(&self, key: &str) -> Option<f64> {
        if self.counts.is_empty() {
            return None;
        }
        let c = self.counts.get(key).copied().unwrap_or(0);
        Some((c as f64 + 1.0) / (self.total as f64 + self.counts.len() as f64))
    }

    /// Most frequent key; ties resolve lexicographically.
    pub fn modal(&self) -> Option<&str> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| k.as_str())
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Ground-truth sequence tallies for appearance-order tasks. Raw conditional
/// frequencies: the denominator is how often the category (or pair) was
/// involved in a ground-truth sequence at all.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceStats {
    involvement: BTreeMap<String, u64>,
    position_hits: BTreeMap<(String, usize), u64>,
    cooccurrence: BTreeMap<(String, String), u64>,
    adjacent_hits: BTreeMap<(String, String), u64>,
    order_hits: BTreeMap<(String, String), u64>,
}

impl SequenceStats {
    pub fn record(&mut self, gt_sequence: &[String]) {
        for (j, c) in gt_sequence.iter().enumerate() {
            *self.involvement.entry(c.clone()).or_insert(0) += 1;
            *self.position_hits.entry((c.clone(), j)).or_insert(0) += 1;
        }
        for j in 0..gt_sequence.len() {
            for k in (j + 1)..gt_sequence.len() {
                let (a, b) = (&gt_sequence[j], &gt_sequence[k]);
                let lo = a.min(b).clone();
                let hi = a.max(b).clone();
                *self.cooccurrence.entry((lo, hi)).or_insert(0) += 1;
                *self.order_hits.entry((a.clone(), b.clone())).or_insert(0) += 1;
                if k == j + 1 {
                    *self.adjacent_hits.entry((a.clone(), b.clone())).or_insert(0) += 1;
                }
            }
        }
    }

    fn conditional(hits: u64, trials: u64) -> f64 {
        if trials == 0 {
            0.5
        } else {
            hits as f64 / trials as f64
        }
    }

    /// Categories seen in any ground-truth sequence.
    pub fn involved_categories(&self) -> Vec<String> {
        self.involvement.keys().cloned().collect()
    }

    /// P(category at position j | category involved in a GT sequence).
    pub fn position_freq(&self, category: &str, position: usize) -> f64 {
        let trials = self.involvement.get(category).copied().unwrap_or(0);
        let hits = self
            .position_hits
            .get(&(category.to_string(), position))
            .copied()
            .unwrap_or(0);
        Self::conditional(hits, trials)
    }

    /// P(b immediately follows a | both appear in a GT sequence).
    pub fn adjacent_freq(&self, a: &str, b: &str) -> f64 {
        let lo = a.min(b).to_string();
        let hi = a.max(b).to_string();
        let trials = self.cooccurrence.get(&(lo, hi)).copied().unwrap_or(0);
        let hits = self
            .adjacent_hits
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0);
        Self::conditional(hits, trials)
    }

    /// P(a precedes b anywhere | both appear in a GT sequence).
    pub fn order_freq(&self, a: &str, b: &str) -> f64 {
        let lo = a.min(b).to_string();
        let hi = a.max(b).to_string();
        let trials = self.cooccurrence.get(&(lo, hi)).copied().unwrap_or(0);
        let hits = self
            .order_hits
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0);
        Self::conditional(hits, trials)
    }
}

/// Training-fold modal prediction for the majority baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum MajorityAnswer {
    /// Modal answer content (option text or categorical label).
    Label(String),
    /// exp(median of log values): the log-space median.
    Value(f64),
}

/// All train-fold statistics for one task type.
#[derive(Debug, Clone, Default)]
pub struct TaskStatistics {
    /// Training questions of this task (parseable or not).
    pub n_train: usize,
    pub n_parsed: usize,
    /// GT value moments grouped by each role's extracted category.
    pub role_values: BTreeMap<Role, BTreeMap<String, ValueStats>>,
    /// GT value moments grouped by the sorted (object_a, object_b) pair.
    pub pair_values: BTreeMap<String, ValueStats>,
    /// GT value moments over the whole task.
    pub global_values: Option<ValueStats>,
    /// Raw count of training questions mentioning each category.
    pub category_mentions: BTreeMap<String, u64>,
    /// Raw count of training questions mentioning each sorted pair.
    pub pair_mentions: BTreeMap<String, u64>,
    /// Option category -> correct-when-offered.
    pub option_correct: CondTable,
    /// "target|option" -> option-correct-when-pair-offered.
    pub target_pair_correct: CondTable,
    /// Route string -> correct-when-offered.
    pub route_correct: CondTable,
    pub sequences: SequenceStats,
    /// Distribution of canonical answer labels (discrete tasks).
    pub answer_freq: CatTable,
    /// Median of log GT values (numeric tasks).
    pub median_log: Option<f64>,
    pub majority: Option<MajorityAnswer>,
    /// One-hot vocabularies observed in training.
    pub role_vocab: BTreeMap<Role, BTreeSet<String>>,
    pub option_vocab: BTreeSet<String>,
    pub route_vocab: BTreeSet<String>,
    pub sequence_vocab: BTreeSet<String>,
    pub difficulty_vocab: BTreeSet<String>,
    pub max_options: usize,
}

impl TaskStatistics {
    /// Question-presence frequency of a category, (mentions + 1) / (n + 2).
    pub fn presence_freq(&self, category: &str) -> f64 {
        let m = self.category_mentions.get(category).copied().unwrap_or(0);
        (m as f64 + 1.0) / (self.n_train as f64 + 2.0)
    }

    pub fn role_stats(&self, role: Role, category: &str) -> Option<&ValueStats> {
        self.role_values.get(&role)?.get(category)
    }
}

/// Statistics fit on one training fold, across all tasks, plus the shared
/// tf-idf table for the generic path.
#[derive(Debug, Clone)]
pub struct FoldStatistics {
    pub per_task: BTreeMap<String, TaskStatistics>,
    pub tfidf: TfIdfModel,
    pub n_train: usize,
    /// Ids this fit saw; downstream leakage checks compare against it.
    pub train_ids: BTreeSet<String>,
}

impl FoldStatistics {
    pub fn task(&self, task_type: &str) -> Option<&TaskStatistics> {
        self.per_task.get(task_type)
    }
}

/// Fit all fold statistics in a single pass over the training samples.
pub fn fit_fold_statistics(
    training: &[&Sample],
    registry: &Registry,
) -> Result<FoldStatistics, FeatureError> {
    if training.is_empty() {
        return Err(FeatureError::EmptyTrainingSet);
    }

    let mut parsers: BTreeMap<&str, TemplateParser<'_>> = BTreeMap::new();
    for spec in registry.specs() {
        parsers.insert(spec.task_type.as_str(), TemplateParser::new(spec)?);
    }

    let mut per_task: BTreeMap<String, TaskStatistics> = BTreeMap::new();
    let mut role_value_groups: BTreeMap<String, BTreeMap<Role, BTreeMap<String, Vec<f64>>>> =
        BTreeMap::new();
    let mut pair_value_groups: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut global_value_groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut train_ids = BTreeSet::new();

    for sample in training {
        train_ids.insert(sample.id.clone());
        let stats = per_task.entry(sample.task_type.clone()).or_default();
        stats.n_train += 1;
        stats.max_options = stats.max_options.max(sample.option_count());

        if let Some(label) = sample.answer_label() {
            stats.answer_freq.record(&label);
        }
        if let Some(v) = sample.numeric_value() {
            global_value_groups
                .entry(sample.task_type.clone())
                .or_default()
                .push(v);
        }

        let Some(parser) = parsers.get(sample.task_type.as_str()) else {
            continue;
        };
        let Ok(parsed) = parser.parse(sample) else {
            continue;
        };
        stats.n_parsed += 1;

        record_parsed(stats, sample, &parsed);
        record_value_groups(
            &mut role_value_groups,
            &mut pair_value_groups,
            sample,
            &parsed,
        );
    }

    for (task, groups) in role_value_groups {
        let stats = per_task.get_mut(&task).expect("task recorded");
        for (role, by_cat) in groups {
            let entry = stats.role_values.entry(role).or_default();
            for (cat, values) in by_cat {
                entry.insert(cat, ValueStats::from_values(&values));
            }
        }
    }
    for (task, groups) in pair_value_groups {
        let stats = per_task.get_mut(&task).expect("task recorded");
        for (pair, values) in groups {
            stats.pair_values.insert(pair, ValueStats::from_values(&values));
        }
    }
    for (task, values) in global_value_groups {
        let stats = per_task.get_mut(&task).expect("task recorded");
        stats.global_values = Some(ValueStats::from_values(&values));
        stats.median_log = Some(log_median(&values));
    }

    for stats in per_task.values_mut() {
        stats.majority = compute_majority(stats);
    }

    let tfidf = TfIdfModel::fit(training.iter().map(|s| s.question.as_str()));
    Ok(FoldStatistics {
        per_task,
        tfidf,
        n_train: training.len(),
        train_ids,
    })
}

fn log_median(values: &[f64]) -> f64 {
    let mut logs: Vec<f64> = values.iter().map(|v| log_value(*v)).collect();
    logs.sort_by(|a, b| a.partial_cmp(b).expect("finite logs"));
    let n = logs.len();
    if n % 2 == 1 {
        logs[n / 2]
    } else {
        (logs[n / 2 - 1] + logs[n / 2]) / 2.0
    }
}

fn compute_majority(stats: &TaskStatistics) -> Option<MajorityAnswer> {
    if let Some(label) = stats.answer_freq.modal() {
        return Some(MajorityAnswer::Label(label.to_string()));
    }
    stats.median_log.map(|m| MajorityAnswer::Value(m.exp()))
}

fn record_parsed(stats: &mut TaskStatistics, sample: &Sample, parsed: &ParsedQuestion) {
    for (role, cat) in &parsed.roles {
        stats.role_vocab.entry(*role).or_default().insert(cat.clone());
    }
    for cat in parsed.mentioned_categories() {
        *stats.category_mentions.entry(cat).or_insert(0) += 1;
    }
    if let Some(pair) = parsed.object_pair_key() {
        *stats.pair_mentions.entry(pair).or_insert(0) += 1;
    }
    if let Some(d) = &parsed.difficulty {
        stats.difficulty_vocab.insert(d.clone());
    }

    let correct_index = match &sample.answer {
        crate::model::Answer::MultipleChoice { mc_index } => Some(*mc_index),
        _ => None,
    };
    let target = parsed.role(Role::TargetObject).map(str::to_string);
    for (i, opt) in parsed.options.iter().enumerate() {
        let hit = correct_index == Some(i);
        match opt {
            OptionData::Category(cat) => {
                stats.option_vocab.insert(cat.clone());
                stats.option_correct.record(cat, hit);
                if let Some(t) = &target {
                    stats
                        .target_pair_correct
                        .record(&format!("{t}|{cat}"), hit);
                }
            }
            OptionData::Route(r) => {
                stats.route_vocab.insert(r.clone());
                stats.route_correct.record(r, hit);
            }
            OptionData::Sequence(seq) => {
                stats.sequence_vocab.insert(seq.join("|"));
                if hit {
                    stats.sequences.record(seq);
                }
            }
            OptionData::Plain(_) | OptionData::Value(_) => {}
        }
    }
}

fn record_value_groups(
    role_groups: &mut BTreeMap<String, BTreeMap<Role, BTreeMap<String, Vec<f64>>>>,
    pair_groups: &mut BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    sample: &Sample,
    parsed: &ParsedQuestion,
) {
    let Some(value) = sample.numeric_value() else {
        return;
    };
    let by_role = role_groups.entry(sample.task_type.clone()).or_default();
    for (role, cat) in &parsed.roles {
        by_role
            .entry(*role)
            .or_default()
            .entry(cat.clone())
            .or_default()
            .push(value);
    }
    if let Some(pair) = parsed.object_pair_key() {
        pair_groups
            .entry(sample.task_type.clone())
            .or_default()
            .entry(pair)
            .or_default()
            .push(value);
    }
}
