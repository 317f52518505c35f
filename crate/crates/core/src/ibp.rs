//! Iterative bias pruning.
//!
//! Loop: re-diagnose the surviving set (fresh folds, round-derived seed),
//! stop early if every bias score is at or below the threshold, otherwise
//! select a batch of the most exploitable samples — truncated to the
//! remaining budget — remove it, and repeat until the budget is exhausted.
//! Re-diagnosing each round matters: removing one dominant shortcut changes
//! the statistical landscape the remaining samples are scored against.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::forest::ForestParams;
use crate::model::{AnswerKind, Benchmark};
use crate::rng::{mix, Stream};
use crate::tst::{assign_folds, run_tst, StratifyKey, TstError, TstResult};

#[derive(Debug, thiserror::Error)]
pub enum IbpError {
    #[error("batch size must be positive")]
    EmptyBatch,
    #[error("budget must be positive and at most the benchmark size ({n}), got {budget}")]
    BadBudget { budget: usize, n: usize },
    #[error("early-stop threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("resume trace was built from a different configuration")]
    ConfigMismatch,
    #[error("resume trace references sample '{0}' absent from the benchmark")]
    UnknownTraceId(String),
    #[error(transparent)]
    Tst(#[from] TstError),
}

/// An absolute count or a fraction of the original benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Amount {
    Fraction(f64),
    Count(usize),
}

impl Amount {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            Amount::Fraction(f) => (f * n as f64).round() as usize,
            Amount::Count(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    TopK,
    WeightedSampling,
    GroupBalanced,
}

/// How batches are selected; Auto maps numeric tasks to weighted sampling and
/// discrete tasks to group-balanced removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyChoice {
    Auto,
    TopK,
    WeightedSampling,
    GroupBalanced,
}

impl StrategyChoice {
    fn resolve(&self, kind: AnswerKind) -> Strategy {
        match self {
            StrategyChoice::Auto => match kind {
                AnswerKind::Numeric => Strategy::WeightedSampling,
                AnswerKind::MultipleChoice | AnswerKind::Categorical => Strategy::GroupBalanced,
            },
            StrategyChoice::TopK => Strategy::TopK,
            StrategyChoice::WeightedSampling => Strategy::WeightedSampling,
            StrategyChoice::GroupBalanced => Strategy::GroupBalanced,
        }
    }
}

fn default_budget() -> Amount {
    Amount::Fraction(0.30)
}
fn default_batch() -> Amount {
    Amount::Fraction(0.05)
}
fn default_tau() -> f64 {
    0.9
}
fn default_strategy() -> StrategyChoice {
    StrategyChoice::Auto
}
fn default_group_floor() -> usize {
    1
}
fn default_k() -> usize {
    5
}
fn default_stratify() -> Vec<StratifyKey> {
    vec![StratifyKey::TaskType]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbpConfig {
    /// Maximum samples to remove.
    #[serde(default = "default_budget")]
    pub budget: Amount,
    /// Samples removed per round.
    #[serde(default = "default_batch")]
    pub batch: Amount,
    /// Early stop once max s(x) is at or below this threshold.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyChoice,
    /// Per-task strategy overrides.
    #[serde(default)]
    pub strategy_overrides: BTreeMap<String, StrategyChoice>,
    /// Group-balanced removal never shrinks a group below this size.
    #[serde(default = "default_group_floor")]
    pub group_floor: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_stratify")]
    pub stratify_keys: Vec<StratifyKey>,
    #[serde(default)]
    pub forest: ForestParams,
}

impl Default for IbpConfig {
    fn default() -> Self {
        IbpConfig {
            budget: default_budget(),
            batch: default_batch(),
            tau: default_tau(),
            strategy: default_strategy(),
            strategy_overrides: BTreeMap::new(),
            group_floor: default_group_floor(),
            seed: 0,
            k: default_k(),
            stratify_keys: default_stratify(),
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ScoreSummary {
    fn of(scores: &BTreeMap<String, f64>) -> ScoreSummary {
        let count = scores.len();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for v in scores.values() {
            min = min.min(*v);
            max = max.max(*v);
            sum += v;
        }
        if count == 0 {
            ScoreSummary { count, min: 0.0, max: 0.0, mean: 0.0 }
        } else {
            ScoreSummary { count, min, max, mean: sum / count as f64 }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbpRound {
    pub round: usize,
    pub n_before: usize,
    pub scores: ScoreSummary,
    pub tst_accuracy: f64,
    /// Ids selected for removal this round, sorted.
    pub selected: Vec<String>,
    /// Total removed after this round.
    pub removed_so_far: usize,
    pub per_task_removed: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    BudgetExhausted,
    ThresholdMet,
}

/// Full audit trail of a pruning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbpTrace {
    pub version: u32,
    pub benchmark_name: String,
    pub original_n: usize,
    pub config: IbpConfig,
    pub rounds: Vec<IbpRound>,
    pub removed_total: usize,
    pub stop_reason: StopReason,
    pub surviving_ids: Vec<String>,
    /// Diagnostic run over the final surviving set.
    pub final_result: TstResult,
}

pub const IBP_TRACE_VERSION: u32 = 1;

impl IbpTrace {
    pub fn removed_ids(&self) -> BTreeSet<String> {
        self.rounds
            .iter()
            .flat_map(|r| r.selected.iter().cloned())
            .collect()
    }
}

/// Select a removal batch of size min(k, eligible) under one strategy.
pub fn select_batch(
    scores: &BTreeMap<String, f64>,
    k: usize,
    strategy: Strategy,
    benchmark: &Benchmark,
    seed: u64,
    group_floor: usize,
) -> Result<Vec<String>, IbpError> {
    if k == 0 {
        return Err(IbpError::EmptyBatch);
    }
    let mut picked = match strategy {
        Strategy::TopK => top_k(scores, k),
        Strategy::WeightedSampling => weighted_sample(scores, k, seed),
        Strategy::GroupBalanced => group_balanced(scores, k, benchmark, group_floor),
    };
    picked.sort();
    Ok(picked)
}

fn top_k(scores: &BTreeMap<String, f64>, k: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, f64)> = scores.iter().map(|(id, s)| (id, *s)).collect();
    // Highest score first; ties resolve by id.
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores").then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(id, _)| id.clone()).collect()
}

fn weighted_sample(scores: &BTreeMap<String, f64>, k: usize, seed: u64) -> Vec<String> {
    let mut pool: Vec<(&String, f64)> = scores.iter().map(|(id, s)| (id, s.max(0.0))).collect();
    let mut rng = Stream::derived(seed, 0x5E1E);
    let mut picked = Vec::new();
    while picked.len() < k && !pool.is_empty() {
        let total: f64 = pool.iter().map(|(_, w)| w).sum();
        let index = if total <= 0.0 {
            // Degenerate weights: uniform draw.
            rng.index(pool.len())
        } else {
            let mut r = rng.next_f64() * total;
            let mut chosen = pool.len() - 1;
            for (i, (_, w)) in pool.iter().enumerate() {
                r -= w;
                if r < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        picked.push(pool.swap_remove(index).0.clone());
    }
    picked
}

/// Group key: task type crossed with the answer class (discrete tasks).
fn group_key(benchmark: &Benchmark, id: &str) -> String {
    let Some(sample) = benchmark.sample(id) else {
        return String::new();
    };
    match sample.answer_label() {
        Some(label) => format!("{}|{}", sample.task_type, label),
        None => sample.task_type.clone(),
    }
}

fn group_balanced(
    scores: &BTreeMap<String, f64>,
    k: usize,
    benchmark: &Benchmark,
    floor: usize,
) -> Vec<String> {
    // Members sorted by descending score within each group.
    let mut groups: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (id, s) in scores {
        groups
            .entry(group_key(benchmark, id))
            .or_default()
            .push((id.clone(), *s));
    }
    for members in groups.values_mut() {
        members.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(&b.0)));
    }

    let mut picked = Vec::new();
    while picked.len() < k {
        // Highest current mean s(x) among groups still above the floor;
        // ties resolve by group key.
        let candidate = groups
            .iter()
            .filter(|(_, members)| members.len() > floor)
            .map(|(key, members)| {
                let mean: f64 =
                    members.iter().map(|(_, s)| s).sum::<f64>() / members.len() as f64;
                (key.clone(), mean)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite").then_with(|| b.0.cmp(&a.0)));
        let Some((key, _)) = candidate else {
            break;
        };
        let members = groups.get_mut(&key).expect("candidate exists");
        picked.push(members.remove(0).0);
    }
    picked
}

/// Resolve per-task strategies for a benchmark under a config.
fn resolved_strategies(benchmark: &Benchmark, cfg: &IbpConfig) -> BTreeMap<String, Strategy> {
    benchmark
        .task_types()
        .into_iter()
        .map(|task| {
            let kind = benchmark
                .task_specs
                .get(&task)
                .map(|s| s.answer_kind)
                .unwrap_or(AnswerKind::MultipleChoice);
            let choice = cfg.strategy_overrides.get(&task).copied().unwrap_or(cfg.strategy);
            (task, choice.resolve(kind))
        })
        .collect()
}

/// Batch selection across tasks with (possibly) mixed strategies: each task
/// group nominates its next pick under its own strategy and the nominee with
/// the highest score is taken, so s(x) stays the primary guide.
fn select_round_batch(
    scores: &BTreeMap<String, f64>,
    k: usize,
    benchmark: &Benchmark,
    cfg: &IbpConfig,
    seed: u64,
) -> Result<Vec<String>, IbpError> {
    let strategies = resolved_strategies(benchmark, cfg);
    let distinct: BTreeSet<Strategy> = strategies.values().copied().collect();
    if distinct.len() <= 1 {
        let strategy = distinct.into_iter().next().unwrap_or(Strategy::TopK);
        return select_batch(scores, k, strategy, benchmark, seed, cfg.group_floor);
    }

    // Partition scores by task and pre-select a per-task ranking of size k.
    let mut nominations: BTreeMap<String, std::vec::IntoIter<String>> = BTreeMap::new();
    let mut score_by_task: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (id, s) in scores {
        if let Some(sample) = benchmark.sample(id) {
            score_by_task
                .entry(sample.task_type.clone())
                .or_default()
                .insert(id.clone(), *s);
        }
    }
    for (task, task_scores) in &score_by_task {
        let strategy = strategies[task];
        let want = k.min(task_scores.len());
        let ranked = select_batch(
            task_scores,
            want,
            strategy,
            benchmark,
            mix(seed, crate::rng::hash_str(task)),
            cfg.group_floor,
        )?;
        // Keep the strategy's own preference order for weighted sampling and
        // group balancing; top-k sorts by score below anyway.
        nominations.insert(task.clone(), ranked.into_iter());
    }

    let mut current: BTreeMap<String, String> = BTreeMap::new();
    for (task, iter) in &mut nominations {
        if let Some(id) = iter.next() {
            current.insert(task.clone(), id);
        }
    }
    let mut picked = Vec::new();
    while picked.len() < k && !current.is_empty() {
        let (task, _) = current
            .iter()
            .map(|(task, id)| (task.clone(), scores.get(id).copied().unwrap_or(0.0)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite").then_with(|| b.0.cmp(&a.0)))
            .expect("non-empty");
        let id = current.remove(&task).expect("present");
        picked.push(id);
        if let Some(next) = nominations.get_mut(&task).and_then(|it| it.next()) {
            current.insert(task, next);
        }
    }
    Ok(picked)
}

/// Run iterative bias pruning; returns the debiased benchmark and the trace.
pub fn run_ibp(benchmark: &Benchmark, cfg: &IbpConfig) -> Result<(Benchmark, IbpTrace), IbpError> {
    run_ibp_resumable(benchmark, cfg, None)
}

/// Re-enter a pruning run from a persisted trace, or start fresh with None.
pub fn run_ibp_resumable(
    benchmark: &Benchmark,
    cfg: &IbpConfig,
    resume: Option<&IbpTrace>,
) -> Result<(Benchmark, IbpTrace), IbpError> {
    let n = benchmark.len();
    let budget = cfg.budget.resolve(n);
    let batch = cfg.batch.resolve(n).max(1);
    if budget > n {
        return Err(IbpError::BadBudget { budget, n });
    }
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(IbpError::BadThreshold(cfg.tau));
    }

    let (mut current, mut rounds, mut removed_total, mut round_index) = match resume {
        Some(trace) => {
            if trace.config != *cfg || trace.original_n != n {
                return Err(IbpError::ConfigMismatch);
            }
            let removed = trace.removed_ids();
            for id in &removed {
                if benchmark.sample(id).is_none() {
                    return Err(IbpError::UnknownTraceId(id.clone()));
                }
            }
            (
                benchmark.without_ids(&removed),
                trace.rounds.clone(),
                trace.removed_total,
                trace.rounds.len(),
            )
        }
        None => (benchmark.clone(), Vec::new(), 0, 0),
    };

    let mut stop_reason = StopReason::BudgetExhausted;
    let mut last_result: Option<TstResult> = None;

    while removed_total < budget {
        let result = diagnose_round(&current, cfg, round_index)?;
        let scores = result.bias_scores();
        debug_assert_eq!(scores.len(), current.len());
        let summary = ScoreSummary::of(&scores);
        let tst_accuracy = result.aggregate_accuracy;
        last_result = Some(result);

        if summary.max <= cfg.tau {
            stop_reason = StopReason::ThresholdMet;
            rounds.push(IbpRound {
                round: round_index,
                n_before: current.len(),
                scores: summary,
                tst_accuracy,
                selected: Vec::new(),
                removed_so_far: removed_total,
                per_task_removed: BTreeMap::new(),
            });
            break;
        }

        let this_batch = batch.min(budget - removed_total);
        let selected = select_round_batch(
            &scores,
            this_batch,
            &current,
            cfg,
            mix(cfg.seed, 0xBA7C ^ ((round_index as u64) << 8)),
        )?;
        let mut per_task_removed: BTreeMap<String, usize> = BTreeMap::new();
        for id in &selected {
            if let Some(s) = current.sample(id) {
                *per_task_removed.entry(s.task_type.clone()).or_insert(0) += 1;
            }
        }
        removed_total += selected.len();
        let remove_set: BTreeSet<String> = selected.iter().cloned().collect();
        rounds.push(IbpRound {
            round: round_index,
            n_before: current.len(),
            scores: summary,
            tst_accuracy,
            selected,
            removed_so_far: removed_total,
            per_task_removed,
        });
        current = current.without_ids(&remove_set);
        round_index += 1;
        last_result = None;

        if remove_set.is_empty() {
            // No eligible sample (e.g. all groups at floor): cannot progress.
            break;
        }
    }

    // A threshold stop already diagnosed the final set; otherwise run once
    // more so the trace records the post-pruning exploitability.
    let final_result = match last_result {
        Some(r) => r,
        None => diagnose_round(&current, cfg, round_index)?,
    };

    let trace = IbpTrace {
        version: IBP_TRACE_VERSION,
        benchmark_name: benchmark.name.clone(),
        original_n: n,
        config: cfg.clone(),
        rounds,
        removed_total,
        stop_reason,
        surviving_ids: current.samples.iter().map(|s| s.id.clone()).collect(),
        final_result,
    };
    Ok((current, trace))
}

fn diagnose_round(
    benchmark: &Benchmark,
    cfg: &IbpConfig,
    round: usize,
) -> Result<TstResult, IbpError> {
    // Fresh folds and forest seeds each round.
    let fold_seed = mix(cfg.seed, 0xF01D ^ ((round as u64) << 8));
    let forest_seed = mix(cfg.seed, 0xF0FE ^ ((round as u64) << 8));
    let folds = assign_folds(benchmark, cfg.k, fold_seed, &cfg.stratify_keys)?;
    let params = cfg.forest.clone().with_seed(forest_seed);
    Ok(run_tst(benchmark, &params, &folds)?)
}

/// Per-category pruning table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningRow {
    pub task_type: String,
    pub original: usize,
    pub removed: usize,
    pub percent_removed: f64,
    pub final_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningReport {
    pub version: u32,
    pub rows: Vec<PruningRow>,
    pub totals: PruningRow,
}

fn percent(removed: usize, original: usize) -> f64 {
    if original == 0 {
        0.0
    } else {
        let pct = removed as f64 / original as f64 * 100.0;
        (pct * 10.0).round() / 10.0
    }
}

/// Summarize a trace against the original benchmark, one row per task type
/// plus totals. Percentages carry one decimal.
pub fn pruning_report(trace: &IbpTrace, original: &Benchmark) -> PruningReport {
    let removed = trace.removed_ids();
    let mut per_task: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &original.samples {
        let e = per_task.entry(s.task_type.clone()).or_insert((0, 0));
        e.0 += 1;
        if removed.contains(&s.id) {
            e.1 += 1;
        }
    }
    let rows: Vec<PruningRow> = per_task
        .into_iter()
        .map(|(task_type, (orig, rem))| PruningRow {
            task_type,
            original: orig,
            removed: rem,
            percent_removed: percent(rem, orig),
            final_count: orig - rem,
        })
        .collect();
    let total_original = original.len();
    let total_removed = removed.len();
    let totals = PruningRow {
        task_type: "total".into(),
        original: total_original,
        removed: total_removed,
        percent_removed: percent(total_removed, total_original),
        final_count: total_original - total_removed,
    };
    PruningReport {
        version: 1,
        rows,
        totals,
    }
}

/// 3056 -> "3,056".
pub fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl PruningReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>10} {:>10} {:>10} {:>10}\n",
            "Category", "Original", "Removed", "Percent", "Final"
        ));
        for row in self.rows.iter().chain(std::iter::once(&self.totals)) {
            out.push_str(&format!(
                "{:<28} {:>10} {:>10} {:>9.1}% {:>10}\n",
                row.task_type,
                group_thousands(row.original),
                group_thousands(row.removed),
                row.percent_removed,
                group_thousands(row.final_count),
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_type,original,removed,percent_removed,final\n");
        for row in self.rows.iter().chain(std::iter::once(&self.totals)) {
            out.push_str(&format!(
                "{},{},{},{:.1},{}\n",
                row.task_type, row.original, row.removed, row.percent_removed, row.final_count
            ));
        }
        out
    }
}
