//! Bias analyses over benchmarks, predictions, and diagnostic results.
//!
//! Three report families: answer-distribution statistics (histograms,
//! long-tail fractions, per-category spread, log-normal fits, position
//! matrices), vision-blind gaps between paired prediction sets, and
//! importance/exemplar summaries of a diagnostic run. Each report serializes
//! to a versioned JSON document and renders to aligned text or CSV with a
//! documented column order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::parse::OptionData;
use crate::features::stats::SequenceStats;
use crate::features::{parse_template, ValueStats};
use crate::model::{score_sample, Answer, AnswerKind, Benchmark, ModelError, PredictionSet};
use crate::registry::Role;
use crate::tst::TstResult;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("prediction sets must carry different conditions, both are '{0}'")]
    SameCondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub const REPORT_VERSION: u32 = 1;

/// Linear-space spread of a category's ground-truth values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpread {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Coefficient of variation: std / mean.
    pub cv: f64,
}

fn spread(values: &[f64]) -> CategorySpread {
    let n = values.len();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    let std = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    let cv = if mean.abs() < 1e-12 { 0.0 } else { std / mean };
    CategorySpread { n, mean, std, cv }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDistribution {
    pub n_samples: usize,
    /// Answer label -> count, most frequent first (ties by label).
    pub histogram: Vec<(String, usize)>,
    pub top1_frequency: f64,
    /// Numeric tasks: fraction of ground-truth values at most 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction_le_3: Option<f64>,
    /// Numeric tasks: log-space fit over all ground-truth values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_normal_fit: Option<(f64, f64)>,
    /// Numeric tasks with an object role: per-category linear spread.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_category: BTreeMap<String, CategorySpread>,
    /// Order tasks: category -> per-position frequency among GT sequences.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub position_matrix: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub version: u32,
    pub benchmark_name: String,
    pub per_task: BTreeMap<String, TaskDistribution>,
}

/// Answer-distribution statistics per task type.
pub fn answer_distribution_report(benchmark: &Benchmark) -> DistributionReport {
    let mut per_task: BTreeMap<String, TaskDistribution> = BTreeMap::new();
    let mut values_by_task: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut histograms: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut category_values: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut sequences: BTreeMap<String, (SequenceStats, usize)> = BTreeMap::new();

    for s in &benchmark.samples {
        let spec = benchmark.spec_for(s);
        let label = s
            .answer_label()
            .or_else(|| s.numeric_value().map(format_value));
        if let Some(label) = label {
            *histograms
                .entry(s.task_type.clone())
                .or_default()
                .entry(label)
                .or_insert(0) += 1;
        }
        if spec.answer_kind == AnswerKind::Numeric {
            if let Some(v) = s.numeric_value() {
                values_by_task.entry(s.task_type.clone()).or_default().push(v);
            }
        }
        if let Ok(parsed) = parse_template(s, spec) {
            if let (Some(cat), Some(v)) = (parsed.role(Role::Object), s.numeric_value()) {
                if spec.answer_kind == AnswerKind::Numeric {
                    category_values
                        .entry(s.task_type.clone())
                        .or_default()
                        .entry(cat.to_string())
                        .or_default()
                        .push(v);
                }
            }
            if let Answer::MultipleChoice { mc_index } = &s.answer {
                if let Some(OptionData::Sequence(seq)) = parsed.options.get(*mc_index) {
                    let entry = sequences
                        .entry(s.task_type.clone())
                        .or_insert_with(|| (SequenceStats::default(), 0));
                    entry.0.record(seq);
                    entry.1 = entry.1.max(seq.len());
                }
            }
        }
    }

    for task in benchmark.task_types() {
        let n_samples = benchmark
            .samples
            .iter()
            .filter(|s| s.task_type == task)
            .count();
        let histogram = {
            let mut h: Vec<(String, usize)> = histograms
                .remove(&task)
                .unwrap_or_default()
                .into_iter()
                .collect();
            h.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            h
        };
        let top1_frequency = histogram
            .first()
            .map(|(_, c)| *c as f64 / n_samples as f64)
            .unwrap_or(0.0);

        let values = values_by_task.remove(&task);
        let (fraction_le_3, log_normal_fit) = match &values {
            Some(values) if !values.is_empty() => {
                let le3 = values.iter().filter(|v| **v <= 3.0).count() as f64
                    / values.len() as f64;
                let stats = ValueStats::from_values(values);
                (Some(le3), Some((stats.log_mean, stats.log_std)))
            }
            _ => (None, None),
        };

        let per_category = category_values
            .remove(&task)
            .unwrap_or_default()
            .into_iter()
            .map(|(cat, values)| (cat, spread(&values)))
            .collect();

        let position_matrix = sequences
            .remove(&task)
            .map(|(stats, max_len)| {
                let mut matrix = BTreeMap::new();
                for cat in stats.involved_categories() {
                    let freqs: Vec<f64> = (0..max_len)
                        .map(|j| stats.position_freq(&cat, j))
                        .collect();
                    matrix.insert(cat, freqs);
                }
                matrix
            })
            .unwrap_or_default();

        per_task.insert(
            task,
            TaskDistribution {
                n_samples,
                histogram,
                top1_frequency,
                fraction_le_3,
                log_normal_fit,
                per_category,
                position_matrix,
            },
        );
    }

    DistributionReport {
        version: REPORT_VERSION,
        benchmark_name: benchmark.name.clone(),
        per_task,
    }
}

fn format_value(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n_scored: usize,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    /// accuracy_a - accuracy_b.
    pub delta: f64,
}

/// Accuracy gap between two prediction conditions (typically vision vs
/// blind), per task and aggregate, with pairwise exclusion of ids missing
/// from either set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub version: u32,
    pub benchmark_name: String,
    pub model_a: String,
    pub model_b: String,
    pub condition_a: String,
    pub condition_b: String,
    pub per_task: BTreeMap<String, GapRow>,
    pub aggregate: GapRow,
    /// Ids excluded because one of the sets lacked a prediction.
    pub excluded_ids: Vec<String>,
}

pub fn vision_blind_gap(
    a: &PredictionSet,
    b: &PredictionSet,
    benchmark: &Benchmark,
) -> Result<GapReport, ReportError> {
    if a.condition == b.condition {
        return Err(ReportError::SameCondition(a.condition.to_string()));
    }

    let mut excluded_ids = Vec::new();
    let mut per_task_acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    let mut total = (0.0, 0.0, 0usize);
    for s in &benchmark.samples {
        let (Some(pa), Some(pb)) = (a.entries.get(&s.id), b.entries.get(&s.id)) else {
            excluded_ids.push(s.id.clone());
            continue;
        };
        let spec = benchmark.spec_for(s);
        let sa = score_sample(s, spec, pa)?;
        let sb = score_sample(s, spec, pb)?;
        let e = per_task_acc.entry(s.task_type.clone()).or_insert((0.0, 0.0, 0));
        e.0 += sa;
        e.1 += sb;
        e.2 += 1;
        total.0 += sa;
        total.1 += sb;
        total.2 += 1;
    }

    let row = |(sa, sb, n): (f64, f64, usize)| {
        let accuracy_a = if n == 0 { 0.0 } else { sa / n as f64 };
        let accuracy_b = if n == 0 { 0.0 } else { sb / n as f64 };
        GapRow {
            n_scored: n,
            accuracy_a,
            accuracy_b,
            delta: accuracy_a - accuracy_b,
        }
    };

    Ok(GapReport {
        version: REPORT_VERSION,
        benchmark_name: benchmark.name.clone(),
        model_a: a.model_name.clone(),
        model_b: b.model_name.clone(),
        condition_a: a.condition.to_string(),
        condition_b: b.condition.to_string(),
        per_task: per_task_acc.into_iter().map(|(t, acc)| (t, row(acc))).collect(),
        aggregate: row(total),
        excluded_ids,
    })
}

impl GapReport {
    /// Per-task change in the gap against another report (e.g. before vs
    /// after debiasing, or zero-shot vs tuned).
    pub fn delta_vs(&self, other: &GapReport) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (task, row) in &self.per_task {
            if let Some(other_row) = other.per_task.get(task) {
                out.insert(task.clone(), row.delta - other_row.delta);
            }
        }
        out.insert("aggregate".into(), self.aggregate.delta - other.aggregate.delta);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "benchmark: {}  |  {} ({}) vs {} ({})\n",
            self.benchmark_name, self.model_a, self.condition_a, self.model_b, self.condition_b
        ));
        out.push_str(&format!(
            "{:<28} {:>8} {:>10} {:>10} {:>8}\n",
            "task", "n", self.condition_a, self.condition_b, "delta"
        ));
        for (task, row) in self
            .per_task
            .iter()
            .chain(std::iter::once((&"aggregate".to_string(), &self.aggregate)))
        {
            out.push_str(&format!(
                "{:<28} {:>8} {:>9.1}% {:>9.1}% {:>7.1}\n",
                task,
                row.n_scored,
                row.accuracy_a * 100.0,
                row.accuracy_b * 100.0,
                row.delta * 100.0
            ));
        }
        if !self.excluded_ids.is_empty() {
            out.push_str(&format!(
                "coverage: {} samples excluded (missing from one set)\n",
                self.excluded_ids.len()
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,n_scored,accuracy_a,accuracy_b,delta\n");
        for (task, row) in self
            .per_task
            .iter()
            .chain(std::iter::once((&"aggregate".to_string(), &self.aggregate)))
        {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                task, row.n_scored, row.accuracy_a, row.accuracy_b, row.delta
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub bias_score: f64,
    pub question: String,
    /// Extracted role categories, when the question parses.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<String, String>,
    /// Spread of the primary category's ground-truth values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_spread: Option<CategorySpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskImportance {
    /// Features ranked by mean importance across folds.
    pub features: Vec<(String, f64)>,
    /// Highest-bias samples, ranked by s(x).
    pub exemplars: Vec<Exemplar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub version: u32,
    pub benchmark_name: String,
    pub per_task: BTreeMap<String, TaskImportance>,
}

/// Rank features by mean importance across folds and list the top-n samples
/// by bias score for every task.
pub fn importance_and_exemplar_report(
    result: &TstResult,
    benchmark: &Benchmark,
    top_n: usize,
) -> ImportanceReport {
    // Mean importance across the folds that trained a diagnostic per task.
    let mut sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for fold_map in &result.fold_importances {
        for (task, features) in fold_map {
            let task_entry = sums.entry(task.clone()).or_default();
            for (name, w) in features {
                let e = task_entry.entry(name.clone()).or_insert((0.0, 0));
                e.0 += w;
                e.1 += 1;
            }
        }
    }

    // Category spreads over the whole benchmark for exemplar context.
    let mut category_values: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for s in &benchmark.samples {
        let spec = benchmark.spec_for(s);
        if spec.answer_kind != AnswerKind::Numeric {
            continue;
        }
        if let Ok(parsed) = parse_template(s, spec) {
            if let (Some(cat), Some(v)) = (parsed.role(Role::Object), s.numeric_value()) {
                category_values
                    .entry(s.task_type.clone())
                    .or_default()
                    .entry(cat.to_string())
                    .or_default()
                    .push(v);
            }
        }
    }

    let mut per_task: BTreeMap<String, TaskImportance> = BTreeMap::new();
    for task in benchmark.task_types() {
        let features = {
            let mut ranked: Vec<(String, f64)> = sums
                .remove(&task)
                .unwrap_or_default()
                .into_iter()
                .map(|(name, (sum, n))| (name, sum / n as f64))
                .collect();
            ranked.sort_by(|a, b| {
                b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(&b.0))
            });
            ranked
        };

        let mut scored: Vec<&crate::model::Sample> = benchmark
            .samples
            .iter()
            .filter(|s| s.task_type == task)
            .collect();
        scored.sort_by(|a, b| {
            let sa = result.per_sample[&a.id].bias_score;
            let sb = result.per_sample[&b.id].bias_score;
            sb.partial_cmp(&sa).expect("finite").then_with(|| a.id.cmp(&b.id))
        });
        let exemplars: Vec<Exemplar> = scored
            .into_iter()
            .take(top_n)
            .map(|s| {
                let spec = benchmark.spec_for(s);
                let categories: BTreeMap<String, String> = parse_template(s, spec)
                    .map(|p| {
                        p.roles
                            .iter()
                            .map(|(role, cat)| (role.key().to_string(), cat.clone()))
                            .collect()
                    })
                    .unwrap_or_default();
                let category_spread = categories.get("object").and_then(|cat| {
                    category_values
                        .get(&task)
                        .and_then(|m| m.get(cat))
                        .map(|values| spread(values))
                });
                Exemplar {
                    id: s.id.clone(),
                    bias_score: result.per_sample[&s.id].bias_score,
                    question: s.question.clone(),
                    categories,
                    category_spread,
                }
            })
            .collect();

        per_task.insert(task, TaskImportance { features, exemplars });
    }

    ImportanceReport {
        version: REPORT_VERSION,
        benchmark_name: benchmark.name.clone(),
        per_task,
    }
}

impl ImportanceReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (task, ti) in &self.per_task {
            out.push_str(&format!("== {task}\n"));
            for (name, w) in ti.features.iter().take(12) {
                out.push_str(&format!("  {name:<40} {w:>8.4}\n"));
            }
            if !ti.exemplars.is_empty() {
                out.push_str("  top samples by bias score:\n");
                for e in &ti.exemplars {
                    let cat = e
                        .categories
                        .get("object")
                        .cloned()
                        .unwrap_or_default();
                    match &e.category_spread {
                        Some(sp) => out.push_str(&format!(
                            "    {:<16} s(x)={:.3} {} (mean {:.1}, std {:.1}, cv {:.3})\n",
                            e.id, e.bias_score, cat, sp.mean, sp.std, sp.cv
                        )),
                        None => out.push_str(&format!(
                            "    {:<16} s(x)={:.3} {}\n",
                            e.id, e.bias_score, cat
                        )),
                    }
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_type,feature,mean_importance\n");
        for (task, ti) in &self.per_task {
            for (name, w) in &ti.features {
                out.push_str(&format!("{task},{name},{w:.6}\n"));
            }
        }
        out
    }
}

impl DistributionReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (task, d) in &self.per_task {
            out.push_str(&format!("== {task} (n={})\n", d.n_samples));
            out.push_str(&format!("  top-1 answer frequency: {:.3}\n", d.top1_frequency));
            if let Some(f) = d.fraction_le_3 {
                out.push_str(&format!("  fraction of answers <= 3: {f:.3}\n"));
            }
            if let Some((m, s)) = d.log_normal_fit {
                out.push_str(&format!("  log-normal fit: log-mean {m:.3}, log-std {s:.3}\n"));
            }
            for (label, count) in d.histogram.iter().take(8) {
                out.push_str(&format!("    {label:<24} {count}\n"));
            }
            for (cat, sp) in d.per_category.iter().take(12) {
                out.push_str(&format!(
                    "    {cat:<20} n={:<5} mean {:>9.1} std {:>8.1} cv {:>6.3}\n",
                    sp.n, sp.mean, sp.std, sp.cv
                ));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_type,category,n,mean,std,cv\n");
        for (task, d) in &self.per_task {
            for (cat, sp) in &d.per_category {
                out.push_str(&format!(
                    "{task},{cat},{},{:.6},{:.6},{:.6}\n",
                    sp.n, sp.mean, sp.std, sp.cv
                ));
            }
        }
        out
    }
}
