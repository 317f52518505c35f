//! Integration tests for batch selection and iterative pruning.

use std::collections::BTreeMap;

use blindspot_core::forest::ForestParams;
use blindspot_core::ibp::{
    pruning_report, run_ibp, run_ibp_resumable, select_batch, Amount, IbpConfig, StopReason,
    Strategy, StrategyChoice,
};
use blindspot_core::model::{Answer, Sample};
use blindspot_core::synth::{generate, Archetype, SynthSpec};
use blindspot_core::{Benchmark, Registry};

fn quick_cfg(seed: u64) -> IbpConfig {
    IbpConfig {
        forest: ForestParams {
            n_trees: 30,
            max_depth: 20,
            ..ForestParams::default()
        },
        seed,
        ..IbpConfig::default()
    }
}

fn planted_mc(n: usize, strength: f64, fraction: f64, seed: u64) -> Benchmark {
    let spec = SynthSpec {
        vocabulary_size: 20,
        fraction_planted: fraction,
        ..SynthSpec::single(Archetype::CategoryAnswerCorrelation, n, strength, seed)
    };
    generate(&spec).unwrap()
}

fn mc_bench(scores: &[(&str, &str)]) -> Benchmark {
    // id -> answer label; one task, options fixed.
    let samples: Vec<Sample> = scores
        .iter()
        .map(|(id, label)| {
            let options = vec!["chair".to_string(), "lamp".to_string()];
            let mc_index = options.iter().position(|o| o == label).unwrap();
            Sample {
                id: id.to_string(),
                task_type: "object_rel_distance".into(),
                question:
                    "Measuring from the closest point of each object, which of these objects is the closest to the desk?"
                        .into(),
                answer: Answer::MultipleChoice { mc_index },
                options: Some(options),
                metadata: None,
                planted: None,
            }
        })
        .collect();
    Benchmark::new("toy", samples, Registry::builtin()).unwrap()
}

#[test]
fn top_k_takes_highest_scores_with_id_ties() {
    let b = mc_bench(&[("a", "chair"), ("b", "chair"), ("c", "chair")]);
    let scores: BTreeMap<String, f64> =
        [("a", 0.9), ("b", 0.1), ("c", 0.8)].map(|(k, v)| (k.to_string(), v)).into();
    let picked = select_batch(&scores, 2, Strategy::TopK, &b, 0, 1).unwrap();
    assert_eq!(picked, vec!["a".to_string(), "c".to_string()]);
}

#[test]
fn weighted_sampling_is_deterministic_under_a_seed() {
    let b = mc_bench(&[("a", "chair"), ("b", "chair"), ("c", "chair"), ("d", "chair")]);
    let scores: BTreeMap<String, f64> = ["a", "b", "c", "d"]
        .iter()
        .map(|id| (id.to_string(), 0.5))
        .collect();
    let first = select_batch(&scores, 2, Strategy::WeightedSampling, &b, 7, 1).unwrap();
    let second = select_batch(&scores, 2, Strategy::WeightedSampling, &b, 7, 1).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.len(), 2);
    // A different seed may pick a different subset, but stays valid.
    let third = select_batch(&scores, 2, Strategy::WeightedSampling, &b, 8, 1).unwrap();
    assert_eq!(third.len(), 2);
}

#[test]
fn group_balanced_drains_the_high_scoring_class_first() {
    // Class "chair" holds all high scores; class "lamp" is clean.
    let b = mc_bench(&[
        ("c1", "chair"),
        ("c2", "chair"),
        ("c3", "chair"),
        ("c4", "chair"),
        ("l1", "lamp"),
        ("l2", "lamp"),
        ("l3", "lamp"),
        ("l4", "lamp"),
    ]);
    let scores: BTreeMap<String, f64> = [
        ("c1", 0.95),
        ("c2", 0.9),
        ("c3", 0.85),
        ("c4", 0.8),
        ("l1", 0.3),
        ("l2", 0.25),
        ("l3", 0.2),
        ("l4", 0.15),
    ]
    .map(|(k, v)| (k.to_string(), v))
    .into();
    let picked = select_batch(&scores, 3, Strategy::GroupBalanced, &b, 0, 1).unwrap();
    // Hand-simulated: chair group mean stays above lamp's throughout, so the
    // three removals all come from the chair class, by descending score.
    assert_eq!(picked, vec!["c1".to_string(), "c2".to_string(), "c3".to_string()]);
}

#[test]
fn group_balanced_respects_the_floor() {
    let b = mc_bench(&[("c1", "chair"), ("c2", "chair"), ("l1", "lamp"), ("l2", "lamp")]);
    let scores: BTreeMap<String, f64> =
        [("c1", 0.9), ("c2", 0.8), ("l1", 0.2), ("l2", 0.1)]
            .map(|(k, v)| (k.to_string(), v))
            .into();
    // Floor of one: each group keeps at least one member, so only two of the
    // four are eligible.
    let picked = select_batch(&scores, 4, Strategy::GroupBalanced, &b, 0, 1).unwrap();
    assert_eq!(picked.len(), 2);
    assert!(picked.contains(&"c1".to_string()));
    assert!(picked.contains(&"l1".to_string()));
}

#[test]
fn tau_of_one_stops_without_removals() {
    let b = planted_mc(120, 0.8, 1.0, 3);
    let cfg = IbpConfig {
        tau: 1.0,
        ..quick_cfg(5)
    };
    let (pruned, trace) = run_ibp(&b, &cfg).unwrap();
    assert_eq!(pruned.len(), b.len());
    assert_eq!(trace.stop_reason, StopReason::ThresholdMet);
    assert_eq!(trace.removed_total, 0);
    assert_eq!(trace.rounds.len(), 1);
    assert!(trace.rounds[0].selected.is_empty());
}

#[test]
fn zero_budget_removes_nothing() {
    let b = planted_mc(100, 1.0, 1.0, 4);
    let cfg = IbpConfig {
        budget: Amount::Count(0),
        ..quick_cfg(5)
    };
    let (pruned, trace) = run_ibp(&b, &cfg).unwrap();
    assert_eq!(pruned.len(), 100);
    assert_eq!(trace.stop_reason, StopReason::BudgetExhausted);
    assert!(trace.rounds.is_empty());
    assert_eq!(trace.final_result.per_sample.len(), 100);
}

#[test]
fn budget_is_never_exceeded_and_order_is_preserved() {
    let b = planted_mc(200, 1.0, 1.0, 6);
    let cfg = IbpConfig {
        budget: Amount::Count(37),
        batch: Amount::Count(10),
        tau: 0.05,
        ..quick_cfg(9)
    };
    let (pruned, trace) = run_ibp(&b, &cfg).unwrap();
    assert!(trace.removed_total <= 37);
    assert!(pruned.len() >= 200 - 37);
    // Final batch truncates to the remaining budget.
    if trace.stop_reason == StopReason::BudgetExhausted {
        assert_eq!(trace.removed_total, 37);
        let last = trace.rounds.last().unwrap();
        assert_eq!(last.selected.len(), 7);
    }
    // Surviving samples keep their original relative order.
    let surviving: Vec<&str> = pruned.samples.iter().map(|s| s.id.as_str()).collect();
    let mut expected: Vec<&str> = b
        .samples
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| !trace.removed_ids().contains(**&id))
        .collect();
    expected.retain(|id| surviving.contains(id));
    assert_eq!(surviving, expected);
}

#[test]
fn rounds_shrink_monotonically_and_rediagnose_fresh() {
    let b = planted_mc(200, 1.0, 1.0, 8);
    let cfg = IbpConfig {
        budget: Amount::Fraction(0.3),
        batch: Amount::Fraction(0.1),
        tau: 0.05,
        ..quick_cfg(11)
    };
    let (_, trace) = run_ibp(&b, &cfg).unwrap();
    let mut prev_n = b.len();
    let mut removed = 0usize;
    for round in &trace.rounds {
        assert_eq!(round.n_before, prev_n - 0);
        // Scores were computed on exactly the surviving set of this round.
        assert_eq!(round.scores.count, round.n_before);
        removed += round.selected.len();
        assert_eq!(round.removed_so_far, removed);
        prev_n = round.n_before - round.selected.len();
    }
}

#[test]
fn identical_configs_give_identical_traces() {
    let b = planted_mc(150, 1.0, 1.0, 10);
    let cfg = IbpConfig {
        budget: Amount::Fraction(0.2),
        batch: Amount::Fraction(0.1),
        tau: 0.1,
        ..quick_cfg(13)
    };
    let (pa, ta) = run_ibp(&b, &cfg).unwrap();
    let (pb, tb) = run_ibp(&b, &cfg).unwrap();
    assert_eq!(pa.samples, pb.samples);
    let ja = serde_json::to_string(&ta).unwrap();
    let jb = serde_json::to_string(&tb).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn resume_continues_to_the_same_outcome() {
    let b = planted_mc(150, 1.0, 1.0, 14);
    let full_cfg = IbpConfig {
        budget: Amount::Count(30),
        batch: Amount::Count(10),
        tau: 0.05,
        ..quick_cfg(15)
    };
    // Run with a smaller budget first, persist, then resume to the full one.
    let (_, full_trace) = run_ibp(&b, &full_cfg).unwrap();

    let head_cfg = IbpConfig {
        budget: Amount::Count(10),
        ..full_cfg.clone()
    };
    let (_, head) = run_ibp(&b, &head_cfg).unwrap();
    // Align the persisted trace with the full config before resuming.
    let mut head_as_full = head.clone();
    head_as_full.config = full_cfg.clone();
    head_as_full.original_n = b.len();
    let (resumed, resumed_trace) = run_ibp_resumable(&b, &full_cfg, Some(&head_as_full)).unwrap();

    assert_eq!(resumed_trace.removed_total, full_trace.removed_total);
    assert_eq!(resumed.len(), b.len() - full_trace.removed_total);
    // Round-derived seeds make the continuation identical to the uncut run.
    assert_eq!(
        resumed_trace.removed_ids(),
        full_trace.removed_ids()
    );
}

#[test]
fn pruning_report_counts_by_task() {
    let b = planted_mc(100, 1.0, 1.0, 16);
    let cfg = IbpConfig {
        budget: Amount::Count(20),
        batch: Amount::Count(10),
        tau: 0.05,
        ..quick_cfg(17)
    };
    let (_, trace) = run_ibp(&b, &cfg).unwrap();
    let report = pruning_report(&trace, &b);
    assert_eq!(report.totals.original, 100);
    assert_eq!(report.totals.removed, trace.removed_total);
    assert_eq!(
        report.totals.final_count,
        100 - trace.removed_total
    );
    let row_sum: usize = report.rows.iter().map(|r| r.removed).sum();
    assert_eq!(row_sum, report.totals.removed);
}

#[test]
fn zero_removal_report_is_all_zeros() {
    let b = planted_mc(50, 0.5, 1.0, 18);
    let cfg = IbpConfig {
        budget: Amount::Count(0),
        ..quick_cfg(19)
    };
    let (_, trace) = run_ibp(&b, &cfg).unwrap();
    let report = pruning_report(&trace, &b);
    for row in &report.rows {
        assert_eq!(row.removed, 0);
        assert_eq!(row.percent_removed, 0.0);
    }
}

#[test]
fn pruning_reduces_exploitability_on_planted_data() {
    let b = planted_mc(400, 1.0, 0.6, 20);
    let cfg = IbpConfig {
        budget: Amount::Fraction(0.5),
        batch: Amount::Fraction(0.1),
        tau: 0.5,
        strategy: StrategyChoice::Auto,
        ..quick_cfg(21)
    };
    let (_, trace) = run_ibp(&b, &cfg).unwrap();
    let pre = trace.rounds.first().unwrap().tst_accuracy;
    let post = trace.final_result.aggregate_accuracy;
    assert!(post <= pre, "post {post} vs pre {pre}");
}
