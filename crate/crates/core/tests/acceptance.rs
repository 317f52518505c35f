//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
//! line with its measured values. Criterion 9 needs externally supplied
//! benchmark exports and is skipped (with a SKIP line) when the environment
//! does not provide them.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use blindspot_core::forest::{
    train_classifier, FeatureRule, Forest, ForestParams, Node,
};
use blindspot_core::ibp::{pruning_report, run_ibp, Amount, IbpConfig, IbpRound, IbpTrace, ScoreSummary, StopReason};
use blindspot_core::model::{mean_relative_accuracy, Answer, Condition, PredictionSet, Sample};
use blindspot_core::report::{importance_and_exemplar_report, vision_blind_gap};
use blindspot_core::rng::Stream;
use blindspot_core::synth::{generate, planted_labels, Archetype, SynthSpec};
use blindspot_core::tst::{assign_folds, run_tst, StratifyKey, TstResult};
use blindspot_core::{Benchmark, Registry};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn within_budget(criterion: &str, elapsed: Duration, budget: Duration) {
    // Wall-clock budgets from the criteria, with the suite compiled -O2.
    assert!(
        elapsed < budget,
        "{criterion}: runtime {elapsed:.1?} exceeded {budget:.1?}"
    );
}

// --- Criterion 1: leakage-free protocol -----------------------------------

#[test]
fn criterion_1_leakage_free_protocol() {
    let start = Instant::now();
    let mut meta = Stream::new(0xACC1);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for trial in 0..50 {
        let n = 40 + meta.index(81);
        let k = 2 + meta.index(5);
        let seed = meta.next_u64();
        let spec = SynthSpec {
            n_samples: n,
            seed,
            ..SynthSpec::default()
        };
        let bench = generate(&spec).unwrap();
        let folds = assign_folds(&bench, k, seed ^ 0x0F, &[StratifyKey::TaskType]).unwrap();
        let params = ForestParams {
            n_trees: 6,
            max_depth: 12,
            seed: seed ^ 0xF0,
            ..ForestParams::default()
        };
        let result = run_tst(&bench, &params, &folds).unwrap();
        assert_eq!(result.per_sample.len(), n, "trial {trial} coverage");
        for (id, diagnosis) in &result.per_sample {
            checked += 1;
            if result.fold_train_ids[diagnosis.fold].contains(id) {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    within_budget("criterion 1", elapsed, Duration::from_secs(60));
    verdict(
        "criterion 1 (leakage-free protocol)",
        violations == 0,
        &format!("{checked} held-out scores over 50 runs, {violations} violations, {elapsed:.1?}"),
    );
}

// --- Criterion 2: CART oracle equivalence ---------------------------------

/// Independent brute-force CART: exhaustive split enumeration with exact
/// integer fraction comparisons and the lowest-feature/lowest-threshold tie
/// rule. Kept free of any implementation helper.
enum OracleNode {
    Leaf(Vec<u32>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

fn oracle_midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

fn oracle_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n_classes];
    for r in rows {
        counts[y[*r]] += 1;
    }
    counts
}

fn oracle_build(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    rows: Vec<usize>,
    depth: usize,
    max_depth: usize,
) -> OracleNode {
    let counts = oracle_counts(y, &rows, n_classes);
    let pure = counts.iter().filter(|c| **c > 0).count() <= 1;
    if depth >= max_depth || rows.len() < 2 || pure {
        return OracleNode::Leaf(counts);
    }

    let n = rows.len() as u128;
    let parent_sum_sq: u128 = counts.iter().map(|c| u128::from(*c) * u128::from(*c)).sum();
    let n_features = x[0].len();

    // (num, den) of the best score fraction, plus its split.
    let mut best: Option<(u128, u128, usize, f64)> = None;
    for feature in 0..n_features {
        let mut values: Vec<f64> = rows.iter().map(|r| x[*r][feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = oracle_midpoint(pair[0], pair[1]);
            let left: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| x[*r][feature] <= threshold)
                .collect();
            let right: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| x[*r][feature] > threshold)
                .collect();
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let lc = oracle_counts(y, &left, n_classes);
            let rc = oracle_counts(y, &right, n_classes);
            let sum_sq = |c: &[u32]| -> u128 {
                c.iter().map(|v| u128::from(*v) * u128::from(*v)).sum()
            };
            let (nl, nr) = (left.len() as u128, right.len() as u128);
            let num = sum_sq(&lc) * nr + sum_sq(&rc) * nl;
            let den = nl * nr;
            // Must strictly beat the parent: num/den > parent_sum_sq/n.
            if num * n <= parent_sum_sq * den {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bn, bd, _, _)) => num * bd > bn * den,
            };
            if better {
                best = Some((num, den, feature, threshold));
            }
        }
    }

    match best {
        None => OracleNode::Leaf(counts),
        Some((_, _, feature, threshold)) => {
            let left_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| x[*r][feature] <= threshold)
                .collect();
            let right_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| x[*r][feature] > threshold)
                .collect();
            OracleNode::Split {
                feature,
                threshold,
                left: Box::new(oracle_build(x, y, n_classes, left_rows, depth + 1, max_depth)),
                right: Box::new(oracle_build(x, y, n_classes, right_rows, depth + 1, max_depth)),
            }
        }
    }
}

fn node_for_node(nodes: &[Node], idx: usize, oracle: &OracleNode) -> bool {
    match (&nodes[idx], oracle) {
        (Node::ClassLeaf { counts }, OracleNode::Leaf(expected)) => counts == expected,
        (
            Node::Split {
                feature,
                threshold,
                left,
                right,
            },
            OracleNode::Split {
                feature: of,
                threshold: ot,
                left: ol,
                right: or,
            },
        ) => {
            *feature as usize == *of
                && threshold == ot
                && node_for_node(nodes, *left as usize, ol)
                && node_for_node(nodes, *right as usize, or)
        }
        _ => false,
    }
}

#[test]
fn criterion_2_cart_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = Stream::new(0xACC2);
    let mut cases = 0usize;
    let mut mismatches = 0usize;
    while cases < 250 {
        let n = 2 + rng.index(11); // 2..=12 samples
        let f = 1 + rng.index(3); // 1..=3 features
        let n_classes = 2 + rng.index(2); // 2..=3 classes
        // Values on a small grid so exact ties actually occur.
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..f).map(|_| rng.index(4) as f64).collect())
            .collect();
        let y: Vec<usize> = (0..n).map(|_| rng.index(n_classes)).collect();
        cases += 1;

        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_depth: 32,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: Some(FeatureRule::All),
            seed: 0,
        };
        let forest = train_classifier(&x, &y, n_classes, &params).unwrap();
        let oracle = oracle_build(&x, &y, n_classes, (0..n).collect(), 0, 32);
        if !node_for_node(&forest.trees[0].nodes, 0, &oracle) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    within_budget("criterion 2", elapsed, Duration::from_secs(60));
    verdict(
        "criterion 2 (CART oracle equivalence)",
        mismatches == 0,
        &format!("{cases} randomized datasets, {mismatches} tree mismatches, {elapsed:.1?}"),
    );
}

// --- Criterion 3: Gini arithmetic ------------------------------------------

#[test]
fn criterion_3_gini_arithmetic() {
    let g31 = blindspot_core::forest::gini_impurity(&[3, 1]).unwrap();
    let g55 = blindspot_core::forest::gini_impurity(&[5, 5]).unwrap();
    let g100 = blindspot_core::forest::gini_impurity(&[10, 0]).unwrap();
    verdict(
        "criterion 3 (gini arithmetic)",
        g31 == 0.375 && g55 == 0.5 && g100 == 0.0,
        &format!("gini[3,1]={g31}, gini[5,5]={g55}, gini[10,0]={g100}"),
    );
}

// --- Criterion 4: planted-shortcut detection -------------------------------

#[test]
fn criterion_4_planted_shortcut_detection() {
    let start = Instant::now();
    // 200 trees for desk-scale runtime; 1000/20 stay the configured defaults.
    let params = ForestParams {
        n_trees: 200,
        max_depth: 20,
        seed: 2,
        ..ForestParams::default()
    };
    assert_eq!(ForestParams::default().n_trees, 1000);
    assert_eq!(ForestParams::default().max_depth, 20);

    let planted = generate(&SynthSpec::single(
        Archetype::CategoryAnswerCorrelation,
        2000,
        1.0,
        101,
    ))
    .unwrap();
    let folds = assign_folds(&planted, 5, 1, &[StratifyKey::TaskType]).unwrap();
    let planted_acc = run_tst(&planted, &params, &folds)
        .unwrap()
        .aggregate_accuracy;

    let unplanted = generate(&SynthSpec::single(
        Archetype::CategoryAnswerCorrelation,
        2000,
        0.0,
        101,
    ))
    .unwrap();
    let folds = assign_folds(&unplanted, 5, 1, &[StratifyKey::TaskType]).unwrap();
    let chance_acc = run_tst(&unplanted, &params, &folds)
        .unwrap()
        .aggregate_accuracy;

    let elapsed = start.elapsed();
    within_budget("criterion 4", elapsed, Duration::from_secs(120));
    let pass = planted_acc >= 0.95 && (chance_acc - 0.25).abs() <= 0.03;
    verdict(
        "criterion 4 (planted-shortcut detection)",
        pass,
        &format!(
            "p=1.0 accuracy {planted_acc:.4} (need >= 0.95); p=0 accuracy {chance_acc:.4} (need within 0.03 of 0.25); {elapsed:.1?}"
        ),
    );
}

// --- Criterion 5: IBP effectiveness and precision --------------------------

#[test]
fn criterion_5_ibp_effectiveness_and_precision() {
    let start = Instant::now();
    let mut post_accs = Vec::new();
    let mut precisions = Vec::new();
    for seed in 0..5u64 {
        let spec = SynthSpec {
            vocabulary_size: 12,
            fraction_planted: 0.6,
            ..SynthSpec::single(Archetype::CategoryAnswerCorrelation, 1000, 0.95, 500 + seed)
        };
        let bench = generate(&spec).unwrap();
        let labels = planted_labels(&bench).unwrap();
        let cfg = IbpConfig {
            budget: Amount::Fraction(0.6),
            batch: Amount::Fraction(0.05),
            tau: 0.9,
            seed: 900 + seed,
            forest: ForestParams {
                n_trees: 100,
                max_depth: 20,
                features_per_split: Some(FeatureRule::All),
                ..ForestParams::default()
            },
            ..IbpConfig::default()
        };
        let (_, trace) = run_ibp(&bench, &cfg).unwrap();
        let removed = trace.removed_ids();
        let hit = removed.iter().filter(|id| labels[*id]).count();
        precisions.push(hit as f64 / removed.len().max(1) as f64);
        post_accs.push(trace.final_result.aggregate_accuracy);
    }
    let mean_post = post_accs.iter().sum::<f64>() / post_accs.len() as f64;
    let mean_precision = precisions.iter().sum::<f64>() / precisions.len() as f64;
    let elapsed = start.elapsed();
    within_budget("criterion 5", elapsed, Duration::from_secs(600));
    let pass = (mean_post - 0.25).abs() <= 0.05 && mean_precision >= 0.8;
    verdict(
        "criterion 5 (IBP effectiveness and precision)",
        pass,
        &format!(
            "mean post-pruning accuracy {mean_post:.4} (need within 0.05 of 0.25); mean removal precision {mean_precision:.4} (need >= 0.8); per-seed post {post_accs:?}; {elapsed:.1?}"
        ),
    );
}

// --- Criterion 6: determinism ----------------------------------------------

fn run_in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(job)
}

#[test]
fn criterion_6_determinism() {
    let spec = SynthSpec {
        n_samples: 400,
        seed: 77,
        ..SynthSpec::default()
    };
    let bench = generate(&spec).unwrap();
    let folds = assign_folds(&bench, 5, 3, &[StratifyKey::TaskType]).unwrap();
    let params = ForestParams {
        n_trees: 50,
        max_depth: 20,
        seed: 5,
        ..ForestParams::default()
    };

    let tst_bytes = |threads: usize| -> (Vec<u8>, Vec<u8>) {
        let result = run_in_pool(threads, || run_tst(&bench, &params, &folds).unwrap());
        let scores: BTreeMap<String, f64> = result.bias_scores();
        let report = importance_and_exemplar_report(&result, &bench, 5);
        (
            serde_json::to_vec(&scores).unwrap(),
            serde_json::to_vec(&report).unwrap(),
        )
    };
    let (scores_1, report_1) = tst_bytes(1);
    let (scores_4, report_4) = tst_bytes(4);
    let (scores_4b, report_4b) = tst_bytes(4);

    let forest_bytes = |threads: usize| -> Vec<u8> {
        let mut rng = Stream::new(9);
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..8).map(|_| rng.next_f64()).collect())
            .collect();
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] > 0.5)).collect();
        let forest: Forest =
            run_in_pool(threads, || train_classifier(&x, &y, 2, &params).unwrap());
        serde_json::to_vec(&forest).unwrap()
    };
    let f1 = forest_bytes(1);
    let f4 = forest_bytes(4);

    let pass = scores_1 == scores_4
        && scores_4 == scores_4b
        && report_1 == report_4
        && report_4 == report_4b
        && f1 == f4;
    verdict(
        "criterion 6 (determinism)",
        pass,
        &format!(
            "bias-score tables {} bytes, reports {} bytes, forests {} bytes identical across runs and thread counts 1 vs 4",
            scores_1.len(),
            report_1.len(),
            f1.len()
        ),
    );
}

// --- Criterion 7: numeric scoring ------------------------------------------

#[test]
fn criterion_7_numeric_scoring() {
    let thresholds: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
    let exact = mean_relative_accuracy(120.0, 100.0, &thresholds);

    // Monotone in |error| over 1000 random pairs.
    let mut rng = Stream::new(0xACC7);
    let mut monotone = true;
    for _ in 0..1000 {
        let truth = 0.5 + rng.next_f64() * 1000.0;
        let e1 = rng.next_f64() * 1.5;
        let e2 = rng.next_f64() * 1.5;
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let near = mean_relative_accuracy(truth + small * truth, truth, &thresholds);
        let far = mean_relative_accuracy(truth + large * truth, truth, &thresholds);
        if near < far {
            monotone = false;
            break;
        }
    }
    verdict(
        "criterion 7 (numeric scoring)",
        exact == 0.6 && monotone,
        &format!("score(120, 100) = {exact} (need 0.6); monotone over 1000 pairs: {monotone}"),
    );
}

// --- Criterion 8: gap arithmetic -------------------------------------------

fn scripted_predictions(bench: &Benchmark, correct: usize, condition: Condition) -> PredictionSet {
    let entries: BTreeMap<String, Answer> = bench
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let truth = match &s.answer {
                Answer::MultipleChoice { mc_index } => *mc_index,
                _ => unreachable!(),
            };
            let predicted = if i < correct { truth } else { (truth + 1) % 4 };
            (s.id.clone(), Answer::MultipleChoice { mc_index: predicted })
        })
        .collect();
    PredictionSet {
        model_name: "transcribed".into(),
        condition,
        entries,
    }
}

#[test]
fn criterion_8_gap_arithmetic() {
    let samples: Vec<Sample> = (0..1000)
        .map(|i| Sample {
            id: format!("g{i:04}"),
            task_type: "object_rel_distance".into(),
            question:
                "Measuring from the closest point of each object, which of these objects is the closest to the desk?"
                    .into(),
            answer: Answer::MultipleChoice { mc_index: i % 4 },
            options: Some(vec!["chair".into(), "lamp".into(), "sofa".into(), "table".into()]),
            metadata: None,
            planted: None,
        })
        .collect();
    let bench = Benchmark::new("transcribed", samples, Registry::builtin()).unwrap();

    // Transcribed accuracy pairs (percent) and the published gaps. The gap
    // table carries one-decimal rounding from higher-precision sources, so
    // agreement is required at one-decimal resolution (+-0.1).
    let rows = [(367usize, 259usize, 10.8f64), (487, 320, 16.6), (571, 447, 12.4)];
    let mut detail = String::new();
    let mut pass = true;
    for (vis, blind, expected) in rows {
        let vision = scripted_predictions(&bench, vis, Condition::Vision);
        let blind_set = scripted_predictions(&bench, blind, Condition::Blind);
        let report = vision_blind_gap(&vision, &blind_set, &bench).unwrap();
        let got = (report.aggregate.delta * 1000.0).round() / 10.0;
        if (got - expected).abs() > 0.1 + 1e-9 {
            pass = false;
        }
        detail.push_str(&format!(
            "({}, {}) -> {got:.1} (expect {expected}); ",
            vis as f64 / 10.0,
            blind as f64 / 10.0
        ));
    }
    verdict("criterion 8 (gap arithmetic)", pass, detail.trim_end());
}

// --- Criterion 9: real-benchmark reproduction (dataset-dependent) ----------

fn audit_export(path: &str) -> (Benchmark, TstResult) {
    let registry = Registry::builtin();
    let bench = blindspot_core::io::load_benchmark(std::path::Path::new(path), &registry)
        .expect("export loads");
    let folds = assign_folds(&bench, 5, 1, &[StratifyKey::TaskType]).unwrap();
    let params = ForestParams::default().with_seed(1);
    let result = run_tst(&bench, &params, &folds).unwrap();
    (bench, result)
}

#[test]
fn criterion_9_real_benchmark_reproduction() {
    let vsi = std::env::var("VSI_BENCH_JSONL").ok();
    let cvb = std::env::var("CV_BENCH_JSONL").ok();
    if vsi.is_none() && cvb.is_none() {
        println!(
            "[acceptance] criterion 9 (real-benchmark reproduction): SKIP — set VSI_BENCH_JSONL and/or CV_BENCH_JSONL to run against real exports"
        );
        return;
    }

    if let Some(path) = vsi {
        let (bench, result) = audit_export(&path);
        let acc = result.aggregate_accuracy * 100.0;
        let majority = result.baselines.majority * 100.0;
        let mut pass = (acc - 43.5).abs() <= 3.0 && (majority - 34.0).abs() <= 0.5;
        let mut detail = format!("VSI export: cv-acc {acc:.1} (43.5 +- 3.0), majority {majority:.1} (34.0 +- 0.5)");

        // Size-task interpretability: dominant log-mean importance and the
        // per-fold accuracy band.
        let report = importance_and_exemplar_report(&result, &bench, 5);
        if let Some(task) = report.per_task.get("object_size_estimation") {
            if let Some((name, weight)) = task.features.first() {
                pass = pass && name == "obj_val_log_mean" && *weight >= 0.90;
                detail.push_str(&format!("; size-task top feature {name} at {weight:.3} (need obj_val_log_mean >= 0.90)"));
            }
        }
        let size_scores: Vec<f64> = bench
            .samples
            .iter()
            .filter(|s| s.task_type == "object_size_estimation")
            .map(|s| result.per_sample[&s.id].accuracy_score)
            .collect();
        if !size_scores.is_empty() {
            let size_acc =
                size_scores.iter().sum::<f64>() / size_scores.len() as f64 * 100.0;
            pass = pass && (size_acc - 61.4).abs() <= 4.0;
            detail.push_str(&format!("; size-task accuracy {size_acc:.1} (61.4 +- 4.0)"));
        }
        verdict("criterion 9 (VSI export)", pass, &detail);
    }

    if let Some(path) = cvb {
        let (_, result) = audit_export(&path);
        let acc = result.aggregate_accuracy * 100.0;
        let chance = result.baselines.chance.unwrap_or(0.0) * 100.0;
        let majority = result.baselines.majority * 100.0;
        let pass = (acc - 75.5).abs() <= 3.0
            && (chance - 33.3).abs() <= 0.1
            && (majority - 43.1).abs() <= 0.5;
        verdict(
            "criterion 9 (CV export)",
            pass,
            &format!(
                "cv-acc {acc:.1} (75.5 +- 3.0), chance {chance:.1} (33.3 +- 0.1), majority {majority:.1} (43.1 +- 0.5)"
            ),
        );
    }
}

// --- Criterion 10: pruning-report fidelity ----------------------------------

#[test]
fn criterion_10_pruning_report_fidelity() {
    // A benchmark shaped like the published pruning table: four categories
    // of 764 questions; remove 281/243/213/200 respectively.
    let categories = [
        ("object_counting", 281usize),
        ("object_size_estimation", 243),
        ("spatial_relation", 213),
        ("appearance_order", 200),
    ];
    let mut samples = Vec::new();
    for (task, _) in &categories {
        for i in 0..764usize {
            samples.push(Sample {
                id: format!("{task}-{i:04}"),
                task_type: task.to_string(),
                question: "How many chair(s) are in this room?".into(),
                answer: Answer::Numeric { value: 2.0, unit: None },
                options: None,
                metadata: None,
                planted: None,
            });
        }
    }
    // One permissive numeric spec per category keeps the table construction
    // independent of template details.
    let specs: Vec<blindspot_core::TaskSpec> = categories
        .iter()
        .map(|(task, _)| {
            let mut spec = Registry::builtin().get("object_counting").unwrap().clone();
            spec.task_type = task.to_string();
            spec
        })
        .collect();
    let registry = Registry::new(specs).unwrap();
    let bench = Benchmark::new("transcribed", samples, registry).unwrap();

    let selected: Vec<String> = categories
        .iter()
        .flat_map(|(task, removed)| (0..*removed).map(move |i| format!("{task}-{i:04}")))
        .collect();
    let trace = transcribed_trace(&bench, selected);
    let report = pruning_report(&trace, &bench);

    let mut pass = report.totals.original == 3056
        && report.totals.removed == 937
        && report.totals.percent_removed == 30.7
        && report.totals.final_count == 2119;
    let expected_rows = [
        ("appearance_order", 764, 200, 26.2, 564),
        ("object_counting", 764, 281, 36.8, 483),
        ("object_size_estimation", 764, 243, 31.8, 521),
        ("spatial_relation", 764, 213, 27.9, 551),
    ];
    for (task, original, removed, pct, final_count) in expected_rows {
        let row = report.rows.iter().find(|r| r.task_type == task).unwrap();
        pass = pass
            && row.original == original
            && row.removed == removed
            && row.percent_removed == pct
            && row.final_count == final_count;
    }
    let text = report.to_text();
    for needle in ["3,056", "937", "30.7%", "2,119", "36.8%", "26.2%"] {
        pass = pass && text.contains(needle);
    }
    verdict(
        "criterion 10 (pruning-report fidelity)",
        pass,
        &format!(
            "totals {} / {} / {}% / {}",
            blindspot_core::ibp::group_thousands(report.totals.original),
            report.totals.removed,
            report.totals.percent_removed,
            blindspot_core::ibp::group_thousands(report.totals.final_count)
        ),
    );
}

/// A trace carrying only what the pruning report consumes.
fn transcribed_trace(bench: &Benchmark, selected: Vec<String>) -> IbpTrace {
    let folds = assign_folds(bench, 2, 0, &[StratifyKey::TaskType]).unwrap();
    let params = ForestParams {
        n_trees: 1,
        max_depth: 2,
        seed: 0,
        ..ForestParams::default()
    };
    let final_result = run_tst(bench, &params, &folds).unwrap();
    let removed_total = selected.len();
    let surviving: Vec<String> = bench
        .samples
        .iter()
        .map(|s| s.id.clone())
        .filter(|id| !selected.contains(id))
        .collect();
    IbpTrace {
        version: 1,
        benchmark_name: bench.name.clone(),
        original_n: bench.len(),
        config: IbpConfig::default(),
        rounds: vec![IbpRound {
            round: 0,
            n_before: bench.len(),
            scores: ScoreSummary {
                count: bench.len(),
                min: 0.0,
                max: 1.0,
                mean: 0.5,
            },
            tst_accuracy: 0.5,
            selected,
            removed_so_far: removed_total,
            per_task_removed: BTreeMap::new(),
        }],
        removed_total,
        stop_reason: StopReason::BudgetExhausted,
        surviving_ids: surviving,
        final_result,
    }
}
