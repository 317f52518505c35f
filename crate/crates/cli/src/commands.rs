//! Command dispatch: resolve configuration, run, write artifacts + manifest.

use std::path::{Path, PathBuf};

use blindspot_core::forest::ForestParams;
use blindspot_core::ibp::{pruning_report, run_ibp_resumable, IbpConfig, IbpTrace};
use blindspot_core::model::Condition;
use blindspot_core::report::{
    answer_distribution_report, importance_and_exemplar_report, vision_blind_gap,
};
use blindspot_core::synth::{generate, SynthSpec};
use blindspot_core::tst::{
    assign_folds, baselines, export_folds, import_fold_predictions, run_tst, StratifyKey,
};
use blindspot_core::{Benchmark, Registry};

use crate::config::{parse_amount, parse_strategy, FileConfig, OutputFormat, Resolved};
use crate::manifest::{hash_file, write_manifest, InputHash};
use crate::{Cli, CliError, Command, DataArgs, DiagnosticArgs, ReportKind};

const EXEMPLARS_PER_TASK: usize = 10;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let threads = cli.threads.or(file.threads);
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(e.to_string()))?;
            pool.install(|| dispatch(cli, file))
        }
        _ => dispatch(cli, file),
    }
}

fn resolve(cli: &Cli, file: &FileConfig, data: Option<&DataArgs>, diag: Option<&DiagnosticArgs>) -> Result<Resolved, CliError> {
    let out = cli
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::config("--out is required"))?;
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;

    let budget = match file.budget.as_deref() {
        Some(raw) => parse_amount(raw)?,
        None => blindspot_core::ibp::Amount::Fraction(0.30),
    };
    let batch_size = match file.batch_size.as_deref() {
        Some(raw) => parse_amount(raw)?,
        None => blindspot_core::ibp::Amount::Fraction(0.05),
    };
    let strategy = match file.strategy.as_deref() {
        Some(raw) => parse_strategy(raw)?,
        None => blindspot_core::ibp::StrategyChoice::Auto,
    };

    Ok(Resolved {
        benchmark: data.and_then(|d| d.benchmark.clone()).or_else(|| file.benchmark.clone()),
        registry: data.and_then(|d| d.registry.clone()).or_else(|| file.registry.clone()),
        out,
        k: diag.and_then(|d| d.k).or(file.k).unwrap_or(5),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        trees: diag.and_then(|d| d.trees).or(file.trees).unwrap_or(1000),
        max_depth: diag.and_then(|d| d.max_depth).or(file.max_depth).unwrap_or(20),
        budget,
        batch_size,
        tau: file.tau.unwrap_or(0.9),
        strategy,
        format: cli.format.or(file.format).unwrap_or(OutputFormat::Json),
        threads: cli.threads.or(file.threads),
    })
}

fn load_registry(resolved: &Resolved) -> Result<Registry, CliError> {
    let mut registry = Registry::builtin();
    if let Some(path) = &resolved.registry {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let user: Registry = serde_json::from_str(&raw)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        user.validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        registry.extend_with(user);
    }
    Ok(registry)
}

fn load_bench(resolved: &Resolved, registry: &Registry) -> Result<Benchmark, CliError> {
    let path = resolved
        .benchmark
        .as_ref()
        .ok_or_else(|| CliError::config("--benchmark is required"))?;
    Ok(blindspot_core::io::load_benchmark(path, registry)?)
}

fn input_hashes(resolved: &Resolved) -> Result<Vec<InputHash>, CliError> {
    let mut inputs = Vec::new();
    if let Some(p) = &resolved.benchmark {
        inputs.push(hash_file(p)?);
    }
    if let Some(p) = &resolved.registry {
        inputs.push(hash_file(p)?);
    }
    Ok(inputs)
}

fn write_json<T: serde::Serialize>(out: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = out.join(name);
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(&path, json)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_rendered(
    out: &Path,
    stem: &str,
    format: OutputFormat,
    text: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> Result<(), CliError> {
    match format {
        OutputFormat::Json => Ok(()),
        OutputFormat::Text => {
            let path = out.join(format!("{stem}.txt"));
            std::fs::write(&path, text())
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
        }
        OutputFormat::Csv => {
            let path = out.join(format!("{stem}.csv"));
            std::fs::write(&path, csv())
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
        }
    }
}

fn forest_params(resolved: &Resolved) -> ForestParams {
    ForestParams {
        n_trees: resolved.trees,
        max_depth: resolved.max_depth,
        seed: resolved.forest_seed(),
        ..ForestParams::default()
    }
}

pub fn dispatch(cli: Cli, file: FileConfig) -> Result<(), CliError> {
    match &cli.command {
        Command::Audit { data, diag } => {
            let resolved = resolve(&cli, &file, Some(data), Some(diag))?;
            let registry = load_registry(&resolved)?;
            let bench = load_bench(&resolved, &registry)?;
            let folds = assign_folds(
                &bench,
                resolved.k,
                resolved.folds_seed(),
                &[StratifyKey::TaskType],
            )?;
            let result = run_tst(&bench, &forest_params(&resolved), &folds)?;
            write_json(&resolved.out, "tst_result.json", &result)?;

            let importance = importance_and_exemplar_report(&result, &bench, EXEMPLARS_PER_TASK);
            write_json(&resolved.out, "importance_report.json", &importance)?;
            write_rendered(
                &resolved.out,
                "importance_report",
                resolved.format,
                || importance.to_text(),
                || importance.to_csv(),
            )?;

            let distribution = answer_distribution_report(&bench);
            write_json(&resolved.out, "distribution_report.json", &distribution)?;
            write_rendered(
                &resolved.out,
                "distribution_report",
                resolved.format,
                || distribution.to_text(),
                || distribution.to_csv(),
            )?;

            write_manifest("audit", &resolved, input_hashes(&resolved)?)?;
            println!(
                "audit: n={} accuracy={:.4} majority={:.4} chance={} max_bias={:.4}",
                result.n_samples,
                result.aggregate_accuracy,
                result.baselines.majority,
                result
                    .baselines
                    .chance
                    .map(|c| format!("{c:.4}"))
                    .unwrap_or_else(|| "n/a".into()),
                result.max_bias_score(),
            );
            Ok(())
        }
        Command::Prune {
            data,
            diag,
            budget,
            batch_size,
            tau,
            strategy,
            resume,
        } => {
            let mut resolved = resolve(&cli, &file, Some(data), Some(diag))?;
            if let Some(raw) = budget {
                resolved.budget = parse_amount(raw)?;
            }
            if let Some(raw) = batch_size {
                resolved.batch_size = parse_amount(raw)?;
            }
            if let Some(t) = tau {
                resolved.tau = *t;
            }
            if let Some(raw) = strategy {
                resolved.strategy = parse_strategy(raw)?;
            }
            let registry = load_registry(&resolved)?;
            let bench = load_bench(&resolved, &registry)?;

            let cfg = IbpConfig {
                budget: resolved.budget,
                batch: resolved.batch_size,
                tau: resolved.tau,
                strategy: resolved.strategy,
                seed: resolved.ibp_seed(),
                k: resolved.k,
                forest: ForestParams {
                    n_trees: resolved.trees,
                    max_depth: resolved.max_depth,
                    ..ForestParams::default()
                },
                ..IbpConfig::default()
            };

            let prior = match resume {
                Some(path) => {
                    let raw = std::fs::read_to_string(path)
                        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                    let trace: IbpTrace = serde_json::from_str(&raw)
                        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                    Some(trace)
                }
                None => None,
            };

            let (debiased, trace) = run_ibp_resumable(&bench, &cfg, prior.as_ref())?;
            blindspot_core::io::write_benchmark(&debiased, &resolved.out.join("debiased.jsonl"))?;
            write_json(&resolved.out, "trace.json", &trace)?;
            let report = pruning_report(&trace, &bench);
            write_json(&resolved.out, "pruning_report.json", &report)?;
            write_rendered(
                &resolved.out,
                "pruning_report",
                resolved.format,
                || report.to_text(),
                || report.to_csv(),
            )?;
            write_manifest("prune", &resolved, input_hashes(&resolved)?)?;
            println!(
                "prune: removed {} of {} ({:?}), final accuracy {:.4}",
                trace.removed_total,
                trace.original_n,
                trace.stop_reason,
                trace.final_result.aggregate_accuracy,
            );
            Ok(())
        }
        Command::Synth { spec, n_samples } => {
            let resolved = resolve(&cli, &file, None, None)?;
            let mut synth_spec = match spec {
                Some(path) => {
                    let raw = std::fs::read_to_string(path)
                        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                    serde_json::from_str::<SynthSpec>(&raw)
                        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
                }
                None => SynthSpec::default(),
            };
            if let Some(n) = n_samples {
                synth_spec.n_samples = *n;
            }
            // The config seed wins over the spec file unless left at default.
            if cli.seed.is_some() || file.seed.is_some() {
                synth_spec.seed = resolved.synth_seed();
            }
            let bench = generate(&synth_spec)?;
            let path = resolved.out.join("benchmark.jsonl");
            blindspot_core::io::write_benchmark(&bench, &path)?;
            let mut inputs = Vec::new();
            if let Some(p) = spec {
                inputs.push(hash_file(p)?);
            }
            write_manifest("synth", &resolved, inputs)?;
            println!("synth: wrote {} samples to {}", bench.len(), path.display());
            Ok(())
        }
        Command::Baselines { data, k } => {
            let resolved = resolve(
                &cli,
                &file,
                Some(data),
                Some(&DiagnosticArgs { k: *k, trees: None, max_depth: None }),
            )?;
            let registry = load_registry(&resolved)?;
            let bench = load_bench(&resolved, &registry)?;
            let folds = assign_folds(
                &bench,
                resolved.k,
                resolved.folds_seed(),
                &[StratifyKey::TaskType],
            )?;
            let base = baselines(&bench, &folds)?;
            write_json(&resolved.out, "baselines.json", &base)?;
            write_manifest("baselines", &resolved, input_hashes(&resolved)?)?;
            println!(
                "baselines: chance={} majority={:.4}",
                base.chance
                    .map(|c| format!("{c:.4}"))
                    .unwrap_or_else(|| "n/a".into()),
                base.majority,
            );
            Ok(())
        }
        Command::Report { kind } => match kind {
            ReportKind::Gap {
                data,
                vision,
                blind,
                vision_model,
                blind_model,
            } => {
                let resolved = resolve(&cli, &file, Some(data), None)?;
                let registry = load_registry(&resolved)?;
                let bench = load_bench(&resolved, &registry)?;
                let vision_set = blindspot_core::io::load_predictions(
                    vision,
                    &bench,
                    vision_model,
                    Condition::Vision,
                )?;
                let blind_set = blindspot_core::io::load_predictions(
                    blind,
                    &bench,
                    blind_model,
                    Condition::Blind,
                )?;
                let report = vision_blind_gap(&vision_set, &blind_set, &bench)?;
                write_json(&resolved.out, "gap_report.json", &report)?;
                write_rendered(
                    &resolved.out,
                    "gap_report",
                    resolved.format,
                    || report.to_text(),
                    || report.to_csv(),
                )?;
                let mut inputs = input_hashes(&resolved)?;
                inputs.push(hash_file(vision)?);
                inputs.push(hash_file(blind)?);
                write_manifest("report-gap", &resolved, inputs)?;
                println!(
                    "gap: {} {:.1}% vs {} {:.1}% -> delta {:.1}",
                    report.condition_a,
                    report.aggregate.accuracy_a * 100.0,
                    report.condition_b,
                    report.aggregate.accuracy_b * 100.0,
                    report.aggregate.delta * 100.0,
                );
                Ok(())
            }
            ReportKind::Distribution { data } => {
                let resolved = resolve(&cli, &file, Some(data), None)?;
                let registry = load_registry(&resolved)?;
                let bench = load_bench(&resolved, &registry)?;
                let report = answer_distribution_report(&bench);
                write_json(&resolved.out, "distribution_report.json", &report)?;
                write_rendered(
                    &resolved.out,
                    "distribution_report",
                    resolved.format,
                    || report.to_text(),
                    || report.to_csv(),
                )?;
                write_manifest("report-distribution", &resolved, input_hashes(&resolved)?)?;
                println!("distribution: {} task types", report.per_task.len());
                Ok(())
            }
        },
        Command::ExportFolds { data, k } => {
            let resolved = resolve(
                &cli,
                &file,
                Some(data),
                Some(&DiagnosticArgs { k: *k, trees: None, max_depth: None }),
            )?;
            let registry = load_registry(&resolved)?;
            let bench = load_bench(&resolved, &registry)?;
            let folds = assign_folds(
                &bench,
                resolved.k,
                resolved.folds_seed(),
                &[StratifyKey::TaskType],
            )?;
            export_folds(&bench, &folds, &resolved.out)?;
            write_manifest("export-folds", &resolved, input_hashes(&resolved)?)?;
            println!(
                "export-folds: wrote {} folds to {}",
                resolved.k,
                resolved.out.display()
            );
            Ok(())
        }
        Command::ImportFolds { data, dir } => {
            let resolved = resolve(&cli, &file, Some(data), None)?;
            let registry = load_registry(&resolved)?;
            let bench = load_bench(&resolved, &registry)?;
            let result = import_fold_predictions(dir, &bench)?;
            write_json(&resolved.out, "tst_result.json", &result)?;
            let importance = importance_and_exemplar_report(&result, &bench, EXEMPLARS_PER_TASK);
            write_json(&resolved.out, "importance_report.json", &importance)?;
            write_manifest("import-folds", &resolved, input_hashes(&resolved)?)?;
            println!(
                "import-folds: n={} accuracy={:.4}",
                result.n_samples, result.aggregate_accuracy
            );
            Ok(())
        }
    }
}
