//! Benchmark audit CLI.
//!
//! Subcommands: `audit` (cross-validated diagnostic + reports), `prune`
//! (iterative bias pruning), `synth` (planted benchmark generation),
//! `baselines`, `report gap|distribution`, and the external-diagnostic
//! protocol `export-folds` / `import-folds`. Every run writes its artifacts
//! plus a manifest into `--out`; identical invocations produce byte-identical
//! outputs.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::OutputFormat;

/// Machine-parseable error classes; each maps to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Data,
    Leakage,
    Internal,
}

impl ErrorClass {
    fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Io => 3,
            ErrorClass::Data => 4,
            ErrorClass::Leakage => 5,
            ErrorClass::Internal => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Io => "io",
            ErrorClass::Data => "data",
            ErrorClass::Leakage => "leakage",
            ErrorClass::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    class: ErrorClass,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Config, message: message.into() }
    }
    pub fn io(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Io, message: message.into() }
    }
    pub fn data(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Data, message: message.into() }
    }
    pub fn leakage(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Leakage, message: message.into() }
    }
    pub fn internal(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Internal, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.class.name(), self.message)
    }
}

impl From<blindspot_core::tst::TstError> for CliError {
    fn from(e: blindspot_core::tst::TstError) -> Self {
        use blindspot_core::tst::TstError;
        match &e {
            TstError::Leakage { .. } => CliError::leakage(e.to_string()),
            TstError::Io(_) | TstError::MissingFold(_) => CliError::io(e.to_string()),
            TstError::BadFoldCount(_) | TstError::EmptyBenchmark => {
                CliError::config(e.to_string())
            }
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<blindspot_core::io::IoError> for CliError {
    fn from(e: blindspot_core::io::IoError) -> Self {
        use blindspot_core::io::IoError;
        match &e {
            IoError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<blindspot_core::ibp::IbpError> for CliError {
    fn from(e: blindspot_core::ibp::IbpError) -> Self {
        use blindspot_core::ibp::IbpError;
        match &e {
            IbpError::Tst(blindspot_core::tst::TstError::Leakage { .. }) => {
                CliError::leakage(e.to_string())
            }
            IbpError::ConfigMismatch | IbpError::BadBudget { .. } | IbpError::BadThreshold(_) => {
                CliError::config(e.to_string())
            }
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<blindspot_core::synth::SynthError> for CliError {
    fn from(e: blindspot_core::synth::SynthError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<blindspot_core::report::ReportError> for CliError {
    fn from(e: blindspot_core::report::ReportError) -> Self {
        CliError::data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "blindspot",
    version,
    about = "Audit QA benchmarks for non-visual shortcuts and prune the exploitable samples"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; subsystem seeds derive from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Thread-pool size (results are independent of it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra export format alongside canonical JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Benchmark record file (line-delimited JSON).
    #[arg(long)]
    benchmark: Option<PathBuf>,
    /// Task registry config; defaults to the built-in twelve-task registry.
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DiagnosticArgs {
    /// Fold count.
    #[arg(long)]
    k: Option<usize>,
    /// Trees per diagnostic forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth.
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stress test and write the bias-score and importance reports.
    Audit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        diag: DiagnosticArgs,
    },
    /// Iteratively prune the most exploitable samples under a budget.
    Prune {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        diag: DiagnosticArgs,
        /// Removal budget: fraction ("0.3", "30%") or count ("937").
        #[arg(long)]
        budget: Option<String>,
        /// Per-round batch size: fraction or count.
        #[arg(long)]
        batch_size: Option<String>,
        /// Early-stop threshold on the max bias score.
        #[arg(long)]
        tau: Option<f64>,
        /// auto | top-k | weighted-sampling | group-balanced.
        #[arg(long)]
        strategy: Option<String>,
        /// Resume from a persisted trace file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Generate a synthetic benchmark with planted biases.
    Synth {
        /// Generation spec (JSON). Defaults to the built-in mixed spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Sample count override.
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Report chance and majority baselines.
    Baselines {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Distribution and gap reports from files.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
    /// Write per-fold train/val record files for an external diagnostic.
    ExportFolds {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Import per-fold predictions from an external diagnostic.
    ImportFolds {
        #[command(flatten)]
        data: DataArgs,
        /// Directory written by export-folds, plus predictions.
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReportKind {
    /// Accuracy gap between two prediction conditions.
    Gap {
        #[command(flatten)]
        data: DataArgs,
        /// Vision-condition prediction file.
        #[arg(long)]
        vision: PathBuf,
        /// Blind-condition prediction file.
        #[arg(long)]
        blind: PathBuf,
        /// Model name for the vision set.
        #[arg(long, default_value = "model")]
        vision_model: String,
        /// Model name for the blind set.
        #[arg(long, default_value = "model")]
        blind_model: String,
    },
    /// Answer-distribution statistics per task type.
    Distribution {
        #[command(flatten)]
        data: DataArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.class.exit_code());
        }
    }
}
