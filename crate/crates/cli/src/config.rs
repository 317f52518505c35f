//! Run configuration: flags merged over an optional config file, and the
//! fan-out from one global seed to per-subsystem seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use blindspot_core::ibp::{Amount, StrategyChoice};
use blindspot_core::rng::mix;

use crate::CliError;

/// Subsystem seed derivation tags. One global seed fans out through
/// `mix(seed, TAG)`; per-subsystem overrides are the tagged values
/// themselves.
pub mod seed_tags {
    pub const FOLDS: u64 = 0x01;
    pub const FOREST: u64 = 0x02;
    pub const IBP: u64 = 0x03;
    pub const SYNTH: u64 = 0x04;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Text,
    Csv,
}

/// Optional file-supplied values for any flag; flags override these.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub benchmark: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub budget: Option<String>,
    pub batch_size: Option<String>,
    pub tau: Option<f64>,
    pub strategy: Option<String>,
    pub format: Option<OutputFormat>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// The resolved, fully-defaulted run configuration; what the manifest records.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub benchmark: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub out: PathBuf,
    pub k: usize,
    pub seed: u64,
    pub trees: usize,
    pub max_depth: usize,
    pub budget: Amount,
    pub batch_size: Amount,
    pub tau: f64,
    pub strategy: StrategyChoice,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl Resolved {
    pub fn folds_seed(&self) -> u64 {
        mix(self.seed, seed_tags::FOLDS)
    }

    pub fn forest_seed(&self) -> u64 {
        mix(self.seed, seed_tags::FOREST)
    }

    pub fn ibp_seed(&self) -> u64 {
        mix(self.seed, seed_tags::IBP)
    }

    pub fn synth_seed(&self) -> u64 {
        mix(self.seed, seed_tags::SYNTH)
    }
}

/// "0.3", "30%", or "937" -> fraction or absolute count.
pub fn parse_amount(raw: &str) -> Result<Amount, CliError> {
    let raw = raw.trim();
    if let Some(stripped) = raw.strip_suffix('%') {
        let pct: f64 = stripped
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad percentage '{raw}'")))?;
        return Ok(Amount::Fraction(pct / 100.0));
    }
    if raw.contains('.') {
        let f: f64 = raw
            .parse()
            .map_err(|_| CliError::config(format!("bad fraction '{raw}'")))?;
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::config(format!(
                "fraction '{raw}' must lie in [0, 1]"
            )));
        }
        return Ok(Amount::Fraction(f));
    }
    let count: usize = raw
        .parse()
        .map_err(|_| CliError::config(format!("bad count '{raw}'")))?;
    Ok(Amount::Count(count))
}

pub fn parse_strategy(raw: &str) -> Result<StrategyChoice, CliError> {
    match raw {
        "auto" => Ok(StrategyChoice::Auto),
        "top-k" => Ok(StrategyChoice::TopK),
        "weighted-sampling" => Ok(StrategyChoice::WeightedSampling),
        "group-balanced" => Ok(StrategyChoice::GroupBalanced),
        other => Err(CliError::config(format!(
            "unknown strategy '{other}' (expected auto | top-k | weighted-sampling | group-balanced)"
        ))),
    }
}
