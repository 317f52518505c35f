//! Run manifests: enough to reproduce any run from its inputs.
//!
//! Contains the resolved configuration and its hash, the seed fan-out, and
//! content hashes of every input file. Deliberately carries no timestamps,
//! so identical invocations write byte-identical manifests.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Resolved;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config: Resolved,
    pub config_hash: String,
    pub seeds: SeedTable,
    pub inputs: Vec<InputHash>,
}

#[derive(Debug, Serialize)]
pub struct SeedTable {
    pub global: u64,
    pub folds: u64,
    pub forest: u64,
    pub ibp: u64,
    pub synth: u64,
}

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn hash_file(path: &Path) -> Result<InputHash, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(InputHash {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn write_manifest(
    command: &str,
    config: &Resolved,
    inputs: Vec<InputHash>,
) -> Result<(), CliError> {
    let config_json = serde_json::to_string(config)
        .map_err(|e| CliError::internal(e.to_string()))?;
    let manifest = Manifest {
        version: 1,
        tool: "blindspot",
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: config.clone(),
        config_hash: sha256_hex(config_json.as_bytes()),
        seeds: SeedTable {
            global: config.seed,
            folds: config.folds_seed(),
            forest: config.forest_seed(),
            ibp: config.ibp_seed(),
            synth: config.synth_seed(),
        },
        inputs,
    };
    let path = config.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(&path, json)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
