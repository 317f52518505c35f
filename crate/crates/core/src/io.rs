//! Line-delimited benchmark and prediction files.
//!
//! One JSON object per line. Loading is fail-fast: any malformed record
//! rejects the whole file with its line number, since silently dropped
//! records would bias every train-fold statistic downstream. Writing is
//! byte-stable (fixed field order, sorted maps), so write-then-load is the
//! identity and identical inputs produce identical files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::model::{Answer, Benchmark, Condition, ModelError, PredictionSet, Sample};
use crate::registry::Registry;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    BadRecord {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: ModelError,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a benchmark from a line-delimited record file, validating every
/// sample against `specs`. The benchmark is named after the file stem.
pub fn load_benchmark(path: &Path, specs: &Registry) -> Result<Benchmark, IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|e| IoError::BadRecord {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        // Validate in file order so errors carry the offending line.
        let spec = specs
            .get(&sample.task_type)
            .ok_or_else(|| IoError::BadRecord {
                path: path.display().to_string(),
                line: lineno,
                message: format!("unknown task_type '{}'", sample.task_type),
            })?;
        sample.validate(spec).map_err(|e| IoError::BadRecord {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        samples.push(sample);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "benchmark".to_string());
    Benchmark::new(&name, samples, specs.clone()).map_err(|e| IoError::Invalid {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write a benchmark as a line-delimited record file.
pub fn write_benchmark(benchmark: &Benchmark, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for sample in &benchmark.samples {
        let line = serde_json::to_string(sample).expect("samples serialize");
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PredictionRecord {
    id: String,
    prediction: Answer,
}

/// Load a prediction file against a benchmark. Every id must exist in the
/// benchmark, appear at most once, and carry the answer kind of its task.
pub fn load_predictions(
    path: &Path,
    benchmark: &Benchmark,
    model_name: &str,
    condition: Condition,
) -> Result<PredictionSet, IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut entries: BTreeMap<String, Answer> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| IoError::BadRecord {
                path: path.display().to_string(),
                line: lineno,
                message: e.to_string(),
            })?;
        let bad = |message: String| IoError::BadRecord {
            path: path.display().to_string(),
            line: lineno,
            message,
        };
        let sample = benchmark
            .sample(&record.id)
            .ok_or_else(|| bad(format!("prediction for unknown sample id '{}'", record.id)))?;
        if record.prediction.kind() != sample.answer.kind() {
            return Err(bad(format!(
                "prediction kind {} does not match sample '{}' ({})",
                record.prediction.kind(),
                record.id,
                sample.answer.kind()
            )));
        }
        if entries.insert(record.id.clone(), record.prediction).is_some() {
            return Err(bad(format!("duplicate prediction for sample id '{}'", record.id)));
        }
    }
    Ok(PredictionSet {
        model_name: model_name.to_string(),
        condition,
        entries,
    })
}

/// Write a prediction set in the line-delimited prediction format.
pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for (id, prediction) in &set.entries {
        let record = PredictionRecord {
            id: id.clone(),
            prediction: prediction.clone(),
        };
        let line = serde_json::to_string(&record).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
