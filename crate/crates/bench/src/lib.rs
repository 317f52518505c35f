//! Shared fixtures for the criterion benches.

use blindspot_core::synth::{generate, Archetype, SynthSpec};
use blindspot_core::Benchmark;

/// A planted multiple-choice benchmark at the standard bench scale.
pub fn mc_benchmark(n: usize, seed: u64) -> Benchmark {
    let spec = SynthSpec {
        vocabulary_size: 20,
        ..SynthSpec::single(Archetype::CategoryAnswerCorrelation, n, 1.0, seed)
    };
    generate(&spec).expect("valid spec")
}

/// A numeric benchmark for the regression path.
pub fn numeric_benchmark(n: usize, seed: u64) -> Benchmark {
    generate(&SynthSpec::single(Archetype::LowVarianceNumeric, n, 1.0, seed))
        .expect("valid spec")
}
