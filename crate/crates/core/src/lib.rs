//! Audit toolkit for question-answering test sets.
//!
//! A benchmark that can be answered without its visual payload is measuring
//! the wrong thing. This crate quantifies that failure mode: it cross-validates
//! a diagnostic model on the non-visual record of a test set (question text,
//! option structure, answer statistics), reports how much of the set the
//! diagnostic can solve, scores every sample with a held-out bias score, and
//! iteratively prunes the most exploitable samples to produce a debiased set.
//!
//! The pieces, bottom up:
//!
//! * [`model`] — benchmark records, answers, predictions, scoring, JSONL I/O.
//! * [`registry`] — declarative task specs: template patterns, feature plans.
//! * [`features`] — template parsing and train-fold-only feature extraction.
//! * [`forest`] — a self-contained CART random forest (the diagnostic model).
//! * [`tst`] — the k-fold stress-test protocol producing bias scores.
//! * [`ibp`] — iterative bias pruning under a removal budget.
//! * [`synth`] — synthetic benchmarks with planted biases of known strength.
//! * [`report`] — distribution, gap, and importance/exemplar reports.

pub mod features;
pub mod forest;
pub mod ibp;
pub mod io;
pub mod model;
pub mod registry;
pub mod report;
pub mod rng;
pub mod synth;
pub mod tst;

pub use forest::{Forest, ForestParams};
pub use ibp::{IbpConfig, IbpTrace};
pub use model::{Answer, AnswerKind, Benchmark, Condition, PredictionSet, Sample};
pub use registry::{Registry, TaskSpec};
pub use tst::{FoldAssignment, TstResult};
