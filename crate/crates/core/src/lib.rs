//! Discrete hidden Markov models trained by Baum-Welch reestimation, with
//! optional classic or Nesterov momentum, additive smoothing, and momentum
//! scheduling, plus the experiment machinery for paired with/without-momentum
//! convergence comparisons and one-vs-rest classification evaluation.
//!
//! Modules:
//! - [`model`]: the `(A, B, pi)` triple and observation sets.
//! - [`forward_backward`]: scaled forward/backward passes, posteriors,
//!   scoring, and posterior decoding.
//! - [`mod@train`]: reestimation with smoothing, initialization schemes,
//!   stopping rules, and restart sweeps.
//! - [`momentum`]: classic and Nesterov update policies, clamping and
//!   renormalization, and zero-interval schedules.
//! - [`data`]: text and opcode encoding, train/test splits, synthetic
//!   sequence generation.
//! - [`eval`]: paired comparison curves, score matrices, ROC/AUC.
//!
//! Everything is deterministic given explicit seeds: restart `k` of a sweep
//! draws from an RNG stream derived from `(seed, k)`, so parallel and serial
//! execution produce identical results.

// Index-based loops are the clearest way to write the forward/backward and
// reestimation kernels, which mix row access across several matrices.
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod eval;
pub mod forward_backward;
pub mod model;
pub mod momentum;
pub mod train;

pub use error::{Error, Result};
pub use eval::{paired_experiment, score_matrix, LabeledSample, PairedCurves, RocResult, ScoreMatrix};
pub use forward_backward::{total_score, ForwardBackwardPass};
pub use model::{Matrix, Model, ObservationSet};
pub use momentum::{MomentumPolicy, MomentumSchedule, MomentumState, Variant};
pub use train::{
    init_model, reestimate, restart_rng, train, train_from, train_restarts, InitScheme,
    TrainConfig, TrainRecord, TrainSweep,
};
