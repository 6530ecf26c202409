//! Video reconstruction from under-sampled linear measurements using a
//! deconvolutional generator as the signal prior.
//!
//! The library recovers a frame sequence from compressive measurements by
//! descending on the measurement residual over per-frame latent codes,
//! optionally jointly over the generator weights, with temporal-similarity
//! penalties and low-rank / line / plane constraints on the latent-code
//! matrix. Every numeric path is deterministic given a seed: the PRNG is
//! xoshiro256** seeded via splitmix64 with Box-Muller normals, and parallel
//! per-frame evaluation reduces in fixed frame order.
//!
//! Start with the runnable examples (`cargo run --example ...`) or the
//! `genrec` binary (`synth`, `recover`, `interpolate`, `gradcheck`,
//! `metrics`).

pub mod config;
pub mod error;
pub mod generator;
pub mod gradcheck;
pub mod io;
pub mod latent;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod recovery;
pub mod rng;
pub mod runner;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use generator::{
    backward, deconv2d_forward, forward, param_count, Architecture, ForwardTape, Gradients,
    Weights,
};
pub use latent::{
    interpolate, max_distance_to_line, project_affine, project_affine_grouped, project_rank,
    LatentBasis, LatentMatrix,
};
pub use linalg::{svd_thin, SvdResult};
pub use measurement::{
    make_mask, measure_sequence, MeasurementOperator, MeasurementSet, OperatorKind,
};
pub use metrics::{mse, psnr, MetricsReport};
pub use recovery::{
    data_loss, data_loss_and_grads, interpolate_holdout, prefit_generator, run, run_observed,
    similarity_grad, Constraint, Mode, RecoveryResult, SolverConfig,
};
pub use rng::{gaussian, SeededRng};
pub use synth::{
    color_wheel_sequence, generate, rotate_frame, rotating_sprite_sequence,
    translating_sprites_sequence, SequenceKind, SequenceSpec, VideoSequence,
};
pub use tensor::{matmul, Tensor};
