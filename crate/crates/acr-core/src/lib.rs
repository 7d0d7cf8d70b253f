//! Adaptive Confidence Regularization (ACR) for multimodal failure detection.
//!
//! The crate implements the full training and evaluation stack at desk scale:
//!
//! - [`numerics`]: dense matrices, stable softmax / log-sum-exp, soft-label
//!   cross-entropy, Adam, and a counter-based splittable random stream.
//! - [`scores`]: confidence scorers (MSP, MaxLogit, Energy, Entropy, DOCTOR,
//!   GEN) and the accept/reject decision rule.
//! - [`metrics`]: risk-coverage curves, AURC, AUROC, FPR95, accuracy,
//!   confidence-degradation rates, and information-theoretic diagnostics on
//!   discrete joint distributions.
//! - [`mfs`]: multimodal feature swapping and the feature-space augmentation
//!   baselines (random noise, random drop, feature mixing).
//! - [`model`]: the per-modality encoder + fusion network, the adaptive
//!   confidence loss, hand-derived gradients, and the deterministic trainer.
//! - [`synth`]: a synthetic multimodal benchmark with controllable cross-modal
//!   conflict and uninformative-modality corruption.
//! - [`eval`]: the shared logits-to-metrics evaluation pipeline.
//!
//! All numeric kernels are generic over the scalar type via [`Real`]; `f64` is
//! the default used by the CLI and by every tolerance-sensitive test.

pub mod error;
pub mod eval;
pub mod metrics;
pub mod mfs;
pub mod model;
pub mod numerics;
pub mod scores;
pub mod synth;

pub use error::{AcrError, Result};

use std::fmt::{Debug, Display};

/// Scalar type for all numeric kernels: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::NumAssignOps
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy cast from `f64` into the kernel scalar type.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 converts into every Real scalar")
}

/// Double-precision matrix, the default for the CLI and the tests.
pub type Matrix64 = numerics::Matrix<f64>;
/// Single-precision matrix.
pub type Matrix32 = numerics::Matrix<f32>;
/// Double-precision model parameters.
pub type ModelParams64 = model::ModelParams<f64>;
