//! Deterministic numeric kernel: dense linear algebra, stable softmax and
//! log-sum-exp, soft-label cross-entropy, Adam updates, and a seeded
//! splittable random stream.
//!
//! Everything here is pure given explicit state; repeated invocation is
//! reproducible bit for bit.

mod adam;
mod matrix;
mod ops;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use ops::{cross_entropy_soft, logsumexp, softmax, softmax_rows};
pub use rng::RandomStream;
