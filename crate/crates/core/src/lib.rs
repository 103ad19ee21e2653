//! Dense-network training library for comparing hidden activations on MNIST,
//! centred on Flatten-T Swish (`x·σ(x) + T` for `x ≥ 0`, `T` otherwise).
//!
//! - [`activation`]: FTS and six comparators, values and analytic slopes
//! - [`linalg`]: row-major `f64` matrices and the seeded random stream
//! - [`network`]: dense layers, dropout, softmax cross-entropy, SGD
//! - [`mnist`]: IDX parsing and mini-batching
//! - [`gradcheck`]: finite-difference oracle for all of the above
//! - [`experiment`]: architectures, multi-seed runs, T sweeps, scoring, reports

pub mod activation;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod linalg;
pub mod mnist;
pub mod network;

pub use activation::{ActivationKind, ActivationSpec};
pub use error::{Error, Result};
pub use linalg::{Matrix, Rng};
pub use mnist::Dataset;
pub use network::{Network, TrainConfig};
