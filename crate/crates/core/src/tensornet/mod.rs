//! Small neural-network engine with hand-written backward passes.
//!
//! Tensors are row-major `f64`. Spatial tensors are `[batch, channels,
//! height, width]`; dense tensors are `[batch, features]`. Every layer caches
//! what its backward pass needs during `forward`; calling `backward` without
//! a preceding `forward` is `NoForwardCache`.

mod adam;
mod checkpoint;
mod conv;
mod dense;
mod gemm;
pub mod gradcheck;
pub mod losses;
mod norm;
mod rng;
mod sequential;
mod tensor;

use std::path::PathBuf;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use conv::{Conv2d, Flatten, Pool, PoolKind};
pub use dense::{Activation, Dense, ElementwiseMultiply, Embedding};
pub use gradcheck::{gradcheck, gradcheck_sampled, GradcheckReport, Objective};
pub use norm::{BatchNorm, Dropout};
pub use rng::Rng;
pub use sequential::{Layer, LayerSpec, Sequential};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("backward called without a cached forward pass")]
    NoForwardCache,
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("batch normalisation needs at least 2 samples in training, got {0}")]
    BatchTooSmall(usize),
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint has no entry {0}")]
    MissingEntry(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Training mode samples dropout masks and uses batch statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Which gradients a backward pass should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Want {
    pub params: bool,
    pub input: bool,
}

impl Want {
    pub fn all() -> Self {
        Self { params: true, input: true }
    }

    pub fn params() -> Self {
        Self { params: true, input: false }
    }

    /// Input gradient only; parameters stay frozen.
    pub fn input() -> Self {
        Self { params: false, input: true }
    }
}
