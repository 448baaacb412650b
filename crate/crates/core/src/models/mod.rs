//! Differentiable classifiers: the task classifier, the protected-status
//! model, and Lipschitz-constrained fits.

mod config;
mod format;
mod input;
mod lipschitz;
mod network;
mod train;

pub use config::{Activation, Architecture, LipschitzBound, NormOrder, Optimizer, TrainConfig};
pub use input::{EmbeddedInput, ExampleInput, LabeledExample};
pub use lipschitz::{fit_scalar_lipschitz, max_constraint_violation, train_lipschitz, ScalarFit};
pub use network::{Dense, DiffModel, Encoder, ModelKind, TrainSummary};
pub use train::{pretrained_vector, train_classifier, train_psm};

use crate::autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{0} labels contain a single class; at least two are required")]
    SingleClass(&'static str),
    #[error("example {0} has no protected label")]
    MissingProtectedLabel(usize),
    #[error("example {index}: {detail}")]
    InvalidExample { index: usize, detail: String },
    #[error("model expects {expected} input")]
    InputKind { expected: &'static str },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
