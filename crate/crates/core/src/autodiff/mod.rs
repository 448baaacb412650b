//! Minimal reverse-mode differentiation over dense 64-bit tensors.
//!
//! A [`Graph`] is an eager tape: ops run as they are recorded, and
//! [`Graph::backward`] walks the tape once in reverse. [`abs_jacobian`]
//! stacks one backward pass per output class to produce the matrix of
//! absolute input sensitivities.

mod graph;
mod jacobian;
mod tensor;

pub use graph::{Gradients, Graph, NodeId};
pub use jacobian::{abs_jacobian, AbsJacobian, Differentiable};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AutodiffError {
    #[error("dimension error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("output component {component} out of range for output of size {size}")]
    ComponentOutOfRange { component: usize, size: usize },
    #[error("node {0} was never recorded on this graph")]
    UnknownNode(usize),
}
