//! Statistics linking metric scores to binary annotation labels.

mod annotations;
mod bootstrap;
mod correlation;

pub use annotations::{AnnotationSet, MajorityVote};
pub use bootstrap::{bootstrap_significance, BootstrapOutcome};
pub use correlation::{fleiss_kappa, mutual_information, point_biserial, quantile_bins, DEFAULT_MI_BINS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row {row} sums to {sum}, expected {raters} ratings")]
    InconsistentRow { row: usize, sum: usize, raters: usize },
    #[error("no bootstrap resample had both label classes")]
    NoValidResamples,
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Point-biserial correlation, mutual information (nats) and, when a baseline
/// was compared, the one-sided bootstrap p-value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub point_biserial: f64,
    pub mutual_information: f64,
    pub p_value: Option<f64>,
    pub n: usize,
}
