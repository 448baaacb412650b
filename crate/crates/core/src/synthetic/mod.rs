//! Synthetic checks of the metric's two theoretical anchors: statistical
//! parity on a hiring dataset with a proxy feature, and the Lipschitz bound.

mod lipschitz;
mod parity;

pub use lipschitz::{default_bounds, gen_threshold, least_squares_slope, lipschitz_sweep, sweep_table, SweepPoint};
pub use parity::{
    diff_quotient, gen_hiring, mean_partial, run_parity_cases, DerivativeEstimator, HiringRecord,
    ParityConfig, ParityOutcome, PartialSampling,
};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::models::ModelError;
use crate::sensitivity::SensitivityError;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("feature lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} out of range for {len} records")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("derivative undefined: denominator feature is constant")]
    UndefinedDerivative,
    #[error("Lipschitz bound must be positive, got {0}")]
    InvalidBound(f64),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
}
