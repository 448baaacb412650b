//! Accumulated prediction sensitivity for differentiable classifiers.
//!
//! The metric is `P = wᵀJv`, where `J` holds the absolute partial derivatives
//! of each class probability with respect to every input feature, `w` weights
//! the classes and `v` weights the features. A `v` concentrated on features
//! that carry protected-attribute information turns `P` into a fairness audit.
//!
//! Modules:
//! - [`autodiff`]: reverse-mode tape and the absolute Jacobian.
//! - [`models`]: task classifier, protected-status model, Lipschitz fits, model files.
//! - [`sensitivity`]: `w`/`v` construction, metric variants P1-P5, counterfactual baseline.
//! - [`synthetic`]: the hiring statistical-parity experiment and the Lipschitz sweep.
//! - [`stats`]: point-biserial correlation, mutual information, bootstrap test, Fleiss' kappa.
//! - [`corpus`]: record files, lexicons, the planted-bias toy corpus, saliency export.
//! - [`cli`]: the `predsens` command surface and audit reports.

pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod models;
pub mod sensitivity;
pub mod stats;
pub mod synthetic;
