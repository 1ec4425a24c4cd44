//! Removal of sensitive-attribute influence from black-box predictions.
//!
//! A predictor estimating `E(Y | X, S)` is post-processed by averaging its
//! outputs over the `k` nearest reference rows in `X`-space (sensitive columns
//! excluded). By the tower property, averaging over `S` at fixed `X` recovers
//! `E(Y | X)`, which carries no direct dependence on `S`.
//!
//! Modules:
//!
//! - [`data`]: CSV ingestion, one-hot encoding, standardization, splits
//! - [`models`]: linear, logistic and kNN baselines plus an external-prediction adapter
//! - [`debias`]: the neighbor index and debiased prediction
//! - [`metrics`]: Pearson correlations, mean absolute error, misclassification
//! - [`theory`]: Gaussian data-generating processes and closed-form checks
//! - [`harness`]: repeated-holdout k-sweeps and result export

pub mod data;
pub mod debias;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod neighbors;
pub mod theory;

pub use data::{Column, Dataset, LoadOptions, Role, Schema, SplitPlan, Standardizer};
pub use debias::{classify, DebiasConfig, DebiasIndex};
pub use error::{Error, ErrorCategory, Result};
pub use metrics::{Correlation, FairnessReport};
pub use models::{FitConfig, ModelKind, Predictor, Task};
