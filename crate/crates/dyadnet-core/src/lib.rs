//! Estimation of pairwise-interaction (dyadic) regression models with
//! nonparametrically specified agent-level unobserved heterogeneity.
//!
//! The pipeline: simulate or ingest a symmetric dyadic outcome matrix with
//! agent covariates, compute pseudo-distances between agents from outcome
//! profiles, match near-duplicates, optionally denoise the outcome matrix by
//! neighborhood averaging, and estimate the homophily coefficients by a
//! kernel-weighted pairwise-difference regression. Baseline estimators
//! (additive fixed effects, dyadic logit MLE, nearest-neighbor differencing)
//! and a Monte Carlo harness are included.

pub mod denoise;
pub mod distance;
pub mod error;
pub mod estimators;
pub mod impute;
pub mod io;
pub mod kernel;
pub mod link;
pub mod lsq;
pub mod mat;
pub mod mc;
pub mod model;
pub mod neighbors;
pub mod sim;

pub use error::{Error, Result};
pub use mat::{DyadMask, DyadMatrix, SymMatrix};
pub use model::{CovariateTensor, DyadicDataset, ModelSpec, ValidationReport};
