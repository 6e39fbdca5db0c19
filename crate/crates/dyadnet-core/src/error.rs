//! Crate-wide error type. Estimation failures are reported, never panicked.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("symmetry violation: {0}")]
    Symmetry(String),

    #[error("empty overlap for pair ({i}, {j}): no third agent observed by both")]
    EmptyOverlap { i: usize, j: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("singular design: weighted Gram matrix has relative min eigenvalue {min_rel:.3e} (threshold {threshold:.1e})")]
    SingularDesign { min_rel: f64, threshold: f64 },

    #[error("bandwidth too small: zero pairs receive positive kernel weight (h^2 = {h2:.6e})")]
    BandwidthTooSmall { h2: f64 },

    #[error("identification failure: {0}")]
    Identification(String),

    #[error("apparent separation in logit fit: |coefficient| exceeded {bound} at iteration {iter}")]
    Separation { bound: f64, iter: usize },

    #[error("logit MLE did not converge within {max_iter} iterations (gradient norm {grad_norm:.3e})")]
    NoConvergence { max_iter: usize, grad_norm: f64 },

    #[error("link domain violation: {frac:.1}% of denoised entries fell outside the link range and were clamped (limit 50%)")]
    LinkDomain { frac: f64 },

    #[error("empty covariate group: no third agents with X = {0}")]
    EmptyGroup(String),

    #[error("imputation incomplete after {rounds} round(s): {remaining} dyad(s) still lack donors")]
    ImputationGap { rounds: usize, remaining: usize },

    #[error("conflicting duplicate rows for dyad ({i}, {j}): y = {a} vs y = {b}")]
    DuplicateConflict { i: String, j: String, a: f64, b: f64 },

    #[error("unknown node id `{id}` referenced in {context}")]
    UnknownId { id: String, context: &'static str },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
