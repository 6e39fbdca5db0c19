//! Homophily-coefficient estimators: the kernel-weighted pairwise-difference
//! estimator, a 1-nearest-neighbor variant, two naive baselines (additive
//! fixed effects, dyadic logit MLE), the single-index pipeline for invertible
//! link functions, and recovery of the pair-specific heterogeneity surface.

mod baselines;
mod kernel;
mod nonparam;
mod single_index;

pub use baselines::{fe_additive_beta, logit_mle_beta};
pub use kernel::{kernel_beta, kernel_beta_denoised, nn1_beta};
pub use nonparam::{g_hat, h_nonparametric, partial_effects, HEstimate, PartialEffects};
pub use single_index::{single_index_beta, SingleIndexConfig};

use serde::{Deserialize, Serialize};

use crate::distance::PseudoDistanceMatrix;
use crate::error::{Error, Result};
use crate::mat::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Kernel,
    Nn1,
    FeAdditive,
    LogitMle,
    SingleIndexKernel,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimatorKind::Kernel => "kernel",
            EstimatorKind::Nn1 => "nn1",
            EstimatorKind::FeAdditive => "fe",
            EstimatorKind::LogitMle => "logit-mle",
            EstimatorKind::SingleIndexKernel => "single-index",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kernel" => Ok(EstimatorKind::Kernel),
            "nn1" => Ok(EstimatorKind::Nn1),
            "fe" | "fe-additive" => Ok(EstimatorKind::FeAdditive),
            "logit-mle" | "mle" => Ok(EstimatorKind::LogitMle),
            "single-index" | "single-index-kernel" => Ok(EstimatorKind::SingleIndexKernel),
            other => Err(format!(
                "unknown estimator `{other}` (try kernel, nn1, fe, logit-mle, single-index)"
            )),
        }
    }
}

/// Fit output common to all estimators. Fields that only apply to some
/// estimators (bandwidth, matched pairs, clamping) stay `None` elsewhere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub beta: Vec<f64>,
    /// Squared bandwidth actually used (kernel estimators only).
    pub bandwidth2: Option<f64>,
    /// Pairs (or observations) entering the fit with positive weight.
    pub active_pairs: usize,
    /// Smallest eigenvalue of the solved normal-equation matrix.
    pub gram_min_eigen: f64,
    /// Intercept, for estimators that fit one (logit MLE).
    pub intercept: Option<f64>,
    /// Nearest-neighbor matches (i, argmin_j d2_ij), when applicable.
    pub matched_pairs: Option<Vec<(usize, usize)>>,
    /// Entries clamped into the link range before inversion, when applicable.
    pub clamp: Option<ClampStats>,
    pub g_hat: Option<SymMatrix>,
    pub partial_effects: Option<PartialEffects>,
}

impl EstimateReport {
    pub(crate) fn new(estimator: EstimatorKind, beta: Vec<f64>) -> Self {
        EstimateReport {
            estimator,
            beta,
            bandwidth2: None,
            active_pairs: 0,
            gram_min_eigen: f64::NAN,
            intercept: None,
            matched_pairs: None,
            clamp: None,
            g_hat: None,
            partial_effects: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClampStats {
    /// Entries moved to the edge of the clamp interval before inversion.
    pub clamped: usize,
    /// Entries excluded outright: no finite preimage under the link
    /// (a logistic-link value at exactly 0 or 1).
    #[serde(default)]
    pub dropped: usize,
    pub total: usize,
}

impl ClampStats {
    /// Fraction of entries the link inversion had to adjust or discard.
    pub fn frac(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            (self.clamped + self.dropped) as f64 / self.total as f64
        }
    }
}

/// Bandwidth selection for the kernel estimator: a data-driven rule of
/// thumb, a caliper-style distance quantile, or a fixed squared bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    Rot,
    /// h^2 = the q-quantile of the defined squared distances: the window
    /// admits roughly the closest q-fraction of pairs, wherever the
    /// distance scale sits. Robust to the noise pedestal that denoised
    /// surfaces put under every informative pair.
    PairQuantile(f64),
    Fixed(f64),
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Rot
    }
}

impl std::str::FromStr for BandwidthRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "rot" {
            return Ok(BandwidthRule::Rot);
        }
        if let Some(qs) = s.strip_prefix('q') {
            return qs
                .parse::<f64>()
                .map_err(|_| format!("quantile bandwidth must be q<frac>, got `{s}`"))
                .and_then(|q| {
                    if q > 0.0 && q < 1.0 {
                        Ok(BandwidthRule::PairQuantile(q))
                    } else {
                        Err(format!("quantile bandwidth fraction must be in (0, 1), got {q}"))
                    }
                });
        }
        s.parse::<f64>()
            .map_err(|_| format!("bandwidth must be `rot`, `q<frac>`, or a positive number, got `{s}`"))
            .and_then(|v| {
                if v > 0.0 {
                    Ok(BandwidthRule::Fixed(v))
                } else {
                    Err(format!("fixed bandwidth must be positive, got {v}"))
                }
            })
    }
}

/// h^2 = 0.9 * min(sd, IQR / 1.349) * m^{-1/5} over the m defined squared
/// distances; kernel weights are evaluated at d^2 / h^2, so the rule of thumb
/// applies to the d^2 sample directly.
fn rot_formula(sd: f64, iqr_scaled: f64, m: usize) -> f64 {
    0.9 * sd.min(iqr_scaled) * (m as f64).powf(-0.2)
}

/// Type-7 (linear interpolation) quantile of pre-sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    let h = p * (m - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        return sorted[m - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Rule-of-thumb squared bandwidth from the defined entries of a distance
/// matrix: a spread-sized window anchored at the smallest distance,
///   h^2 = min d^2 + 0.9 * min(sd, IQR/1.349) * m^{-1/5}.
/// Self-centered matrices (the homoskedastic route subtracts the minimum)
/// have anchor 0, recovering the plain rule of thumb. Denoised-route
/// distances ride on a noise pedestal that the shift-invariant spread
/// statistics cannot see; the anchor keeps the window over the data.
/// Degenerate dispersion falls back to twice the smallest distance (half
/// the largest when the smallest is 0) with a warning.
pub fn bandwidth_rot(d2: &PseudoDistanceMatrix) -> Result<f64> {
    let mut vals: Vec<f64> = d2.d2.values().iter().copied().filter(|v| v.is_finite()).collect();
    if vals.len() < 2 {
        return Err(Error::Degenerate(format!(
            "bandwidth rule of thumb needs at least 2 defined pairs, got {}",
            vals.len()
        )));
    }
    let m = vals.len();
    let mean = vals.iter().sum::<f64>() / m as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    let sd = var.sqrt();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile_sorted(&vals, 0.75) - quantile_sorted(&vals, 0.25);
    let window = rot_formula(sd, iqr / 1.349, m);
    let min = vals[0];
    if window > 0.0 {
        return Ok(min + window);
    }
    let max = vals[m - 1];
    if min > 0.0 {
        log::warn!("degenerate distance dispersion; bandwidth falls back to 2*min(d^2) = {}", 2.0 * min);
        Ok(2.0 * min)
    } else if max > 0.0 {
        log::warn!("degenerate distance dispersion; bandwidth falls back to max(d^2)/2 = {}", max / 2.0);
        Ok(max / 2.0)
    } else {
        // every pair at distance zero: any bandwidth keeps all pairs active
        log::warn!("all squared distances are zero; bandwidth falls back to 1");
        Ok(1.0)
    }
}

/// Squared bandwidth at the q-quantile of the defined squared distances.
/// A zero quantile (mass of exact-zero distances) falls back like the rule
/// of thumb's degenerate branches.
pub fn bandwidth_quantile(d2: &PseudoDistanceMatrix, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("bandwidth quantile must be in (0, 1), got {q}")));
    }
    let mut vals: Vec<f64> = d2.d2.values().iter().copied().filter(|v| v.is_finite()).collect();
    if vals.len() < 2 {
        return Err(Error::Degenerate(format!(
            "quantile bandwidth needs at least 2 defined pairs, got {}",
            vals.len()
        )));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h2 = quantile_sorted(&vals, q);
    if h2 > 0.0 {
        return Ok(h2);
    }
    let max = vals[vals.len() - 1];
    if max > 0.0 {
        log::warn!("quantile bandwidth hit zero distances; falling back to max(d^2)/2 = {}", max / 2.0);
        Ok(max / 2.0)
    } else {
        log::warn!("all squared distances are zero; bandwidth falls back to 1");
        Ok(1.0)
    }
}

/// Resolve a bandwidth rule against a distance matrix.
pub fn resolve_bandwidth(bw: &BandwidthRule, d2: &PseudoDistanceMatrix) -> Result<f64> {
    match *bw {
        BandwidthRule::Fixed(v) => {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Parameter(format!("fixed squared bandwidth must be positive, got {v}")))
            }
        }
        BandwidthRule::Rot => bandwidth_rot(d2),
        BandwidthRule::PairQuantile(q) => bandwidth_quantile(d2, q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::Provenance;
    use crate::mat::{DyadMask, DyadMatrix};
    use approx::assert_relative_eq;

    fn pdm(d2: DyadMatrix) -> PseudoDistanceMatrix {
        let n = d2.n();
        let defined = DyadMask::from_fn_upper(n, |i, j| d2.get(i, j).is_finite());
        PseudoDistanceMatrix {
            d2,
            defined,
            provenance: Provenance::Homoskedastic,
            sigma2_hat: None,
            per_pair_beta: None,
        }
    }

    /// sd = 1, IQR/1.349 = 2, m = 435 pairs: the rule picks the sd branch.
    #[test]
    fn rot_formula_hand_value() {
        let h2 = rot_formula(1.0, 2.0, 435);
        assert_relative_eq!(h2, 0.9 * (435.0_f64).powf(-0.2), max_relative = 1e-15);
        assert!((h2 - 0.2670).abs() < 5e-4, "h2 = {h2}");
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert_eq!(quantile_sorted(&v, 0.75), 4.0);
        let w = [1.0, 2.0, 10.0, 20.0];
        // h = 0.75 * 3 = 2.25: 10 + 0.25 * (20 - 10)
        assert_eq!(quantile_sorted(&w, 0.75), 12.5);
        assert_eq!(quantile_sorted(&w, 1.0), 20.0);
    }

    #[test]
    fn degenerate_dispersion_falls_back() {
        // all pairs at 3.0: twice the common value keeps every pair active
        let d = pdm(DyadMatrix::filled(10, 3.0));
        assert_eq!(bandwidth_rot(&d).unwrap(), 6.0);
        let z = pdm(DyadMatrix::filled(10, 0.0));
        assert_eq!(bandwidth_rot(&z).unwrap(), 1.0);
        // zero IQR with min 0: half the largest distance
        let mixed = pdm(DyadMatrix::from_fn(10, |i, j| if i == 0 && j < 4 { 8.0 } else { 0.0 }));
        assert_eq!(bandwidth_rot(&mixed).unwrap(), 4.0);
    }

    /// Both the sd and the IQR are 1-homogeneous in the data, so h^2 is too.
    #[test]
    fn rot_is_scale_equivariant() {
        let base = DyadMatrix::from_fn(12, |i, j| ((i * 7 + j * 3) % 11) as f64 + 0.25);
        let lambda = 3.7;
        let scaled = DyadMatrix::from_fn(12, |i, j| lambda * base.get(i, j));
        let h_base = bandwidth_rot(&pdm(base)).unwrap();
        let h_scaled = bandwidth_rot(&pdm(scaled)).unwrap();
        assert_relative_eq!(h_scaled, lambda * h_base, max_relative = 1e-12);
    }

    #[test]
    fn rules_parse_from_strings() {
        assert_eq!("rot".parse::<BandwidthRule>().unwrap(), BandwidthRule::Rot);
        assert_eq!("0.5".parse::<BandwidthRule>().unwrap(), BandwidthRule::Fixed(0.5));
        assert!("-1".parse::<BandwidthRule>().is_err());
        assert!("x".parse::<BandwidthRule>().is_err());
        assert_eq!("fe".parse::<EstimatorKind>().unwrap(), EstimatorKind::FeAdditive);
    }
}
