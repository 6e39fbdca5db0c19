//! Recovered pairwise heterogeneity, partial effects, and the nonparametric
//! homophily surface for discrete covariates.

use serde::{Deserialize, Serialize};

use crate::denoise::DenoisedMatrix;
use crate::error::{Error, Result};
use crate::link::LinkSpec;
use crate::mat::SymMatrix;
use crate::model::{CovariateTensor, XProfile};

/// g_hat(i, j) = Ytilde*(i, j) - W(i, j)'beta on produced entries; entries the
/// denoiser could not produce stay NaN rather than aborting the run. The
/// caller applies any link inversion to Ytilde* beforehand.
pub fn g_hat(den: &DenoisedMatrix, w: &CovariateTensor, beta: &[f64]) -> Result<SymMatrix> {
    let n = den.ystar.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "g_hat", expected: n, got: w.n() });
    }
    if beta.len() != w.p() {
        return Err(Error::Dimension { context: "g_hat beta", expected: w.p(), got: beta.len() });
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        if den.imputed.get(i, j) {
            let wv = w.get(i, j);
            den.ystar.get(i, j) - wv.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
        } else {
            f64::NAN
        }
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialEffects {
    /// F'(W'beta + g) per pair, NaN where g is unavailable.
    pub slope: SymMatrix,
    pub beta: Vec<f64>,
    /// Mean slope over finite off-diagonal pairs.
    pub mean_slope: f64,
    /// Average effect per covariate: mean_slope * beta_r.
    pub average: Vec<f64>,
}

impl PartialEffects {
    /// Effect of covariate r on pair (i, j): F'(index) * beta_r.
    pub fn per_pair(&self, i: usize, j: usize, r: usize) -> f64 {
        self.slope.get(i, j) * self.beta[r]
    }
}

pub fn partial_effects(
    w: &CovariateTensor,
    g: &SymMatrix,
    beta: &[f64],
    link: &LinkSpec,
) -> Result<PartialEffects> {
    let n = g.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "partial_effects", expected: n, got: w.n() });
    }
    if beta.len() != w.p() {
        return Err(Error::Dimension {
            context: "partial_effects beta",
            expected: w.p(),
            got: beta.len(),
        });
    }
    let slope = SymMatrix::from_fn(n, |i, j| {
        let gij = g.get(i, j);
        if gij.is_finite() {
            let wv = w.get(i, j);
            link.dforward(wv.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + gij)
        } else {
            f64::NAN
        }
    });
    let mut sum = 0.0;
    let mut cnt = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = slope.get(i, j);
            if s.is_finite() {
                sum += s;
                cnt += 1;
            }
        }
    }
    let mean_slope = if cnt > 0 { sum / cnt as f64 } else { f64::NAN };
    let average = beta.iter().map(|b| mean_slope * b).collect();
    Ok(PartialEffects { slope, beta: beta.to_vec(), mean_slope, average })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HEstimate {
    /// mu* of the best pair: the estimated homophily level h(x, xTilde).
    pub value: f64,
    pub best_pair: Option<(usize, usize)>,
    /// Objective at the best pair; near zero signals a credible duplicate.
    pub best_d2: f64,
    /// mu* across the (up to) 5 best pairs.
    pub top_mu: Vec<f64>,
    /// max - min of top_mu: the overidentification diagnostic.
    pub mu_spread: f64,
}

/// Nonparametric homophily level between discrete covariate values x and
/// xTilde. For each cross-group pair (i, j) the objective
///   d2_ij(mu) = mean_{k: X_k = x} (delta_k + mu)^2
///             + mean_{k: X_k = xTilde} (delta_k - mu)^2,
/// delta_k = Ytilde*(i, k) - Ytilde*(j, k), k not in {i, j}, has the closed
/// form minimizer mu* = (A2 - A1) / 2 where A1, A2 are the two restricted
/// averages. The returned estimate is mu* of the pair with the smallest
/// objective; pairs whose objective lands within `tolerance` of the minimum
/// count as ties and the smallest (i, j) wins.
pub fn h_nonparametric(
    den: &DenoisedMatrix,
    x: &XProfile,
    xa: &[f64],
    xb: &[f64],
    tolerance: f64,
) -> Result<HEstimate> {
    let n = den.ystar.n();
    if x.n() != n {
        return Err(Error::Dimension { context: "h_nonparametric", expected: n, got: x.n() });
    }
    if xa.len() != x.k() || xb.len() != x.k() {
        return Err(Error::Dimension {
            context: "h_nonparametric value",
            expected: x.k(),
            got: xa.len().max(xb.len()),
        });
    }
    if xa == xb {
        // normalization: zero homophily level at equal covariates
        return Ok(HEstimate {
            value: 0.0,
            best_pair: None,
            best_d2: 0.0,
            top_mu: Vec::new(),
            mu_spread: 0.0,
        });
    }
    let ga: Vec<usize> = (0..n).filter(|&i| x.row(i) == xa).collect();
    let gb: Vec<usize> = (0..n).filter(|&i| x.row(i) == xb).collect();
    if ga.is_empty() {
        return Err(Error::EmptyGroup(format!("{xa:?}")));
    }
    if gb.is_empty() {
        return Err(Error::EmptyGroup(format!("{xb:?}")));
    }

    let usable = |i: usize, k: usize| -> Option<f64> {
        (den.imputed.get(i, k) && den.ystar.get(i, k).is_finite()).then(|| den.ystar.get(i, k))
    };
    // (objective, i, j, mu*)
    let mut cands: Vec<(f64, usize, usize, f64)> = Vec::new();
    for &i in &ga {
        for &j in &gb {
            if i == j {
                continue;
            }
            let restricted_avg = |group: &[usize]| -> Option<f64> {
                let mut s = 0.0;
                let mut c = 0usize;
                for &k in group {
                    if k == i || k == j {
                        continue;
                    }
                    let (Some(a), Some(b)) = (usable(i, k), usable(j, k)) else { continue };
                    s += a - b;
                    c += 1;
                }
                (c > 0).then(|| s / c as f64)
            };
            let (Some(a1), Some(a2)) = (restricted_avg(&ga), restricted_avg(&gb)) else {
                continue;
            };
            let mu = 0.5 * (a2 - a1);
            let mut obj = 0.0;
            for (group, sign) in [(&ga, 1.0), (&gb, -1.0)] {
                let mut s = 0.0;
                let mut c = 0usize;
                for &k in group.iter() {
                    if k == i || k == j {
                        continue;
                    }
                    let (Some(a), Some(b)) = (usable(i, k), usable(j, k)) else { continue };
                    let t = (a - b) + sign * mu;
                    s += t * t;
                    c += 1;
                }
                obj += s / c as f64;
            }
            cands.push((obj, i, j, mu));
        }
    }
    if cands.is_empty() {
        return Err(Error::EmptyGroup(format!(
            "no third agents support any pair across {xa:?} and {xb:?}"
        )));
    }
    cands.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });
    let floor = cands[0].0;
    let best = cands
        .iter()
        .take_while(|c| c.0 <= floor + tolerance)
        .min_by_key(|c| (c.1, c.2))
        .copied()
        .unwrap();
    let top_mu: Vec<f64> = cands.iter().take(5).map(|c| c.3).collect();
    let mu_spread = top_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - top_mu.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HEstimate {
        value: best.3,
        best_pair: Some((best.1, best.2)),
        best_d2: best.0,
        top_mu,
        mu_spread,
    })
}
