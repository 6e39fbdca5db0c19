//! Kernel-weighted pairwise-difference estimation.
//!
//! For every pair (i, j) the differenced observations {(W_ik - W_jk,
//! Y_ik - Y_jk)}_k are accumulated with weight K(d2_ij / h^2), then the
//! weighted normal equations are solved once. Pairs with d2 beyond the
//! bandwidth carry exactly zero weight. The 1-nearest-neighbor variant
//! replaces kernel weights with an indicator of being the closest partner.

use rayon::prelude::*;

use super::{resolve_bandwidth, BandwidthRule, EstimateReport, EstimatorKind};
use crate::distance::PseudoDistanceMatrix;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lsq::{solve_spd_checked, GramAccum, RCOND};
use crate::mat::{pair_list, SymMatrix};
use crate::model::{CovariateTensor, DyadicDataset};

/// Fixed chunk size for the parallel pair sweep; results are reduced in
/// chunk order, so output is independent of the worker count.
const PAIR_CHUNK: usize = 512;

fn accumulate_pairs<F>(
    n: usize,
    w: &CovariateTensor,
    d2: &PseudoDistanceMatrix,
    kernel: &KernelSpec,
    h2: f64,
    outcome: F,
) -> (GramAccum, usize)
where
    F: Fn(usize, usize) -> Option<f64> + Sync,
{
    let p = w.p();
    let pairs = pair_list(n);
    let parts: Vec<(GramAccum, usize)> = pairs
        .par_chunks(PAIR_CHUNK)
        .map(|chunk| {
            let mut acc = GramAccum::new(p);
            let mut active = 0usize;
            let mut dw = vec![0.0; p];
            for &(i, j) in chunk {
                if !d2.defined.get(i, j) {
                    continue;
                }
                let wt = kernel.weight(d2.d2.get(i, j) / h2);
                if wt <= 0.0 {
                    continue;
                }
                active += 1;
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let (Some(yik), Some(yjk)) = (outcome(i, k), outcome(j, k)) else {
                        continue;
                    };
                    let (wi, wj) = (w.get(i, k), w.get(j, k));
                    for t in 0..p {
                        dw[t] = wi[t] - wj[t];
                    }
                    acc.add_weighted(&dw, yik - yjk, wt);
                }
            }
            (acc, active)
        })
        .collect();
    let mut acc = GramAccum::new(p);
    let mut active = 0usize;
    for (a, c) in &parts {
        acc.merge(a);
        active += c;
    }
    (acc, active)
}

fn kernel_fit<F>(
    n: usize,
    w: &CovariateTensor,
    d2: &PseudoDistanceMatrix,
    kernel: &KernelSpec,
    bw: &BandwidthRule,
    outcome: F,
) -> Result<EstimateReport>
where
    F: Fn(usize, usize) -> Option<f64> + Sync,
{
    let mut h2 = resolve_bandwidth(bw, d2)?;
    let adaptive = matches!(bw, BandwidthRule::Rot | BandwidthRule::PairQuantile(_));
    let mut attempt = 0;
    loop {
        let (acc, active) = accumulate_pairs(n, w, d2, kernel, h2, &outcome);
        if active == 0 {
            // the rule of thumb can undershoot at small n; widen before erroring
            if adaptive && attempt < 10 {
                attempt += 1;
                h2 *= 2.0;
                continue;
            }
            return Err(Error::BandwidthTooSmall { h2 });
        }
        let solved = solve_spd_checked(&acc.gram_matrix(), &acc.moment_vector(), RCOND);
        let (beta, min_eig) = match solved {
            Ok(v) => v,
            // A nonempty active set can still be inert: pairs with identical
            // covariate records have zero differences everywhere and span
            // nothing. Keep widening until informative pairs enter the
            // window, same budget as the empty case.
            Err(Error::SingularDesign { .. }) if adaptive && attempt < 10 => {
                attempt += 1;
                h2 *= 2.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut rep = EstimateReport::new(EstimatorKind::Kernel, beta);
        rep.bandwidth2 = Some(h2);
        rep.active_pairs = active;
        rep.gram_min_eigen = min_eig;
        return Ok(rep);
    }
}

/// Kernel estimator on raw observed outcomes; with missing data the inner
/// sum for pair (i, j) runs over the common observed partners only.
pub fn kernel_beta(
    ds: &DyadicDataset,
    w: &CovariateTensor,
    d2: &PseudoDistanceMatrix,
    kernel: &KernelSpec,
    bw: &BandwidthRule,
) -> Result<EstimateReport> {
    let n = ds.n();
    if w.n() != n || d2.d2.n() != n {
        return Err(Error::Dimension { context: "kernel_beta", expected: n, got: w.n().min(d2.d2.n()) });
    }
    kernel_fit(n, w, d2, kernel, bw, |i, k| ds.mask.get(i, k).then(|| ds.y.get(i, k)))
}

/// Kernel estimator on a denoised outcome matrix (the single-index second
/// stage); non-finite (unimputed) entries drop out of the inner sums.
pub fn kernel_beta_denoised(
    ystar: &SymMatrix,
    w: &CovariateTensor,
    d2: &PseudoDistanceMatrix,
    kernel: &KernelSpec,
    bw: &BandwidthRule,
) -> Result<EstimateReport> {
    let n = ystar.n();
    if w.n() != n || d2.d2.n() != n {
        return Err(Error::Dimension {
            context: "kernel_beta_denoised",
            expected: n,
            got: w.n().min(d2.d2.n()),
        });
    }
    kernel_fit(n, w, d2, kernel, bw, |i, k| {
        let v = ystar.get(i, k);
        v.is_finite().then_some(v)
    })
}

/// Match every agent with its closest partner by squared pseudo-distance and
/// pool the matched pairs' differenced observations into one unweighted
/// least-squares fit. Agents with no defined partner are skipped; ties take
/// the smaller index.
pub fn nn1_beta(
    ds: &DyadicDataset,
    w: &CovariateTensor,
    d2: &PseudoDistanceMatrix,
) -> Result<EstimateReport> {
    let n = ds.n();
    if w.n() != n || d2.d2.n() != n {
        return Err(Error::Dimension { context: "nn1_beta", expected: n, got: w.n().min(d2.d2.n()) });
    }
    let p = w.p();
    let mut matches: Vec<(usize, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || !d2.defined.get(i, j) {
                continue;
            }
            let v = d2.d2.get(i, j);
            if !v.is_finite() {
                continue;
            }
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, j));
            }
        }
        if let Some((_, j)) = best {
            matches.push((i, j));
        }
    }
    if matches.is_empty() {
        return Err(Error::Degenerate("no agent has a defined pseudo-distance partner".into()));
    }
    let mut acc = GramAccum::new(p);
    let mut dw = vec![0.0; p];
    for &(i, j) in &matches {
        for k in 0..n {
            if k == i || k == j || !(ds.mask.get(i, k) && ds.mask.get(j, k)) {
                continue;
            }
            let (wi, wj) = (w.get(i, k), w.get(j, k));
            for t in 0..p {
                dw[t] = wi[t] - wj[t];
            }
            acc.add(&dw, ds.y.get(i, k) - ds.y.get(j, k));
        }
    }
    let (beta, min_eig) = solve_spd_checked(&acc.gram_matrix(), &acc.moment_vector(), RCOND)?;
    let mut rep = EstimateReport::new(EstimatorKind::Nn1, beta);
    rep.active_pairs = matches.len();
    rep.gram_min_eigen = min_eig;
    rep.matched_pairs = Some(matches);
    Ok(rep)
}
