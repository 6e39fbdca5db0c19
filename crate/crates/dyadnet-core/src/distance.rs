//! Pseudo-distances between agents computed from outcome profiles.
//!
//! Two agents with the same latent type have outcome rows that differ only
//! through covariates and noise. Regressing the row difference on the
//! covariate difference and looking at the residual mean square therefore
//! measures type discrepancy up to a noise floor:
//!
//!   q2(i, j)   = min_b mean_k (Y_ik - Y_jk - (W_ik - W_jk)'b)^2
//!              = d2(i, j) + 2 sigma^2            (homoskedastic noise)
//!
//! so the noise floor is estimated by the minimum q2 over pairs and
//! subtracted off. Under heteroskedastic noise the same regression applied
//! to a denoised outcome matrix estimates d2 directly. The max-correlation
//! similarity distance d_inf^2 drives neighborhood construction and is free
//! of any noise-floor correction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lsq::GramAccum;
use crate::mat::{pair_count, pair_list, DyadMask, DyadMatrix, SymMatrix};
use crate::model::{CovariateTensor, DyadicDataset};
use crate::neighbors::XRule;

/// Which construction produced a squared-distance matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Homoskedastic,
    Heteroskedastic,
}

/// Squared pseudo-distances for all pairs, with an explicit definedness mask
/// (pairs can be undefined under missing data). Undefined entries hold +inf.
#[derive(Clone, Debug)]
pub struct PseudoDistanceMatrix {
    pub d2: DyadMatrix,
    pub defined: DyadMask,
    pub provenance: Provenance,
    /// Estimated noise floor 2 sigma^2 / 2; only for the homoskedastic route.
    pub sigma2_hat: Option<f64>,
    /// Per-pair minimizing coefficients, if requested.
    pub per_pair_beta: Option<PairBetas>,
}

/// Packed per-pair coefficient vectors.
#[derive(Clone, Debug)]
pub struct PairBetas {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl PairBetas {
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = a * self.n - a * (a + 1) / 2 + (b - a - 1);
        &self.data[idx * self.p..(idx + 1) * self.p]
    }
}

/// Result of the single-pair profile regression.
#[derive(Clone, Debug)]
pub struct PairLsq {
    pub beta: Vec<f64>,
    /// Mean squared residual at the minimum: the q2 value.
    pub mean_sq: f64,
    /// Number of common observed partners used.
    pub overlap: usize,
}

/// Regress Y_ik - Y_jk on W_ik - W_jk over the common observed partners
/// k != i, j. Unconstrained coefficient space: rank-deficient designs take
/// the minimum-norm solution.
pub fn pairwise_lsq(
    ds: &DyadicDataset,
    w: &CovariateTensor,
    i: usize,
    j: usize,
) -> Result<PairLsq> {
    let n = ds.n();
    let p = w.p();
    let mut acc = GramAccum::new(p);
    let mut dw = vec![0.0; p];
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
    if acc.count == 0 {
        return Err(Error::EmptyOverlap { i, j });
    }
    let beta = acc.solve_min_norm();
    let mean_sq = acc.mean_sq_residual(&beta, acc.count);
    Ok(PairLsq { beta, mean_sq, overlap: acc.count })
}

#[derive(Clone, Copy, Debug)]
pub struct Q2Config {
    /// Pairs with fewer common observed partners than this are undefined.
    pub overlap_floor: usize,
    pub keep_beta: bool,
}

impl Default for Q2Config {
    fn default() -> Self {
        Q2Config { overlap_floor: 5, keep_beta: false }
    }
}

/// Raw profile-regression residuals q2 for every pair.
#[derive(Clone, Debug)]
pub struct Q2Matrix {
    pub q2: DyadMatrix,
    pub defined: DyadMask,
    pub per_pair_beta: Option<PairBetas>,
}

pub fn q2_matrix(ds: &DyadicDataset, w: &CovariateTensor, cfg: &Q2Config) -> Result<Q2Matrix> {
    let n = ds.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "q2_matrix", expected: n, got: w.n() });
    }
    let p = w.p();
    let pairs = pair_list(n);
    let rows: Vec<(f64, bool, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(i, j)| match pairwise_lsq(ds, w, i, j) {
            Ok(r) if r.overlap >= cfg.overlap_floor => (r.mean_sq, true, r.beta),
            _ => (f64::INFINITY, false, vec![0.0; p]),
        })
        .collect();

    let mut q2 = Vec::with_capacity(pair_count(n));
    let mut defined = Vec::with_capacity(pair_count(n));
    let mut betas = Vec::with_capacity(if cfg.keep_beta { pair_count(n) * p } else { 0 });
    for (v, ok, b) in rows {
        q2.push(v);
        defined.push(ok);
        if cfg.keep_beta {
            betas.extend_from_slice(&b);
        }
    }
    Ok(Q2Matrix {
        q2: DyadMatrix::from_packed(n, q2),
        defined: mask_from_packed(n, defined),
        per_pair_beta: cfg.keep_beta.then_some(PairBetas { n, p, data: betas }),
    })
}

/// Noise-floor estimate: half the minimum defined q2.
pub fn sigma2_hat(q2: &Q2Matrix) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (i, j, v) in q2.q2.iter_pairs() {
        if q2.defined.get(i, j) && v < min {
            min = v;
        }
    }
    if !min.is_finite() {
        return Err(Error::Degenerate("no pair has enough overlap to define q2".into()));
    }
    Ok(0.5 * min)
}

/// Homoskedastic squared distances: q2 minus the estimated noise floor,
/// clamped at zero. The minimizing pair sits exactly at zero.
pub fn d2_homoskedastic(
    ds: &DyadicDataset,
    w: &CovariateTensor,
    cfg: &Q2Config,
) -> Result<PseudoDistanceMatrix> {
    let q2 = q2_matrix(ds, w, cfg)?;
    let s2 = sigma2_hat(&q2)?;
    let floor = 2.0 * s2;
    let mut d2 = q2.q2;
    for v in d2.values_mut() {
        if v.is_finite() {
            *v = (*v - floor).max(0.0);
        }
    }
    Ok(PseudoDistanceMatrix {
        d2,
        defined: q2.defined,
        provenance: Provenance::Homoskedastic,
        sigma2_hat: Some(s2),
        per_pair_beta: q2.per_pair_beta,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct HeteroConfig {
    /// Drop k in {i, j} from the sum. The defining equation keeps them (the
    /// denoised matrix has a diagonal), which is the default.
    pub exclude_own: bool,
    pub keep_beta: bool,
}

impl Default for HeteroConfig {
    fn default() -> Self {
        HeteroConfig { exclude_own: false, keep_beta: false }
    }
}

/// Heteroskedasticity-robust squared distances: the profile regression run on
/// a denoised outcome matrix, summing over all partners k (the denoised
/// matrix carries a diagonal, so k = i and k = j contribute too).
pub fn d2_heteroskedastic(
    ystar: &SymMatrix,
    w: &CovariateTensor,
    cfg: &HeteroConfig,
) -> Result<PseudoDistanceMatrix> {
    let n = ystar.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "d2_heteroskedastic", expected: n, got: w.n() });
    }
    let p = w.p();
    let pairs = pair_list(n);
    let rows: Vec<(f64, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = GramAccum::new(p);
            let mut dw = vec![0.0; p];
            for k in 0..n {
                if cfg.exclude_own && (k == i || k == j) {
                    continue;
                }
                let dy = ystar.get(i, k) - ystar.get(j, k);
                // denoised inputs may carry unproduced (NaN) entries
                if !dy.is_finite() {
                    continue;
                }
                let (wi, wj) = (w.get(i, k), w.get(j, k));
                for t in 0..p {
                    dw[t] = wi[t] - wj[t];
                }
                acc.add(&dw, dy);
            }
            if acc.count == 0 {
                return (f64::INFINITY, vec![0.0; p]);
            }
            let beta = acc.solve_min_norm();
            let d2 = acc.mean_sq_residual(&beta, acc.count);
            (d2, beta)
        })
        .collect();

    let mut d2 = Vec::with_capacity(pair_count(n));
    let mut defined = DyadMask::filled(n, true);
    let mut betas = Vec::with_capacity(if cfg.keep_beta { pair_count(n) * p } else { 0 });
    for (&(i, j), (v, b)) in pairs.iter().zip(rows) {
        d2.push(v);
        if !v.is_finite() {
            defined.set(i, j, false);
        }
        if cfg.keep_beta {
            betas.extend_from_slice(&b);
        }
    }
    Ok(PseudoDistanceMatrix {
        d2: DyadMatrix::from_packed(n, d2),
        defined,
        provenance: Provenance::Heteroskedastic,
        sigma2_hat: None,
        per_pair_beta: cfg.keep_beta.then_some(PairBetas { n, p, data: betas }),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DInfConfig {
    /// Minimum |O_ijk| for partner k to enter the max (missing data only).
    pub overlap_floor: usize,
}

impl Default for DInfConfig {
    fn default() -> Self {
        DInfConfig { overlap_floor: 5 }
    }
}

/// Similarity distance d_inf^2(i, j): the largest absolute average
/// correlation of the profile difference Y_i. - Y_j. with any third agent's
/// profile. Pairs outside the X-matching rule are skipped (+inf); they are
/// never needed downstream. With missing data, each k averages over the
/// triple-observed partners O_ijk and is dropped below the overlap floor;
/// a pair with no usable k is undefined (+inf).
pub fn d_infty_matrix(
    ds: &DyadicDataset,
    rule: &XRule,
    cfg: &DInfConfig,
) -> Result<DyadMatrix> {
    let n = ds.n();
    if n < 4 {
        return Err(Error::Degenerate(format!("d_inf needs n >= 4, got {n}")));
    }
    if ds.is_complete() {
        d_infty_complete(ds, rule)
    } else {
        d_infty_masked(ds, rule, cfg)
    }
}

/// Complete-data path in O(n^3) via the outcome Gram matrix:
/// sum_{l != i,j,k} (Y_il - Y_jl) Y_kl = G_ik - G_jk - Y_ij (Y_kj - Y_ki)
/// with G = A A and A the outcome matrix with a zeroed diagonal.
fn d_infty_complete(ds: &DyadicDataset, rule: &XRule) -> Result<DyadMatrix> {
    let n = ds.n();
    let a = ds.y.to_dense_zero_diag();
    let g = &a * &a;
    let norm = 1.0 / (n as f64 - 3.0);
    let pairs = pair_list(n);
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if !rule.compatible(&ds.x, i, j) {
                return f64::INFINITY;
            }
            let yij = a[(i, j)];
            let mut best = f64::NEG_INFINITY;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let t = g[(i, k)] - g[(j, k)] - yij * (a[(k, j)] - a[(k, i)]);
                let cand = (t * norm).abs();
                if cand > best {
                    best = cand;
                }
            }
            best
        })
        .collect();
    Ok(DyadMatrix::from_packed(n, vals))
}

fn d_infty_masked(ds: &DyadicDataset, rule: &XRule, cfg: &DInfConfig) -> Result<DyadMatrix> {
    let n = ds.n();
    // dense row-major copies: dm = observation indicators, b = masked outcomes
    let mut dm = vec![0.0f64; n * n];
    let mut b = vec![0.0f64; n * n];
    for (i, j, y) in ds.y.iter_pairs() {
        if ds.mask.get(i, j) {
            dm[i * n + j] = 1.0;
            dm[j * n + i] = 1.0;
            b[i * n + j] = y;
            b[j * n + i] = y;
        }
    }
    let floor = cfg.overlap_floor.max(1) as f64;
    let pairs = pair_list(n);
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if !rule.compatible(&ds.x, i, j) {
                return f64::INFINITY;
            }
            let (di, dj) = (&dm[i * n..(i + 1) * n], &dm[j * n..(j + 1) * n]);
            let (bi, bj) = (&b[i * n..(i + 1) * n], &b[j * n..(j + 1) * n]);
            // u marks l observed by both i and j; v is the masked profile gap
            let mut u = vec![0.0; n];
            let mut v = vec![0.0; n];
            for l in 0..n {
                let m = di[l] * dj[l];
                u[l] = m;
                v[l] = m * (bi[l] - bj[l]);
            }
            let mut best = f64::NEG_INFINITY;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (dk, bk) = (&dm[k * n..(k + 1) * n], &b[k * n..(k + 1) * n]);
                let mut count = 0.0;
                let mut numer = 0.0;
                for l in 0..n {
                    count += dk[l] * u[l];
                    numer += bk[l] * v[l];
                }
                if count < floor {
                    continue;
                }
                let cand = (numer / count).abs();
                if cand > best {
                    best = cand;
                }
            }
            if best.is_finite() {
                best
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(DyadMatrix::from_packed(n, vals))
}

fn mask_from_packed(n: usize, bits: Vec<bool>) -> DyadMask {
    let mut m = DyadMask::filled(n, false);
    let mut t = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if bits[t] {
                m.set(i, j, true);
            }
            t += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::DyadMatrix;
    use crate::model::{build_covariates, CoordMap, CovariateMap, XProfile};

    fn tiny_cfg() -> Q2Config {
        Q2Config { overlap_floor: 1, keep_beta: true }
    }

    /// Hand-computed 4-agent instance: pair (0, 1) regression over k in {2, 3}
    /// has beta = 18/34 and q2 = 68/289.
    #[test]
    fn pairwise_lsq_matches_hand_computation() {
        let x = XProfile::scalar_continuous(vec![0.0, 1.0, 2.0, 3.0]);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let mut y = DyadMatrix::filled(4, 0.0);
        y.set(0, 2, 2.0);
        y.set(1, 2, 1.0);
        y.set(0, 3, 4.0);
        y.set(1, 3, 1.0);
        let ds = DyadicDataset::complete(y, x).unwrap();
        let r = pairwise_lsq(&ds, &w, 0, 1).unwrap();
        assert_eq!(r.overlap, 2);
        assert!((r.beta[0] - 9.0 / 17.0).abs() < 1e-14);
        assert!((r.mean_sq - 68.0 / 289.0).abs() < 1e-14);
    }

    /// Brute-force oracle: grid search with iterative zoom over the
    /// coefficient, entirely independent of the normal-equation route.
    fn grid_min_q2(dy: &[f64], dw: &[f64]) -> f64 {
        let mut center = 0.0;
        let mut half_width = 100.0;
        let mut best = f64::INFINITY;
        for _ in 0..60 {
            let mut best_b = center;
            for t in 0..=40 {
                let b = center - half_width + 2.0 * half_width * t as f64 / 40.0;
                let v: f64 = dy.iter().zip(dw).map(|(y, w)| (y - w * b) * (y - w * b)).sum::<f64>()
                    / dy.len() as f64;
                if v < best {
                    best = v;
                    best_b = b;
                }
            }
            center = best_b;
            half_width *= 0.25;
        }
        best
    }

    #[test]
    fn q2_agrees_with_grid_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let n = 8;
            let x = XProfile::scalar_continuous((0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect());
            let w =
                build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
            let y = DyadMatrix::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let ds = DyadicDataset::complete(y, x).unwrap();
            let q2 = q2_matrix(&ds, &w, &tiny_cfg()).unwrap();
            for (i, j, v) in q2.q2.iter_pairs() {
                let mut dy = Vec::new();
                let mut dw = Vec::new();
                for k in 0..n {
                    if k != i && k != j {
                        dy.push(ds.y.get(i, k) - ds.y.get(j, k));
                        dw.push(w.get(i, k)[0] - w.get(j, k)[0]);
                    }
                }
                let oracle = grid_min_q2(&dy, &dw);
                assert!((v - oracle).abs() <= 1e-8 * (1.0 + oracle), "pair ({i},{j}): {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn q2_matrix_equals_pairwise_calls_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 6;
        let x = XProfile::scalar_continuous((0..n).map(|_| rng.random::<f64>()).collect());
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let y = DyadMatrix::from_fn(n, |_, _| rng.random::<f64>());
        let ds = DyadicDataset::complete(y, x).unwrap();
        let q2 = q2_matrix(&ds, &w, &tiny_cfg()).unwrap();
        for (i, j, v) in q2.q2.iter_pairs() {
            let direct = pairwise_lsq(&ds, &w, i, j).unwrap();
            assert_eq!(v, direct.mean_sq);
            assert_eq!(q2.per_pair_beta.as_ref().unwrap().get(i, j), direct.beta.as_slice());
        }
    }

    #[test]
    fn homoskedastic_distance_floors_at_zero() {
        let spec = crate::sim::DgpSpec::gaussian(30, 0.5, 17);
        let (ds, _) = crate::sim::simulate_gaussian_homophily(&spec).unwrap();
        let w = build_covariates(&ds.x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let d = d2_homoskedastic(&ds, &w, &Q2Config::default()).unwrap();
        let mut min = f64::INFINITY;
        for (_, _, v) in d.d2.iter_pairs() {
            assert!(v >= 0.0);
            min = min.min(v);
        }
        assert_eq!(min, 0.0, "minimizing pair sits exactly at zero");
        assert!(d.sigma2_hat.unwrap() > 0.0);
    }

    /// sigma2_hat halves the minimum q2: verified on a noiseless duplicate
    /// design where the duplicate pair has q2 = 0.
    #[test]
    fn noiseless_duplicates_zero_the_floor() {
        let n = 8;
        let xi: Vec<f64> = vec![0.3, 0.3, -0.8, 1.2, 0.05, -1.4, 0.9, 2.0];
        let xv: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 2.0).collect();
        let y = DyadMatrix::from_fn(n, |i, j| {
            -2.0 * (xv[i] - xv[j]) * (xv[i] - xv[j]) - (xi[i] - xi[j]) * (xi[i] - xi[j])
        });
        let x = XProfile::scalar_continuous(xv);
        let ds = DyadicDataset::complete(y, x).unwrap();
        let w = build_covariates(&ds.x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let q2 = q2_matrix(&ds, &w, &tiny_cfg()).unwrap();
        // agents 0, 1 are xi-duplicates: the profile regression fits exactly
        assert!(q2.q2.get(0, 1) < 1e-18);
        assert!(sigma2_hat(&q2).unwrap() < 1e-18);
        let b = q2.per_pair_beta.as_ref().unwrap().get(0, 1);
        assert!((b[0] + 2.0).abs() < 1e-9, "duplicate pair recovers beta0, got {}", b[0]);
    }

    /// 4-agent d_inf by hand: normalization 1/(n-3) = 1, single l per k.
    #[test]
    fn d_inf_matches_hand_computation() {
        let mut y = DyadMatrix::filled(4, 0.0);
        y.set(0, 1, 7.0);
        y.set(0, 2, 2.0);
        y.set(1, 2, 1.0);
        y.set(0, 3, 4.0);
        y.set(1, 3, 1.0);
        y.set(2, 3, 5.0);
        let ds = DyadicDataset::complete(y, XProfile::scalar_continuous(vec![0.0; 4])).unwrap();
        let d = d_infty_matrix(&ds, &XRule::IgnoreX, &DInfConfig { overlap_floor: 1 }).unwrap();
        // pair (0,1): k=2 -> (Y_03 - Y_13) Y_23 = 15; k=3 -> (Y_02 - Y_12) Y_32 = 5
        assert_eq!(d.get(0, 1), 15.0);
    }

    /// Naive O(n^4) triple-loop oracle for the complete-data similarity
    /// distance; the Gram-product path must reproduce it to rounding error.
    fn d_inf_naive(ds: &DyadicDataset, i: usize, j: usize) -> f64 {
        let n = ds.n();
        let mut best = f64::NEG_INFINITY;
        let yy = |a: usize, b: usize| if a == b { 0.0 } else { ds.y.get(a, b) };
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let mut s = 0.0;
            for l in 0..n {
                if l == i || l == j || l == k {
                    continue;
                }
                s += (yy(i, l) - yy(j, l)) * yy(k, l);
            }
            best = best.max((s / (n as f64 - 3.0)).abs());
        }
        best
    }

    #[test]
    fn d_inf_gram_path_matches_naive_loops() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let n = 7;
        let y = DyadMatrix::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let ds = DyadicDataset::complete(y, XProfile::scalar_continuous(vec![0.0; n])).unwrap();
        let d = d_infty_matrix(&ds, &XRule::IgnoreX, &DInfConfig::default()).unwrap();
        for (i, j, v) in d.iter_pairs() {
            let oracle = d_inf_naive(&ds, i, j);
            assert!((v - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "({i},{j}): {v} vs {oracle}");
        }
    }

    /// Masked-path oracle with per-k overlap counting.
    fn d_inf_naive_masked(ds: &DyadicDataset, i: usize, j: usize, floor: usize) -> f64 {
        let n = ds.n();
        let obs = |a: usize, b: usize| a != b && ds.mask.get(a, b);
        let mut best = f64::NEG_INFINITY;
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let mut s = 0.0;
            let mut c = 0usize;
            for l in 0..n {
                if obs(i, l) && obs(j, l) && obs(k, l) {
                    s += (ds.y.get(i, l) - ds.y.get(j, l)) * ds.y.get(k, l);
                    c += 1;
                }
            }
            if c >= floor.max(1) {
                best = best.max((s / c as f64).abs());
            }
        }
        if best.is_finite() {
            best
        } else {
            f64::INFINITY
        }
    }

    #[test]
    fn d_inf_masked_matches_naive_loops() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let n = 9;
        let y = DyadMatrix::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let mask = crate::mat::DyadMask::from_fn_upper(n, |_, _| rng.random::<f64>() < 0.7);
        let ds = DyadicDataset::new(y, mask, XProfile::scalar_continuous(vec![0.0; n]), None).unwrap();
        let cfg = DInfConfig { overlap_floor: 2 };
        let d = d_infty_matrix(&ds, &XRule::IgnoreX, &cfg).unwrap();
        for (i, j, v) in d.iter_pairs() {
            let oracle = d_inf_naive_masked(&ds, i, j, 2);
            if oracle.is_infinite() {
                assert!(v.is_infinite(), "({i},{j}) should be undefined");
            } else {
                assert!((v - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "({i},{j}): {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn overlap_floor_marks_pairs_undefined() {
        let n = 8;
        let y = DyadMatrix::filled(n, 1.0);
        // agent 0 observes only agent 1: overlap of (0, j) is tiny
        let mask = crate::mat::DyadMask::from_fn_upper(n, |i, j| i != 0 || j == 1);
        let ds = DyadicDataset::new(y, mask, XProfile::scalar_continuous(vec![0.0; n]), None).unwrap();
        let w = build_covariates(&ds.x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let q2 = q2_matrix(&ds, &w, &Q2Config { overlap_floor: 5, keep_beta: false }).unwrap();
        assert!(!q2.defined.get(0, 2), "overlap 0 < floor");
        assert!(q2.defined.get(2, 3));
        assert!(q2.q2.get(0, 2).is_infinite());
    }

    #[test]
    fn hetero_distance_agrees_with_grid_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let n = 8;
        let x = XProfile::scalar_continuous((0..n).map(|_| rng.random::<f64>() * 2.0).collect());
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1)).unwrap();
        let ystar = SymMatrix::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let d = d2_heteroskedastic(&ystar, &w, &HeteroConfig::default()).unwrap();
        for (i, j, v) in d.d2.iter_pairs() {
            let mut dy = Vec::new();
            let mut dw = Vec::new();
            for k in 0..n {
                dy.push(ystar.get(i, k) - ystar.get(j, k));
                dw.push(w.get(i, k)[0] - w.get(j, k)[0]);
            }
            let oracle = grid_min_q2(&dy, &dw);
            assert!((v - oracle).abs() <= 1e-8 * (1.0 + oracle), "({i},{j}): {v} vs {oracle}");
        }
        // exclusion flag drops k = i, j
        let dx = d2_heteroskedastic(&ystar, &w, &HeteroConfig { exclude_own: true, keep_beta: false })
            .unwrap();
        for (i, j, v) in dx.d2.iter_pairs() {
            let mut dy = Vec::new();
            let mut dw = Vec::new();
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                dy.push(ystar.get(i, k) - ystar.get(j, k));
                dw.push(w.get(i, k)[0] - w.get(j, k)[0]);
            }
            let oracle = grid_min_q2(&dy, &dw);
            assert!((v - oracle).abs() <= 1e-8 * (1.0 + oracle));
        }
    }

    #[test]
    fn exact_rule_skips_incompatible_pairs() {
        let n = 6;
        let x = XProfile::scalar_discrete(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let y = DyadMatrix::from_fn(n, |i, j| (i + j) as f64);
        let ds = DyadicDataset::complete(y, x).unwrap();
        let d = d_infty_matrix(&ds, &XRule::ExactDiscrete, &DInfConfig::default()).unwrap();
        assert!(d.get(0, 1).is_infinite(), "cross-group pair not computed");
        assert!(d.get(0, 2).is_finite());
    }
}
