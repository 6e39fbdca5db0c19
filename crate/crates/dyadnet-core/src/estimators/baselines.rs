//! Naive baselines: additive two-way fixed effects and dyadic logit MLE.
//! Both ignore non-additive heterogeneity; they anchor the bias comparisons.

use nalgebra::{DMatrix, DVector};

use super::{EstimateReport, EstimatorKind};
use crate::error::{Error, Result};
use crate::lsq::RCOND;
use crate::model::{CovariateTensor, DyadicDataset};

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// OLS of Y_ij on W_ij plus additive agent dummies alpha_i + alpha_j.
/// All n dummies enter without an intercept; the fitted span is identical to
/// any drop-one-dummy-plus-intercept parametrization, so beta is unaffected
/// by that choice. Solved by spectral pseudoinverse of the normal equations:
/// a null direction confined to the dummies (e.g. a bipartite observation
/// graph) is harmless, but one touching the beta coordinates is an error.
pub fn fe_additive_beta(ds: &DyadicDataset, w: &CovariateTensor) -> Result<EstimateReport> {
    let n = ds.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "fe_additive_beta", expected: n, got: w.n() });
    }
    let p = w.p();

    let mut parent: Vec<usize> = (0..n).collect();
    let mut observed = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if ds.mask.get(i, j) {
                observed += 1;
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                parent[ra] = rb;
            }
        }
    }
    let root = find(&mut parent, 0);
    if (0..n).any(|i| find(&mut parent, i) != root) {
        return Err(Error::Identification(
            "agent fixed effects need a connected observation graph".into(),
        ));
    }

    let dim = p + n;
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut moment = DVector::<f64>::zeros(dim);
    for i in 0..n {
        for j in (i + 1)..n {
            if !ds.mask.get(i, j) {
                continue;
            }
            let wv = w.get(i, j);
            let y = ds.y.get(i, j);
            for a in 0..p {
                moment[a] += wv[a] * y;
                for b in 0..p {
                    gram[(a, b)] += wv[a] * wv[b];
                }
                gram[(a, p + i)] += wv[a];
                gram[(a, p + j)] += wv[a];
                gram[(p + i, a)] += wv[a];
                gram[(p + j, a)] += wv[a];
            }
            gram[(p + i, p + i)] += 1.0;
            gram[(p + j, p + j)] += 1.0;
            gram[(p + i, p + j)] += 1.0;
            gram[(p + j, p + i)] += 1.0;
            moment[p + i] += y;
            moment[p + j] += y;
        }
    }

    let eig = gram.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if max_eig <= 0.0 {
        return Err(Error::Degenerate("no observed dyads".into()));
    }
    let cut = RCOND * max_eig;
    let mut theta = DVector::<f64>::zeros(dim);
    let mut min_eig = f64::INFINITY;
    for k in 0..dim {
        let lambda = eig.eigenvalues[k];
        min_eig = min_eig.min(lambda);
        let v = eig.eigenvectors.column(k);
        if lambda > cut {
            theta += v * (v.dot(&moment) / lambda);
        } else if (0..p).any(|a| v[a].abs() > 1e-7) {
            // a null direction with covariate loading means beta itself is
            // not identified, not just the dummy normalization
            return Err(Error::SingularDesign { min_rel: lambda / max_eig, threshold: RCOND });
        }
    }

    let mut rep = EstimateReport::new(EstimatorKind::FeAdditive, theta.as_slice()[..p].to_vec());
    rep.active_pairs = observed;
    rep.gram_min_eigen = min_eig;
    Ok(rep)
}

/// Logistic MLE of the observed binary outcomes on an intercept plus W,
/// fitted by iteratively reweighted least squares (Newton) with step
/// halving. Coefficients running past +-30 are declared separated.
pub fn logit_mle_beta(ds: &DyadicDataset, w: &CovariateTensor) -> Result<EstimateReport> {
    let n = ds.n();
    if w.n() != n {
        return Err(Error::Dimension { context: "logit_mle_beta", expected: n, got: w.n() });
    }
    let p = w.p();
    let dim = p + 1;
    const SEP_BOUND: f64 = 30.0;
    const MAX_ITER: usize = 100;
    const GRAD_TOL: f64 = 1e-8;

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if !ds.mask.get(i, j) {
                continue;
            }
            let y = ds.y.get(i, j);
            if y != 0.0 && y != 1.0 {
                return Err(Error::Invalid(format!(
                    "logit MLE needs binary outcomes, found Y({i},{j}) = {y}"
                )));
            }
            let mut x = Vec::with_capacity(dim);
            x.push(1.0);
            x.extend_from_slice(w.get(i, j));
            rows.push((x, y));
        }
    }
    if rows.is_empty() {
        return Err(Error::Degenerate("no observed dyads".into()));
    }

    let nll = |theta: &DVector<f64>| -> f64 {
        rows.iter()
            .map(|(x, y)| {
                let idx: f64 = x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
                // -log L = log(1 + e^idx) - y * idx, computed stably
                idx.max(0.0) + (-idx.abs()).exp().ln_1p() - y * idx
            })
            .sum()
    };

    let mut theta = DVector::<f64>::zeros(dim);
    let mut obj = nll(&theta);
    for iter in 0..MAX_ITER {
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for (x, y) in &rows {
            let idx: f64 = x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-idx).exp());
            let r = y - mu;
            let wgt = mu * (1.0 - mu);
            for a in 0..dim {
                grad[a] += x[a] * r;
                for b in 0..dim {
                    hess[(a, b)] += x[a] * x[b] * wgt;
                }
            }
        }
        let grad_norm = grad.amax();
        if grad_norm <= GRAD_TOL {
            let eig_min = hess.clone().symmetric_eigen().eigenvalues.min();
            let mut rep =
                EstimateReport::new(EstimatorKind::LogitMle, theta.as_slice()[1..].to_vec());
            rep.intercept = Some(theta[0]);
            rep.active_pairs = rows.len();
            rep.gram_min_eigen = eig_min;
            return Ok(rep);
        }
        let step = hess
            .clone()
            .cholesky()
            .map(|c| c.solve(&grad))
            .ok_or(Error::SingularDesign { min_rel: 0.0, threshold: RCOND })?;
        let mut scale = 1.0;
        let mut next = &theta + &step * scale;
        let mut next_obj = nll(&next);
        let mut halvings = 0;
        // Monotone test with a noise allowance: near the optimum the true
        // decrease sinks below the summation noise of a many-term NLL, and a
        // strict comparison rejects genuine Newton steps.
        let noise = 1e-10 * (1.0 + obj.abs());
        while next_obj > obj + noise && halvings < 8 {
            scale *= 0.5;
            next = &theta + &step * scale;
            next_obj = nll(&next);
            halvings += 1;
        }
        theta = next;
        obj = next_obj;
        if theta.amax() > SEP_BOUND {
            return Err(Error::Separation { bound: SEP_BOUND, iter });
        }
    }
    let final_grad = {
        let mut g = DVector::<f64>::zeros(dim);
        for (x, y) in &rows {
            let idx: f64 = x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-idx).exp());
            for a in 0..dim {
                g[a] += x[a] * (y - mu);
            }
        }
        g.amax()
    };
    Err(Error::NoConvergence { max_iter: MAX_ITER, grad_norm: final_grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{DyadMask, DyadMatrix};
    use crate::model::{build_covariates, CoordMap, CovariateMap, XProfile};
    use approx::assert_relative_eq;

    fn jitter(a: usize, b: usize) -> f64 {
        (((a * 2654435761 + b * 40503) % 10007) as f64) / 10007.0
    }

    #[test]
    fn fe_recovers_beta_under_additive_heterogeneity() {
        let n = 12;
        let beta0 = -1.0;
        let xv: Vec<f64> = (0..n).map(|i| jitter(i, 2) * 2.0 - 1.0).collect();
        let alpha: Vec<f64> = (0..n).map(|i| jitter(i, 9) * 3.0).collect();
        let x = XProfile::scalar_continuous(xv);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1))
            .unwrap();
        let y = DyadMatrix::from_fn(n, |i, j| w.get(i, j)[0] * beta0 + alpha[i] + alpha[j]);
        let ds = DyadicDataset::complete(y, x).unwrap();
        let rep = fe_additive_beta(&ds, &w).unwrap();
        assert!((rep.beta[0] - beta0).abs() < 1e-8, "beta = {}", rep.beta[0]);
    }

    /// Dense-design oracle: OLS via SVD on [W | dummies], plus the drop-one
    /// dummy-with-intercept parametrization; all three betas must agree.
    #[test]
    fn fe_matches_dense_ols_oracle() {
        let n = 7;
        let xv: Vec<f64> = (0..n).map(|i| jitter(i, 4) * 2.0).collect();
        let x = XProfile::scalar_continuous(xv);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::AbsoluteDifference, 1))
            .unwrap();
        let y = DyadMatrix::from_fn(n, |i, j| jitter(i, j) + 0.3 * w.get(i, j)[0]);
        let mask = DyadMask::from_fn_upper(n, |i, j| (i * 3 + j) % 7 != 0);
        let ds = DyadicDataset::new(y, mask, x, None).unwrap();
        let rep = fe_additive_beta(&ds, &w).unwrap();

        let rows: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| ds.mask.get(i, j))
            .collect();
        let m = rows.len();
        // all-dummies design
        let mut design = nalgebra::DMatrix::<f64>::zeros(m, 1 + n);
        // intercept + dummies 1..n design
        let mut design2 = nalgebra::DMatrix::<f64>::zeros(m, 1 + n);
        let mut yv = nalgebra::DVector::<f64>::zeros(m);
        for (r, &(i, j)) in rows.iter().enumerate() {
            design[(r, 0)] = w.get(i, j)[0];
            design[(r, 1 + i)] += 1.0;
            design[(r, 1 + j)] += 1.0;
            design2[(r, 0)] = w.get(i, j)[0];
            design2[(r, 1)] = 1.0; // intercept replaces the dropped dummy 0
            if i > 0 {
                design2[(r, 1 + i)] += 1.0;
            }
            if j > 0 {
                design2[(r, 1 + j)] += 1.0;
            }
            yv[r] = ds.y.get(i, j);
        }
        let svd = design.svd(true, true);
        let sol = svd.solve(&yv, 1e-12).unwrap();
        let svd2 = design2.svd(true, true);
        let sol2 = svd2.solve(&yv, 1e-12).unwrap();
        assert_relative_eq!(rep.beta[0], sol[0], max_relative = 1e-8);
        assert_relative_eq!(rep.beta[0], sol2[0], max_relative = 1e-8);
    }

    #[test]
    fn fe_rejects_disconnected_graphs() {
        let n = 6;
        let x = XProfile::scalar_continuous((0..n).map(|i| i as f64).collect());
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1))
            .unwrap();
        let y = DyadMatrix::filled(n, 1.0);
        // two cliques with no cross edges
        let mask = DyadMask::from_fn_upper(n, |i, j| (i < 3) == (j < 3));
        let ds = DyadicDataset::new(y, mask, x, None).unwrap();
        assert!(matches!(fe_additive_beta(&ds, &w), Err(Error::Identification(_))));
    }

    #[test]
    fn fe_rejects_covariates_collinear_with_dummies() {
        let n = 6;
        // equality indicator with all-equal X: W is constantly 1, which the
        // dummy span already contains
        let x = XProfile::scalar_discrete(vec![1.0; n]);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::EqualityIndicator, 1))
            .unwrap();
        let y = DyadMatrix::from_fn(n, |i, j| jitter(i, j));
        let ds = DyadicDataset::complete(y, x).unwrap();
        assert!(matches!(fe_additive_beta(&ds, &w), Err(Error::SingularDesign { .. })));
    }

    /// Oracle: projected gradient descent with backtracking on the negative
    /// log-likelihood, an independent optimization pathway.
    #[test]
    fn logit_matches_descent_oracle() {
        let n = 6;
        let xv = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let x = XProfile::scalar_discrete(xv);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::EqualityIndicator, 1))
            .unwrap();
        // mixed outcomes in both covariate classes: no separation
        let y = DyadMatrix::from_fn(n, |i, j| f64::from((i * 5 + j * 3) % 4 < 2));
        let ds = DyadicDataset::complete(y, x.clone()).unwrap();
        let rep = logit_mle_beta(&ds, &w).unwrap();

        let rows: Vec<([f64; 2], f64)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| ([1.0, w.get(i, j)[0]], ds.y.get(i, j)))
            .collect();
        let nll = |t: &[f64; 2]| -> f64 {
            rows.iter()
                .map(|(x, y)| {
                    let idx = x[0] * t[0] + x[1] * t[1];
                    idx.max(0.0) + (-idx.abs()).exp().ln_1p() - y * idx
                })
                .sum()
        };
        let mut t = [0.0_f64; 2];
        for _ in 0..200_000 {
            let mut g = [0.0_f64; 2];
            for (x, y) in &rows {
                let idx = x[0] * t[0] + x[1] * t[1];
                let mu = 1.0 / (1.0 + (-idx).exp());
                g[0] -= x[0] * (y - mu);
                g[1] -= x[1] * (y - mu);
            }
            if g[0].abs().max(g[1].abs()) < 1e-10 {
                break;
            }
            let mut step = 1.0;
            let base = nll(&t);
            loop {
                let cand = [t[0] - step * g[0], t[1] - step * g[1]];
                if nll(&cand) < base || step < 1e-12 {
                    t = cand;
                    break;
                }
                step *= 0.5;
            }
        }
        assert_relative_eq!(rep.intercept.unwrap(), t[0], epsilon = 1e-6);
        assert_relative_eq!(rep.beta[0], t[1], epsilon = 1e-6);
    }

    #[test]
    fn logit_detects_separation() {
        let n = 8;
        let xv: Vec<f64> = (0..n).map(|i| f64::from(i % 2 == 0)).collect();
        let x = XProfile::scalar_discrete(xv);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::EqualityIndicator, 1))
            .unwrap();
        // outcome is exactly the covariate: perfectly separated
        let y = DyadMatrix::from_fn(n, |i, j| w.get(i, j)[0]);
        let ds = DyadicDataset::complete(y, x).unwrap();
        assert!(matches!(logit_mle_beta(&ds, &w), Err(Error::Separation { .. })));
    }

    #[test]
    fn logit_rejects_nonbinary_outcomes() {
        let n = 5;
        let x = XProfile::scalar_discrete(vec![0.0; n]);
        let w = build_covariates(&x, &CovariateMap::uniform(CoordMap::SquaredDifference, 1))
            .unwrap();
        let y = DyadMatrix::filled(n, 0.5);
        let ds = DyadicDataset::complete(y, x).unwrap();
        assert!(matches!(logit_mle_beta(&ds, &w), Err(Error::Invalid(_))));
    }
}
