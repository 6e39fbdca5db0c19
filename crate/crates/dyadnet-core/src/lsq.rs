//! Small least-squares helpers shared by the pseudo-distance and estimation
//! code. Everything works on the normal equations: accumulate a p-by-p Gram
//! matrix and p-vector moment, then solve.
//!
//! The per-pair minimizations are unconstrained (coefficient space is all of
//! R^p), so rank-deficient Grams take the minimum-norm solution through a
//! spectral pseudoinverse with a relative cutoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff for the pseudoinverse: directions with
/// eigenvalue <= RCOND * max eigenvalue are treated as null.
pub const RCOND: f64 = 1e-10;

/// Accumulator for sum_k weight_k * (w_k w_k', w_k y_k, y_k^2).
#[derive(Clone, Debug)]
pub struct GramAccum {
    pub p: usize,
    /// Row-major p*p Gram (symmetric; both triangles kept filled).
    pub gram: Vec<f64>,
    pub moment: Vec<f64>,
    pub yy: f64,
    pub count: usize,
}

impl GramAccum {
    pub fn new(p: usize) -> Self {
        GramAccum { p, gram: vec![0.0; p * p], moment: vec![0.0; p], yy: 0.0, count: 0 }
    }

    #[inline]
    pub fn add(&mut self, w: &[f64], y: f64) {
        self.add_weighted(w, y, 1.0);
    }

    #[inline]
    pub fn add_weighted(&mut self, w: &[f64], y: f64, weight: f64) {
        debug_assert_eq!(w.len(), self.p);
        for a in 0..self.p {
            let wa = weight * w[a];
            self.moment[a] += wa * y;
            let row = a * self.p;
            for b in 0..self.p {
                self.gram[row + b] += wa * w[b];
            }
        }
        self.yy += weight * y * y;
        self.count += 1;
    }

    /// Merge another accumulator; used for deterministic chunked reductions.
    pub fn merge(&mut self, other: &GramAccum) {
        debug_assert_eq!(self.p, other.p);
        for (a, b) in self.gram.iter_mut().zip(&other.gram) {
            *a += b;
        }
        for (a, b) in self.moment.iter_mut().zip(&other.moment) {
            *a += b;
        }
        self.yy += other.yy;
        self.count += other.count;
    }

    pub fn gram_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.p, &self.gram)
    }

    pub fn moment_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.moment)
    }

    /// Minimum-norm least-squares coefficients for the accumulated system.
    pub fn solve_min_norm(&self) -> Vec<f64> {
        if self.p == 1 {
            // scalar fast path: dominates the per-pair distance loops
            let g = self.gram[0];
            if g > 0.0 {
                return vec![self.moment[0] / g];
            }
            return vec![0.0];
        }
        min_norm_solve(&self.gram_matrix(), &self.moment_vector())
    }

    /// Mean squared residual at the minimizer, clamped at zero.
    pub fn mean_sq_residual(&self, beta: &[f64], denom: usize) -> f64 {
        let fitted: f64 = beta.iter().zip(&self.moment).map(|(b, m)| b * m).sum();
        ((self.yy - fitted) / denom as f64).max(0.0)
    }
}

/// Minimum-norm solution of G beta = m for symmetric PSD G, via spectral
/// pseudoinverse with relative cutoff [`RCOND`].
pub fn min_norm_solve(gram: &DMatrix<f64>, moment: &DVector<f64>) -> Vec<f64> {
    let p = gram.nrows();
    let eig = gram.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if max_eig <= 0.0 {
        return vec![0.0; p];
    }
    let cut = RCOND * max_eig;
    let mut beta = DVector::zeros(p);
    for k in 0..p {
        let lambda = eig.eigenvalues[k];
        if lambda > cut {
            let v = eig.eigenvectors.column(k);
            beta += v * (v.dot(moment) / lambda);
        }
    }
    beta.iter().cloned().collect()
}

/// Solve G beta = m for symmetric positive-definite G, failing loudly when
/// the smallest eigenvalue is below `rel_tol` times the largest.
pub fn solve_spd_checked(
    gram: &DMatrix<f64>,
    moment: &DVector<f64>,
    rel_tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let eig = gram.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_eig > 0.0) || min_eig <= rel_tol * max_eig {
        return Err(Error::SingularDesign {
            min_rel: if max_eig > 0.0 { min_eig / max_eig } else { f64::NEG_INFINITY },
            threshold: rel_tol,
        });
    }
    let p = gram.nrows();
    let mut beta = DVector::zeros(p);
    for k in 0..p {
        let v = eig.eigenvectors.column(k);
        beta += v * (v.dot(moment) / eig.eigenvalues[k]);
    }
    Ok((beta.iter().cloned().collect(), min_eig))
}
