//! Packed symmetric matrix storage.
//!
//! Dyadic outcomes have no self-loops, so [`DyadMatrix`] stores only the
//! strict upper triangle; the diagonal is structurally absent rather than a
//! sentinel value. Denoised matrices and fixed-effect surfaces do carry a
//! diagonal and use [`SymMatrix`].

use serde::{Deserialize, Serialize};

/// Symmetric n-by-n matrix without a diagonal, packed row-major over i < j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Symmetric n-by-n matrix with a diagonal, packed row-major over i <= j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Boolean companion to [`DyadMatrix`], e.g. observation masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadMask {
    n: usize,
    data: Vec<bool>,
}

/// Boolean companion to [`SymMatrix`] (diagonal included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMask {
    n: usize,
    data: Vec<bool>,
}

#[inline]
fn strict_upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n, "dyad index ({i}, {j}) out of range for n = {n}");
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

#[inline]
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n, "index ({i}, {j}) out of range for n = {n}");
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Number of unordered pairs over n agents.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// All unordered pairs (i, j), i < j, in lexicographic order.
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

impl DyadMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        DyadMatrix { n, data: vec![value; pair_count(n)] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in (i + 1)..n {
                data.push(f(i, j));
            }
        }
        DyadMatrix { n, data }
    }

    /// Build from packed strict-upper values in lexicographic (i, j) order.
    pub fn from_packed(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), pair_count(n), "packed length mismatch");
        DyadMatrix { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Value for the unordered pair {i, j}; i == j is a programming error.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.data[strict_upper_index(self.n, a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.data[strict_upper_index(self.n, a, b)] = v;
    }

    /// Packed values in lexicographic (i, j) order.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Iterate (i, j, value) over i < j in lexicographic order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.data.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    /// Dense copy with zeros on the diagonal; used by matrix-product paths.
    pub fn to_dense_zero_diag(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter_pairs() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

impl SymMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        SymMatrix { n, data: vec![value; n * (n + 1) / 2] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[upper_index(self.n, a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[upper_index(self.n, a, b)] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Iterate (i, j, value) over i <= j in lexicographic order.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i..n).map(move |j| (i, j)))
            .zip(self.data.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    /// Max absolute entry over i <= j.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl DyadMask {
    pub fn filled(n: usize, value: bool) -> Self {
        DyadMask { n, data: vec![value; pair_count(n)] }
    }

    /// Build by evaluating f over i < j in lexicographic order.
    pub fn from_fn_upper(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in (i + 1)..n {
                data.push(f(i, j));
            }
        }
        DyadMask { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.data[strict_upper_index(self.n, a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.data[strict_upper_index(self.n, a, b)] = v;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    /// Per-agent observation row: d[j] = mask(i, j) for j != i, false at j = i.
    pub fn row(&self, i: usize) -> Vec<bool> {
        let mut r = vec![false; self.n];
        for j in 0..self.n {
            if j != i {
                r[j] = self.get(i, j);
            }
        }
        r
    }
}

impl SymMask {
    pub fn filled(n: usize, value: bool) -> Self {
        SymMask { n, data: vec![value; n * (n + 1) / 2] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[upper_index(self.n, a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[upper_index(self.n, a, b)] = v;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyad_indexing_round_trip() {
        let n = 7;
        let mut m = DyadMatrix::filled(n, 0.0);
        let mut c = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                m.set(i, j, c);
                c += 1.0;
            }
        }
        let mut expect = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(m.get(i, j), expect);
                assert_eq!(m.get(j, i), expect, "symmetric access");
                expect += 1.0;
            }
        }
        assert_eq!(m.values().len(), pair_count(n));
    }

    #[test]
    fn sym_indexing_includes_diagonal() {
        let n = 5;
        let m = SymMatrix::from_fn(n, |i, j| (i * 10 + j) as f64);
        for i in 0..n {
            assert_eq!(m.get(i, i), (i * 10 + i) as f64);
            for j in (i + 1)..n {
                assert_eq!(m.get(i, j), (i * 10 + j) as f64);
                assert_eq!(m.get(j, i), m.get(i, j));
            }
        }
        assert_eq!(m.values().len(), n * (n + 1) / 2);
    }

    #[test]
    fn iter_pairs_is_lexicographic() {
        let m = DyadMatrix::from_fn(4, |i, j| (i * 4 + j) as f64);
        let got: Vec<_> = m.iter_pairs().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(got, pair_list(4));
    }

    #[test]
    fn dense_copy_zeros_diagonal() {
        let m = DyadMatrix::from_fn(3, |_, _| 1.5);
        let d = m.to_dense_zero_diag();
        assert_eq!(d[(0, 0)], 0.0);
        assert_eq!(d[(1, 2)], 1.5);
        assert_eq!(d[(2, 1)], 1.5);
    }
}
