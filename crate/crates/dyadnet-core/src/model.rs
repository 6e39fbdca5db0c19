//! Core data model: symmetric dyadic outcomes with an observation mask,
//! per-agent covariate profiles, and the covariate maps that turn a pair of
//! profiles into the dyad-level regressor vector W(i, j).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::link::LinkSpec;
use crate::mat::{DyadMask, DyadMatrix};

/// Per-agent covariate records: n rows of k real coordinates, each coordinate
/// flagged discrete or continuous. Discrete string categories are stored as
/// integer codes assigned at ingest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XProfile {
    n: usize,
    k: usize,
    data: Vec<f64>,
    pub discrete: Vec<bool>,
}

impl XProfile {
    pub fn new(n: usize, k: usize, data: Vec<f64>, discrete: Vec<bool>) -> Result<Self> {
        if data.len() != n * k {
            return Err(Error::Dimension { context: "XProfile::new", expected: n * k, got: data.len() });
        }
        if discrete.len() != k {
            return Err(Error::Dimension { context: "XProfile flags", expected: k, got: discrete.len() });
        }
        Ok(XProfile { n, k, data, discrete })
    }

    /// Single continuous scalar covariate per agent.
    pub fn scalar_continuous(values: Vec<f64>) -> Self {
        let n = values.len();
        XProfile { n, k: 1, data: values, discrete: vec![false] }
    }

    /// Single discrete scalar covariate per agent.
    pub fn scalar_discrete(values: Vec<f64>) -> Self {
        let n = values.len();
        XProfile { n, k: 1, data: values, discrete: vec![true] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    /// Exact equality of the full records.
    pub fn records_equal(&self, i: usize, j: usize) -> bool {
        self.row(i) == self.row(j)
    }

    /// Exact equality restricted to the discrete coordinates.
    pub fn discrete_equal(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.row(i), self.row(j));
        self.discrete.iter().enumerate().all(|(c, &d)| !d || a[c] == b[c])
    }

    /// Squared Euclidean distance over the continuous coordinates.
    pub fn continuous_dist2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row(i), self.row(j));
        self.discrete
            .iter()
            .enumerate()
            .filter(|(_, &d)| !d)
            .map(|(c, _)| (a[c] - b[c]) * (a[c] - b[c]))
            .sum()
    }
}

/// Symmetric dyadic dataset: outcome y(i, j) for unordered pairs i != j, an
/// observation mask, and agent covariates. Unobserved outcome slots hold an
/// arbitrary placeholder and must never be read.
#[derive(Clone, Debug)]
pub struct DyadicDataset {
    pub y: DyadMatrix,
    pub mask: DyadMask,
    pub x: XProfile,
    pub ids: Vec<String>,
}

impl DyadicDataset {
    pub fn new(y: DyadMatrix, mask: DyadMask, x: XProfile, ids: Option<Vec<String>>) -> Result<Self> {
        let n = y.n();
        if mask.n() != n {
            return Err(Error::Dimension { context: "dataset mask", expected: n, got: mask.n() });
        }
        if x.n() != n {
            return Err(Error::Dimension { context: "dataset covariates", expected: n, got: x.n() });
        }
        let ids = ids.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        if ids.len() != n {
            return Err(Error::Dimension { context: "dataset ids", expected: n, got: ids.len() });
        }
        Ok(DyadicDataset { y, mask, x, ids })
    }

    /// Fully observed dataset.
    pub fn complete(y: DyadMatrix, x: XProfile) -> Result<Self> {
        let n = y.n();
        Self::new(y, DyadMask::filled(n, true), x, None)
    }

    /// Build from a dense symmetric matrix, rejecting asymmetries and
    /// non-finite entries.
    pub fn from_dense(dense: &DMatrix<f64>, x: XProfile) -> Result<Self> {
        let report = validate_dense(dense);
        if let Some(&(i, j, a, b)) = report.symmetry_violations.first() {
            return Err(Error::Symmetry(format!("y[{i}][{j}] = {a} but y[{j}][{i}] = {b}")));
        }
        if let Some(&(i, j)) = report.nonfinite.first() {
            return Err(Error::Invalid(format!("non-finite outcome at dyad ({i}, {j})")));
        }
        let n = dense.nrows();
        let y = DyadMatrix::from_fn(n, |i, j| dense[(i, j)]);
        Self::complete(y, x)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.n()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.all()
    }

    /// Observed outcome count per agent.
    pub fn degree_observed(&self, i: usize) -> usize {
        (0..self.n()).filter(|&j| j != i && self.mask.get(i, j)).count()
    }
}

/// Dyad-level regressors W(i, j) in R^p, symmetric in (i, j) and defined on
/// the diagonal as map(x_i, x_i).
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateTensor {
    n: usize,
    p: usize,
    /// Packed upper triangle including the diagonal, p entries per pair.
    data: Vec<f64>,
}

impl CovariateTensor {
    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        (a * (2 * self.n - a + 1) / 2 + (b - a)) * self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let s = self.slot(i, j);
        &self.data[s..s + self.p]
    }
}

/// One regressor coordinate: which transform, applied to which X coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordMap {
    SquaredDifference,
    EqualityIndicator,
    AbsoluteDifference,
}

impl CoordMap {
    #[inline]
    fn apply(&self, a: f64, b: f64) -> f64 {
        match self {
            CoordMap::SquaredDifference => (a - b) * (a - b),
            CoordMap::EqualityIndicator => {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            }
            CoordMap::AbsoluteDifference => (a - b).abs(),
        }
    }
}

/// Symmetric covariate map w(x_i, x_j): a concatenation of per-coordinate
/// transforms. Every term is symmetric, so W(i, j) = W(j, i) exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateMap {
    /// (transform, X coordinate index) per output regressor.
    pub terms: Vec<(CoordMap, usize)>,
}

impl CovariateMap {
    /// The same transform applied to each of the k coordinates in turn.
    pub fn uniform(kind: CoordMap, k: usize) -> Self {
        CovariateMap { terms: (0..k).map(|c| (kind, c)).collect() }
    }

    /// Parse `sqdiff` / `eq` / `absdiff` (applied to all coordinates) or a
    /// comma-separated concatenation like `sqdiff(x1),eq(x2)` with 1-based
    /// column references.
    pub fn parse(s: &str, k: usize) -> Result<Self> {
        let kind_of = |name: &str| -> Result<CoordMap> {
            match name {
                "sqdiff" | "squared-difference" => Ok(CoordMap::SquaredDifference),
                "eq" | "equality-indicator" => Ok(CoordMap::EqualityIndicator),
                "absdiff" | "absolute-difference" => Ok(CoordMap::AbsoluteDifference),
                other => Err(Error::Parameter(format!(
                    "unknown covariate map `{other}` (try sqdiff, eq, absdiff)"
                ))),
            }
        };
        if !s.contains('(') {
            return Ok(Self::uniform(kind_of(s.trim())?, k));
        }
        let mut terms = Vec::new();
        for raw in s.split(',') {
            let raw = raw.trim();
            let (name, rest) = raw
                .split_once('(')
                .ok_or_else(|| Error::Parameter(format!("malformed covariate term `{raw}`")))?;
            let col = rest
                .strip_suffix(')')
                .and_then(|c| c.trim().strip_prefix('x'))
                .and_then(|c| c.parse::<usize>().ok())
                .ok_or_else(|| Error::Parameter(format!("malformed covariate term `{raw}`")))?;
            if col == 0 || col > k {
                return Err(Error::Parameter(format!(
                    "covariate term `{raw}` references column x{col}, but X has {k} coordinate(s)"
                )));
            }
            terms.push((kind_of(name)?, col - 1));
        }
        if terms.is_empty() {
            return Err(Error::Parameter("empty covariate map".into()));
        }
        Ok(CovariateMap { terms })
    }

    pub fn p(&self) -> usize {
        self.terms.len()
    }

    pub fn apply_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for (t, &(kind, c)) in self.terms.iter().enumerate() {
            out[t] = kind.apply(a[c], b[c]);
        }
    }
}

/// Bundles the moving parts of a model configuration.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub covariate_map: CovariateMap,
    pub link: LinkSpec,
    pub kernel: KernelSpec,
}

impl ModelSpec {
    pub fn new(covariate_map: CovariateMap) -> Self {
        ModelSpec { covariate_map, link: LinkSpec::default(), kernel: KernelSpec::default() }
    }
}

/// Materialize W(i, j) for all pairs including the diagonal.
pub fn build_covariates(x: &XProfile, map: &CovariateMap) -> Result<CovariateTensor> {
    let n = x.n();
    let p = map.p();
    for &(_, c) in &map.terms {
        if c >= x.k() {
            return Err(Error::Dimension { context: "covariate map column", expected: x.k(), got: c });
        }
    }
    let mut data = vec![0.0; (n * (n + 1) / 2) * p];
    let mut s = 0;
    for i in 0..n {
        for j in i..n {
            map.apply_into(x.row(i), x.row(j), &mut data[s..s + p]);
            s += p;
        }
    }
    Ok(CovariateTensor { n, p, data })
}

/// Data quality findings; informational, not errors.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub observed_dyads: usize,
    /// (i, j, y_ij, y_ji) with y_ij != y_ji, from dense input.
    pub symmetry_violations: Vec<(usize, usize, f64, f64)>,
    pub nonfinite: Vec<(usize, usize)>,
    /// Agents with zero observed dyads.
    pub isolated_agents: Vec<usize>,
    /// Smallest number of common observed partners over all pairs.
    pub min_pair_overlap: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.symmetry_violations.is_empty() && self.nonfinite.is_empty() && self.isolated_agents.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "agents: {}", self.n)?;
        writeln!(f, "observed dyads: {}", self.observed_dyads)?;
        writeln!(f, "symmetry violations: {}", self.symmetry_violations.len())?;
        for &(i, j, a, b) in self.symmetry_violations.iter().take(10) {
            writeln!(f, "  ({i}, {j}): {a} vs {b}")?;
        }
        writeln!(f, "non-finite entries: {}", self.nonfinite.len())?;
        for &(i, j) in self.nonfinite.iter().take(10) {
            writeln!(f, "  ({i}, {j})")?;
        }
        writeln!(f, "isolated agents: {}", self.isolated_agents.len())?;
        writeln!(f, "min pairwise overlap: {}", self.min_pair_overlap)
    }
}

/// Validate a dense candidate outcome matrix (diagonal ignored).
pub fn validate_dense(dense: &DMatrix<f64>) -> ValidationReport {
    let n = dense.nrows();
    let mut report = ValidationReport { n, ..Default::default() };
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (dense[(i, j)], dense[(j, i)]);
            if a != b && !(a.is_nan() && b.is_nan()) {
                report.symmetry_violations.push((i, j, a, b));
            }
            if !a.is_finite() || !b.is_finite() {
                report.nonfinite.push((i, j));
            } else {
                report.observed_dyads += 1;
            }
        }
    }
    report
}

/// Validate an assembled dataset: finiteness of observed entries, isolated
/// agents, and the minimum pairwise overlap |O_ij| over pairs.
pub fn validate_dataset(ds: &DyadicDataset) -> ValidationReport {
    let n = ds.n();
    let mut report = ValidationReport { n, ..Default::default() };
    for i in 0..n {
        for j in (i + 1)..n {
            if ds.mask.get(i, j) {
                report.observed_dyads += 1;
                if !ds.y.get(i, j).is_finite() {
                    report.nonfinite.push((i, j));
                }
            }
        }
    }
    for i in 0..n {
        if ds.degree_observed(i) == 0 {
            report.isolated_agents.push(i);
        }
    }
    // overlap counts via bit rows; O(n^3 / 64)
    let words = n.div_ceil(64);
    let mut rows = vec![0u64; n * words];
    for i in 0..n {
        for j in 0..n {
            if j != i && ds.mask.get(i, j) {
                rows[i * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    let mut min_overlap = usize::MAX;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut c = 0u32;
            for w in 0..words {
                let mut inter = rows[i * words + w] & rows[j * words + w];
                // third agents only
                if i / 64 == w {
                    inter &= !(1 << (i % 64));
                }
                if j / 64 == w {
                    inter &= !(1 << (j % 64));
                }
                c += inter.count_ones();
            }
            min_overlap = min_overlap.min(c as usize);
        }
    }
    report.min_pair_overlap = if min_overlap == usize::MAX { 0 } else { min_overlap };
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_x() -> XProfile {
        XProfile::scalar_continuous(vec![0.0, 1.0, -1.0, 2.0])
    }

    #[test]
    fn covariate_maps_are_symmetric_and_diagonal_defined() {
        let x = XProfile::new(
            3,
            2,
            vec![1.0, 5.0, 2.0, 5.0, 1.0, 7.0],
            vec![false, true],
        )
        .unwrap();
        let map = CovariateMap::parse("sqdiff(x1),eq(x2)", 2).unwrap();
        let w = build_covariates(&x, &map).unwrap();
        assert_eq!(w.p(), 2);
        assert_eq!(w.get(0, 1), &[1.0, 1.0]);
        assert_eq!(w.get(1, 0), w.get(0, 1));
        assert_eq!(w.get(0, 2), &[0.0, 0.0]);
        assert_eq!(w.get(2, 2), &[0.0, 1.0], "diagonal uses map(x_i, x_i)");
    }

    #[test]
    fn uniform_map_covers_all_coordinates() {
        let map = CovariateMap::parse("absdiff", 3).unwrap();
        assert_eq!(map.p(), 3);
        let mut out = vec![0.0; 3];
        map.apply_into(&[1.0, 2.0, 3.0], &[0.0, 5.0, 3.0], &mut out);
        assert_eq!(out, vec![1.0, 3.0, 0.0]);
    }

    #[test]
    fn parse_rejects_bad_columns() {
        assert!(CovariateMap::parse("sqdiff(x3)", 2).is_err());
        assert!(CovariateMap::parse("nope", 2).is_err());
    }

    #[test]
    fn dense_validation_flags_asymmetry() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 2.0;
        let report = validate_dense(&m);
        assert_eq!(report.symmetry_violations, vec![(0, 1, 1.0, 2.0)]);
        assert!(DyadicDataset::from_dense(&m, XProfile::scalar_continuous(vec![0.0; 3])).is_err());
    }

    #[test]
    fn dataset_validation_counts_overlap() {
        let n = 4;
        let y = DyadMatrix::filled(n, 1.0);
        let mut mask = DyadMask::filled(n, true);
        mask.set(0, 3, false);
        mask.set(1, 3, false);
        mask.set(2, 3, false);
        let ds = DyadicDataset::new(y, mask, small_x(), None).unwrap();
        let report = validate_dataset(&ds);
        assert_eq!(report.isolated_agents, vec![3]);
        // pair (0, 1): common partners = {2}; agent 3 unobserved everywhere
        assert_eq!(report.min_pair_overlap, 0);
        assert!(!report.is_clean());
    }

    #[test]
    fn complete_dataset_overlap_is_n_minus_2() {
        let n = 5;
        let ds = DyadicDataset::complete(
            DyadMatrix::filled(n, 0.5),
            XProfile::scalar_continuous(vec![0.0; n]),
        )
        .unwrap();
        let report = validate_dataset(&ds);
        assert!(report.is_clean());
        assert_eq!(report.min_pair_overlap, n - 2);
        assert_eq!(report.observed_dyads, 10);
    }
}
