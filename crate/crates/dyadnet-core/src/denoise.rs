//! Outcome denoising by neighborhood averaging.
//!
//! Row averaging replaces Y_ij by the mean outcome that agent i's nearest
//! type-neighbors have with j; the paper convention sets Y_jj = 0 when j is
//! its own neighbor's partner, and we keep that convention so the denoised
//! matrix is defined on the diagonal. The unique-pair variant averages Y over
//! the deduplicated set of cross-neighborhood dyads and is exactly symmetric
//! by construction; row averaging is symmetrized by averaging the two
//! ordered entries.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::{SymMask, SymMatrix};
use crate::model::DyadicDataset;
use crate::neighbors::NeighborhoodIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenoiseKind {
    RowAverage,
    UniquePairAverage,
}

/// Denoised outcome surface with a diagonal. Entries that could not be
/// computed (no donors under missing data) hold NaN and are flagged.
#[derive(Clone, Debug)]
pub struct DenoisedMatrix {
    pub ystar: SymMatrix,
    pub kind: DenoiseKind,
    /// True where a value was produced.
    pub imputed: SymMask,
    /// Imputation rounds used (1 for plain denoising).
    pub rounds: usize,
}

impl DenoisedMatrix {
    pub fn is_complete(&self) -> bool {
        self.imputed.all()
    }
}

/// Donor value for entry (i', j): observed outcome, previously imputed value,
/// or the structural zero at i' = j.
#[inline]
fn donor_value(
    ds: &DyadicDataset,
    prior: Option<(&SymMatrix, &SymMask)>,
    ip: usize,
    j: usize,
) -> Option<f64> {
    if ip == j {
        return Some(0.0);
    }
    if ds.mask.get(ip, j) {
        return Some(ds.y.get(ip, j));
    }
    if let Some((vals, mask)) = prior {
        if mask.get(ip, j) {
            return Some(vals.get(ip, j));
        }
    }
    None
}

/// One ordered row-average: walk agent i's ranked compatible candidates,
/// averaging the first `target` donor values available for column j. The
/// structural zero at i' = j participates in the average but not in the pool
/// count: production requires `min_pool` genuine donors somewhere in the
/// ranking, so an entry backed by nothing but the convention stays flagged.
fn row_average_entry(
    ds: &DyadicDataset,
    nbhd: &NeighborhoodIndex,
    prior: Option<(&SymMatrix, &SymMask)>,
    i: usize,
    j: usize,
    target: usize,
    min_pool: usize,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut walked = 0usize;
    let mut pool = 0usize;
    for &ip in &nbhd.ranked[i] {
        if let Some(v) = donor_value(ds, prior, ip, j) {
            if ip != j {
                pool += 1;
            }
            if walked < target {
                sum += v;
                walked += 1;
            }
        }
        if pool >= min_pool && walked == target {
            break;
        }
    }
    if walked == 0 || pool < min_pool.max(1) {
        None
    } else {
        Some(sum / walked as f64)
    }
}

pub(crate) struct RowAveragePass {
    pub values: SymMatrix,
    pub produced: SymMask,
}

/// Compute both ordered averages for every (i, j) with i <= j and symmetrize.
pub(crate) fn row_average_pass(
    ds: &DyadicDataset,
    nbhd: &NeighborhoodIndex,
    prior: Option<(&SymMatrix, &SymMask)>,
    skip: Option<&SymMask>,
    min_pool: usize,
) -> RowAveragePass {
    let n = ds.n();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<(f64, bool)> = idx
        .par_iter()
        .map(|&(i, j)| {
            if skip.is_some_and(|s| s.get(i, j)) {
                return (f64::NAN, false);
            }
            let a = row_average_entry(ds, nbhd, prior, i, j, nbhd.target, min_pool);
            let b = if i == j {
                a
            } else {
                row_average_entry(ds, nbhd, prior, j, i, nbhd.target, min_pool)
            };
            match (a, b) {
                (Some(va), Some(vb)) => (0.5 * (va + vb), true),
                (Some(va), None) => (va, true),
                (None, Some(vb)) => (vb, true),
                (None, None) => (f64::NAN, false),
            }
        })
        .collect();

    let mut values = SymMatrix::filled(n, f64::NAN);
    let mut produced = SymMask::filled(n, false);
    for (t, &(i, j)) in idx.iter().enumerate() {
        let (v, ok) = entries[t];
        if ok {
            values.set(i, j, v);
            produced.set(i, j, true);
        }
    }
    RowAveragePass { values, produced }
}

/// Row-average denoising. Under missing data the donor pool for entry (i, j)
/// is the set of i-compatible agents with an observed outcome against j,
/// ranked by similarity to i; entries with an empty pool are flagged.
pub fn denoise_row_average(ds: &DyadicDataset, nbhd: &NeighborhoodIndex) -> Result<DenoisedMatrix> {
    check_dims(ds, nbhd)?;
    let pass = row_average_pass(ds, nbhd, None, None, 1);
    Ok(DenoisedMatrix {
        ystar: pass.values,
        kind: DenoiseKind::RowAverage,
        imputed: pass.produced,
        rounds: 1,
    })
}

/// Unique-pair denoising: average Y over the deduplicated unordered dyads
/// spanned by the two neighborhoods,
///   M_ij = {(a, b) : a < b, (a in N_i and b in N_j) or (a in N_j and b in N_i)}.
/// Computed by inclusion-exclusion: summing over the ordered cross product
/// counts dyads with both ends in N_i intersect N_j twice.
pub fn denoise_unique_pairs(ds: &DyadicDataset, nbhd: &NeighborhoodIndex) -> Result<DenoisedMatrix> {
    check_dims(ds, nbhd)?;
    let n = ds.n();
    let complete = ds.is_complete();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let in_flags: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            let mut f = vec![false; n];
            for &a in &nbhd.neighbors[i] {
                f[a] = true;
            }
            f
        })
        .collect();

    let entries: Vec<(f64, bool)> = idx
        .par_iter()
        .map(|&(i, j)| {
            let (ni, nj) = (&nbhd.neighbors[i], &nbhd.neighbors[j]);
            let flag_j = &in_flags[j];
            let mut cross_sum = 0.0;
            let mut cross_cnt = 0usize;
            for &a in ni {
                for &b in nj {
                    if a != b && (complete || ds.mask.get(a, b)) {
                        cross_sum += ds.y.get(a, b);
                        cross_cnt += 1;
                    }
                }
            }
            // dyads inside the intersection were counted twice
            let inter: Vec<usize> = ni.iter().cloned().filter(|&a| flag_j[a]).collect();
            let mut int_sum = 0.0;
            let mut int_cnt = 0usize;
            for (s, &a) in inter.iter().enumerate() {
                for &b in &inter[s + 1..] {
                    if complete || ds.mask.get(a, b) {
                        int_sum += ds.y.get(a, b);
                        int_cnt += 1;
                    }
                }
            }
            let cnt = cross_cnt - int_cnt;
            if cnt == 0 {
                (f64::NAN, false)
            } else {
                ((cross_sum - int_sum) / cnt as f64, true)
            }
        })
        .collect();

    let mut values = SymMatrix::filled(n, f64::NAN);
    let mut produced = SymMask::filled(n, false);
    for (t, &(i, j)) in idx.iter().enumerate() {
        let (v, ok) = entries[t];
        if ok {
            values.set(i, j, v);
            produced.set(i, j, true);
        }
    }
    Ok(DenoisedMatrix {
        ystar: values,
        kind: DenoiseKind::UniquePairAverage,
        imputed: produced,
        rounds: 1,
    })
}

fn check_dims(ds: &DyadicDataset, nbhd: &NeighborhoodIndex) -> Result<()> {
    if nbhd.neighbors.len() != ds.n() {
        return Err(Error::Dimension {
            context: "denoise neighborhoods",
            expected: ds.n(),
            got: nbhd.neighbors.len(),
        });
    }
    Ok(())
}
