//! Neighborhood construction: for each agent, the set of agents with
//! compatible observables that are closest in the similarity pseudo-distance.
//! Averaging outcomes over these neighborhoods is what removes the dyad noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::DyadMatrix;
use crate::model::XProfile;

/// Which agents count as observationally comparable to agent i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum XRule {
    /// Full covariate records must match exactly (discrete X).
    ExactDiscrete,
    /// Discrete coordinates match exactly; continuous coordinates lie within
    /// Euclidean distance delta.
    Ball { delta: f64 },
    /// No restriction on observables.
    IgnoreX,
}

impl XRule {
    pub fn compatible(&self, x: &XProfile, i: usize, j: usize) -> bool {
        match self {
            XRule::ExactDiscrete => x.records_equal(i, j),
            XRule::Ball { delta } => {
                x.discrete_equal(i, j) && x.continuous_dist2(i, j) <= delta * delta
            }
            XRule::IgnoreX => true,
        }
    }
}

/// How many neighbors to keep per agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NiRule {
    /// round(c * sqrt(n ln n)); c = 1 is the baseline recommendation, the
    /// binary-outcome harness preset uses c = 0.5.
    SqrtNLogN { c: f64 },
    /// Fixed count.
    Fixed(usize),
}

impl NiRule {
    pub fn size(&self, n: usize) -> usize {
        match self {
            NiRule::SqrtNLogN { c } => {
                let raw = (c * (n as f64 * (n as f64).ln()).sqrt()).round() as usize;
                raw.clamp(1, n)
            }
            NiRule::Fixed(k) => (*k).clamp(1, n),
        }
    }
}

impl Default for NiRule {
    fn default() -> Self {
        NiRule::SqrtNLogN { c: 1.0 }
    }
}

/// Per-agent neighbor lists, sorted by similarity distance.
#[derive(Clone, Debug)]
pub struct NeighborhoodIndex {
    /// neighbors[i] starts with i itself, then compatible agents ordered by
    /// (d_inf^2, index) ascending, truncated at the target size.
    pub neighbors: Vec<Vec<usize>>,
    /// Neighborhood size actually achieved per agent.
    pub sizes: Vec<usize>,
    /// Agents whose compatible candidate pool was smaller than the target.
    pub truncated: Vec<bool>,
    /// Full ranked candidate list per agent (same order, no truncation);
    /// donor selection under missing data walks deeper into this ranking.
    pub ranked: Vec<Vec<usize>>,
    /// Requested neighborhood size.
    pub target: usize,
    /// The similarity distances the index was built from.
    pub d_inf: DyadMatrix,
}

/// Rank compatible agents by d_inf^2 and keep the closest `ni` per agent.
/// Agent i is always its own first neighbor. Candidates with an undefined
/// (infinite) distance are never selected.
pub fn build_neighborhoods(
    x: &XProfile,
    d_inf: &DyadMatrix,
    rule: &XRule,
    ni_rule: &NiRule,
) -> Result<NeighborhoodIndex> {
    let n = x.n();
    if d_inf.n() != n {
        return Err(Error::Dimension { context: "build_neighborhoods", expected: n, got: d_inf.n() });
    }
    let target = ni_rule.size(n);
    let mut neighbors = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(n);
    let mut truncated = Vec::with_capacity(n);
    let mut ranked = Vec::with_capacity(n);
    for i in 0..n {
        let mut cands: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i && rule.compatible(x, i, j))
            .map(|j| (d_inf.get(i, j), j))
            .filter(|&(d, _)| d.is_finite())
            .collect();
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut full = Vec::with_capacity(cands.len() + 1);
        full.push(i);
        full.extend(cands.iter().map(|&(_, j)| j));
        let list = full[..target.min(full.len())].to_vec();
        truncated.push(list.len() < target);
        sizes.push(list.len());
        neighbors.push(list);
        ranked.push(full);
    }
    Ok(NeighborhoodIndex { neighbors, sizes, truncated, ranked, target, d_inf: d_inf.clone() })
}
