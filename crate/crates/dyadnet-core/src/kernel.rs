//! Kernel weight functions for the pairwise-difference estimator.
//!
//! Weights are evaluated at z = d^2 / h^2, the squared pseudo-distance over
//! the squared bandwidth, so every kernel here lives on [0, 1] and vanishes
//! beyond 1. `EpanechnikovSq` is the classical Epanechnikov kernel expressed
//! in the squared argument: 0.75 * (1 - z) equals 0.75 * (1 - u^2) at u^2 = z.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    EpanechnikovSq,
    Uniform,
    Triangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { kind: KernelKind::EpanechnikovSq }
    }
}

impl KernelSpec {
    /// Weight at z = d^2 / h^2. Exactly zero for z > 1 and for negative
    /// (never produced) arguments treated as zero distance.
    #[inline]
    pub fn weight(&self, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&z) {
            return 0.0;
        }
        match self.kind {
            KernelKind::EpanechnikovSq => 0.75 * (1.0 - z),
            KernelKind::Uniform => 1.0,
            KernelKind::Triangular => 1.0 - z,
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epa" | "epanechnikov" | "epanechnikov-sq" => Ok(KernelKind::EpanechnikovSq),
            "uniform" => Ok(KernelKind::Uniform),
            "triangular" => Ok(KernelKind::Triangular),
            other => Err(format!("unknown kernel `{other}` (try epa, uniform, triangular)")),
        }
    }
}
