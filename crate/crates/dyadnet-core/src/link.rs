//! Link functions F mapping the linear-plus-heterogeneity index to the
//! conditional mean of the outcome. Inverting F on denoised outcomes requires
//! clamping into the interior of the range; the clamp margin is configurable.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    Identity,
    Logistic,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub kind: LinkKind,
    /// Margin kept from the boundary of the range when inverting; ignored by
    /// the identity link.
    pub clamp_eps: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        LinkSpec { kind: LinkKind::Identity, clamp_eps: 1e-3 }
    }
}

impl LinkSpec {
    pub fn new(kind: LinkKind) -> Self {
        LinkSpec { kind, clamp_eps: 1e-3 }
    }

    /// F(x).
    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => x,
            LinkKind::Logistic => 1.0 / (1.0 + (-x).exp()),
            LinkKind::Exponential => x.exp(),
        }
    }

    /// F'(x), used for partial effects.
    #[inline]
    pub fn dforward(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => 1.0,
            LinkKind::Logistic => {
                let p = self.forward(x);
                p * (1.0 - p)
            }
            LinkKind::Exponential => x.exp(),
        }
    }

    /// F^{-1}(y) for y in the interior of the range.
    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => y,
            LinkKind::Logistic => (y / (1.0 - y)).ln(),
            LinkKind::Exponential => y.ln(),
        }
    }

    /// Whether y has a finite preimage under F. A logistic-link value at
    /// exactly 0 or 1 does not: no clamp size makes its inversion meaningful.
    #[inline]
    pub fn invertible_at(&self, y: f64) -> bool {
        match self.kind {
            LinkKind::Identity => y.is_finite(),
            LinkKind::Logistic => y > 0.0 && y < 1.0,
            LinkKind::Exponential => y > 0.0,
        }
    }

    /// Pull y into the invertible interior; returns the value and whether a
    /// clamp was applied.
    #[inline]
    pub fn clamp_into_range(&self, y: f64) -> (f64, bool) {
        match self.kind {
            LinkKind::Identity => (y, false),
            LinkKind::Logistic => {
                let lo = self.clamp_eps;
                let hi = 1.0 - self.clamp_eps;
                if y < lo {
                    (lo, true)
                } else if y > hi {
                    (hi, true)
                } else {
                    (y, false)
                }
            }
            LinkKind::Exponential => {
                if y < self.clamp_eps {
                    (self.clamp_eps, true)
                } else {
                    (y, false)
                }
            }
        }
    }
}

impl std::str::FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" | "id" => Ok(LinkKind::Identity),
            "logit" | "logistic" => Ok(LinkKind::Logistic),
            "exp" | "exponential" => Ok(LinkKind::Exponential),
            other => Err(format!("unknown link `{other}` (try identity, logit, exp)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_on_clamped_interior() {
        for kind in [LinkKind::Identity, LinkKind::Logistic, LinkKind::Exponential] {
            let link = LinkSpec::new(kind);
            for raw in [-0.2, 0.001, 0.3, 0.5, 0.97, 1.4] {
                let (y, _) = link.clamp_into_range(raw);
                let back = link.forward(link.inverse(y));
                assert!((back - y).abs() <= 1e-12, "{kind:?}: {raw} -> {y} -> {back}");
            }
        }
    }

    #[test]
    fn logistic_clamp_flags() {
        let link = LinkSpec::new(LinkKind::Logistic);
        assert_eq!(link.clamp_into_range(0.0), (1e-3, true));
        assert_eq!(link.clamp_into_range(1.0), (1.0 - 1e-3, true));
        assert_eq!(link.clamp_into_range(0.25), (0.25, false));
    }

    #[test]
    fn logistic_derivative_at_zero() {
        let link = LinkSpec::new(LinkKind::Logistic);
        assert!((link.dforward(0.0) - 0.25).abs() < 1e-15);
    }
}
