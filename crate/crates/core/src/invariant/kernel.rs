use serde::{Deserialize, Serialize};

use super::counter::rho_sq;
use crate::error::{Error, Result};

/// Radial, non-negative, non-increasing interaction kernel `k(|x - y|)`,
/// zero beyond its cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// Indicator of the closed ball of radius `radius`.
    IndicatorBall { radius: f64 },
    /// `exp(-|z|^2 / (2 sigma^2))` for `|z| <= cutoff`.
    Gaussian { sigma: f64, cutoff: f64 },
    /// `max(|z|, r_min)^-(d + 2 s)` for `|z| <= r_max`, `s = exponent`.
    TruncatedPower { exponent: f64, r_min: f64, r_max: f64 },
}

impl Kernel {
    pub fn indicator(radius: f64) -> Self {
        Kernel::IndicatorBall { radius }
    }

    /// Support radius.
    pub fn cutoff(&self) -> f64 {
        match *self {
            Kernel::IndicatorBall { radius } => radius,
            Kernel::Gaussian { cutoff, .. } => cutoff,
            Kernel::TruncatedPower { r_max, .. } => r_max,
        }
    }

    /// Parameter checks; the truncated power kernel needs `r_min >= h` so
    /// that its value at the origin stays within one voxel of resolution.
    pub fn validate(&self, spacing: f64) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            Kernel::IndicatorBall { radius } => positive("radius", radius),
            Kernel::Gaussian { sigma, cutoff } => {
                positive("sigma", sigma)?;
                positive("cutoff", cutoff)
            }
            Kernel::TruncatedPower { exponent, r_min, r_max } => {
                positive("exponent", exponent)?;
                positive("r_min", r_min)?;
                positive("r_max", r_max)?;
                if r_min < spacing {
                    return Err(Error::param("r_min", format!("must be at least the spacing {spacing}")));
                }
                if r_max <= r_min {
                    return Err(Error::param("r_max", "must exceed r_min"));
                }
                Ok(())
            }
        }
    }

    /// Kernel value for a lattice offset with squared length `sq` voxel
    /// units on a grid of spacing `h` and dimension `dim`. The support test
    /// is the same closed-ball rule used by every discrete ball count.
    pub fn lattice_weight(&self, sq: i64, spacing: f64, dim: usize) -> f64 {
        let s = sq as f64;
        if s > rho_sq(self.cutoff(), spacing) {
            return 0.0;
        }
        match *self {
            Kernel::IndicatorBall { .. } => 1.0,
            Kernel::Gaussian { sigma, .. } => (-s * spacing * spacing / (2.0 * sigma * sigma)).exp(),
            Kernel::TruncatedPower { exponent, r_min, .. } => {
                let dist = s.sqrt() * spacing;
                dist.max(r_min).powf(-(dim as f64 + 2.0 * exponent))
            }
        }
    }

    /// Continuum kernel value at distance `dist`.
    pub fn value(&self, dist: f64, dim: usize) -> f64 {
        if dist > self.cutoff() {
            return 0.0;
        }
        match *self {
            Kernel::IndicatorBall { .. } => 1.0,
            Kernel::Gaussian { sigma, .. } => (-dist * dist / (2.0 * sigma * sigma)).exp(),
            Kernel::TruncatedPower { exponent, r_min, .. } => dist.max(r_min).powf(-(dim as f64 + 2.0 * exponent)),
        }
    }
}
