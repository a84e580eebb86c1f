//! Closed-form reference volumes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^d`: `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(dim - 2) * 2.0 * PI / dim as f64,
    }
}

/// `|B_big(0) ∩ B_small(p)|` with `|p| = dist`, for `d = 2` (lens area) or
/// `d = 3` (sum of two spherical caps).
pub fn exact_ball_ball_volume(dim: usize, big: f64, small: f64, dist: f64) -> Result<f64> {
    if dim != 2 && dim != 3 {
        return Err(Error::param("d", format!("must be 2 or 3, got {dim}")));
    }
    if !(big > 0.0 && small > 0.0 && big.is_finite() && small.is_finite()) {
        return Err(Error::param("radius", "both radii must be positive and finite"));
    }
    if !(dist >= 0.0 && dist.is_finite()) {
        return Err(Error::param("dist", format!("must be non-negative, got {dist}")));
    }
    if dist >= big + small {
        return Ok(0.0);
    }
    if dist <= (big - small).abs() {
        return Ok(unit_ball_volume(dim) * big.min(small).powi(dim as i32));
    }
    let (r1, r2, d) = (big, small, dist);
    Ok(match dim {
        2 => {
            let a1 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
            let a2 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
            let k = ((-d + r1 + r2) * (d + r2 - r1) * (d - r2 + r1) * (d + r1 + r2)).max(0.0);
            r2 * r2 * a1 + r1 * r1 * a2 - 0.5 * k.sqrt()
        }
        _ => {
            PI * (r1 + r2 - d).powi(2) * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r2 * r1
                - 3.0 * r1 * r1)
                / (12.0 * d)
        }
    })
}

/// Length (d = 2) or area (d = 3) of the part of the sphere `∂B_small(p)`
/// that lies inside `B_big(0)`, `|p| = dist`.
pub fn exact_sphere_in_ball(dim: usize, big: f64, small: f64, dist: f64) -> Result<f64> {
    if dim != 2 && dim != 3 {
        return Err(Error::param("d", format!("must be 2 or 3, got {dim}")));
    }
    let full = if dim == 2 { 2.0 * PI * small } else { 4.0 * PI * small * small };
    if dist + small <= big {
        return Ok(full);
    }
    if dist >= big + small || small >= dist + big {
        return Ok(0.0);
    }
    // half-angle, seen from p, of the cone through the intersection circle
    let cos_a = ((dist * dist + small * small - big * big) / (2.0 * dist * small)).clamp(-1.0, 1.0);
    Ok(if dim == 2 {
        2.0 * small * cos_a.acos()
    } else {
        2.0 * PI * small * small * (1.0 - cos_a)
    })
}

/// Exact volume of the difference of two coaxial right cylinders of height
/// `t2 + gamma` with base radii `sqrt(r^2 - t2^2)` and `sqrt(r^2 - t1^2)`,
/// `t1 = t2 + 2 gamma`.
pub fn annular_slab_volume(r: f64, t2: f64, gamma: f64, dim: usize) -> Result<f64> {
    check_slab(r, t2, gamma, dim)?;
    let t1 = t2 + 2.0 * gamma;
    let e = (dim as f64 - 1.0) / 2.0;
    let outer = (r * r - t2 * t2).powf(e);
    let inner = (r * r - t1 * t1).max(0.0).powf(e);
    Ok(unit_ball_volume(dim - 1) * (outer - inner) * (t2 + gamma))
}

/// Leading-order behaviour of [`annular_slab_volume`] for small `t2`, `gamma`:
/// `2 (d-1) omega_(d-1) r^(d-3) (t2 gamma + gamma^2) (t2 + gamma)`.
pub fn annular_slab_asymptotic(r: f64, t2: f64, gamma: f64, dim: usize) -> f64 {
    2.0 * (dim as f64 - 1.0)
        * unit_ball_volume(dim - 1)
        * r.powi(dim as i32 - 3)
        * (t2 * gamma + gamma * gamma)
        * (t2 + gamma)
}

fn check_slab(r: f64, t2: f64, gamma: f64, dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::param("d", "must be at least 2"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", "must be positive and finite"));
    }
    if !(t2 >= 0.0 && gamma >= 0.0) {
        return Err(Error::param("t2", "t2 and gamma must be non-negative"));
    }
    if t2 + 2.0 * gamma > r {
        return Err(Error::param("gamma", format!("t2 + 2 gamma = {} exceeds r = {r}", t2 + 2.0 * gamma)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0);
    }

    #[test]
    fn lens_limits() {
        for d in [2, 3] {
            assert_eq!(exact_ball_ball_volume(d, 1.0, 0.5, 1.5).unwrap(), 0.0);
            assert_eq!(exact_ball_ball_volume(d, 1.0, 0.5, 2.0).unwrap(), 0.0);
            assert_relative_eq!(
                exact_ball_ball_volume(d, 1.0, 0.5, 0.0).unwrap(),
                unit_ball_volume(d) * 0.5f64.powi(d as i32)
            );
            // continuity at both transitions
            for (a, b) in [(0.5 - 1e-9, 0.5 + 1e-9), (1.5 - 1e-9, 1.5 + 1e-9)] {
                let va = exact_ball_ball_volume(d, 1.0, 0.5, a).unwrap();
                let vb = exact_ball_ball_volume(d, 1.0, 0.5, b).unwrap();
                assert!((va - vb).abs() < 1e-6);
            }
        }
        assert!((exact_ball_ball_volume(2, 1.0, 0.5, 1.0).unwrap() - 0.3508).abs() < 5e-5);
        assert!(exact_ball_ball_volume(4, 1.0, 0.5, 1.0).is_err());
        assert!(exact_ball_ball_volume(2, 1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn lens_matches_midpoint_quadrature() {
        // integrate chord lengths of B_small(p) clipped to B_big(0)
        for d in [2usize, 3] {
            for &(big, small, dist) in &[(1.0, 0.5, 1.0), (1.0, 0.3, 0.9), (0.7, 1.0, 0.6)] {
                let n = 4000;
                let mut v = 0.0;
                for i in 0..n {
                    let y = -small + (i as f64 + 0.5) * 2.0 * small / n as f64;
                    let dy = 2.0 * small / n as f64;
                    // slice of both balls at height y (perpendicular to p)
                    if d == 2 {
                        let hs = (small * small - y * y).max(0.0).sqrt();
                        let hb = (big * big - y * y).max(0.0).sqrt();
                        let lo = (dist - hs).max(-hb);
                        let hi = (dist + hs).min(hb);
                        v += (hi - lo).max(0.0) * dy;
                    } else {
                        // y runs along p: the slice is a disk intersection
                        let x = y + dist;
                        let rs2 = small * small - y * y;
                        let rb2 = big * big - x * x;
                        if rs2 > 0.0 && rb2 > 0.0 {
                            v += PI * rs2.min(rb2) * dy;
                        }
                    }
                }
                let exact = exact_ball_ball_volume(d, big, small, dist).unwrap();
                assert!((v - exact).abs() / exact < 1e-4, "d={d} {big} {small} {dist}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_arc_inside() {
        // point on the circle: arc inside is 2 r acos(r / 2R)
        let arc = exact_sphere_in_ball(2, 1.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(arc, 2.0 * 0.5 * (0.25f64).acos(), epsilon = 1e-12);
        assert_relative_eq!(exact_sphere_in_ball(2, 1.0, 0.1, 0.2).unwrap(), 2.0 * PI * 0.1);
        assert_eq!(exact_sphere_in_ball(2, 1.0, 0.5, 2.0).unwrap(), 0.0);
        // 3-d cap area: 2 pi r^2 (1 - cos a) tends to half the sphere for a flat wall
        let cap = exact_sphere_in_ball(3, 1e6, 0.5, 1e6).unwrap();
        assert!((cap - 2.0 * PI * 0.25).abs() < 1e-5);
    }

    #[test]
    fn slab_exact_values() {
        for d in [2usize, 3, 4] {
            assert_eq!(annular_slab_volume(1.0, 0.3, 0.0, d).unwrap(), 0.0);
            let r = 0.8;
            let v = annular_slab_volume(r, 0.0, r / 2.0, d).unwrap();
            assert_relative_eq!(v, unit_ball_volume(d - 1) * r.powi(d as i32 - 1) * r / 2.0, max_relative = 1e-14);
        }
        assert!(annular_slab_volume(1.0, 0.5, 0.3, 2).is_err());
        assert!(annular_slab_volume(1.0, -0.1, 0.3, 2).is_err());
    }
}
