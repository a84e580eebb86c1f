//! CSG shape trees and center-point rasterization.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridSpec, VoxelSet};
use crate::error::{Error, Result};

/// Constructive solid geometry over balls, boxes, halfspaces and planar
/// annulus sectors. All primitives are closed sets.
///
/// JSON form: `{"op": "ball", "center": [..], "radius": R}`,
/// `{"op": "box", "min": [..], "max": [..]}`,
/// `{"op": "halfspace", "normal": [..], "offset": t}` (the set `n·x <= t`),
/// `{"op": "annulus_sector", "center": [x, y], "rho_min", "rho_max",
/// "theta_min", "theta_max"}` (angles in radians) and
/// `{"op": "union" | "intersection" | "difference", "children": [..]}`.
/// A difference removes every later child from the first one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    AnnulusSector {
        center: Vec<f64>,
        rho_min: f64,
        rho_max: f64,
        theta_min: f64,
        theta_max: f64,
    },
    Union {
        children: Vec<ShapeSpec>,
    },
    Intersection {
        children: Vec<ShapeSpec>,
    },
    Difference {
        children: Vec<ShapeSpec>,
    },
}

impl ShapeSpec {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        ShapeSpec::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn cuboid(min: &[f64], max: &[f64]) -> Self {
        ShapeSpec::Box {
            min: min.to_vec(),
            max: max.to_vec(),
        }
    }

    /// Axis-aligned cube of side `side` centered at `center`.
    pub fn cube(center: &[f64], side: f64) -> Self {
        let min: Vec<f64> = center.iter().map(|c| c - side / 2.0).collect();
        let max: Vec<f64> = center.iter().map(|c| c + side / 2.0).collect();
        ShapeSpec::Box { min, max }
    }

    pub fn halfspace(normal: &[f64], offset: f64) -> Self {
        ShapeSpec::Halfspace {
            normal: normal.to_vec(),
            offset,
        }
    }

    pub fn union(children: Vec<ShapeSpec>) -> Self {
        ShapeSpec::Union { children }
    }

    pub fn intersection(children: Vec<ShapeSpec>) -> Self {
        ShapeSpec::Intersection { children }
    }

    pub fn difference(base: ShapeSpec, removed: ShapeSpec) -> Self {
        ShapeSpec::Difference {
            children: vec![base, removed],
        }
    }

    fn op_name(&self) -> &'static str {
        match self {
            ShapeSpec::Ball { .. } => "ball",
            ShapeSpec::Box { .. } => "box",
            ShapeSpec::Halfspace { .. } => "halfspace",
            ShapeSpec::AnnulusSector { .. } => "annulus_sector",
            ShapeSpec::Union { .. } => "union",
            ShapeSpec::Intersection { .. } => "intersection",
            ShapeSpec::Difference { .. } => "difference",
        }
    }

    /// Checks every primitive for dimension `dim`. The error names the
    /// offending node by its path from the root.
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.validate_at(dim, "root")
    }

    fn validate_at(&self, dim: usize, path: &str) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidShape {
                path: format!("{path} ({})", self.op_name()),
                reason,
            })
        };
        let check_vec = |name: &str, v: &[f64]| -> std::result::Result<(), String> {
            if v.len() != dim {
                return Err(format!("`{name}` has {} coordinates, grid dimension is {dim}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("`{name}` must be finite"));
            }
            Ok(())
        };
        match self {
            ShapeSpec::Ball { center, radius } => {
                if let Err(e) = check_vec("center", center) {
                    return fail(e);
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return fail(format!("radius must be positive and finite, got {radius}"));
                }
            }
            ShapeSpec::Box { min, max } => {
                if let Err(e) = check_vec("min", min).and_then(|_| check_vec("max", max)) {
                    return fail(e);
                }
                if let Some(axis) = (0..dim).find(|&a| min[a] > max[a]) {
                    return fail(format!("min exceeds max on axis {}", axis + 1));
                }
            }
            ShapeSpec::Halfspace { normal, offset } => {
                if let Err(e) = check_vec("normal", normal) {
                    return fail(e);
                }
                if normal.iter().all(|&x| x == 0.0) {
                    return fail("normal must be non-zero".into());
                }
                if !offset.is_finite() {
                    return fail("offset must be finite".into());
                }
            }
            ShapeSpec::AnnulusSector {
                center,
                rho_min,
                rho_max,
                theta_min,
                theta_max,
            } => {
                if dim != 2 {
                    return fail("annulus sectors exist only in dimension 2".into());
                }
                if let Err(e) = check_vec("center", center) {
                    return fail(e);
                }
                let all = [*rho_min, *rho_max, *theta_min, *theta_max];
                if all.iter().any(|x| !x.is_finite()) {
                    return fail("radii and angles must be finite".into());
                }
                if *rho_min < 0.0 || rho_max - rho_min <= 0.0 {
                    return fail(format!("need 0 <= rho_min < rho_max, got {rho_min}, {rho_max}"));
                }
                if theta_max < theta_min {
                    return fail("theta_max is below theta_min".into());
                }
            }
            ShapeSpec::Union { children }
            | ShapeSpec::Intersection { children }
            | ShapeSpec::Difference { children } => {
                if children.is_empty() {
                    return fail("needs at least one child".into());
                }
                for (i, child) in children.iter().enumerate() {
                    child.validate_at(dim, &format!("{path}.children[{i}]"))?;
                }
            }
        }
        Ok(())
    }

    /// Point membership. Assumes the tree has been validated for the
    /// dimension of `p`.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            ShapeSpec::Ball { center, radius } => {
                let d2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2 <= radius * radius
            }
            ShapeSpec::Box { min, max } => p
                .iter()
                .zip(min.iter().zip(max))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi),
            ShapeSpec::Halfspace { normal, offset } => {
                p.iter().zip(normal).map(|(x, n)| x * n).sum::<f64>() <= *offset
            }
            ShapeSpec::AnnulusSector {
                center,
                rho_min,
                rho_max,
                theta_min,
                theta_max,
            } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let rho = dx.hypot(dy);
                if rho < *rho_min || rho > *rho_max {
                    return false;
                }
                let span = theta_max - theta_min;
                if span >= TAU {
                    return true;
                }
                (dy.atan2(dx) - theta_min).rem_euclid(TAU) <= span
            }
            ShapeSpec::Union { children } => children.iter().any(|c| c.contains(p)),
            ShapeSpec::Intersection { children } => children.iter().all(|c| c.contains(p)),
            ShapeSpec::Difference { children } => {
                children[0].contains(p) && !children[1..].iter().any(|c| c.contains(p))
            }
        }
    }
}

/// Center-point rasterization: a voxel is occupied iff its center lies in
/// the shape. Logs a warning when occupancy reaches the grid border, since
/// the grid is then unlikely to contain the whole support.
pub fn rasterize(shape: &ShapeSpec, grid: &GridSpec) -> Result<VoxelSet> {
    shape.validate(grid.dim())?;
    let d = grid.dim();
    let occ: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map(|lin| {
            let c = grid.center(grid.unravel(lin));
            shape.contains(&c[..d])
        })
        .collect();
    let vs = VoxelSet::from_bits(*grid, occ)?;
    if vs.touches_border() {
        log::warn!("rasterized occupancy touches the grid border; the support may be truncated");
    }
    Ok(vs)
}
