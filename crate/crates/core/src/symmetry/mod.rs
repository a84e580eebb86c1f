//! Reflections about axis-aligned hyperplanes, Steiner symmetrization and
//! the moving-planes sweep.
//!
//! Plane offsets live on the half-voxel lattice: plane `m` on axis `k` sits
//! at `origin_k + m * h / 2`, so odd `m` pass through voxel centers and even
//! `m` through faces. Reflection about plane `m` maps index `i` to
//! `m - 1 - i`, exactly.

mod planes;

pub use planes::{
    decompose_symmetric, default_tol_contact, default_tol_incl, moving_planes, ContactType, Decomposition,
    MovingPlanesResult, TraceStep,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VoxelSet};

/// Plane `x_axis = origin_axis + m h / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperplane {
    pub axis: usize,
    pub m: i64,
}

impl Hyperplane {
    pub fn new(axis: usize, m: i64) -> Self {
        Hyperplane { axis, m }
    }

    /// The lattice plane nearest to world offset `t`.
    pub fn nearest(grid: &GridSpec, axis: usize, t: f64) -> Result<Self> {
        if axis >= grid.dim() {
            return Err(Error::param("axis", format!("must be below {}, got {axis}", grid.dim())));
        }
        let m = (2.0 * (t - grid.origin()[axis]) / grid.spacing()).round();
        let plane = Hyperplane { axis, m: m as i64 };
        plane.check(grid)?;
        Ok(plane)
    }

    /// The plane through the middle of the grid along `axis`.
    pub fn midplane(grid: &GridSpec, axis: usize) -> Self {
        Hyperplane {
            axis,
            m: grid.n(axis) as i64,
        }
    }

    pub fn offset(&self, grid: &GridSpec) -> f64 {
        grid.half_offset(self.axis, self.m)
    }

    /// Mirror of index `i` along the plane axis.
    #[inline]
    pub fn mirror(&self, i: i64) -> i64 {
        self.m - 1 - i
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.axis >= grid.dim() {
            return Err(Error::param("axis", format!("must be below {}, got {}", grid.dim(), self.axis)));
        }
        let top = 2 * grid.n(self.axis) as i64;
        if self.m < 0 || self.m > top {
            return Err(Error::param("plane", format!("half-voxel offset {} outside [0, {top}]", self.m)));
        }
        Ok(())
    }
}

/// Direction of the sweep: `Positive` starts below the set and moves up
/// the axis, reflecting the part below the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

/// Lines of voxels parallel to one axis.
pub(crate) struct Lines {
    pub axis: usize,
    pub n: usize,
    pub stride: usize,
    pub starts: Vec<usize>,
}

impl Lines {
    pub fn new(grid: &GridSpec, axis: usize) -> Self {
        let stride = match axis {
            0 => 1,
            1 => grid.n(0),
            _ => grid.n(0) * grid.n(1),
        };
        let starts = (0..grid.len()).filter(|&lin| grid.unravel(lin)[axis] == 0).collect();
        Lines {
            axis,
            n: grid.n(axis),
            stride,
            starts,
        }
    }

    #[inline]
    pub fn at(&self, start: usize, i: usize) -> usize {
        start + i * self.stride
    }
}

/// Reflected set and the measure of reflected voxels that left the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    pub set: VoxelSet,
    pub dropped: f64,
}

pub fn reflect(vs: &VoxelSet, plane: Hyperplane) -> Result<Reflection> {
    let g = vs.grid();
    plane.check(g)?;
    let lines = Lines::new(g, plane.axis);
    let mut out = vec![false; g.len()];
    let mut dropped = 0usize;
    for &s in &lines.starts {
        for i in 0..lines.n {
            if vs.get_linear(lines.at(s, i)) {
                let j = plane.mirror(i as i64);
                if (0..lines.n as i64).contains(&j) {
                    out[lines.at(s, j as usize)] = true;
                } else {
                    dropped += 1;
                }
            }
        }
    }
    Ok(Reflection {
        set: VoxelSet::from_bits(*g, out)?,
        dropped: dropped as f64 * g.cell_volume(),
    })
}

/// Re-lays every line along `axis` as one contiguous run of the same
/// length, centered on the grid midplane (rounded down when the parity of
/// the run and the grid differ).
pub fn steiner_symmetrize(vs: &VoxelSet, axis: usize) -> Result<VoxelSet> {
    let g = vs.grid();
    if axis >= g.dim() {
        return Err(Error::param("axis", format!("must be below {}, got {axis}", g.dim())));
    }
    let lines = Lines::new(g, axis);
    let mut out = vec![false; g.len()];
    for &s in &lines.starts {
        let c = (0..lines.n).filter(|&i| vs.get_linear(lines.at(s, i))).count();
        let lo = (lines.n - c) / 2;
        for i in lo..lo + c {
            out[lines.at(s, i)] = true;
        }
    }
    VoxelSet::from_bits(*g, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinerCheck {
    pub symmetric: bool,
    pub defect: f64,
}

/// Defect = measure of voxels whose mirror has the opposite occupancy plus
/// measure of the holes inside each line's occupied span.
pub fn is_steiner_symmetric(vs: &VoxelSet, plane: Hyperplane, tol: f64) -> Result<SteinerCheck> {
    let g = vs.grid();
    plane.check(g)?;
    let lines = Lines::new(g, plane.axis);
    let n = lines.n as i64;
    let defect: u64 = lines
        .starts
        .par_iter()
        .map(|&s| {
            let occ = |i: i64| (0..n).contains(&i) && vs.get_linear(lines.at(s, i as usize));
            let mut d = 0u64;
            let (mut first, mut last) = (None, 0);
            for i in 0..n {
                if occ(i) {
                    first.get_or_insert(i);
                    last = i;
                    if !occ(plane.mirror(i)) {
                        d += 2;
                    }
                }
            }
            if let Some(first) = first {
                d += (first..=last).filter(|&i| !occ(i)).count() as u64;
            }
            d
        })
        .sum();
    let defect = defect as f64 * g.cell_volume();
    Ok(SteinerCheck {
        symmetric: defect <= tol,
        defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    pub holds: bool,
    pub violation: f64,
}

/// Violation count in one line for the sweep frame in which the cap is the
/// part below the plane: cap voxels whose mirror is empty or off-grid, plus
/// the holes of the cap-and-reflection union inside its span.
pub(crate) fn line_violation(occ: impl Fn(usize) -> bool, n: usize, m: i64) -> u64 {
    if m <= 0 {
        return 0;
    }
    let cap = ((m / 2) as usize).min(n);
    let Some(lo) = (0..cap).find(|&i| occ(i)) else {
        return 0;
    };
    let mut v = 0;
    for i in lo..cap {
        if occ(i) {
            let j = m - 1 - i as i64;
            if j >= n as i64 || !occ(j as usize) {
                v += 1;
            }
        } else {
            // the hole and its mirror image
            v += 2;
        }
    }
    if m % 2 == 1 {
        let p = ((m - 1) / 2) as usize;
        if p >= n || !occ(p) {
            v += 1;
        }
    }
    v
}

/// Checks that the reflection of the cap lies inside the set and that cap
/// plus reflection is Steiner symmetric about the plane. For `Positive`
/// the cap is the part of the set below the plane, for `Negative` above.
pub fn symmetric_inclusion_check(
    vs: &VoxelSet,
    plane: Hyperplane,
    orientation: Orientation,
    tol: f64,
) -> Result<InclusionCheck> {
    let g = vs.grid();
    plane.check(g)?;
    let lines = Lines::new(g, plane.axis);
    let n = lines.n;
    let m = match orientation {
        Orientation::Positive => plane.m,
        Orientation::Negative => 2 * n as i64 - plane.m,
    };
    let count: u64 = lines
        .starts
        .par_iter()
        .map(|&s| match orientation {
            Orientation::Positive => line_violation(|i| vs.get_linear(lines.at(s, i)), n, m),
            Orientation::Negative => line_violation(|i| vs.get_linear(lines.at(s, n - 1 - i)), n, m),
        })
        .sum();
    let violation = count as f64 * g.cell_volume();
    Ok(InclusionCheck {
        holds: violation <= tol,
        violation,
    })
}
