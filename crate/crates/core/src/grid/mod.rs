//! Regular voxel grids, occupancy sets and their combinatorial boundary.
//!
//! Voxel `(i_1, .., i_d)` has its center at `origin + (i + 0.5) * h` on every
//! axis. Linear indices run with axis 0 fastest. A 2-d grid is stored with a
//! third axis of extent 1 so that the same loops serve both dimensions; that
//! padding axis never contributes neighbours or boundary faces.

mod components;
mod distance;
pub mod io;
mod shape;

pub use components::{connected_components, label_components};
pub use distance::{component_distance, diameter, squared_distance_transform};
pub use shape::{rasterize, ShapeSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel index, always three entries; the third is 0 for planar grids.
pub type Idx = [usize; 3];
/// Signed voxel index used for neighbours that may fall outside the grid.
pub type SIdx = [i64; 3];

/// Relative distance (in voxel units) under which query points are snapped
/// onto the half-voxel lattice of centers and faces.
const SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    dim: usize,
    extent: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    extent: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        if r.extent.len() != r.dim {
            return Err(Error::InvalidGrid(format!(
                "extent has {} entries for dimension {}",
                r.extent.len(),
                r.dim
            )));
        }
        GridSpec::new(r.dim, &r.extent, r.spacing, &r.origin)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        GridRepr {
            dim: g.dim,
            extent: g.extent().to_vec(),
            spacing: g.spacing,
            origin: g.origin().to_vec(),
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, extent: &[usize], spacing: f64, origin: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if extent.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} extents and {dim} origin coordinates, got {} and {}",
                extent.len(),
                origin.len()
            )));
        }
        if let Some(axis) = extent.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGrid(format!("extent of axis {} is zero", axis + 1)));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive and finite, got {spacing}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let total = extent.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        if total.is_none_or(|t| t > u32::MAX as usize) {
            return Err(Error::InvalidGrid("grid has too many voxels".into()));
        }
        let mut e = [1usize; 3];
        let mut o = [0.0; 3];
        e[..dim].copy_from_slice(extent);
        o[..dim].copy_from_slice(origin);
        Ok(GridSpec {
            dim,
            extent: e,
            spacing,
            origin: o,
        })
    }

    /// Cubic grid with `n` voxels per axis whose lower corner sits at `lower`
    /// on every axis.
    pub fn cube(dim: usize, n: usize, spacing: f64, lower: f64) -> Result<Self> {
        GridSpec::new(dim, &vec![n; dim], spacing, &vec![lower; dim])
    }

    /// Cubic grid covering `[lower, upper]^d` at spacing `h`; the extent is
    /// rounded to the nearest whole voxel count.
    pub fn covering(dim: usize, lower: f64, upper: f64, spacing: f64) -> Result<Self> {
        let n = ((upper - lower) / spacing).round();
        if !(n >= 1.0) {
            return Err(Error::InvalidGrid(format!("empty region [{lower}, {upper}]")));
        }
        GridSpec::cube(dim, n as usize, spacing, lower)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }

    /// Extent along `axis`; the padding axis of a planar grid reports 1.
    #[inline]
    pub fn n(&self, axis: usize) -> usize {
        self.extent[axis]
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.extent[0] * self.extent[1] * self.extent[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// `h^(d-1)`, the measure of one voxel face.
    #[inline]
    pub fn face_area(&self) -> f64 {
        self.spacing.powi(self.dim as i32 - 1)
    }

    /// Number of lines along axis 0 (the prefix-sum rows).
    #[inline]
    pub(crate) fn rows(&self) -> usize {
        self.extent[1] * self.extent[2]
    }

    #[inline]
    pub fn linear(&self, idx: Idx) -> usize {
        idx[0] + self.extent[0] * (idx[1] + self.extent[1] * idx[2])
    }

    #[inline]
    pub fn unravel(&self, lin: usize) -> Idx {
        let i0 = lin % self.extent[0];
        let rest = lin / self.extent[0];
        [i0, rest % self.extent[1], rest / self.extent[1]]
    }

    /// Linear index of a signed index, or `None` outside the grid.
    #[inline]
    pub fn checked_linear(&self, idx: SIdx) -> Option<usize> {
        for axis in 0..3 {
            if idx[axis] < 0 || idx[axis] >= self.extent[axis] as i64 {
                return None;
            }
        }
        Some(self.linear([idx[0] as usize, idx[1] as usize, idx[2] as usize]))
    }

    /// World coordinates of a voxel center (padding axis reports 0).
    pub fn center(&self, idx: Idx) -> [f64; 3] {
        let mut c = [0.0; 3];
        for axis in 0..self.dim {
            c[axis] = self.origin[axis] + (idx[axis] as f64 + 0.5) * self.spacing;
        }
        c
    }

    /// World coordinate of the half-voxel position `m` on `axis`, i.e.
    /// `origin + m * h / 2`. Even `m` are faces, odd `m` voxel centers.
    pub fn half_offset(&self, axis: usize, m: i64) -> f64 {
        self.origin[axis] + m as f64 * self.spacing * 0.5
    }

    /// Continuous index coordinates of a world point: voxel `j` sits at `j`.
    ///
    /// Coordinates within `1e-9` voxels of a multiple of one half are snapped
    /// onto it, so that voxel centers and face centers are represented
    /// exactly and ball membership ties are decided consistently.
    pub fn index_coords(&self, point: &[f64]) -> [f64; 3] {
        let mut u = [0.0; 3];
        for axis in 0..self.dim {
            let raw = (point[axis] - self.origin[axis]) / self.spacing - 0.5;
            let snapped = (raw * 2.0).round() * 0.5;
            u[axis] = if (raw - snapped).abs() <= SNAP_EPS * raw.abs().max(1.0) {
                snapped
            } else {
                raw
            };
        }
        u
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::param(
                "point",
                format!("expected {} coordinates, got {}", self.dim, point.len()),
            ));
        }
        if point.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("point", "coordinates must be finite"));
        }
        Ok(())
    }
}

/// Occupancy grid: the discrete stand-in for a measurable set of finite
/// measure. Everything outside the grid counts as empty.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelSet {
    grid: GridSpec,
    occ: Vec<bool>,
}

impl VoxelSet {
    pub fn empty(grid: GridSpec) -> Self {
        VoxelSet {
            occ: vec![false; grid.len()],
            grid,
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        VoxelSet {
            occ: vec![true; grid.len()],
            grid,
        }
    }

    pub fn from_bits(grid: GridSpec, occ: Vec<bool>) -> Result<Self> {
        if occ.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "occupancy has {} entries, grid has {} voxels",
                occ.len(),
                grid.len()
            )));
        }
        Ok(VoxelSet { grid, occ })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(Idx) -> bool) -> Self {
        let occ = (0..grid.len()).map(|lin| f(grid.unravel(lin))).collect();
        VoxelSet { grid, occ }
    }

    /// Occupancy from a list of voxel indices; indices outside the grid are
    /// rejected.
    pub fn from_indices(grid: GridSpec, indices: impl IntoIterator<Item = Idx>) -> Result<Self> {
        let mut occ = vec![false; grid.len()];
        for idx in indices {
            let s = [idx[0] as i64, idx[1] as i64, idx[2] as i64];
            let lin = grid
                .checked_linear(s)
                .ok_or_else(|| Error::param("indices", format!("{idx:?} lies outside the grid")))?;
            occ[lin] = true;
        }
        Ok(VoxelSet { grid, occ })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.occ
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.occ
    }

    #[inline]
    pub fn get(&self, idx: Idx) -> bool {
        self.occ[self.grid.linear(idx)]
    }

    #[inline]
    pub fn get_linear(&self, lin: usize) -> bool {
        self.occ[lin]
    }

    /// Occupancy at a signed index; out-of-grid voxels are empty.
    #[inline]
    pub fn get_signed(&self, idx: SIdx) -> bool {
        self.grid.checked_linear(idx).is_some_and(|lin| self.occ[lin])
    }

    pub fn count(&self) -> usize {
        self.occ.iter().filter(|&&b| b).count()
    }

    /// Lebesgue measure: occupied count times `h^d`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.occ.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.occ.iter().all(|&b| b)
    }

    /// Occupied voxels in linear-index order.
    pub fn iter_occupied(&self) -> impl Iterator<Item = Idx> + '_ {
        self.occ
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(lin, _)| self.grid.unravel(lin))
    }

    fn check_same_grid(&self, other: &VoxelSet) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &VoxelSet, f: impl Fn(bool, bool) -> bool) -> Result<VoxelSet> {
        self.check_same_grid(other)?;
        let occ = self.occ.iter().zip(&other.occ).map(|(&a, &b)| f(a, b)).collect();
        Ok(VoxelSet { grid: self.grid, occ })
    }

    pub fn union(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn is_subset_of(&self, other: &VoxelSet) -> Result<bool> {
        self.check_same_grid(other)?;
        Ok(self.occ.iter().zip(&other.occ).all(|(&a, &b)| !a || b))
    }

    /// True if any occupied voxel lies in the outermost layer of the grid.
    pub fn touches_border(&self) -> bool {
        let g = &self.grid;
        self.iter_occupied()
            .any(|idx| (0..g.dim).any(|axis| idx[axis] == 0 || idx[axis] + 1 == g.extent[axis]))
    }

    /// Occupancy shifted by `shift` voxels; content leaving the grid is lost.
    pub fn translated(&self, shift: SIdx) -> VoxelSet {
        let mut occ = vec![false; self.grid.len()];
        for idx in self.iter_occupied() {
            let s = [
                idx[0] as i64 + shift[0],
                idx[1] as i64 + shift[1],
                idx[2] as i64 + shift[2],
            ];
            if let Some(lin) = self.grid.checked_linear(s) {
                occ[lin] = true;
            }
        }
        VoxelSet { grid: self.grid, occ }
    }
}

/// A face between an occupied voxel and an empty (or out-of-grid) one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    /// World coordinates of the face center.
    pub point: [f64; 3],
    /// Axis of the face normal.
    pub axis: usize,
    /// `+1` if the empty voxel lies in the positive axis direction.
    pub outward: i8,
    pub occupied_voxel: Idx,
    pub empty_voxel: SIdx,
}

impl BoundarySample {
    /// Unit normal pointing from the occupied to the empty voxel.
    pub fn normal(&self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis] = self.outward as f64;
        n
    }

    /// Face-center position in half-voxel units: voxel centers sit at odd
    /// values, faces at even values along the normal axis.
    pub fn half_coords(&self) -> SIdx {
        let mut q = [0i64; 3];
        for (axis, q) in q.iter_mut().enumerate() {
            *q = 2 * self.occupied_voxel[axis] as i64 + 1;
        }
        q[self.axis] += self.outward as i64;
        q
    }
}

fn neighbour(idx: Idx, axis: usize, dir: i64) -> SIdx {
    let mut s = [idx[0] as i64, idx[1] as i64, idx[2] as i64];
    s[axis] += dir;
    s
}

/// All occupied/empty face pairs, ordered by occupied voxel (linear index),
/// then axis, then the negative side before the positive side.
pub fn boundary_samples(vs: &VoxelSet) -> Vec<BoundarySample> {
    let g = vs.grid();
    let h = g.spacing();
    let mut out = Vec::new();
    for idx in vs.iter_occupied() {
        let c = g.center(idx);
        for axis in 0..g.dim() {
            for dir in [-1i64, 1] {
                let nb = neighbour(idx, axis, dir);
                if !vs.get_signed(nb) {
                    let mut point = c;
                    point[axis] += dir as f64 * 0.5 * h;
                    out.push(BoundarySample {
                        point,
                        axis,
                        outward: dir as i8,
                        occupied_voxel: idx,
                        empty_voxel: nb,
                    });
                }
            }
        }
    }
    out
}

/// Number of boundary faces, without materializing the samples.
pub fn boundary_face_count(vs: &VoxelSet) -> usize {
    let g = vs.grid();
    vs.iter_occupied()
        .map(|idx| {
            (0..g.dim())
                .flat_map(|axis| [(axis, -1i64), (axis, 1)])
                .filter(|&(axis, dir)| !vs.get_signed(neighbour(idx, axis, dir)))
                .count()
        })
        .sum()
}

/// `h^d * count`.
pub fn measure(vs: &VoxelSet) -> f64 {
    vs.measure()
}
