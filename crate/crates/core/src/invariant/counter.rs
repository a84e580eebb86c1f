//! Exact counting of occupied voxels inside discrete balls.
//!
//! A query point is given in continuous index coordinates `u` (voxel `j`
//! sits at `j`, see [`GridSpec::index_coords`]). Voxel `j` lies in the
//! closed ball of radius `rho` (voxel units) iff
//! `sq_dist(j_0 - u_0, row_sq(j, u)) <= rho^2`; every counting routine in
//! the crate goes through these two functions so the brute-force and
//! prefix-sum paths agree bit for bit.

use crate::grid::{GridSpec, VoxelSet};

/// Squared distance contribution of the axes other than 0.
#[inline]
pub(crate) fn row_sq(j1: i64, j2: i64, u: &[f64; 3]) -> f64 {
    let dy = j1 as f64 - u[1];
    let dz = j2 as f64 - u[2];
    dy * dy + dz * dz
}

#[inline]
pub(crate) fn sq_dist(dx: f64, row: f64) -> f64 {
    dx * dx + row
}

/// Ball radius in voxel units, squared.
#[inline]
pub(crate) fn rho_sq(radius: f64, spacing: f64) -> f64 {
    let rho = radius / spacing;
    rho * rho
}

/// Membership test against a squared threshold, closed (`<=`) or open (`<`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Threshold {
    pub rho2: f64,
    pub closed: bool,
}

impl Threshold {
    pub fn closed(rho2: f64) -> Self {
        Threshold { rho2, closed: true }
    }

    pub fn open(rho2: f64) -> Self {
        Threshold { rho2, closed: false }
    }

    #[inline]
    pub fn admits(&self, s: f64) -> bool {
        if self.closed {
            s <= self.rho2
        } else {
            s < self.rho2
        }
    }
}

/// Integer range of `j` values along one axis whose squared offset from `c`
/// can satisfy the threshold.
fn axis_range(c: f64, t: Threshold) -> (i64, i64) {
    let rho = t.rho2.max(0.0).sqrt();
    ((c - rho).floor() as i64 - 1, (c + rho).ceil() as i64 + 1)
}

/// Interval `[lo, hi]` along axis 0 of the ball slice in row `(j1, j2)`, or
/// `None` if the row misses the ball.
#[inline]
pub(crate) fn row_interval(u: &[f64; 3], row: f64, t: Threshold) -> Option<(i64, i64)> {
    if !t.admits(row) {
        return None;
    }
    let half = (t.rho2 - row).max(0.0).sqrt();
    let inside = |j: i64| t.admits(sq_dist(j as f64 - u[0], row));
    let mut lo = (u[0] - half).ceil() as i64;
    let mut hi = (u[0] + half).floor() as i64;
    while inside(lo - 1) {
        lo -= 1;
    }
    while lo <= hi && !inside(lo) {
        lo += 1;
    }
    while inside(hi + 1) {
        hi += 1;
    }
    while hi >= lo && !inside(hi) {
        hi -= 1;
    }
    (lo <= hi).then_some((lo, hi))
}

/// Calls `f(j1, j2, lo, hi)` for every row slice of the ball around `u`.
pub(crate) fn for_each_row(dim: usize, u: &[f64; 3], t: Threshold, mut f: impl FnMut(i64, i64, i64, i64)) {
    let (a1, b1) = axis_range(u[1], t);
    let (a2, b2) = if dim == 3 { axis_range(u[2], t) } else { (0, 0) };
    for j2 in a2..=b2 {
        for j1 in a1..=b1 {
            let row = row_sq(j1, j2, u);
            if let Some((lo, hi)) = row_interval(u, row, t) {
                f(j1, j2, lo, hi);
            }
        }
    }
}

/// Row-wise prefix sums of an occupancy grid.
pub(crate) struct BallCounter<'a> {
    grid: &'a GridSpec,
    prefix: Vec<u32>,
}

impl<'a> BallCounter<'a> {
    pub fn new(vs: &'a VoxelSet) -> Self {
        let g = vs.grid();
        let n0 = g.n(0);
        let mut prefix = Vec::with_capacity(g.rows() * (n0 + 1));
        for row in vs.bits().chunks(n0) {
            let mut acc = 0u32;
            prefix.push(0);
            for &b in row {
                acc += b as u32;
                prefix.push(acc);
            }
        }
        BallCounter { grid: g, prefix }
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid
    }

    /// Occupied voxels in row `(j1, j2)` with axis-0 index in `[lo, hi]`;
    /// anything outside the grid counts as empty.
    #[inline]
    pub fn row_count(&self, j1: i64, j2: i64, lo: i64, hi: i64) -> u64 {
        let g = self.grid;
        if j1 < 0 || j2 < 0 || j1 >= g.n(1) as i64 || j2 >= g.n(2) as i64 {
            return 0;
        }
        let n0 = g.n(0) as i64;
        let lo = lo.max(0);
        let hi = hi.min(n0 - 1);
        if lo > hi {
            return 0;
        }
        let base = (j1 as usize + g.n(1) * j2 as usize) * (n0 as usize + 1);
        (self.prefix[base + hi as usize + 1] - self.prefix[base + lo as usize]) as u64
    }

    pub fn count(&self, u: &[f64; 3], t: Threshold) -> u64 {
        let mut total = 0;
        for_each_row(self.grid.dim(), u, t, |j1, j2, lo, hi| {
            total += self.row_count(j1, j2, lo, hi);
        });
        total
    }

    /// Occupied voxels in the closed shell `inner <= s <= outer`.
    pub fn shell_count(&self, u: &[f64; 3], inner_rho2: f64, outer_rho2: f64) -> u64 {
        self.count(u, Threshold::closed(outer_rho2)) - self.count(u, Threshold::open(inner_rho2))
    }

    /// Occupied voxels lying in exactly one of the two closed balls.
    pub fn symmetric_difference_count(&self, u: &[f64; 3], v: &[f64; 3], rho2: f64) -> u64 {
        let t = Threshold::closed(rho2);
        let dim = self.grid.dim();
        let (a1, b1) = axis_range(u[1], t);
        let (c1, d1) = axis_range(v[1], t);
        let (a2, b2) = if dim == 3 { axis_range(u[2], t) } else { (0, 0) };
        let (c2, d2) = if dim == 3 { axis_range(v[2], t) } else { (0, 0) };
        let mut total = 0;
        for j2 in a2.min(c2)..=b2.max(d2) {
            for j1 in a1.min(c1)..=b1.max(d1) {
                let iu = row_interval(u, row_sq(j1, j2, u), t);
                let iv = row_interval(v, row_sq(j1, j2, v), t);
                let cu = iu.map_or(0, |(lo, hi)| self.row_count(j1, j2, lo, hi));
                let cv = iv.map_or(0, |(lo, hi)| self.row_count(j1, j2, lo, hi));
                let both = match (iu, iv) {
                    (Some((l1, h1)), Some((l2, h2))) => self.row_count(j1, j2, l1.max(l2), h1.min(h2)),
                    _ => 0,
                };
                total += cu + cv - 2 * both;
            }
        }
        total
    }
}

/// Lines of the discrete ball of squared radius `rho2` (voxel units)
/// centered on a voxel: `(o1, o2, a)` with half-width `a` along axis 0.
pub(crate) fn kernel_lines(dim: usize, rho2: f64) -> Vec<(i64, i64, i64)> {
    let mut lines = Vec::new();
    let origin = [0.0; 3];
    for_each_row(dim, &origin, Threshold::closed(rho2), |j1, j2, lo, hi| {
        debug_assert_eq!(lo, -hi);
        lines.push((j1, j2, hi));
    });
    lines
}
