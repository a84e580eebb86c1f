//! Volumetric and spherical integral invariants and the functionals built
//! on them.
//!
//! The discrete ball around a point is the set of voxel centers at distance
//! at most `r` from it (closed ball). Every value below is an exact integer
//! count multiplied by a power of the grid spacing.

mod counter;
mod kernel;
mod oracle;
mod reports;

pub use kernel::Kernel;
pub use oracle::{
    annular_slab_asymptotic, annular_slab_volume, exact_ball_ball_volume, exact_sphere_in_ball, unit_ball_volume,
};
pub use reports::{
    criticality_report, curvature_summary, degeneracy_score, face_values, CriticalityReport, CurvatureSummary,
    DegeneracyReport, DEFAULT_SEED,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{boundary_samples, GridSpec, Idx, VoxelSet};
use counter::{kernel_lines, rho_sq, row_sq, sq_dist, BallCounter};

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::param("r", format!("radius must be positive and finite, got {r}")))
    }
}

/// `x -> |Ω ∩ B_r(x)|` sampled at every voxel center, stored as exact counts.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantField {
    grid: GridSpec,
    radius: f64,
    counts: Vec<u32>,
    kernel_count: u64,
}

impl InvariantField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of occupied voxels in the discrete ball around each voxel.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of voxel centers in the discrete ball of radius `r`.
    pub fn kernel_count(&self) -> u64 {
        self.kernel_count
    }

    /// Discrete kernel volume `K_r h^d`.
    pub fn kernel_volume(&self) -> f64 {
        self.kernel_count as f64 * self.grid.cell_volume()
    }

    pub fn value(&self, idx: Idx) -> f64 {
        self.counts[self.grid.linear(idx)] as f64 * self.grid.cell_volume()
    }

    pub fn values(&self) -> Vec<f64> {
        let cv = self.grid.cell_volume();
        self.counts.iter().map(|&c| c as f64 * cv).collect()
    }
}

/// Reference evaluation of `|Ω ∩ B_r(x)|`: scans the bounding box of the
/// ball voxel by voxel.
pub fn vol_invariant_at(vs: &VoxelSet, r: f64, x: &[f64]) -> Result<f64> {
    check_radius(r)?;
    let g = vs.grid();
    g.check_point(x)?;
    let u = g.index_coords(x);
    let rho2 = rho_sq(r, g.spacing());
    let rho = rho2.sqrt();
    let range = |axis: usize| -> (i64, i64) {
        if axis >= g.dim() {
            return (0, 0);
        }
        let lo = ((u[axis] - rho).floor() as i64 - 1).max(0);
        let hi = ((u[axis] + rho).ceil() as i64 + 1).min(g.n(axis) as i64 - 1);
        (lo, hi)
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    let mut count = 0u64;
    for j2 in r2.0..=r2.1 {
        for j1 in r1.0..=r1.1 {
            let row = row_sq(j1, j2, &u);
            for j0 in r0.0..=r0.1 {
                if sq_dist(j0 as f64 - u[0], row) <= rho2 && vs.get([j0 as usize, j1 as usize, j2 as usize]) {
                    count += 1;
                }
            }
        }
    }
    Ok(count as f64 * g.cell_volume())
}

/// The invariant at every voxel center, via row prefix sums over the lines
/// of the discrete kernel. Bit-identical to [`vol_invariant_at`] evaluated
/// at each voxel center.
pub fn vol_invariant_field(vs: &VoxelSet, r: f64) -> Result<InvariantField> {
    check_radius(r)?;
    let g = vs.grid();
    if (0..g.dim()).any(|a| 2.0 * r > g.n(a) as f64 * g.spacing()) {
        log::warn!("radius {r} exceeds half the grid extent; the field is dominated by out-of-grid emptiness");
    }
    let lines = kernel_lines(g.dim(), rho_sq(r, g.spacing()));
    let kernel_count = lines.iter().map(|&(_, _, a)| (2 * a + 1) as u64).sum();
    let counter = BallCounter::new(vs);
    let n0 = g.n(0);
    let mut counts = vec![0u32; g.len()];
    counts.par_chunks_mut(n0).enumerate().for_each(|(row, out)| {
        let j1 = (row % g.n(1)) as i64;
        let j2 = (row / g.n(1)) as i64;
        for (i0, c) in out.iter_mut().enumerate() {
            let i0 = i0 as i64;
            let mut total = 0u64;
            for &(o1, o2, a) in &lines {
                total += counter.row_count(j1 + o1, j2 + o2, i0 - a, i0 + a);
            }
            *c = total as u32;
        }
    });
    Ok(InvariantField {
        grid: *g,
        radius: r,
        counts,
        kernel_count,
    })
}

/// Number of voxel centers in the discrete ball of radius `r` on `grid`.
pub fn kernel_count(grid: &GridSpec, r: f64) -> Result<u64> {
    check_radius(r)?;
    Ok(kernel_lines(grid.dim(), rho_sq(r, grid.spacing()))
        .iter()
        .map(|&(_, _, a)| (2 * a + 1) as u64)
        .sum())
}

/// Surrogate for `H^(d-1)(∂B_r(x) ∩ Ω)`: occupied voxels in the one-voxel
/// shell `| |c - x| - r | <= h/2`, counted times `h^d` and divided by the
/// shell thickness `h`.
pub fn sphere_invariant_at(vs: &VoxelSet, r: f64, x: &[f64]) -> Result<f64> {
    let g = vs.grid();
    if !(r.is_finite() && r > g.spacing()) {
        return Err(Error::param("r", format!("shell radius must exceed the spacing {}, got {r}", g.spacing())));
    }
    g.check_point(x)?;
    let u = g.index_coords(x);
    let counter = BallCounter::new(vs);
    Ok(shell_value(&counter, r, &u))
}

fn shell_bounds(r: f64, spacing: f64) -> (f64, f64) {
    let rho = r / spacing;
    ((rho - 0.5) * (rho - 0.5), (rho + 0.5) * (rho + 0.5))
}

fn shell_value(counter: &BallCounter, r: f64, u: &[f64; 3]) -> f64 {
    let g = counter.grid();
    let (inner, outer) = shell_bounds(r, g.spacing());
    counter.shell_count(u, inner, outer) as f64 * g.face_area()
}

/// Mean curvature from the second-order expansion of the volumetric
/// invariant: `H = (omega_d r^d / 2 - V) 2 (d+1) / ((d-1) omega_(d-1) r^(d+1))`.
pub fn curvature_from_volume(dim: usize, r: f64, volume: f64) -> f64 {
    let d = dim as f64;
    let half_ball = 0.5 * unit_ball_volume(dim) * r.powi(dim as i32);
    (half_ball - volume) * 2.0 * (d + 1.0) / ((d - 1.0) * unit_ball_volume(dim - 1) * r.powi(dim as i32 + 1))
}

/// Curvature estimate at `x` (meant to be a boundary point), normalized so
/// that a sphere of radius `R` gives `1/R`.
pub fn curvature_estimate(vs: &VoxelSet, r: f64, x: &[f64]) -> Result<f64> {
    let v = vol_invariant_at(vs, r, x)?;
    Ok(curvature_from_volume(vs.grid().dim(), r, v))
}

/// Infimum of [`sphere_invariant_at`] over voxel centers within `eps` of the
/// boundary samples (voxel centers outside the grid are not visited). A
/// positive value certifies that the set is not `r`-degenerate.
pub fn nondegeneracy_condition(vs: &VoxelSet, r: f64, eps: f64) -> Result<f64> {
    let g = vs.grid();
    if !(r.is_finite() && r > g.spacing()) {
        return Err(Error::param("r", format!("shell radius must exceed the spacing {}, got {r}", g.spacing())));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let samples = boundary_samples(vs);
    if samples.is_empty() {
        return Err(Error::Precondition("the set has no boundary samples".into()));
    }
    // neighbourhood of the sample set, measured in half-voxel units
    let reach2 = 4.0 * rho_sq(eps, g.spacing());
    let reach = reach2.sqrt().floor() as i64;
    let mut near = vec![false; g.len()];
    for s in &samples {
        let q = s.half_coords();
        let box_range = |axis: usize| -> (i64, i64) {
            if axis >= g.dim() {
                return (0, 0);
            }
            let lo = ((q[axis] - reach - 1) as f64 / 2.0).floor() as i64;
            let hi = ((q[axis] + reach - 1) as f64 / 2.0).ceil() as i64;
            (lo.max(0), hi.min(g.n(axis) as i64 - 1))
        };
        let (a, b, c) = (box_range(0), box_range(1), box_range(2));
        for j2 in c.0..=c.1 {
            for j1 in b.0..=b.1 {
                for j0 in a.0..=a.1 {
                    let j = [j0, j1, j2];
                    let d2: i64 = (0..g.dim()).map(|k| (2 * j[k] + 1 - q[k]).pow(2)).sum();
                    if d2 as f64 <= reach2 {
                        near[g.linear([j0 as usize, j1 as usize, j2 as usize])] = true;
                    }
                }
            }
        }
    }
    let counter = BallCounter::new(vs);
    let candidates: Vec<usize> = (0..g.len()).filter(|&lin| near[lin]).collect();
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|&lin| {
            let idx = g.unravel(lin);
            let u = [idx[0] as f64, idx[1] as f64, idx[2] as f64];
            shell_value(&counter, r, &u)
        })
        .collect();
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// Integer pair counts behind the indicator-kernel functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Ordered occupied pairs `(x, y)` with `y` in the discrete ball of `x`.
    pub interior: u64,
    /// Occupied `x`, empty or out-of-grid `y` in the discrete ball of `x`.
    pub exterior: u64,
    /// Voxel centers per discrete ball.
    pub kernel: u64,
    /// Occupied voxels.
    pub occupied: u64,
}

/// Exact pair counts; `interior + exterior = kernel * occupied` always.
pub fn indicator_pair_counts(vs: &VoxelSet, r: f64) -> Result<PairCounts> {
    let field = vol_invariant_field(vs, r)?;
    let mut interior = 0u64;
    let mut occupied = 0u64;
    for (lin, &c) in field.counts.iter().enumerate() {
        if vs.get_linear(lin) {
            interior += c as u64;
            occupied += 1;
        }
    }
    Ok(PairCounts {
        interior,
        exterior: field.kernel_count * occupied - interior,
        kernel: field.kernel_count,
        occupied,
    })
}

/// `r`-nonlocal perimeter `∫_Ω ∫_{Ω^c} χ(|x-y| <= r)`, discretized as
/// `h^(2d)` times the number of occupied/empty pairs within the kernel.
pub fn nonlocal_perimeter(vs: &VoxelSet, r: f64) -> Result<f64> {
    let pc = indicator_pair_counts(vs, r)?;
    let cv = vs.grid().cell_volume();
    Ok(pc.exterior as f64 * cv * cv)
}

/// Riesz-type double integral `∫_Ω ∫_Ω k(x - y)` as `h^(2d)` times the
/// kernel-weighted number of ordered occupied pairs.
pub fn riesz_functional(vs: &VoxelSet, kernel: &Kernel) -> Result<f64> {
    let g = vs.grid();
    kernel.validate(g.spacing())?;
    let cv = g.cell_volume();
    if let Kernel::IndicatorBall { radius } = *kernel {
        let pc = indicator_pair_counts(vs, radius)?;
        return Ok(pc.interior as f64 * cv * cv);
    }
    let dim = g.dim();
    // half of the offsets (lexicographically positive) plus the origin
    let lines = kernel_lines(dim, rho_sq(kernel.cutoff(), g.spacing()));
    let mut offsets = Vec::new();
    for &(o1, o2, a) in &lines {
        for o0 in -a..=a {
            if (o2, o1, o0) > (0, 0, 0) {
                offsets.push([o0, o1, o2]);
            }
        }
    }
    let occupied = vs.count() as u64;
    let pair_counts: Vec<u64> = offsets.par_iter().map(|o| shifted_overlap(vs, o)).collect();
    let mut total = kernel.lattice_weight(0, g.spacing(), dim) * occupied as f64;
    for (o, &n) in offsets.iter().zip(&pair_counts) {
        let sq = o[0] * o[0] + o[1] * o[1] + o[2] * o[2];
        total += 2.0 * kernel.lattice_weight(sq, g.spacing(), dim) * n as f64;
    }
    Ok(total * cv * cv)
}

/// `#{x occupied : x + o occupied}`.
fn shifted_overlap(vs: &VoxelSet, o: &[i64; 3]) -> u64 {
    let g = vs.grid();
    let bits = vs.bits();
    let n0 = g.n(0) as i64;
    let mut total = 0u64;
    let (lo, hi) = ((-o[0]).max(0), (n0 - o[0]).min(n0));
    if lo >= hi {
        return 0;
    }
    for j2 in 0..g.n(2) as i64 {
        let k2 = j2 + o[2];
        if k2 < 0 || k2 >= g.n(2) as i64 {
            continue;
        }
        for j1 in 0..g.n(1) as i64 {
            let k1 = j1 + o[1];
            if k1 < 0 || k1 >= g.n(1) as i64 {
                continue;
            }
            let a = g.linear([0, j1 as usize, j2 as usize]);
            let b = g.linear([0, k1 as usize, k2 as usize]);
            let row_a = &bits[a + lo as usize..a + hi as usize];
            let row_b = &bits[(b as i64 + lo + o[0]) as usize..(b as i64 + hi + o[0]) as usize];
            total += row_a.iter().zip(row_b).filter(|(&x, &y)| x && y).count() as u64;
        }
    }
    total
}
