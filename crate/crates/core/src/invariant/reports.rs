use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counter::{rho_sq, BallCounter, Threshold};
use super::{check_radius, curvature_from_volume, vol_invariant_field, InvariantField};
use crate::error::{Error, Result};
use crate::grid::{boundary_samples, BoundarySample, VoxelSet};

/// Seed of the far-pair sampler unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Near pairs are those within this many voxels of each other.
const NEAR_VOXELS: i64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub radius: f64,
    pub sample_count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
    /// `(max - min) / mean`.
    pub relative_spread: f64,
    pub tolerance: f64,
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub radius: f64,
    pub sample_count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub radius: f64,
    pub boundary_samples: usize,
    pub budget: u64,
    /// Whether every pair of boundary samples was visited.
    pub exhaustive: bool,
    pub pair_count: u64,
    pub near_pair_count: u64,
    /// `min |Ω ∩ (B_r(x1) Δ B_r(x2))| / |x1 - x2|` over the visited pairs.
    pub min_ratio: f64,
    pub witness: [Vec<f64>; 2],
    pub seed: u64,
}

/// Field value at each boundary face: the mean of the two adjacent voxel
/// counts. A neighbour outside the grid is counted directly.
pub fn face_values(vs: &VoxelSet, field: &InvariantField, samples: &[BoundarySample]) -> Vec<f64> {
    let g = vs.grid();
    let counter = BallCounter::new(vs);
    let rho2 = rho_sq(field.radius(), g.spacing());
    let cv = g.cell_volume();
    samples
        .par_iter()
        .map(|s| {
            let inner = field.counts()[g.linear(s.occupied_voxel)] as u64;
            let outer = match g.checked_linear(s.empty_voxel) {
                Some(lin) => field.counts()[lin] as u64,
                None => {
                    let e = s.empty_voxel;
                    counter.count(&[e[0] as f64, e[1] as f64, e[2] as f64], Threshold::closed(rho2))
                }
            };
            (inner + outer) as f64 * 0.5 * cv
        })
        .collect()
}

struct Stats {
    mean: f64,
    min: f64,
    max: f64,
    std_dev: f64,
}

fn stats(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stats {
        mean,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std_dev: var.sqrt(),
    }
}

fn samples_or_err(vs: &VoxelSet, needed: usize) -> Result<Vec<BoundarySample>> {
    let samples = boundary_samples(vs);
    if samples.len() < needed {
        return Err(Error::Precondition(format!(
            "need at least {needed} boundary samples, the set has {}",
            samples.len()
        )));
    }
    Ok(samples)
}

/// Statistics of the invariant over all boundary samples; the set is
/// reported critical when the relative spread is at most `tol`.
pub fn criticality_report(vs: &VoxelSet, r: f64, tol: f64) -> Result<CriticalityReport> {
    check_radius(r)?;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::param("tol", format!("must be non-negative, got {tol}")));
    }
    let samples = samples_or_err(vs, 1)?;
    let field = vol_invariant_field(vs, r)?;
    let values = face_values(vs, &field, &samples);
    let s = stats(&values);
    let relative_spread = if s.mean > 0.0 { (s.max - s.min) / s.mean } else { 0.0 };
    Ok(CriticalityReport {
        radius: r,
        sample_count: values.len(),
        mean: s.mean,
        min: s.min,
        max: s.max,
        std_dev: s.std_dev,
        relative_spread,
        tolerance: tol,
        critical: relative_spread <= tol,
    })
}

/// Curvature estimates at every boundary sample, summarized.
pub fn curvature_summary(vs: &VoxelSet, r: f64) -> Result<CurvatureSummary> {
    check_radius(r)?;
    let samples = samples_or_err(vs, 1)?;
    let field = vol_invariant_field(vs, r)?;
    let dim = vs.grid().dim();
    let curv: Vec<f64> = face_values(vs, &field, &samples)
        .into_iter()
        .map(|v| curvature_from_volume(dim, r, v))
        .collect();
    let s = stats(&curv);
    Ok(CurvatureSummary {
        radius: r,
        sample_count: curv.len(),
        mean: s.mean,
        min: s.min,
        max: s.max,
        std_dev: s.std_dev,
    })
}

fn half_sq_dist(a: &[i64; 3], b: &[i64; 3], dim: usize) -> i64 {
    (0..dim).map(|k| (a[k] - b[k]).pow(2)).sum()
}

/// Pairs `i < j` with the face centers at most `NEAR_VOXELS` voxels apart.
fn near_pairs(coords: &[[i64; 3]], dim: usize) -> Vec<(u32, u32)> {
    let reach = 2 * NEAR_VOXELS;
    let cell = |q: &[i64; 3]| [q[0].div_euclid(reach), q[1].div_euclid(reach), q[2].div_euclid(reach)];
    let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for (i, q) in coords.iter().enumerate() {
        buckets.entry(cell(q)).or_default().push(i as u32);
    }
    let span2 = if dim == 3 { -1..=1 } else { 0..=0 };
    let mut pairs = Vec::new();
    for (i, q) in coords.iter().enumerate() {
        let c = cell(q);
        for d2 in span2.clone() {
            for d1 in -1..=1 {
                for d0 in -1..=1 {
                    let Some(bucket) = buckets.get(&[c[0] + d0, c[1] + d1, c[2] + d2]) else {
                        continue;
                    };
                    for &j in bucket {
                        if (j as usize) > i && half_sq_dist(q, &coords[j as usize], dim) <= reach * reach {
                            pairs.push((i as u32, j));
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Sampled minimum of `|Ω ∩ (B_r(x1) Δ B_r(x2))| / |x1 - x2|` over pairs
/// of boundary samples. All pairs are visited when there are at most
/// `budget` of them; otherwise every pair within four voxels plus
/// `budget` minus that many seeded random pairs.
pub fn degeneracy_score(vs: &VoxelSet, r: f64, budget: u64, seed: u64) -> Result<DegeneracyReport> {
    check_radius(r)?;
    if budget == 0 {
        return Err(Error::param("budget", "must be positive"));
    }
    let samples = samples_or_err(vs, 2)?;
    let g = vs.grid();
    let dim = g.dim();
    let n = samples.len() as u64;
    let coords: Vec<[i64; 3]> = samples.iter().map(|s| s.half_coords()).collect();
    let total = n * (n - 1) / 2;
    let exhaustive = total <= budget;
    let (pairs, near_count) = if exhaustive {
        let mut pairs = Vec::with_capacity(total as usize);
        let mut near = 0;
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if half_sq_dist(&coords[i as usize], &coords[j as usize], dim) <= 4 * NEAR_VOXELS * NEAR_VOXELS {
                    near += 1;
                }
                pairs.push((i, j));
            }
        }
        (pairs, near)
    } else {
        let mut pairs = near_pairs(&coords, dim);
        let near = pairs.len() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut drawn = 0;
        while drawn < budget.saturating_sub(near) {
            let i = rng.gen_range(0..n as u32);
            let j = rng.gen_range(0..n as u32);
            if i == j {
                continue;
            }
            let (i, j) = (i.min(j), i.max(j));
            drawn += 1;
            if half_sq_dist(&coords[i as usize], &coords[j as usize], dim) > 4 * NEAR_VOXELS * NEAR_VOXELS {
                pairs.push((i, j));
            }
        }
        (pairs, near)
    };

    let counter = BallCounter::new(vs);
    let rho2 = rho_sq(r, g.spacing());
    let cv = g.cell_volume();
    let half = 0.5 * g.spacing();
    let to_u = |q: &[i64; 3]| {
        let mut u = [0.0; 3];
        for k in 0..dim {
            u[k] = (q[k] - 1) as f64 * 0.5;
        }
        u
    };
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&coords[i as usize], &coords[j as usize]);
            let dist = (half_sq_dist(a, b, dim) as f64).sqrt() * half;
            counter.symmetric_difference_count(&to_u(a), &to_u(b), rho2) as f64 * cv / dist
        })
        .collect();
    let mut best = 0;
    for (k, &v) in ratios.iter().enumerate() {
        if v < ratios[best] {
            best = k;
        }
    }
    let (wi, wj) = pairs[best];
    let point = |i: u32| samples[i as usize].point[..dim].to_vec();
    Ok(DegeneracyReport {
        radius: r,
        boundary_samples: samples.len(),
        budget,
        exhaustive,
        pair_count: pairs.len() as u64,
        near_pair_count: near_count,
        min_ratio: ratios[best],
        witness: [point(wi), point(wj)],
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, GridSpec, ShapeSpec};
    use crate::invariant::exact_ball_ball_volume;

    fn shape_set(shape: ShapeSpec, h: f64, half_width: f64) -> VoxelSet {
        let g = GridSpec::covering(2, -half_width, half_width, h).unwrap();
        rasterize(&shape, &g).unwrap()
    }

    #[test]
    fn disk_is_critical_square_is_not() {
        let h = 1.0 / 256.0;
        let disk = shape_set(ShapeSpec::ball(&[0.0, 0.0], 1.0), h, 1.25);
        let rep = criticality_report(&disk, 0.3, 0.02).unwrap();
        assert!(rep.critical, "{rep:?}");
        assert!(rep.min <= rep.mean && rep.mean <= rep.max);
        let exact = exact_ball_ball_volume(2, 1.0, 0.3, 1.0).unwrap();
        assert!((rep.mean - exact).abs() / exact < 0.01);

        let square = shape_set(ShapeSpec::cube(&[0.0, 0.0], 2.0), h, 1.25);
        let rep = criticality_report(&square, 0.3, 0.02).unwrap();
        assert!(!rep.critical);
        assert!(rep.relative_spread > 0.5);
    }

    #[test]
    fn separated_disks_share_the_single_disk_mean() {
        let h = 1.0 / 256.0;
        let g = GridSpec::new(2, &[1280, 640], h, &[-2.5, -1.25]).unwrap();
        let one = rasterize(&ShapeSpec::ball(&[-1.2, 0.0], 1.0), &g).unwrap();
        let two = rasterize(
            &ShapeSpec::union(vec![ShapeSpec::ball(&[-1.2, 0.0], 1.0), ShapeSpec::ball(&[1.2, 0.0], 1.0)]),
            &g,
        )
        .unwrap();
        let a = criticality_report(&one, 0.3, 0.02).unwrap();
        let b = criticality_report(&two, 0.3, 0.02).unwrap();
        assert!(b.critical, "{a:?} {b:?}");
        assert_eq!(b.sample_count, 2 * a.sample_count);
        assert!((a.mean - b.mean).abs() <= 1e-12 * a.mean);
    }

    #[test]
    fn criticality_needs_a_boundary() {
        let g = GridSpec::cube(2, 8, 0.1, 0.0).unwrap();
        assert!(matches!(
            criticality_report(&VoxelSet::empty(g), 0.2, 0.01),
            Err(Error::Precondition(_))
        ));
        assert!(degeneracy_score(&VoxelSet::empty(g), 0.2, 10, DEFAULT_SEED).is_err());
    }

    #[test]
    fn small_sets_are_degenerate() {
        let h = 1.0 / 32.0;
        let disk = shape_set(ShapeSpec::ball(&[0.0, 0.0], 1.0), h, 1.25);
        let rep = degeneracy_score(&disk, 3.0, 1_000_000, DEFAULT_SEED).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.min_ratio, 0.0);
        assert_ne!(rep.witness[0], rep.witness[1]);

        let g = GridSpec::covering(2, -2.0, 2.0, h).unwrap();
        let pair = rasterize(
            &ShapeSpec::union(vec![ShapeSpec::ball(&[-1.2, 0.0], 0.2), ShapeSpec::ball(&[1.2, 0.0], 0.2)]),
            &g,
        )
        .unwrap();
        let rep = degeneracy_score(&pair, 0.5, 1_000_000, DEFAULT_SEED).unwrap();
        assert_eq!(rep.min_ratio, 0.0);
    }

    #[test]
    fn disk_is_not_degenerate() {
        let r = 0.5;
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let disk = shape_set(ShapeSpec::ball(&[0.0, 0.0], 1.0), h, 1.25);
            let rep = degeneracy_score(&disk, r, 20_000, DEFAULT_SEED).unwrap();
            assert!(!rep.exhaustive);
            assert!(rep.near_pair_count > 0 && rep.pair_count >= rep.near_pair_count);
            assert!(rep.min_ratio >= 0.5 * r, "h={h}: {}", rep.min_ratio);
        }
    }

    #[test]
    fn degeneracy_is_deterministic_for_a_seed() {
        let disk = shape_set(ShapeSpec::cube(&[0.1, 0.0], 1.3), 1.0 / 32.0, 1.0);
        let a = degeneracy_score(&disk, 0.4, 5_000, 7).unwrap();
        let b = degeneracy_score(&disk, 0.4, 5_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_difference_is_symmetric() {
        let disk = shape_set(ShapeSpec::ball(&[0.0, 0.0], 1.0), 1.0 / 32.0, 1.25);
        let counter = BallCounter::new(&disk);
        let samples = boundary_samples(&disk);
        let rho2 = rho_sq(0.4, 1.0 / 32.0);
        let u = |s: &BoundarySample| disk.grid().index_coords(&s.point[..2]);
        for k in (0..samples.len()).step_by(17) {
            let (a, b) = (u(&samples[k]), u(&samples[(k * 7 + 3) % samples.len()]));
            assert_eq!(
                counter.symmetric_difference_count(&a, &b, rho2),
                counter.symmetric_difference_count(&b, &a, rho2)
            );
        }
    }

    #[test]
    fn curvature_summary_of_disk() {
        let disk = shape_set(ShapeSpec::ball(&[0.0, 0.0], 1.0), 1.0 / 256.0, 1.25);
        let s = curvature_summary(&disk, 0.2).unwrap();
        assert!((s.mean - 1.0).abs() < 0.15, "{s:?}");
    }
}
