//! Distances between occupied voxel centers.

use rayon::prelude::*;

use super::{Idx, VoxelSet};
use crate::error::{Error, Result};

const INF: i64 = i64::MAX / 4;

/// Exact squared Euclidean distance transform, in voxel units: for every
/// voxel, the squared index distance to the nearest occupied voxel of
/// `sites` (`None` when `sites` is empty). Separable lower-envelope scheme,
/// one pass per axis; all stored distances are exact integers.
pub fn squared_distance_transform(sites: &VoxelSet) -> Option<Vec<i64>> {
    if sites.is_empty() {
        return None;
    }
    let g = *sites.grid();
    let mut f: Vec<i64> = sites.bits().iter().map(|&b| if b { 0 } else { INF }).collect();
    for axis in 0..g.dim() {
        let n = g.n(axis);
        let stride = match axis {
            0 => 1,
            1 => g.n(0),
            _ => g.n(0) * g.n(1),
        };
        // every line along `axis` starts at a voxel whose `axis` index is 0
        let starts: Vec<usize> = (0..g.len()).filter(|&lin| g.unravel(lin)[axis] == 0).collect();
        let lines: Vec<(usize, Vec<i64>)> = starts
            .par_iter()
            .map(|&s| {
                let line: Vec<i64> = (0..n).map(|q| f[s + q * stride]).collect();
                (s, envelope_1d(&line))
            })
            .collect();
        for (s, out) in lines {
            for (q, v) in out.into_iter().enumerate() {
                f[s + q * stride] = v;
            }
        }
    }
    Some(f)
}

/// One-dimensional squared distance transform of sampled function `f`.
fn envelope_1d(f: &[i64]) -> Vec<i64> {
    let n = f.len();
    let mut out = vec![INF; n];
    let mut vertices: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q] >= INF {
            continue;
        }
        let fq = (f[q] + (q * q) as i64) as f64;
        loop {
            match vertices.last() {
                None => {
                    vertices.push(q);
                    bounds.clear();
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&v) => {
                    let fv = (f[v] + (v * v) as i64) as f64;
                    let s = (fq - fv) / (2.0 * (q as f64 - v as f64));
                    if s <= *bounds.last().unwrap() {
                        vertices.pop();
                        bounds.pop();
                    } else {
                        vertices.push(q);
                        bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if vertices.is_empty() {
        return out;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < vertices.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let v = vertices[k];
        let dq = q as i64 - v as i64;
        *o = dq * dq + f[v];
    }
    out
}

/// Minimum Euclidean distance between occupied voxel centers of `a` and `b`.
pub fn component_distance(a: &VoxelSet, b: &VoxelSet) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("component_distance needs two non-empty sets".into()));
    }
    let dt = squared_distance_transform(b).expect("b is non-empty");
    let best = a
        .bits()
        .iter()
        .zip(&dt)
        .filter(|(&occ, _)| occ)
        .map(|(_, &d)| d)
        .min()
        .expect("a is non-empty");
    Ok((best as f64).sqrt() * a.grid().spacing())
}

/// Maximum Euclidean distance between occupied voxel centers.
///
/// Only voxels that are extreme in their line along every axis can realize
/// the maximum (distance to a fixed point is strictly convex along a line),
/// so the pairwise scan runs over that candidate set.
pub fn diameter(vs: &VoxelSet) -> Result<f64> {
    if vs.is_empty() {
        return Err(Error::Precondition("diameter of an empty set".into()));
    }
    let candidates = line_extremes(vs);
    let best = candidates
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            candidates[i + 1..]
                .iter()
                .map(|b| squared_index_distance(a, b))
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ok((best as f64).sqrt() * vs.grid().spacing())
}

pub(crate) fn squared_index_distance(a: &Idx, b: &Idx) -> i64 {
    (0..3)
        .map(|k| {
            let d = a[k] as i64 - b[k] as i64;
            d * d
        })
        .sum()
}

/// Occupied voxels that are the first or last occupied voxel of their line
/// along every axis.
fn line_extremes(vs: &VoxelSet) -> Vec<Idx> {
    let g = vs.grid();
    let mut hits = vec![0u8; g.len()];
    for axis in 0..g.dim() {
        let stride = match axis {
            0 => 1,
            1 => g.n(0),
            _ => g.n(0) * g.n(1),
        };
        for s in (0..g.len()).filter(|&lin| g.unravel(lin)[axis] == 0) {
            let occupied = (0..g.n(axis)).map(|q| s + q * stride).filter(|&lin| vs.get_linear(lin));
            let mut first = None;
            let mut last = None;
            for lin in occupied {
                first.get_or_insert(lin);
                last = Some(lin);
            }
            if let (Some(a), Some(b)) = (first, last) {
                hits[a] += 1;
                if b != a {
                    hits[b] += 1;
                }
            }
        }
    }
    let d = g.dim() as u8;
    (0..g.len())
        .filter(|&lin| hits[lin] == d)
        .map(|lin| g.unravel(lin))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn brute(a: &VoxelSet, b: &VoxelSet, pick_max: bool) -> f64 {
        let g = a.grid();
        let mut best: Option<f64> = None;
        for p in a.iter_occupied() {
            let cp = g.center(p);
            for q in b.iter_occupied() {
                let cq = g.center(q);
                let d = ((cp[0] - cq[0]).powi(2) + (cp[1] - cq[1]).powi(2) + (cp[2] - cq[2]).powi(2)).sqrt();
                best = Some(match best {
                    None => d,
                    Some(x) if pick_max => x.max(d),
                    Some(x) => x.min(d),
                });
            }
        }
        best.unwrap()
    }

    fn random_set(dim: usize, n: usize, bits: &[bool]) -> VoxelSet {
        let g = GridSpec::cube(dim, n, 0.1, -1.0).unwrap();
        VoxelSet::from_bits(g, bits[..g.len()].to_vec()).unwrap()
    }

    #[test]
    fn hand_examples() {
        let g = GridSpec::cube(2, 16, 0.1, 0.0).unwrap();
        let a = VoxelSet::from_indices(g, [[2, 3, 0]]).unwrap();
        let b = VoxelSet::from_indices(g, [[12, 3, 0]]).unwrap();
        assert!((component_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(component_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(diameter(&a).unwrap(), 0.0);
        let pair = a.union(&VoxelSet::from_indices(g, [[2, 13, 0]]).unwrap()).unwrap();
        assert!((diameter(&pair).unwrap() - 1.0).abs() < 1e-12);
        assert!(component_distance(&a, &VoxelSet::empty(g)).is_err());
        assert!(diameter(&VoxelSet::empty(g)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn agrees_with_pairwise_scan_2d(
            a in proptest::collection::vec(proptest::bool::weighted(0.1), 32 * 32),
            b in proptest::collection::vec(proptest::bool::weighted(0.05), 32 * 32),
        ) {
            let (a, b) = (random_set(2, 32, &a), random_set(2, 32, &b));
            prop_assume!(!a.is_empty() && !b.is_empty());
            prop_assert!((diameter(&a).unwrap() - brute(&a, &a, true)).abs() < 1e-12);
            prop_assert!((component_distance(&a, &b).unwrap() - brute(&a, &b, false)).abs() < 1e-12);
        }

        #[test]
        fn agrees_with_pairwise_scan_3d(
            a in proptest::collection::vec(proptest::bool::weighted(0.02), 12 * 12 * 12),
            b in proptest::collection::vec(proptest::bool::weighted(0.01), 12 * 12 * 12),
        ) {
            let (a, b) = (random_set(3, 12, &a), random_set(3, 12, &b));
            prop_assume!(!a.is_empty() && !b.is_empty());
            prop_assert!((diameter(&a).unwrap() - brute(&a, &a, true)).abs() < 1e-12);
            prop_assert!((component_distance(&a, &b).unwrap() - brute(&a, &b, false)).abs() < 1e-12);
        }
    }
}
