//! The moving-planes sweep, contact classification at the stopping plane and
//! the split into a Steiner symmetric part and the rest.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{line_violation, Hyperplane, Lines, Orientation};
use crate::error::{Error, Result};
use crate::grid::io::mask_base64;
use crate::grid::{boundary_samples, GridSpec, SIdx, VoxelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactType {
    Away,
    Close,
    AwayAndClose,
    /// The plane left the support without the inclusion ever failing.
    SweptOut,
    /// Inclusion failed but no contact was found within the tolerance.
    None,
}

impl ContactType {
    pub fn has_away(self) -> bool {
        matches!(self, ContactType::Away | ContactType::AwayAndClose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub offset: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingPlanesResult {
    pub axis: usize,
    pub orientation: Orientation,
    pub tol_incl: f64,
    pub tol_contact: f64,
    /// Stopping plane on the half-voxel lattice.
    pub stop: Hyperplane,
    /// Stopping offset `T` in world units.
    pub stop_offset: f64,
    pub contact: ContactType,
    /// Boundary samples of the reflected cap touching the boundary of the set
    /// away from the stopping plane.
    pub away_contacts: Vec<Vec<f64>>,
    /// Boundary samples sharing a normal line with another sample, both
    /// within the contact tolerance of the stopping plane.
    pub close_contacts: Vec<Vec<f64>>,
    pub symmetric_measure: f64,
    pub non_symmetric_measure: f64,
    pub trace: Vec<TraceStep>,
    #[serde(with = "mask_base64")]
    pub symmetric: VoxelSet,
    #[serde(with = "mask_base64")]
    pub non_symmetric: VoxelSet,
}

/// `sqrt(d) h`.
pub fn default_tol_contact(grid: &GridSpec) -> f64 {
    (grid.dim() as f64).sqrt() * grid.spacing()
}

/// Half a voxel: admits no violating voxel while staying positive.
pub fn default_tol_incl(grid: &GridSpec) -> f64 {
    0.5 * grid.cell_volume()
}

fn flip(vs: &VoxelSet, axis: usize) -> VoxelSet {
    let g = vs.grid();
    let n = g.n(axis);
    VoxelSet::from_fn(*g, |mut idx| {
        idx[axis] = n - 1 - idx[axis];
        vs.get(idx)
    })
}

/// Sweep result in the frame where the plane moves up the axis.
struct Sweep {
    stop_m: i64,
    swept_out: bool,
    trace: Vec<(i64, f64)>,
    away: Vec<SIdx>,
    close: Vec<SIdx>,
    symmetric: VoxelSet,
}

/// Sweeps the plane along `axis` in the given orientation, half a voxel
/// per step, starting at the face just outside the support. The stopping
/// offset is the last one at which [`super::symmetric_inclusion_check`]
/// holds with tolerance `tol_incl`.
pub fn moving_planes(
    vs: &VoxelSet,
    axis: usize,
    orientation: Orientation,
    tol_incl: f64,
    tol_contact: f64,
) -> Result<MovingPlanesResult> {
    let g = *vs.grid();
    if axis >= g.dim() {
        return Err(Error::param("axis", format!("must be below {}, got {axis}", g.dim())));
    }
    for (name, v) in [("tol_incl", tol_incl), ("tol_contact", tol_contact)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    if vs.is_empty() {
        return Err(Error::Precondition("moving planes need a non-empty set".into()));
    }
    let n = g.n(axis) as i64;
    let (frame, unflip_m): (VoxelSet, Box<dyn Fn(i64) -> i64>) = match orientation {
        Orientation::Positive => (vs.clone(), Box::new(|m| m)),
        Orientation::Negative => (flip(vs, axis), Box::new(move |m| 2 * n - m)),
    };
    let sweep = sweep_up(&frame, axis, tol_incl, tol_contact)?;
    let unflip_q = |q: &SIdx| {
        let mut q = *q;
        q[axis] = unflip_m(q[axis]);
        q
    };
    let symmetric = match orientation {
        Orientation::Positive => sweep.symmetric,
        Orientation::Negative => flip(&sweep.symmetric, axis),
    };
    let non_symmetric = vs.difference(&symmetric)?;
    let to_world = |q: &SIdx| -> Vec<f64> { (0..g.dim()).map(|k| g.half_offset(k, q[k])).collect() };
    let stop = Hyperplane::new(axis, unflip_m(sweep.stop_m));
    let contact = match (sweep.swept_out, !sweep.away.is_empty(), !sweep.close.is_empty()) {
        (true, _, _) => ContactType::SweptOut,
        (false, true, true) => ContactType::AwayAndClose,
        (false, true, false) => ContactType::Away,
        (false, false, true) => ContactType::Close,
        (false, false, false) => ContactType::None,
    };
    log::debug!(
        "moving planes axis {axis} {orientation:?}: stop at {} after {} steps, {contact:?}",
        stop.offset(&g),
        sweep.trace.len()
    );
    Ok(MovingPlanesResult {
        axis,
        orientation,
        tol_incl,
        tol_contact,
        stop,
        stop_offset: stop.offset(&g),
        contact,
        away_contacts: sweep.away.iter().map(|q| to_world(&unflip_q(q))).collect(),
        close_contacts: sweep.close.iter().map(|q| to_world(&unflip_q(q))).collect(),
        symmetric_measure: symmetric.measure(),
        non_symmetric_measure: non_symmetric.measure(),
        trace: sweep
            .trace
            .iter()
            .map(|&(m, violation)| TraceStep {
                offset: g.half_offset(axis, unflip_m(m)),
                violation,
            })
            .collect(),
        symmetric,
        non_symmetric,
    })
}

fn sweep_up(vs: &VoxelSet, axis: usize, tol_incl: f64, tol_contact: f64) -> Result<Sweep> {
    let g = vs.grid();
    let lines = Lines::new(g, axis);
    let n = lines.n as i64;
    let first_layer = vs.iter_occupied().map(|idx| idx[axis]).min().expect("non-empty set") as i64;
    let violation = |m: i64| -> f64 {
        let count: u64 = lines
            .starts
            .par_iter()
            .map(|&s| line_violation(|i| vs.get_linear(lines.at(s, i)), lines.n, m))
            .sum();
        count as f64 * g.cell_volume()
    };
    let start = 2 * first_layer;
    let mut trace = vec![(start, 0.0)];
    let mut stop_m = start;
    let mut swept_out = true;
    for m in start + 1..=2 * n {
        let v = violation(m);
        trace.push((m, v));
        if v > tol_incl {
            if m == start + 2 {
                return Err(Error::ContactAtStart {
                    axis,
                    offset: g.half_offset(axis, m),
                });
            }
            swept_out = false;
            break;
        }
        stop_m = m;
    }
    let (away, close, seeds) = classify_contacts(vs, axis, stop_m, tol_contact)?;
    let symmetric = symmetric_part(vs, &lines, stop_m, &seeds);
    Ok(Sweep {
        stop_m,
        swept_out,
        trace,
        away,
        close,
        symmetric,
    })
}

/// Integer offsets (half-voxel units) within `reach` of the origin.
fn offsets_within(dim: usize, reach2: f64) -> Vec<SIdx> {
    let r = reach2.sqrt().floor() as i64;
    let span = |k: usize| if k < dim { -r..=r } else { 0..=0 };
    let mut out = Vec::new();
    for z in span(2) {
        for y in span(1) {
            for x in span(0) {
                if ((x * x + y * y + z * z) as f64) <= reach2 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Returns the away-contact samples of the reflected cap, the close-contact
/// samples of the set and the voxels seeding the symmetric part.
fn classify_contacts(vs: &VoxelSet, axis: usize, m: i64, tol: f64) -> Result<(Vec<SIdx>, Vec<SIdx>, Vec<usize>)> {
    let g = vs.grid();
    let half = 0.5 * g.spacing();
    let plane = Hyperplane::new(axis, m);
    let cap = VoxelSet::from_fn(*g, |idx| vs.get(idx) && 2 * idx[axis] as i64 + 1 < m);
    let reflected = super::reflect(&cap, plane)?.set;

    let samples = boundary_samples(vs);
    let by_coords: HashMap<SIdx, usize> = samples.iter().enumerate().map(|(i, s)| (s.half_coords(), i)).collect();
    let reach2 = (tol / half).powi(2);
    let offsets = offsets_within(g.dim(), reach2);
    let far_from_plane = |q: &SIdx| ((q[axis] - m).abs() as f64) * half > tol;

    let mut away = Vec::new();
    let mut seeds = Vec::new();
    for s in boundary_samples(&reflected) {
        let q = s.half_coords();
        if !far_from_plane(&q) {
            continue;
        }
        let hit = offsets
            .iter()
            .find_map(|o| by_coords.get(&[q[0] + o[0], q[1] + o[1], q[2] + o[2]]));
        if let Some(&j) = hit {
            away.push(q);
            seeds.push(g.linear(samples[j].occupied_voxel));
        }
    }

    let mut lines: HashMap<SIdx, Vec<SIdx>> = HashMap::new();
    for s in &samples {
        let q = s.half_coords();
        if !far_from_plane(&q) {
            let mut key = q;
            key[axis] = 0;
            lines.entry(key).or_default().push(q);
        }
    }
    let mut close: Vec<SIdx> = lines.into_values().filter(|v| v.len() >= 2).flatten().collect();
    close.sort_unstable_by_key(|q| (q[2], q[1], q[0]));
    Ok((away, close, seeds))
}

/// Maximal runs along the sweep axis whose midpoint lies within half a
/// voxel of plane `m` (exact mirror images when the parities match), grown
/// from the seeds through face-adjacent runs of the same kind.
fn symmetric_part(vs: &VoxelSet, lines: &Lines, m: i64, seeds: &[usize]) -> VoxelSet {
    let g = vs.grid();
    const NONE: u32 = u32::MAX;
    let mut run_of = vec![NONE; g.len()];
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for &s in &lines.starts {
        let mut i = 0;
        while i < lines.n {
            if !vs.get_linear(lines.at(s, i)) {
                i += 1;
                continue;
            }
            let lo = i;
            while i < lines.n && vs.get_linear(lines.at(s, i)) {
                i += 1;
            }
            let hi = i - 1;
            if ((lo + hi + 1) as i64 - m).abs() <= 1 {
                for k in lo..=hi {
                    run_of[lines.at(s, k)] = runs.len() as u32;
                }
                runs.push((s, lo, hi));
            }
        }
    }
    let mut visited = vec![false; runs.len()];
    let mut queue = VecDeque::new();
    for &lin in seeds {
        let r = run_of[lin];
        if r != NONE && !visited[r as usize] {
            visited[r as usize] = true;
            queue.push_back(r as usize);
        }
    }
    let mut out = vec![false; g.len()];
    while let Some(r) = queue.pop_front() {
        let (s, lo, hi) = runs[r];
        for k in lo..=hi {
            let lin = lines.at(s, k);
            out[lin] = true;
            let idx = g.unravel(lin);
            for a in (0..g.dim()).filter(|&a| a != lines.axis) {
                for dir in [-1i64, 1] {
                    let mut nb = [idx[0] as i64, idx[1] as i64, idx[2] as i64];
                    nb[a] += dir;
                    if let Some(nl) = g.checked_linear(nb) {
                        let nr = run_of[nl];
                        if nr != NONE && !visited[nr as usize] {
                            visited[nr as usize] = true;
                            queue.push_back(nr as usize);
                        }
                    }
                }
            }
        }
    }
    VoxelSet::from_bits(*g, out).expect("same grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(with = "mask_base64")]
    pub symmetric: VoxelSet,
    #[serde(with = "mask_base64")]
    pub non_symmetric: VoxelSet,
    /// Faces shared by the two parts.
    pub interface_faces: usize,
    /// Area of shared faces farther than the contact tolerance from the
    /// stopping plane.
    pub interface_violation: f64,
}

/// Returns the two parts stored in `result` after checking that they
/// partition `vs`, and measures how much of their common boundary lies off
/// the stopping plane.
pub fn decompose_symmetric(vs: &VoxelSet, result: &MovingPlanesResult) -> Result<Decomposition> {
    let (s, ns) = (&result.symmetric, &result.non_symmetric);
    if s.grid() != vs.grid() || ns.grid() != vs.grid() {
        return Err(Error::Inconsistent("masks live on a different grid than the input".into()));
    }
    let g = vs.grid();
    for lin in 0..g.len() {
        let (a, b) = (s.get_linear(lin), ns.get_linear(lin));
        if (a && b) || (a || b) != vs.get_linear(lin) {
            return Err(Error::Inconsistent(format!(
                "masks do not partition the input at voxel {:?}",
                g.unravel(lin)
            )));
        }
    }
    let axis = result.stop.axis;
    let half = 0.5 * g.spacing();
    let mut faces = 0;
    let mut off_plane = 0;
    for idx in s.iter_occupied() {
        for a in 0..g.dim() {
            for dir in [-1i64, 1] {
                let mut nb = [idx[0] as i64, idx[1] as i64, idx[2] as i64];
                nb[a] += dir;
                if ns.get_signed(nb) {
                    faces += 1;
                    let mut q = 2 * idx[axis] as i64 + 1;
                    if a == axis {
                        q += dir;
                    }
                    if ((q - result.stop.m).abs() as f64) * half > result.tol_contact {
                        off_plane += 1;
                    }
                }
            }
        }
    }
    Ok(Decomposition {
        symmetric: s.clone(),
        non_symmetric: ns.clone(),
        interface_faces: faces,
        interface_violation: off_plane as f64 * g.face_area(),
    })
}
