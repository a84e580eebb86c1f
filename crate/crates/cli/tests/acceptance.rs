//! Acceptance criteria A1-A11. Prints one line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vxr_cli::{cmd_analyze, cmd_decompose, RunConfig};
use vxr_core::grid::{boundary_face_count, boundary_samples, rasterize};
use vxr_core::invariant::{
    annular_slab_asymptotic, annular_slab_volume, criticality_report, curvature_from_volume, degeneracy_score,
    exact_ball_ball_volume, face_values, kernel_count, nonlocal_perimeter, riesz_functional, unit_ball_volume,
    vol_invariant_at, vol_invariant_field, Kernel, DEFAULT_SEED,
};
use vxr_core::rigidity::{extract_balls, rigidity_verdict, RigidityTolerances, Verdict};
use vxr_core::symmetry::{default_tol_contact, default_tol_incl, moving_planes, steiner_symmetrize, Orientation};
use vxr_core::{GridSpec, ShapeSpec, VoxelSet};

const A1_SETS: usize = 50;
const A1_LIMIT: Duration = Duration::from_secs(10);

const A2_REL_TOL: f64 = 0.01;
const A2_MC_SAMPLES: u64 = 10_000_000;
/// Half a unit in the third significant digit of a value in [0.1, 1).
const A2_MC_TOL: f64 = 0.5e-3;
const A2_LIMIT: Duration = Duration::from_secs(5);

const A3_DISK_TOL: f64 = 0.15;
const A3_FLAT_TOL: f64 = 0.1;
const A3_LIMIT: Duration = Duration::from_secs(30);

const A4_SPREAD_TOL: f64 = 0.02;
const A4_NOISE: f64 = 1.10;

/// Frozen once against the lens-derivative oracle below.
const DEGENERACY_FLOOR: f64 = 0.1;

const A6_SETS: usize = 100;
const A7_SETS: usize = 50;

const A8_T_TOL_VOXELS: f64 = 1.0;
const A8_NS_FRACTION: f64 = 0.01;
const A8_LIMIT: Duration = Duration::from_secs(20);

const A9_RESIDUAL: f64 = 0.01;
const A9_LIMIT: Duration = Duration::from_secs(300);

const A10_REL_TOL: f64 = 0.05;
const A10_DRAWS: usize = 20;

struct Check {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Check);

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn raster(shape: &ShapeSpec, g: &GridSpec) -> VoxelSet {
    rasterize(shape, g).expect("valid fixture")
}

fn random_set(rng: &mut ChaCha8Rng, dim: usize, n: usize, h: f64) -> VoxelSet {
    let g = GridSpec::cube(dim, n, h, 0.0).unwrap();
    let density = rng.gen_range(0.2..0.8);
    VoxelSet::from_fn(g, |_| rng.gen_bool(density))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn a1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut voxels = 0usize;
    for k in 0..A1_SETS {
        let dim = if k % 2 == 0 { 2 } else { 3 };
        let h = 1.0 / 16.0;
        let vs = random_set(&mut rng, dim, 16, h);
        let r = rng.gen_range(2..=6) as f64 * h;
        let field = vol_invariant_field(&vs, r).unwrap();
        for lin in 0..vs.grid().len() {
            let idx = vs.grid().unravel(lin);
            let at = vol_invariant_at(&vs, r, &vs.grid().center(idx)[..dim]).unwrap();
            if at.to_bits() != field.value(idx).to_bits() {
                return check(false, format!("set {k}, voxel {idx:?}: field {} vs pointwise {at}", field.value(idx)));
            }
            voxels += 1;
        }
    }
    let t = start.elapsed();
    check(t < A1_LIMIT, format!("{voxels} voxels bit-identical over {A1_SETS} sets"))
}

/// Area of the circular segment of height `s` cut from a disk of radius `rad`.
fn segment(rad: f64, s: f64) -> f64 {
    rad * rad * (1.0 - s / rad).acos() - (rad - s) * (2.0 * rad * s - s * s).sqrt()
}

fn a2() -> Check {
    let start = Instant::now();
    let (big, small, dist) = (1.0, 0.5, 1.0);
    let oracle = exact_ball_ball_volume(2, big, small, dist).unwrap();

    // the common chord sits at x = (d^2 - small^2 + big^2) / 2d
    let x = (dist * dist - small * small + big * big) / (2.0 * dist);
    let segments = segment(big, big - x) + segment(small, small - (dist - x));

    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let mut hits = 0u64;
    for _ in 0..A2_MC_SAMPLES {
        // uniform in the bounding square of the small disk, area 1
        let px = dist - small + rng.gen::<f64>();
        let py = -small + rng.gen::<f64>();
        if px * px + py * py <= big * big && (px - dist).powi(2) + py * py <= small * small {
            hits += 1;
        }
    }
    let mc = hits as f64 / A2_MC_SAMPLES as f64 * (2.0 * small).powi(2);

    let h = 1.0 / 256.0;
    let g = GridSpec::covering(2, -1.25, 1.25, h).unwrap();
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], big), &g);
    let lattice = vol_invariant_at(&disk, small, &[dist, 0.0]).unwrap();
    let rel = (lattice - oracle).abs() / oracle;
    let t = start.elapsed();
    check(
        (segments - oracle).abs() <= 1e-12 && (mc - oracle).abs() <= A2_MC_TOL && rel <= A2_REL_TOL && t < A2_LIMIT,
        format!("oracle {oracle:.6}, segments {segments:.6}, MC {mc:.6}, lattice {lattice:.6} (rel {rel:.2e})"),
    )
}

fn boundary_curvatures(vs: &VoxelSet, r: f64) -> Vec<([f64; 3], f64)> {
    let field = vol_invariant_field(vs, r).unwrap();
    let samples = boundary_samples(vs);
    let dim = vs.grid().dim();
    face_values(vs, &field, &samples)
        .into_iter()
        .zip(&samples)
        .map(|(v, s)| (s.point, curvature_from_volume(dim, r, v)))
        .collect()
}

fn a3() -> Check {
    let start = Instant::now();
    let r = 0.2;
    let h = 1.0 / 512.0;
    let g = GridSpec::covering(2, -1.25, 1.25, h).unwrap();
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 1.0), &g);
    let disk_median = median(boundary_curvatures(&disk, r).into_iter().map(|(_, k)| k).collect());

    let g = GridSpec::covering(2, -1.0, 1.0, h).unwrap();
    let half = raster(&ShapeSpec::cuboid(&[-4.0, -4.0], &[4.0, 0.0]), &g);
    let flat: Vec<f64> = boundary_curvatures(&half, r)
        .into_iter()
        .filter(|(p, _)| p[0].abs() < 0.5 && p[1].abs() < h)
        .map(|(_, k)| k)
        .collect();
    let flat_median = median(flat);
    let t = start.elapsed();
    check(
        (disk_median - 1.0).abs() <= A3_DISK_TOL && flat_median.abs() <= A3_FLAT_TOL && t < A3_LIMIT,
        format!("disk median {disk_median:.4}, flat median {flat_median:.4}"),
    )
}

fn a4() -> Check {
    let spreads: Vec<f64> = [64.0, 128.0, 256.0]
        .iter()
        .map(|n| {
            let g = GridSpec::covering(2, -1.25, 1.25, 1.0 / n).unwrap();
            let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 1.0), &g);
            criticality_report(&disk, 0.3, A4_SPREAD_TOL).unwrap().relative_spread
        })
        .collect();
    let monotone = spreads.windows(2).all(|w| w[1] <= A4_NOISE * w[0]);
    check(
        spreads[2] <= A4_SPREAD_TOL && monotone,
        format!("spread at h=1/64,1/128,1/256: {:.4}, {:.4}, {:.4}", spreads[0], spreads[1], spreads[2]),
    )
}

/// `d/dt |Ω ∩ B_r(x + t e)| / |e|` lower bound for the unit disk at a
/// boundary point: the arc of `∂B_r(x)` inside the disk weighted by
/// `|n · e|`, minimized over directions `e`.
fn lens_derivative_floor(r: f64) -> f64 {
    let lo = (-r / 2.0).acos();
    let steps = 20_000;
    let dphi = 2.0 * (PI - lo) / steps as f64;
    (0..=180)
        .map(|k| {
            let theta = k as f64 * PI / 180.0;
            (0..steps)
                .map(|i| {
                    let phi = lo + (i as f64 + 0.5) * dphi;
                    r * (phi - theta).cos().abs() * dphi
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn a5() -> Check {
    let h = 1.0 / 32.0;
    let g = GridSpec::covering(2, -1.25, 1.25, h).unwrap();
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 1.0), &g);
    let small = degeneracy_score(&disk, 3.0, 1_000_000, DEFAULT_SEED).unwrap().min_ratio;

    let g = GridSpec::covering(2, -2.0, 2.0, h).unwrap();
    let pair = raster(
        &ShapeSpec::union(vec![ShapeSpec::ball(&[-1.2, 0.0], 0.2), ShapeSpec::ball(&[1.2, 0.0], 0.2)]),
        &g,
    );
    let spaced = degeneracy_score(&pair, 0.5, 1_000_000, DEFAULT_SEED).unwrap().min_ratio;

    let g = GridSpec::covering(2, -1.25, 1.25, 1.0 / 64.0).unwrap();
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 1.0), &g);
    let score = degeneracy_score(&disk, 0.5, 100_000, DEFAULT_SEED).unwrap().min_ratio;
    let oracle = lens_derivative_floor(0.5);
    check(
        small == 0.0 && spaced == 0.0 && score >= DEGENERACY_FLOOR && DEGENERACY_FLOOR <= oracle,
        format!("diam<=r {small}, spaced {spaced}, disk {score:.4} (floor {DEGENERACY_FLOOR}, lens oracle {oracle:.4})"),
    )
}

fn a6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    for k in 0..A6_SETS {
        let dim = if k % 2 == 0 { 2 } else { 3 };
        let n = if dim == 2 { rng.gen_range(8..=32) } else { rng.gen_range(6..=14) };
        let h = 1.0 / 16.0;
        let vs = random_set(&mut rng, dim, n, h);
        let r = rng.gen_range(1.0..5.0) * h;
        let per = nonlocal_perimeter(&vs, r).unwrap();
        let j = riesz_functional(&vs, &Kernel::indicator(r)).unwrap();
        let kv = kernel_count(vs.grid(), r).unwrap() as f64 * vs.grid().cell_volume();
        if (per + j).to_bits() != (kv * vs.measure()).to_bits() {
            return check(false, format!("set {k}: {per} + {j} != {kv} * {}", vs.measure()));
        }
    }
    check(true, format!("{A6_SETS} sets exact to the last bit"))
}

/// Discretization slack for the Riesz comparison under Steiner symmetrization.
fn eps_disc(vs: &VoxelSet, r: f64) -> f64 {
    let g = vs.grid();
    let kv = kernel_count(g, r).unwrap() as f64 * g.cell_volume();
    4.0 * boundary_face_count(vs) as f64 * g.cell_volume() * kv * g.spacing()
}

fn a7() -> Check {
    let r = 0.3;
    let h = 1.0 / 256.0;
    let g = GridSpec::covering(2, -1.25, 1.25, h).unwrap();
    let kernel = Kernel::indicator(r);
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 1.0), &g);
    let square = raster(&ShapeSpec::cube(&[0.0, 0.0], PI.sqrt()), &g);
    let j_disk = riesz_functional(&disk, &kernel).unwrap();
    let j_square = riesz_functional(&square, &kernel).unwrap();
    // normalize by measure^2 so the lattice mismatch of the two areas cancels
    let ball_wins = j_disk / disk.measure().powi(2) >= j_square / square.measure().powi(2) && j_disk >= j_square;

    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let mut worst_margin = f64::INFINITY;
    for k in 0..A7_SETS {
        let n = rng.gen_range(16..=40);
        let g = GridSpec::cube(2, n, 1.0 / n as f64, 0.0).unwrap();
        let blobs: Vec<([f64; 2], f64)> = (0..4)
            .map(|_| ([rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8)], rng.gen_range(0.05..0.25)))
            .collect();
        let vs = VoxelSet::from_fn(g, |i| {
            let c = g.center(i);
            blobs.iter().any(|(p, q)| (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) <= q * q)
        });
        let axis = k % 2;
        let rr = rng.gen_range(2.0..5.0) * g.spacing();
        let kernel = Kernel::indicator(rr);
        let s = steiner_symmetrize(&vs, axis).unwrap();
        let ss = steiner_symmetrize(&s, axis).unwrap();
        if s.count() != vs.count() || ss != s {
            return check(false, format!("set {k}: measure {} -> {} or not idempotent", vs.count(), s.count()));
        }
        let before = riesz_functional(&vs, &kernel).unwrap();
        let after = riesz_functional(&s, &kernel).unwrap();
        let margin = after - before + eps_disc(&vs, rr);
        if margin < 0.0 {
            return check(false, format!("set {k}: J fell from {before} to {after}"));
        }
        worst_margin = worst_margin.min(margin);
    }
    check(
        ball_wins,
        format!("J(disk) {j_disk:.6} vs J(square) {j_square:.6}; {A7_SETS} Steiner sets ok, min margin {worst_margin:.2e}"),
    )
}

fn a8_fixture(name: &str, vs: &VoxelSet, axis: usize, truth: f64) -> Result<String, String> {
    let start = Instant::now();
    let g = vs.grid();
    let res = moving_planes(vs, axis, Orientation::Positive, default_tol_incl(g), default_tol_contact(g))
        .map_err(|e| format!("{name}: {e}"))?;
    let t = start.elapsed();
    let dt = (res.stop_offset - truth).abs();
    let ns = res.non_symmetric_measure / vs.measure();
    let line = format!("{name} T={:.5} |dT|/h={:.2} ns={:.4} {:?} {:.1}s", res.stop_offset, dt / g.spacing(), ns, res.contact, t.as_secs_f64());
    if dt <= A8_T_TOL_VOXELS * g.spacing() && ns <= A8_NS_FRACTION && res.contact.has_away() && t < A8_LIMIT {
        Ok(line)
    } else {
        Err(line)
    }
}

fn a8() -> Check {
    let h = 1.0 / 128.0;
    let offset = GridSpec::new(2, &[512, 320], h, &[-1.8, -1.25]).unwrap();
    let square = GridSpec::covering(2, -1.25, 1.25, h).unwrap();
    let tall = GridSpec::new(2, &[320, 832], h, &[-1.25, -3.25]).unwrap();
    let fixtures = [
        ("offset disk", raster(&ShapeSpec::ball(&[0.7, 0.0], 1.0), &offset), 0.7),
        ("square", raster(&ShapeSpec::cube(&[0.0, 0.0], 2.0), &square), 0.0),
        (
            "two disks",
            raster(
                &ShapeSpec::union(vec![ShapeSpec::ball(&[0.0, 2.0], 1.0), ShapeSpec::ball(&[0.0, -2.0], 1.0)]),
                &tall,
            ),
            0.0,
        ),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, vs, truth) in &fixtures {
        match a8_fixture(name, vs, 0, *truth) {
            Ok(l) => lines.push(l),
            Err(l) => {
                pass = false;
                lines.push(format!("FAIL {l}"));
            }
        }
    }
    check(pass, lines.join("; "))
}

fn a9() -> Check {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut combos = 0;
    for k in 1..=3usize {
        for big in [0.8, 1.0] {
            for r in [0.3, 0.5] {
                for n in [64.0, 128.0] {
                    let h = 1.0 / n;
                    combos += 1;
                    let pitch = 2.0 * big + r;
                    // off-lattice centers so no fixture is accidentally aligned
                    let centers: Vec<[f64; 2]> =
                        (0..k).map(|i| [i as f64 * pitch + 0.37 * h, 0.21 * h]).collect();
                    let pad = 0.25;
                    let lo = [-big - pad, -big - pad];
                    let hi = [(k - 1) as f64 * pitch + big + pad, big + pad];
                    let extent: Vec<usize> = (0..2).map(|a| ((hi[a] - lo[a]) / h).ceil() as usize).collect();
                    let g = GridSpec::new(2, &extent, h, &lo).unwrap();
                    let shape = ShapeSpec::union(centers.iter().map(|c| ShapeSpec::ball(c, big)).collect());
                    let vs = raster(&shape, &g);
                    let dec = extract_balls(&vs, r, 2.0 * h, A9_RESIDUAL).unwrap();
                    let radii_ok = dec.balls.iter().all(|b| (b.radius - big).abs() <= 2.0 * h);
                    let dist_ok = dec.min_pairwise_distance.is_none_or(|d| d >= r - 2.0 * h);
                    let residual_ok = dec.residual_measure <= A9_RESIDUAL * dec.total_measure
                        && dec.balls.iter().all(|b| b.residual <= A9_RESIDUAL);
                    if dec.balls.len() != k || !radii_ok || !dist_ok || !residual_ok {
                        failures.push(format!(
                            "k={k} R={big} r={r} h=1/{n}: {} balls, radii {radii_ok}, dist {dist_ok}, residual {residual_ok}",
                            dec.balls.len()
                        ));
                    }
                }
            }
        }
    }
    let g = GridSpec::covering(2, -1.25, 1.25, 1.0 / 64.0).unwrap();
    let square = raster(&ShapeSpec::cube(&[0.0, 0.0], 2.0), &g);
    let verdict = rigidity_verdict(&square, 0.5, &RigidityTolerances::default()).unwrap().verdict;
    let t = start.elapsed();
    let pass = failures.is_empty() && verdict == Verdict::HypothesisNotMet && t < A9_LIMIT;
    let mut detail = format!("{combos} combinations, square {verdict:?}");
    if !failures.is_empty() {
        detail = format!("{detail}; {}", failures.join("; "));
    }
    check(pass, detail)
}

fn a10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA10);
    let mut worst = 0.0f64;
    for dim in [2usize, 3] {
        for _ in 0..A10_DRAWS {
            let r = rng.gen_range(0.2..2.0);
            let t2 = rng.gen_range(0.0..=r / 100.0);
            let gamma = rng.gen_range(1e-6..=r / 100.0);
            let exact = annular_slab_volume(r, t2, gamma, dim).unwrap();
            // two coaxial cylinders of height t2 + gamma, recomputed from their radii
            let t1 = t2 + 2.0 * gamma;
            let (outer, inner) = ((r * r - t2 * t2).sqrt(), (r * r - t1 * t1).sqrt());
            let cyl = unit_ball_volume(dim - 1) * (outer.powi(dim as i32 - 1) - inner.powi(dim as i32 - 1)) * (t2 + gamma);
            // the radii differences cancel, so only agreement to 1e-9 is meaningful
            if (cyl - exact).abs() > 1e-9 * exact {
                return check(false, format!("d={dim} r={r} t2={t2} gamma={gamma}: {exact} vs cylinders {cyl}"));
            }
            let asym = annular_slab_asymptotic(r, t2, gamma, dim);
            worst = worst.max((exact - asym).abs() / exact);
        }
    }
    check(worst <= A10_REL_TOL, format!("worst relative gap {worst:.2e} over {} draws", 2 * A10_DRAWS))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn a11() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let shape = tmp.path().join("shape.json");
    fs::write(
        &shape,
        r#"{"op": "union", "children": [
            {"op": "ball", "center": [-0.6, 0.1], "radius": 0.45},
            {"op": "box", "min": [0.2, -0.5], "max": [0.9, 0.4]}]}"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for (i, threads) in [1, 4, 1].into_iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let mut cfg = RunConfig::new(&shape, &out);
        cfg.grid = Some(GridSpec::covering(2, -1.25, 1.25, 1.0 / 96.0).unwrap());
        cfg.radius = Some(0.3);
        cfg.budget = 20_000;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            cmd_analyze(&cfg).unwrap();
            cmd_decompose(&cfg).unwrap();
        });
        runs.push(dir_bytes(&out));
    }
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    let files: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    check(
        same && files.contains(&"analyze.json") && files.contains(&"decompose.json"),
        format!("3 runs (1, 4, 1 threads) identical: {}", files.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("A1", "invariant field equals pointwise evaluation", a1),
        ("A2", "lens oracle", a2),
        ("A3", "curvature from the volume expansion", a3),
        ("A4", "criticality of balls", a4),
        ("A5", "degeneracy fixtures", a5),
        ("A6", "partition identity", a6),
        ("A7", "Riesz and rearrangement", a7),
        ("A8", "moving planes on symmetric fixtures", a8),
        ("A9", "ball extraction", a9),
        ("A10", "slab formula", a10),
        ("A11", "determinism", a11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|a| a == id) {
            continue;
        }
        let start = Instant::now();
        let c = f();
        let secs = start.elapsed().as_secs_f64();
        if !c.pass {
            failed += 1;
        }
        println!("{} {id} {title} ({secs:.2}s): {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
