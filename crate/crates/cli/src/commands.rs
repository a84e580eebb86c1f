use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vxr_core::grid::io::{encode_field, write_grid};
use vxr_core::grid::{boundary_face_count, boundary_samples};
use vxr_core::invariant::{
    criticality_report, curvature_from_volume, curvature_summary, degeneracy_score, face_values,
    nondegeneracy_condition, nonlocal_perimeter, riesz_functional, vol_invariant_field, CriticalityReport,
    CurvatureSummary, DegeneracyReport, Kernel,
};
use vxr_core::rigidity::{rigidity_verdict, RigidityReport, RigidityTolerances};
use vxr_core::symmetry::{decompose_symmetric, default_tol_contact, default_tol_incl, moving_planes, MovingPlanesResult};
use vxr_core::{BoundarySample, GridSpec, VoxelSet};

use crate::config::{load_input, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct RasterizeReport {
    pub schema: &'static str,
    pub input: String,
    pub source: &'static str,
    pub grid: GridSpec,
    pub occupied_voxels: usize,
    pub measure: f64,
    pub boundary_faces: usize,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub schema: &'static str,
    pub input: String,
    pub grid: GridSpec,
    pub radius: f64,
    pub kernel_count: u64,
    pub kernel_volume: f64,
    pub criticality: CriticalityReport,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureBlock {
    pub summary: CurvatureSummary,
    pub median: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, Serialize)]
pub struct Nondegeneracy {
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Nonlocal {
    pub perimeter: f64,
    pub riesz_indicator: f64,
    pub kernel_volume: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema: &'static str,
    pub input: String,
    pub grid: GridSpec,
    pub radius: f64,
    pub measure: f64,
    pub criticality: CriticalityReport,
    pub degeneracy: DegeneracyReport,
    pub curvature: CurvatureBlock,
    pub nondegeneracy: Nondegeneracy,
    pub nonlocal: Nonlocal,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanesReport {
    pub schema: &'static str,
    pub input: String,
    pub grid: GridSpec,
    /// Library axes in `result` are 0-based.
    pub result: MovingPlanesResult,
    pub interface_faces: usize,
    pub interface_violation: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub schema: &'static str,
    pub input: String,
    pub grid: GridSpec,
    pub report: RigidityReport,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Tracks written files by name relative to the output directory.
struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        prepare_out(dir)?;
        Ok(Outputs { dir, names: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    fn grid(&mut self, name: &str, vs: &VoxelSet) -> Result<()> {
        let p = self.path(name);
        write_grid(&p, vs).map_err(|e| match e {
            vxr_core::Error::Io(io) => CliError::io(&p, io),
            other => other.into(),
        })
    }

    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, data).map_err(|e| CliError::io(&p, e))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let p = self.path(name);
        write_csv(&p, header, rows)
    }

    fn finish<T: Serialize>(self, name: &str, report: &T) -> Result<()> {
        write_json(&self.dir.join(name), report)
    }
}

fn coord_header(dim: usize, last: &'static str) -> Vec<&'static str> {
    let mut h = ["x", "y", "z"][..dim].to_vec();
    h.push(last);
    h
}

fn sample_rows<'s>(dim: usize, samples: &'s [BoundarySample], values: &'s [f64]) -> impl Iterator<Item = Vec<f64>> + 's {
    samples.iter().zip(values).map(move |(s, &v)| {
        let mut row = s.point[..dim].to_vec();
        row.push(v);
        row
    })
}

pub fn cmd_rasterize(cfg: &RunConfig) -> Result<RasterizeReport> {
    let loaded = load_input(cfg)?;
    let vs = &loaded.set;
    let mut out = Outputs::new(&cfg.out)?;
    out.grid("grid.vxg", vs)?;
    let report = RasterizeReport {
        schema: "vxr.rasterize/1",
        input: cfg.input.display().to_string(),
        source: loaded.source.as_str(),
        grid: *vs.grid(),
        occupied_voxels: vs.count(),
        measure: vs.measure(),
        boundary_faces: boundary_face_count(vs),
        outputs: out.names.clone(),
        warnings: loaded.warnings,
    };
    out.finish("rasterize.json", &report)?;
    Ok(report)
}

pub fn cmd_invariant(cfg: &RunConfig) -> Result<InvariantReport> {
    let r = cfg.require_radius()?;
    let loaded = load_input(cfg)?;
    let vs = &loaded.set;
    let criticality = criticality_report(vs, r, cfg.tol.criticality)?;
    let field = vol_invariant_field(vs, r)?;
    let samples = boundary_samples(vs);
    let values = face_values(vs, &field, &samples);

    let mut out = Outputs::new(&cfg.out)?;
    out.bytes("field.vxf", &encode_field(vs.grid(), r, &field.values()))?;
    let dim = vs.grid().dim();
    out.csv("boundary_values.csv", &coord_header(dim, "value"), sample_rows(dim, &samples, &values))?;
    let report = InvariantReport {
        schema: "vxr.invariant/1",
        input: cfg.input.display().to_string(),
        grid: *vs.grid(),
        radius: r,
        kernel_count: field.kernel_count(),
        kernel_volume: field.kernel_volume(),
        criticality,
        outputs: out.names.clone(),
        warnings: loaded.warnings,
    };
    out.finish("invariant.json", &report)?;
    Ok(report)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|i| if i == bins { hi.max(lo) } else { lo + i as f64 * width }).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport> {
    let r = cfg.require_radius()?;
    let loaded = load_input(cfg)?;
    let vs = &loaded.set;
    let g = *vs.grid();
    let criticality = criticality_report(vs, r, cfg.tol.criticality)?;
    let degeneracy = degeneracy_score(vs, r, cfg.budget, cfg.seed)?;
    let summary = curvature_summary(vs, r)?;

    let field = vol_invariant_field(vs, r)?;
    let samples = boundary_samples(vs);
    let curv: Vec<f64> = face_values(vs, &field, &samples)
        .into_iter()
        .map(|v| curvature_from_volume(g.dim(), r, v))
        .collect();

    let eps = cfg.eps.unwrap_or(2.0 * g.spacing());
    let nondegeneracy = Nondegeneracy {
        eps,
        value: nondegeneracy_condition(vs, r, eps)?,
    };
    let nonlocal = Nonlocal {
        perimeter: nonlocal_perimeter(vs, r)?,
        riesz_indicator: riesz_functional(vs, &Kernel::indicator(r))?,
        kernel_volume: field.kernel_volume(),
        measure: vs.measure(),
    };

    let mut out = Outputs::new(&cfg.out)?;
    out.csv("curvature.csv", &coord_header(g.dim(), "curvature"), sample_rows(g.dim(), &samples, &curv))?;
    let report = AnalyzeReport {
        schema: "vxr.analyze/1",
        input: cfg.input.display().to_string(),
        grid: g,
        radius: r,
        measure: vs.measure(),
        criticality,
        degeneracy,
        curvature: CurvatureBlock {
            summary,
            median: median(&curv),
            histogram: histogram(&curv, HISTOGRAM_BINS),
        },
        nondegeneracy,
        nonlocal,
        outputs: out.names.clone(),
        warnings: loaded.warnings,
    };
    out.finish("analyze.json", &report)?;
    Ok(report)
}

pub fn cmd_planes(cfg: &RunConfig) -> Result<PlanesReport> {
    let loaded = load_input(cfg)?;
    let vs = &loaded.set;
    let g = *vs.grid();
    if cfg.axis >= g.dim() {
        return Err(CliError::input("--axis", format!("must be between 1 and {}, got {}", g.dim(), cfg.axis + 1)));
    }
    let tol_incl = cfg.tol.incl.unwrap_or_else(|| default_tol_incl(&g));
    let tol_contact = cfg.tol.contact.unwrap_or_else(|| default_tol_contact(&g));
    let result = moving_planes(vs, cfg.axis, cfg.orientation, tol_incl, tol_contact)?;
    let parts = decompose_symmetric(vs, &result)?;
    log::info!("sweep stopped at T = {} ({:?})", result.stop_offset, result.contact);

    let mut out = Outputs::new(&cfg.out)?;
    out.csv(
        "trace.csv",
        &["offset", "violation"],
        result.trace.iter().map(|s| vec![s.offset, s.violation]),
    )?;
    out.grid("symmetric.vxg", &parts.symmetric)?;
    out.grid("non_symmetric.vxg", &parts.non_symmetric)?;
    let report = PlanesReport {
        schema: "vxr.planes/1",
        input: cfg.input.display().to_string(),
        grid: g,
        result,
        interface_faces: parts.interface_faces,
        interface_violation: parts.interface_violation,
        outputs: out.names.clone(),
        warnings: loaded.warnings,
    };
    out.finish("planes.json", &report)?;
    Ok(report)
}

pub fn cmd_decompose(cfg: &RunConfig) -> Result<DecomposeReport> {
    let r = cfg.require_radius()?;
    let loaded = load_input(cfg)?;
    let vs = &loaded.set;
    let tols = RigidityTolerances {
        criticality: cfg.tol.criticality,
        degeneracy_floor: cfg.tol.degeneracy,
        radius: cfg.tol.radius,
        residual: cfg.tol.residual,
        budget: cfg.budget,
        seed: cfg.seed,
    };
    let report = rigidity_verdict(vs, r, &tols)?;
    log::info!("verdict {:?}", report.verdict);

    let mut out = Outputs::new(&cfg.out)?;
    if let Some(d) = &report.decomposition {
        for (i, mask) in d.ball_masks.iter().enumerate() {
            out.grid(&format!("ball_{i}.vxg"), mask)?;
        }
        if let Some(rest) = &d.residual_set {
            out.grid("residual.vxg", rest)?;
        }
    }
    let report = DecomposeReport {
        schema: "vxr.decompose/1",
        input: cfg.input.display().to_string(),
        grid: *vs.grid(),
        report,
        outputs: out.names.clone(),
        warnings: loaded.warnings,
    };
    out.finish("decompose.json", &report)?;
    Ok(report)
}
