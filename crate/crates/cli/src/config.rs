use std::fs;
use std::path::PathBuf;

use vxr_core::grid::io::decode_grid;
use vxr_core::grid::rasterize;
use vxr_core::invariant::DEFAULT_SEED;
use vxr_core::symmetry::Orientation;
use vxr_core::{GridSpec, ShapeSpec, VoxelSet};

use crate::args::{CommonArgs, OrientationArg};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub criticality: f64,
    pub degeneracy: f64,
    pub incl: Option<f64>,
    pub contact: Option<f64>,
    pub radius: Option<f64>,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            criticality: 0.02,
            degeneracy: 0.1,
            incl: None,
            contact: None,
            radius: None,
            residual: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub grid: Option<GridSpec>,
    pub radius: Option<f64>,
    pub tol: Tolerances,
    pub budget: u64,
    pub seed: u64,
    /// 0-based.
    pub axis: usize,
    pub orientation: Orientation,
    pub eps: Option<f64>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            grid: None,
            radius: None,
            tol: Tolerances::default(),
            budget: 100_000,
            seed: DEFAULT_SEED,
            axis: 0,
            orientation: Orientation::Positive,
            eps: None,
            out: out.into(),
        }
    }

    pub fn from_args(a: &CommonArgs) -> Result<Self> {
        let grid = a.grid.as_deref().map(parse_grid).transpose()?;
        if a.axis == 0 {
            return Err(CliError::input("--axis", "axes are numbered from 1"));
        }
        let cfg = RunConfig {
            input: a.input.clone(),
            grid,
            radius: a.radius,
            tol: Tolerances {
                criticality: a.tol_criticality,
                degeneracy: a.tol_degeneracy,
                incl: a.tol_incl,
                contact: a.tol_contact,
                radius: a.tol_radius,
                residual: a.tol_residual,
            },
            budget: a.budget,
            seed: a.seed,
            axis: a.axis - 1,
            orientation: match a.orientation {
                OrientationArg::Positive => Orientation::Positive,
                OrientationArg::Negative => Orientation::Negative,
            },
            eps: a.eps,
            out: a.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tol;
        let required = [
            ("--tol-criticality", Some(t.criticality)),
            ("--tol-degeneracy", Some(t.degeneracy)),
            ("--tol-incl", t.incl),
            ("--tol-contact", t.contact),
            ("--tol-radius", t.radius),
            ("--tol-residual", Some(t.residual)),
            ("--radius", self.radius),
            ("--eps", self.eps),
        ];
        for (name, v) in required {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::input(name, format!("must be positive, got {v}")));
                }
            }
        }
        if self.budget == 0 {
            return Err(CliError::input("--budget", "must be positive"));
        }
        Ok(())
    }

    pub fn require_radius(&self) -> Result<f64> {
        self.radius.ok_or_else(|| CliError::input("--radius", "required by this command"))
    }
}

/// `d,n_1..n_d,h,o_1..o_d`.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = |reason: String| CliError::input("--grid", reason);
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let d: usize = parts[0]
        .parse()
        .map_err(|_| bad(format!("dimension `{}` is not an integer", parts[0])))?;
    if !(d == 2 || d == 3) {
        return Err(bad(format!("dimension must be 2 or 3, got {d}")));
    }
    if parts.len() != 2 * d + 2 {
        return Err(bad(format!("expected {} comma-separated values for d={d}, got {}", 2 * d + 2, parts.len())));
    }
    let extent = parts[1..=d]
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| bad(format!("extent `{p}` is not a count"))))
        .collect::<Result<Vec<_>>>()?;
    let float = |p: &&str| p.parse::<f64>().map_err(|_| bad(format!("`{p}` is not a number")));
    let h = float(&parts[d + 1])?;
    let origin = parts[d + 2..].iter().map(float).collect::<Result<Vec<_>>>()?;
    GridSpec::new(d, &extent, h, &origin).map_err(|e| bad(e.to_string()))
}

/// Where the voxel set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Shape,
    GridFile,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Shape => "shape",
            Source::GridFile => "grid_file",
        }
    }
}

pub struct Loaded {
    pub set: VoxelSet,
    pub source: Source,
    pub warnings: Vec<String>,
}

/// Reads a VXG1 grid file, or a JSON shape rasterized on `cfg.grid`.
pub fn load_input(cfg: &RunConfig) -> Result<Loaded> {
    let bytes = fs::read(&cfg.input).map_err(|e| CliError::io(&cfg.input, e))?;
    let (set, source) = if bytes.starts_with(b"VXG1") {
        if cfg.grid.is_some() {
            return Err(CliError::input("--grid", "not allowed with a grid file input"));
        }
        (decode_grid(&bytes).map_err(|e| CliError::input("--input", e.to_string()))?, Source::GridFile)
    } else {
        let shape: ShapeSpec = serde_json::from_slice(&bytes).map_err(|e| {
            CliError::input(
                "--input",
                format!("JSON parse error at byte {}: {e}", byte_offset(&bytes, e.line(), e.column())),
            )
        })?;
        let grid = cfg
            .grid
            .ok_or_else(|| CliError::input("--grid", "required when the input is a shape"))?;
        (rasterize(&shape, &grid)?, Source::Shape)
    };
    let mut warnings = Vec::new();
    if set.touches_border() {
        warnings.push("occupied voxels touch the grid border; the set is truncated there".to_string());
    }
    log::info!("loaded {} occupied voxels from {}", set.count(), cfg.input.display());
    Ok(Loaded { set, source, warnings })
}

/// Byte offset of a 1-based line and column.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start = if line <= 1 {
        0
    } else {
        bytes
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .nth(line - 2)
            .map_or(bytes.len(), |(i, _)| i + 1)
    };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
