use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vxr", version, about = "Integral invariants and ball rigidity on voxel grids")]
pub struct Cli {
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize a shape description into a VXG1 grid file.
    Rasterize(CommonArgs),
    /// Invariant field and criticality report.
    Invariant(CommonArgs),
    /// Criticality, degeneracy, curvature and nonlocal functionals.
    Analyze(CommonArgs),
    /// Moving-planes sweep along one axis.
    Planes(CommonArgs),
    /// Rigidity verdict and ball extraction.
    Decompose(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    #[value(name = "+", alias = "positive")]
    Positive,
    #[value(name = "-", alias = "negative")]
    Negative,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Shape description (JSON) or grid file (VXG1).
    #[arg(long)]
    pub input: PathBuf,

    /// Grid for rasterizing a shape: `d,n_1..n_d,h,o_1..o_d`.
    #[arg(long)]
    pub grid: Option<String>,

    #[arg(long)]
    pub radius: Option<f64>,

    #[arg(long, default_value_t = 0.02)]
    pub tol_criticality: f64,

    #[arg(long, default_value_t = 0.1)]
    pub tol_degeneracy: f64,

    /// Defaults to half a voxel volume.
    #[arg(long)]
    pub tol_incl: Option<f64>,

    /// Defaults to `sqrt(d) h`.
    #[arg(long)]
    pub tol_contact: Option<f64>,

    /// Defaults to `2h`.
    #[arg(long)]
    pub tol_radius: Option<f64>,

    #[arg(long, default_value_t = 0.01)]
    pub tol_residual: f64,

    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,

    #[arg(long, default_value = "0x5EED", value_parser = parse_seed)]
    pub seed: u64,

    /// Sweep axis, 1-based.
    #[arg(long, default_value_t = 1)]
    pub axis: usize,

    #[arg(long, value_enum, default_value = "+", allow_hyphen_values = true)]
    pub orientation: OrientationArg,

    /// Boundary neighbourhood of the nondegeneracy condition. Defaults to `2h`.
    #[arg(long)]
    pub eps: Option<f64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}
