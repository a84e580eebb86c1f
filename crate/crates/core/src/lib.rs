//! Voxel-grid geometry toolkit for fixed-radius integral invariants.
//!
//! A measurable set is represented by a center-point rasterization on a
//! regular 2-d or 3-d grid ([`VoxelSet`]). On top of that the crate provides
//!
//! * the volumetric invariant `x -> |Ω ∩ B_r(x)|` and its spherical analogue,
//!   criticality and degeneracy diagnostics, curvature estimates, the
//!   nonlocal perimeter and Riesz-type double integrals ([`invariant`]);
//! * reflections, Steiner symmetrization and the moving-planes sweep with
//!   contact classification and symmetric decomposition ([`symmetry`]);
//! * ball fitting, iterative equal-ball extraction and a rigidity verdict
//!   ([`rigidity`]).
//!
//! All counting is done in exact integers; floating values are produced by
//! multiplying counts by powers of the grid spacing at the very end.

pub mod error;
pub mod grid;
pub mod invariant;
pub mod rigidity;
pub mod symmetry;

pub use error::{Error, Result};
pub use grid::{BoundarySample, GridSpec, ShapeSpec, VoxelSet};
