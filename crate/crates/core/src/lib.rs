//! Finite-element solver for advection, diffusion and adsorption in
//! membrane chromatography.
//!
//! P1 elements on structured triangulations, Backward Euler and implicit
//! midpoint time stepping, a manufactured-solution convergence harness and
//! mass-balance diagnostics.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod isotherm;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod output;
pub mod stepper;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use isotherm::Isotherm;
pub use mesh::{build_rect_mesh, BoundaryTag, Mesh};
pub use stepper::{run_transient, Scheme, SchemeConfig, SimState, Simulation};
