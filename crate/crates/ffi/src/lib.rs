//! C ABI for the chromfem transport solver.
//!
//! Every function returns a [`ChromfemStatus`]. On failure the message is
//! kept per thread and can be copied out with [`chromfem_last_error`].
//! Handles are opaque and must be released with
//! [`chromfem_simulation_free`].
#![allow(clippy::missing_safety_doc)]

mod isotherm;
mod simulation;
mod status;

pub use isotherm::*;
pub use simulation::*;
pub use status::*;
