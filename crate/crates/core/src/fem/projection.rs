use super::assembly::{load_vector, Pattern};
use crate::error::Result;
use crate::linalg::{self, SolverConfig};
use crate::mesh::{Mesh, Point};

/// Nodal interpolant `Π_h f`.
pub fn interpolate<F>(mesh: &Mesh, f: F) -> Vec<f64>
where
    F: Fn(Point) -> f64,
{
    mesh.nodes().iter().map(|&p| f(p)).collect()
}

/// L2-orthogonal projection onto the P1 space: solves `M c = (f, φ_i)`.
pub fn l2_project<F>(mesh: &Mesh, f: F, solver: &SolverConfig) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    let m = Pattern::new(mesh).mass(mesh, 1.0);
    let b = load_vector(mesh, f);
    linalg::solve(&m, &b, solver)
}
