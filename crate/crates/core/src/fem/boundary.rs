//! Dirichlet data on the inflow boundary: interpolation, elimination, lifting.

use std::collections::BTreeMap;

use super::assembly::Pattern;
use super::problem::ProblemSpec;
use crate::error::Result;
use crate::linalg::{self, SolverConfig, SparseMatrix};
use crate::mesh::{BoundaryTag, Mesh};

/// Prescribed nodal values keyed by dof.
pub type BoundaryValues = BTreeMap<usize, f64>;

/// One dof per node; the inflow nodes carry Dirichlet constraints.
#[derive(Clone, Debug)]
pub struct DofMap {
    num_dofs: usize,
    dirichlet: Vec<usize>,
    is_fixed: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let dirichlet = mesh.nodes_on(BoundaryTag::Inflow);
        let mut is_fixed = vec![false; mesh.num_nodes()];
        for &d in &dirichlet {
            is_fixed[d] = true;
        }
        Self {
            num_dofs: mesh.num_nodes(),
            dirichlet,
            is_fixed,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.is_fixed[dof]
    }
}

/// Nodal interpolant of `g(·, t)` on the inflow dofs.
pub fn interpolate_boundary<G>(mesh: &Mesh, g: G, t: f64) -> BoundaryValues
where
    G: Fn([f64; 2], f64) -> f64,
{
    mesh.nodes_on(BoundaryTag::Inflow)
        .into_iter()
        .map(|d| (d, g(mesh.nodes()[d], t)))
        .collect()
}

/// Eliminate fixed dofs from `A x = b`.
///
/// Fixed rows become identity rows with the prescribed value on the right;
/// fixed columns are moved to the right-hand side of the free rows. The
/// sparsity pattern is kept (eliminated entries become explicit zeros).
pub fn constrain(a: &SparseMatrix, b: &[f64], fixed: &BoundaryValues) -> (SparseMatrix, Vec<f64>) {
    let mut a = a.clone();
    let mut b = b.to_vec();
    if fixed.is_empty() {
        return (a, b);
    }
    let n = a.n();
    let mut value = vec![None; n];
    for (&d, &v) in fixed {
        value[d] = Some(v);
    }
    if fixed.keys().any(|&d| a.position(d, d).is_none()) {
        // Add the missing diagonals so fixed rows can hold a unit pivot.
        let mut triplets = Vec::with_capacity(a.nnz() + fixed.len());
        for i in 0..n {
            let (cols, vals) = a.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        triplets.extend(fixed.keys().map(|&d| (d, d, 0.0)));
        a = SparseMatrix::from_triplets(n, &triplets).expect("indices already validated");
    }
    let offsets = a.offsets().to_vec();
    let cols = a.col_indices().to_vec();
    let vals = a.values_mut();
    for i in 0..n {
        let row = offsets[i]..offsets[i + 1];
        match value[i] {
            Some(v) => {
                for k in row {
                    vals[k] = if cols[k] == i { 1.0 } else { 0.0 };
                }
                b[i] = v;
            }
            None => {
                for k in row {
                    if let Some(g) = value[cols[k]] {
                        b[i] -= vals[k] * g;
                        vals[k] = 0.0;
                    }
                }
            }
        }
    }
    (a, b)
}

/// Discrete lifting: `(D∇Ĉ, ∇v) + (Ĉ, v) = 0` for all `v` vanishing on the
/// inflow boundary, with `Ĉ = g_h` there and zero flux elsewhere.
pub fn lift_dirichlet(
    mesh: &Mesh,
    spec: &ProblemSpec,
    g_h: &BoundaryValues,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    let pattern = Pattern::new(mesh);
    let mut op = pattern.stiffness(mesh, &spec.diffusion);
    op.add_scaled(1.0, &pattern.mass(mesh, 1.0))?;
    let rhs = vec![0.0; mesh.num_nodes()];
    let (a, b) = constrain(&op, &rhs, g_h);
    linalg::solve(&a, &b, solver)
}
