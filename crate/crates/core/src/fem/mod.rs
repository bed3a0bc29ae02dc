//! P1 Lagrange finite elements on triangles.

pub mod assembly;
pub mod boundary;
pub mod problem;
pub mod projection;
pub mod quadrature;

pub use assembly::{
    assemble_convection, assemble_mass, assemble_rhs, assemble_stiffness, integrate, integrate_boundary,
    load_vector, p1_gradient, p1_value, ElementGeometry, Pattern,
};
pub use boundary::{constrain, interpolate_boundary, lift_dirichlet, BoundaryValues, DofMap};
pub use problem::{DiffusionTensor, FluxFn, ProblemSpec, SpaceFn, SpaceTimeFn, VectorFn, VelocityField};
pub use projection::{interpolate, l2_project};

/// Nodal coefficient vector of a P1 field.
pub type FieldVector = Vec<f64>;
