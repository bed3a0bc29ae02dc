//! P1 operator assembly on a fixed sparsity pattern.

use super::problem::{DiffusionTensor, ProblemSpec, VelocityField};
use super::quadrature::{TriangleRule, DEGREE4, GAUSS2, MIDPOINT3};
use crate::error::Result;
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundaryEdge, BoundaryTag, Mesh, Point};

/// Affine geometry of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the three barycentric coordinates.
    pub grads: [Point; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, tri: usize) -> Self {
        let v = mesh.vertices(tri);
        let two_a = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let grads = [
            [(v[1][1] - v[2][1]) / two_a, (v[2][0] - v[1][0]) / two_a],
            [(v[2][1] - v[0][1]) / two_a, (v[0][0] - v[2][0]) / two_a],
            [(v[0][1] - v[1][1]) / two_a, (v[1][0] - v[0][0]) / two_a],
        ];
        Self {
            vertices: v,
            area: 0.5 * two_a,
            grads,
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }
}

/// Value of a P1 field at barycentric coordinates of triangle `nodes`.
pub fn p1_value(field: &[f64], nodes: [usize; 3], bary: [f64; 3]) -> f64 {
    bary[0] * field[nodes[0]] + bary[1] * field[nodes[1]] + bary[2] * field[nodes[2]]
}

/// Constant gradient of a P1 field on one element.
pub fn p1_gradient(field: &[f64], nodes: [usize; 3], geo: &ElementGeometry) -> Point {
    let mut g = [0.0; 2];
    for k in 0..3 {
        g[0] += field[nodes[k]] * geo.grads[k][0];
        g[1] += field[nodes[k]] * geo.grads[k][1];
    }
    g
}

/// Node-adjacency pattern of a mesh plus per-element storage slots.
///
/// Every operator built here shares this pattern, so system matrices can be
/// combined with [`SparseMatrix::add_scaled`].
#[derive(Clone, Debug)]
pub struct Pattern {
    template: SparseMatrix,
    slots: Vec<[usize; 9]>,
}

impl Pattern {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_nodes();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in mesh.triangles() {
            for &a in tri {
                rows[a].extend_from_slice(tri);
            }
        }
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
        }
        let template = SparseMatrix::from_pattern(&rows).expect("mesh indices are valid");
        let slots = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        s[3 * i + j] = template.position(tri[i], tri[j]).expect("element entry in pattern");
                    }
                }
                s
            })
            .collect();
        Self { template, slots }
    }

    pub fn zeros(&self) -> SparseMatrix {
        self.template.clone()
    }

    /// Sum element matrices produced by `local` into a fresh matrix.
    pub fn assemble<F>(&self, mesh: &Mesh, mut local: F) -> Result<SparseMatrix>
    where
        F: FnMut(usize, &ElementGeometry) -> Result<[[f64; 3]; 3]>,
    {
        let mut m = self.zeros();
        let vals = m.values_mut();
        for (t, slots) in self.slots.iter().enumerate() {
            let geo = ElementGeometry::new(mesh, t);
            let k = local(t, &geo)?;
            for i in 0..3 {
                for j in 0..3 {
                    vals[slots[3 * i + j]] += k[i][j];
                }
            }
        }
        Ok(m)
    }

    /// `∫ c(x) φ_j φ_i` with `c` sampled at the points of `rule`.
    pub fn weighted_mass<F>(&self, mesh: &Mesh, rule: &TriangleRule, mut coeff: F) -> Result<SparseMatrix>
    where
        F: FnMut(usize, [f64; 3], Point) -> Result<f64>,
    {
        self.assemble(mesh, |t, geo| {
            let mut k = [[0.0; 3]; 3];
            for (b, w) in rule.points.iter().zip(rule.weights) {
                let c = coeff(t, *b, geo.point(*b))? * w * geo.area;
                for i in 0..3 {
                    for j in 0..3 {
                        k[i][j] += c * b[i] * b[j];
                    }
                }
            }
            Ok(k)
        })
    }

    pub fn mass(&self, mesh: &Mesh, weight: f64) -> SparseMatrix {
        self.weighted_mass(mesh, &MIDPOINT3, |_, _, _| Ok(weight))
            .expect("constant weight cannot fail")
    }

    pub fn stiffness(&self, mesh: &Mesh, d: &DiffusionTensor) -> SparseMatrix {
        self.assemble(mesh, |_, geo| {
            let mut k = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let dg = d.apply(geo.grads[j]);
                    k[i][j] = geo.area * (dg[0] * geo.grads[i][0] + dg[1] * geo.grads[i][1]);
                }
            }
            Ok(k)
        })
        .expect("stiffness assembly cannot fail")
    }

    /// `N[i][j] = ∫ (u·∇φ_j) φ_i` by the three-point edge-midpoint rule.
    pub fn convection(&self, mesh: &Mesh, u: &VelocityField) -> SparseMatrix {
        self.assemble(mesh, |_, geo| {
            let mut k = [[0.0; 3]; 3];
            for (b, w) in MIDPOINT3.points.iter().zip(MIDPOINT3.weights) {
                let v = u.eval(geo.point(*b));
                for j in 0..3 {
                    let adv = v[0] * geo.grads[j][0] + v[1] * geo.grads[j][1];
                    for i in 0..3 {
                        k[i][j] += w * geo.area * adv * b[i];
                    }
                }
            }
            Ok(k)
        })
        .expect("convection assembly cannot fail")
    }

    /// `∫_∂Ω (u·n) φ_i φ_j ds` over edges whose tag passes `include`.
    pub fn boundary_mass<P>(&self, mesh: &Mesh, u: &VelocityField, include: P) -> SparseMatrix
    where
        P: Fn(BoundaryTag) -> bool,
    {
        let mut m = self.zeros();
        for e in mesh.boundary_edges().iter().filter(|e| include(e.tag)) {
            let k = edge_flux_matrix(mesh, e, u);
            let [a, b] = e.nodes;
            for (i, ni) in [a, b].into_iter().enumerate() {
                for (j, nj) in [a, b].into_iter().enumerate() {
                    let slot = m.position(ni, nj).expect("boundary edge in pattern");
                    m.values_mut()[slot] += k[i][j];
                }
            }
        }
        m
    }
}

fn edge_flux_matrix(mesh: &Mesh, e: &BoundaryEdge, u: &VelocityField) -> [[f64; 2]; 2] {
    let [pa, pb] = mesh.edge_endpoints(e);
    let n = mesh.edge_normal(e);
    let len = mesh.edge_length(e);
    let mut k = [[0.0; 2]; 2];
    for (s, w) in GAUSS2 {
        let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
        let v = u.eval(p);
        let un = v[0] * n[0] + v[1] * n[1];
        let phi = [1.0 - s, s];
        for i in 0..2 {
            for j in 0..2 {
                k[i][j] += w * len * un * phi[i] * phi[j];
            }
        }
    }
    k
}

/// `∫ f φ_i` with the degree-4 rule.
pub fn load_vector<F>(mesh: &Mesh, f: F) -> Vec<f64>
where
    F: Fn(Point) -> f64,
{
    let mut b = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = ElementGeometry::new(mesh, t);
        for (bc, w) in DEGREE4.points.iter().zip(DEGREE4.weights) {
            let v = f(geo.point(*bc)) * w * geo.area;
            for i in 0..3 {
                b[tri[i]] += v * bc[i];
            }
        }
    }
    b
}

/// Add `∫_e flux·φ_i ds` over outflow and no-flow edges (two-point Gauss).
pub fn add_boundary_load<F>(mesh: &Mesh, b: &mut [f64], flux: F)
where
    F: Fn(Point, Point) -> f64,
{
    for e in mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag != BoundaryTag::Inflow)
    {
        let [pa, pb] = mesh.edge_endpoints(e);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        for (s, w) in GAUSS2 {
            let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let v = flux(p, n) * w * len;
            b[e.nodes[0]] += v * (1.0 - s);
            b[e.nodes[1]] += v * s;
        }
    }
}

/// Right-hand side `∫ f(·, t) φ_i + ∮_{Γ_out ∪ Γ_n} flux(·, t)·φ_i`.
pub fn assemble_rhs(mesh: &Mesh, spec: &ProblemSpec, t: f64) -> Vec<f64> {
    let f = &spec.forcing;
    let mut b = load_vector(mesh, |p| f(p, t));
    if let Some(flux) = &spec.boundary_flux {
        add_boundary_load(mesh, &mut b, |p, n| flux(p, t, n));
    }
    b
}

pub fn assemble_mass(mesh: &Mesh, weight: f64) -> SparseMatrix {
    Pattern::new(mesh).mass(mesh, weight)
}

pub fn assemble_stiffness(mesh: &Mesh, d: &DiffusionTensor) -> SparseMatrix {
    Pattern::new(mesh).stiffness(mesh, d)
}

pub fn assemble_convection(mesh: &Mesh, u: &VelocityField) -> SparseMatrix {
    Pattern::new(mesh).convection(mesh, u)
}

/// Integrate `g(tri, bary, x)` over the domain with the degree-4 rule.
pub fn integrate<F>(mesh: &Mesh, mut g: F) -> Result<f64>
where
    F: FnMut(usize, [f64; 3], Point) -> Result<f64>,
{
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let geo = ElementGeometry::new(mesh, t);
        let mut local = 0.0;
        for (b, w) in DEGREE4.points.iter().zip(DEGREE4.weights) {
            local += w * g(t, *b, geo.point(*b))?;
        }
        total += local * geo.area;
    }
    Ok(total)
}

/// Integrate `g(edge, s, x, n)` over boundary edges passing `include` with
/// two-point Gauss; `s ∈ [0, 1]` runs from `edge.nodes[0]` to `edge.nodes[1]`.
pub fn integrate_boundary<P, F>(mesh: &Mesh, include: P, mut g: F) -> Result<f64>
where
    P: Fn(BoundaryTag) -> bool,
    F: FnMut(&BoundaryEdge, f64, Point, Point) -> Result<f64>,
{
    let mut total = 0.0;
    for e in mesh.boundary_edges().iter().filter(|e| include(e.tag)) {
        let [pa, pb] = mesh.edge_endpoints(e);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        for (s, w) in GAUSS2 {
            let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            total += w * len * g(e, s, p, n)?;
        }
    }
    Ok(total)
}
