//! Mass-balance ledger and positivity monitoring.
//!
//! Ledger integrals are evaluated pointwise from the P1 field at quadrature
//! nodes: degree-4 rule in the interior, two-point Gauss on boundary edges.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{integrate, integrate_boundary, p1_gradient, p1_value, ElementGeometry, ProblemSpec};
use crate::mesh::{BoundaryTag, Mesh};
use crate::output::fmt_number;
use crate::stepper::{Observer, Operators, SimState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassLedgerRow {
    pub step: usize,
    pub time: f64,
    /// `∫ ωC + (1−ω)ρ_s q(C)`
    pub total_mass: f64,
    /// `∫_{Γin} g² (u·n)`
    pub inflow_flux: f64,
    /// `∫_{Γout} C² (u·n)`
    pub outflow_flux: f64,
    /// `∫_{Γin} Q(g) (u·n)`
    pub inflow_q_flux: f64,
    /// `∫_{Γout} Q(C) (u·n)`
    pub outflow_q_flux: f64,
    /// `∫ ∇C·D∇C`
    pub dissipation: f64,
    pub min_nodal: f64,
}

pub const LEDGER_HEADER: [&str; 9] = [
    "step",
    "time",
    "total_mass",
    "inflow_flux",
    "outflow_flux",
    "inflow_Q_flux",
    "outflow_Q_flux",
    "dissipation",
    "min_nodal",
];

impl MassLedgerRow {
    fn record(&self) -> [String; 9] {
        [
            self.step.to_string(),
            fmt_number(self.time),
            fmt_number(self.total_mass),
            fmt_number(self.inflow_flux),
            fmt_number(self.outflow_flux),
            fmt_number(self.inflow_q_flux),
            fmt_number(self.outflow_q_flux),
            fmt_number(self.dissipation),
            fmt_number(self.min_nodal),
        ]
    }
}

/// `∫_Ω ωC + (1−ω)ρ_s q(C)` of a P1 field.
pub fn total_mass(mesh: &Mesh, spec: &ProblemSpec, c: &[f64]) -> Result<f64> {
    let tris = mesh.triangles();
    integrate(mesh, |t, b, _| spec.mass_density(p1_value(c, tris[t], b)))
}

/// `∫_Ω ∇C·D∇C` of a P1 field.
pub fn dissipation(mesh: &Mesh, spec: &ProblemSpec, c: &[f64]) -> f64 {
    let tris = mesh.triangles();
    (0..mesh.num_triangles())
        .map(|t| {
            let geo = ElementGeometry::new(mesh, t);
            geo.area * spec.diffusion.energy(p1_gradient(c, tris[t], &geo))
        })
        .sum()
}

/// `∫_{Γout} w(C) (u·n)` for a pointwise transform `w` of the P1 trace.
fn outflow_integral<W>(mesh: &Mesh, spec: &ProblemSpec, c: &[f64], w: W) -> Result<f64>
where
    W: Fn(f64) -> Result<f64>,
{
    integrate_boundary(mesh, |tag| tag == BoundaryTag::Outflow, |e, s, p, n| {
        let v = spec.velocity.eval(p);
        let trace = (1.0 - s) * c[e.nodes[0]] + s * c[e.nodes[1]];
        Ok(w(trace)? * (v[0] * n[0] + v[1] * n[1]))
    })
}

pub fn ledger_row(mesh: &Mesh, spec: &ProblemSpec, state: &SimState) -> Result<MassLedgerRow> {
    let c = &state.c;
    let t = state.t;
    let inflow = |w: &dyn Fn(f64) -> Result<f64>| {
        integrate_boundary(mesh, |tag| tag == BoundaryTag::Inflow, |_, _, p, n| {
            let v = spec.velocity.eval(p);
            Ok(w((spec.inflow)(p, t))? * (v[0] * n[0] + v[1] * n[1]))
        })
    };
    let square = |x: f64| Ok(x * x);
    let q_integral = |x: f64| spec.isotherm.eval(x).map(|s| s.q_integral);
    Ok(MassLedgerRow {
        step: state.step,
        time: t,
        total_mass: total_mass(mesh, spec, c)?,
        inflow_flux: inflow(&square)?,
        outflow_flux: outflow_integral(mesh, spec, c, square)?,
        inflow_q_flux: inflow(&q_integral)?,
        outflow_q_flux: outflow_integral(mesh, spec, c, q_integral)?,
        dissipation: dissipation(mesh, spec, c),
        min_nodal: c.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    pub min: f64,
    pub violations: usize,
}

/// Minimum nodal value and the number of strictly negative nodes.
pub fn positivity_check(c: &[f64]) -> PositivityReport {
    PositivityReport {
        min: c.iter().copied().fold(f64::INFINITY, f64::min),
        violations: c.iter().filter(|&&v| v < 0.0).count(),
    }
}

/// Mean of the P1 trace over the outflow boundary (0 when there is none).
pub fn outflow_mean(mesh: &Mesh, c: &[f64]) -> f64 {
    let (mut integral, mut length) = (0.0, 0.0);
    for e in mesh.edges_tagged(BoundaryTag::Outflow) {
        let len = mesh.edge_length(e);
        integral += 0.5 * len * (c[e.nodes[0]] + c[e.nodes[1]]);
        length += len;
    }
    if length > 0.0 {
        integral / length
    } else {
        0.0
    }
}

/// Residual of the discrete energy identity of one midpoint step for a
/// linear isotherm with `f = 0` and `g = 0`:
///
/// `ω̄/2 (‖Cⁿ⁺¹‖² − ‖Cⁿ‖²) + Δt/2 ∫_{Γout} (C^{n+½})² u·n + Δt ∫ ∇C^{n+½}·D∇C^{n+½}`
///
/// with `C^{n+½} = (Cⁿ + Cⁿ⁺¹)/2`. Exactly zero for the scheme up to solver
/// and quadrature error.
pub fn midpoint_energy_residual(
    mesh: &Mesh,
    spec: &ProblemSpec,
    ops: &Operators,
    c_old: &[f64],
    c_new: &[f64],
    dt: f64,
) -> Result<f64> {
    let slope = spec
        .isotherm
        .linear_slope()
        .ok_or_else(|| Error::Problem("energy identity needs a constant or affine isotherm".into()))?;
    let omega_bar = spec.omega + (1.0 - spec.omega) * spec.rho_s * slope;
    let mid: Vec<f64> = c_old.iter().zip(c_new).map(|(a, b)| 0.5 * (a + b)).collect();
    let storage = 0.5 * omega_bar * (ops.l2_norm(c_new).powi(2) - ops.l2_norm(c_old).powi(2));
    let outflow = outflow_integral(mesh, spec, &mid, |x| Ok(x * x))?;
    Ok(storage + 0.5 * dt * outflow + dt * dissipation(mesh, spec, &mid))
}

/// Observer collecting ledger rows every `stride` steps.
#[derive(Clone, Debug, Default)]
pub struct MassLedger {
    pub stride: usize,
    pub rows: Vec<MassLedgerRow>,
    pub positivity: Vec<PositivityReport>,
}

impl MassLedger {
    pub fn new(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            ..Self::default()
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(LEDGER_HEADER)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl Observer for MassLedger {
    fn stride(&self) -> usize {
        self.stride
    }

    fn observe(&mut self, mesh: &Mesh, spec: &ProblemSpec, _ops: &Operators, state: &SimState) -> Result<()> {
        self.rows.push(ledger_row(mesh, spec, state)?);
        self.positivity.push(positivity_check(&state.c));
        Ok(())
    }
}
