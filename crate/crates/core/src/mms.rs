//! Manufactured solutions, discrete space-time error norms and temporal
//! convergence studies.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{integrate, p1_gradient, p1_value, ElementGeometry, ProblemSpec, SpaceTimeFn};
use crate::mesh::{Mesh, Point};
use crate::output::fmt_number;
use crate::stepper::{run_transient, Observer, Operators, SchemeConfig, SimState};

type GradientFn = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;
/// `[Cxx, Cxy, Cyy]`
type HessianFn = Arc<dyn Fn(Point, f64) -> [f64; 3] + Send + Sync>;

/// Exact solution with hand-supplied derivatives.
#[derive(Clone)]
pub struct ManufacturedSolution {
    value: SpaceTimeFn,
    d_t: SpaceTimeFn,
    gradient: GradientFn,
    hessian: HessianFn,
}

impl fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ManufacturedSolution { .. }")
    }
}

const FD_STEP: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-6;
const SPOT_CHECKS: usize = 20;

impl ManufacturedSolution {
    /// Wrap the callables, spot-checking every derivative against central
    /// differences at 20 pseudo-random points of `[0,1]² × [0.1, 1]`.
    pub fn new(
        value: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
        d_t: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point, f64) -> Point + Send + Sync + 'static,
        hessian: impl Fn(Point, f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Result<Self> {
        let ms = Self {
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        };
        ms.check_derivatives()?;
        Ok(ms)
    }

    fn check_derivatives(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let h = FD_STEP;
        let close = |fd: f64, exact: f64| (fd - exact).abs() <= FD_TOLERANCE * exact.abs().max(1.0);
        for _ in 0..SPOT_CHECKS {
            let p = [rng.gen::<f64>(), rng.gen::<f64>()];
            let t = rng.gen_range(0.1..1.0);
            let dx = [p[0] + h, p[1]];
            let mx = [p[0] - h, p[1]];
            let dy = [p[0], p[1] + h];
            let my = [p[0], p[1] - h];

            let ct = ((self.value)(p, t + h) - (self.value)(p, t - h)) / (2.0 * h);
            let cx = ((self.value)(dx, t) - (self.value)(mx, t)) / (2.0 * h);
            let cy = ((self.value)(dy, t) - (self.value)(my, t)) / (2.0 * h);
            let g = (self.gradient)(p, t);
            let hess = (self.hessian)(p, t);
            let gx = ((self.gradient)(dx, t)[0] - (self.gradient)(mx, t)[0]) / (2.0 * h);
            let gxy = ((self.gradient)(dy, t)[0] - (self.gradient)(my, t)[0]) / (2.0 * h);
            let gy = ((self.gradient)(dy, t)[1] - (self.gradient)(my, t)[1]) / (2.0 * h);

            let checks = [
                ("d_t", ct, (self.d_t)(p, t)),
                ("dC/dx", cx, g[0]),
                ("dC/dy", cy, g[1]),
                ("Cxx", gx, hess[0]),
                ("Cxy", gxy, hess[1]),
                ("Cyy", gy, hess[2]),
            ];
            for (name, fd, exact) in checks {
                if !close(fd, exact) {
                    return Err(Error::Problem(format!(
                        "manufactured {name} at ({}, {}, {t}) is {exact}, finite differences give {fd}",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `C = t²(x³ − 3x²/2 + 1) cos(πy/4)`.
    pub fn cubic_cosine() -> Self {
        let k = PI / 4.0;
        let px = |x: f64| x.powi(3) - 1.5 * x * x + 1.0;
        let dpx = |x: f64| 3.0 * x * x - 3.0 * x;
        let d2px = |x: f64| 6.0 * x - 3.0;
        Self::new(
            move |p, t| t * t * px(p[0]) * (k * p[1]).cos(),
            move |p, t| 2.0 * t * px(p[0]) * (k * p[1]).cos(),
            move |p, t| {
                let tt = t * t;
                [
                    tt * dpx(p[0]) * (k * p[1]).cos(),
                    -tt * px(p[0]) * k * (k * p[1]).sin(),
                ]
            },
            move |p, t| {
                let tt = t * t;
                [
                    tt * d2px(p[0]) * (k * p[1]).cos(),
                    -tt * dpx(p[0]) * k * (k * p[1]).sin(),
                    -tt * px(p[0]) * k * k * (k * p[1]).cos(),
                ]
            },
        )
        .expect("closed-form derivatives are consistent")
    }

    /// `C = t(1 + x + y)`: linear in time and in the P1 space.
    pub fn linear_in_time() -> Self {
        Self::new(
            |p, t| t * (1.0 + p[0] + p[1]),
            |p, _| 1.0 + p[0] + p[1],
            |_, t| [t, t],
            |_, _| [0.0; 3],
        )
        .expect("closed-form derivatives are consistent")
    }

    pub fn value(&self, p: Point, t: f64) -> f64 {
        (self.value)(p, t)
    }

    pub fn d_t(&self, p: Point, t: f64) -> f64 {
        (self.d_t)(p, t)
    }

    pub fn gradient(&self, p: Point, t: f64) -> Point {
        (self.gradient)(p, t)
    }

    pub fn hessian(&self, p: Point, t: f64) -> [f64; 3] {
        (self.hessian)(p, t)
    }
}

/// `f = (ω + (1−ω)ρ_s q′(C))·∂ₜC + u·∇C − div(D∇C)` for the exact `C`.
///
/// Isotherm pole hits (only possible for negative exact values) yield NaN.
pub fn forcing_from_exact(ms: &ManufacturedSolution, spec: &ProblemSpec) -> SpaceTimeFn {
    let ms = ms.clone();
    let spec = spec.clone();
    Arc::new(move |p, t| {
        let c = ms.value(p, t);
        let storage = spec.storage_coefficient(c).unwrap_or(f64::NAN);
        let u = spec.velocity.eval(p);
        let g = ms.gradient(p, t);
        storage * ms.d_t(p, t) + u[0] * g[0] + u[1] * g[1] - spec.diffusion.contract_hessian(ms.hessian(p, t))
    })
}

/// Attach manufactured forcing, inflow trace, initial value and the exact
/// diffusive flux `(D∇C)·n` on outflow and no-flow edges to `base`.
pub fn manufactured_problem(ms: &ManufacturedSolution, base: ProblemSpec) -> ProblemSpec {
    let forcing = forcing_from_exact(ms, &base);
    let d = base.diffusion;
    let (trace, initial, flux) = (ms.clone(), ms.clone(), ms.clone());
    let mut spec = base
        .with_inflow(move |p, t| trace.value(p, t))
        .with_initial(move |p| initial.value(p, 0.0))
        .with_boundary_flux(move |p, t, n| {
            let dg = d.apply(flux.gradient(p, t));
            dg[0] * n[0] + dg[1] * n[1]
        });
    spec.forcing = forcing;
    spec
}

/// Space-time error norms of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// `max_n ‖C(tₙ) − Cₕⁿ‖`
    pub linf_l2: f64,
    /// `(Δt Σ_{n≥1} ‖C(tₙ) − Cₕⁿ‖²)^{1/2}`
    pub l2_l2: f64,
    /// `(Δt Σ_{n≥1} ‖∇C(tₙ) − ∇Cₕⁿ‖²)^{1/2}`
    pub l2_h1semi: f64,
    /// `(l2_l2² + l2_h1semi²)^{1/2}`
    pub l2_h1: f64,
}

impl ErrorReport {
    pub fn as_array(&self) -> [f64; 4] {
        [self.linf_l2, self.l2_l2, self.l2_h1semi, self.l2_h1]
    }
}

/// `(‖C(t) − Cₕ‖², ‖∇C(t) − ∇Cₕ‖²)` by the degree-4 rule.
pub fn squared_field_errors(mesh: &Mesh, ms: &ManufacturedSolution, c: &[f64], t: f64) -> Result<(f64, f64)> {
    if c.len() != mesh.num_nodes() {
        return Err(Error::Dimension {
            expected: mesh.num_nodes(),
            got: c.len(),
        });
    }
    let tris = mesh.triangles();
    let l2 = integrate(mesh, |tri, b, p| Ok((ms.value(p, t) - p1_value(c, tris[tri], b)).powi(2)))?;
    let mut grad_cache: Option<(usize, Point)> = None;
    let semi = integrate(mesh, |tri, _, p| {
        let gh = match grad_cache {
            Some((k, g)) if k == tri => g,
            _ => {
                let g = p1_gradient(c, tris[tri], &ElementGeometry::new(mesh, tri));
                grad_cache = Some((tri, g));
                g
            }
        };
        let g = ms.gradient(p, t);
        Ok((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2))
    })?;
    Ok((l2, semi))
}

/// Observer that accumulates the error norms step by step.
pub struct ErrorAccumulator {
    ms: ManufacturedSolution,
    dt: f64,
    max_l2: f64,
    sum_l2: f64,
    sum_semi: f64,
}

impl ErrorAccumulator {
    pub fn new(ms: &ManufacturedSolution, dt: f64) -> Self {
        Self {
            ms: ms.clone(),
            dt,
            max_l2: 0.0,
            sum_l2: 0.0,
            sum_semi: 0.0,
        }
    }

    pub fn push(&mut self, mesh: &Mesh, state: &SimState) -> Result<()> {
        let (l2, semi) = squared_field_errors(mesh, &self.ms, &state.c, state.t)?;
        self.max_l2 = self.max_l2.max(l2.sqrt());
        if state.step > 0 {
            self.sum_l2 += l2;
            self.sum_semi += semi;
        }
        Ok(())
    }

    pub fn report(&self) -> ErrorReport {
        let l2_l2 = (self.dt * self.sum_l2).sqrt();
        let l2_h1semi = (self.dt * self.sum_semi).sqrt();
        ErrorReport {
            linf_l2: self.max_l2,
            l2_l2,
            l2_h1semi,
            l2_h1: l2_l2.hypot(l2_h1semi),
        }
    }
}

impl Observer for ErrorAccumulator {
    fn observe(&mut self, mesh: &Mesh, _spec: &ProblemSpec, _ops: &Operators, state: &SimState) -> Result<()> {
        self.push(mesh, state)
    }
}

/// Error norms of a stored trajectory; snapshots must be consecutive steps.
pub fn error_norms(snapshots: &[SimState], ms: &ManufacturedSolution, mesh: &Mesh) -> Result<ErrorReport> {
    if snapshots.is_empty() {
        return Err(Error::Config("no snapshots to measure".into()));
    }
    if snapshots.windows(2).any(|w| w[1].step != w[0].step + 1) {
        return Err(Error::Config("snapshots must be consecutive time steps".into()));
    }
    let dt = match snapshots.iter().find(|s| s.step > 0) {
        Some(s) => s.t / s.step as f64,
        None => 0.0,
    };
    let mut acc = ErrorAccumulator::new(ms, dt);
    for s in snapshots {
        acc.push(mesh, s)?;
    }
    Ok(acc.report())
}

/// Observed order `log(e_coarse / e_fine) / log(dt_coarse / dt_fine)`.
pub fn observed_rate(e_coarse: f64, e_fine: f64, refinement: f64) -> f64 {
    (e_coarse / e_fine).ln() / refinement.ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dt: f64,
    pub errors: ErrorReport,
    /// Rates against the previous row, in the order of [`ErrorReport::as_array`].
    pub rates: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

pub const CONVERGENCE_HEADER: [&str; 10] = [
    "h",
    "dt",
    "linf_l2",
    "rate_linf_l2",
    "l2_l2",
    "rate_l2_l2",
    "l2_h1semi",
    "rate_h1semi",
    "l2_h1",
    "rate_h1",
];

impl ConvergenceTable {
    /// Build rows from `(h, dt, errors)`, computing rates between rows that
    /// share `h` (temporal study) or share `dt` (spatial study).
    pub fn from_runs(runs: &[(f64, f64, ErrorReport)]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(runs.len());
        for (i, &(h, dt, errors)) in runs.iter().enumerate() {
            let rates = (i > 0).then(|| runs[i - 1]).and_then(|(h0, dt0, e0)| {
                let refinement = if h0 == h && dt0 != dt {
                    dt0 / dt
                } else if dt0 == dt && h0 != h {
                    h0 / h
                } else {
                    return None;
                };
                let (a, b) = (e0.as_array(), errors.as_array());
                Some(std::array::from_fn(|k| observed_rate(a[k], b[k], refinement)))
            });
            rows.push(ConvergenceRow { h, dt, errors, rates });
        }
        Self { rows }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CONVERGENCE_HEADER)?;
        for row in &self.rows {
            let e = row.errors.as_array();
            let r = row.rates.map(|r| r.map(fmt_number)).unwrap_or_default();
            w.write_record([
                fmt_number(row.h),
                fmt_number(row.dt),
                fmt_number(e[0]),
                r[0].clone(),
                fmt_number(e[1]),
                r[1].clone(),
                fmt_number(e[2]),
                r[2].clone(),
                fmt_number(e[3]),
                r[3].clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>10} {:>13} {:>7} {:>13} {:>7} {:>13} {:>7} {:>13} {:>7}",
            "h", "dt", "linf_l2", "rate", "l2_l2", "rate", "l2_h1semi", "rate", "l2_h1", "rate"
        )?;
        for row in &self.rows {
            write!(f, "{:>10.6} {:>10.6}", row.h, row.dt)?;
            let e = row.errors.as_array();
            for k in 0..4 {
                match row.rates {
                    Some(r) => write!(f, " {:>13.6e} {:>7.4}", e[k], r[k])?,
                    None => write!(f, " {:>13.6e} {:>7}", e[k], "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Run one manufactured-solution simulation and return its error norms.
pub fn measure(
    mesh: &Mesh,
    spec: &ProblemSpec,
    ms: &ManufacturedSolution,
    scheme: &SchemeConfig,
    t_final: f64,
) -> Result<ErrorReport> {
    let mut acc = ErrorAccumulator::new(ms, scheme.dt);
    run_transient(mesh, spec, scheme, t_final, None, &mut [&mut acc])?;
    Ok(acc.report())
}

/// Temporal study at fixed mesh: one run per entry of `dt_list`
/// (strictly decreasing by factors of two), executed in parallel.
pub fn convergence_study(
    mesh: &Mesh,
    spec: &ProblemSpec,
    ms: &ManufacturedSolution,
    scheme: &SchemeConfig,
    t_final: f64,
    dt_list: &[f64],
) -> Result<ConvergenceTable> {
    if dt_list.is_empty() {
        return Err(Error::Config("dt ladder is empty".into()));
    }
    for w in dt_list.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "dt ladder must halve at each entry, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let runs: Vec<(f64, f64, ErrorReport)> = dt_list
        .par_iter()
        .map(|&dt| {
            let cfg = SchemeConfig { dt, ..*scheme };
            measure(mesh, spec, ms, &cfg, t_final)
                .map(|e| (mesh.h(), dt, e))
                .map_err(|e| Error::Run { dt, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceTable::from_runs(&runs))
}
