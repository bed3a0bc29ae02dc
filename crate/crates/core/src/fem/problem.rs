use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::isotherm::Isotherm;
use crate::mesh::{Mesh, Point, TAG_TOLERANCE};

pub type SpaceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
/// Prescribed diffusive flux `(D∇C)·n` at a boundary point, time and outward normal.
pub type FluxFn = Arc<dyn Fn(Point, f64, Point) -> f64 + Send + Sync>;

/// Constant symmetric diffusion tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionTensor {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

impl DiffusionTensor {
    pub const IDENTITY: Self = Self {
        d11: 1.0,
        d12: 0.0,
        d22: 1.0,
    };

    pub fn isotropic(d: f64) -> Self {
        Self {
            d11: d,
            d12: 0.0,
            d22: d,
        }
    }

    pub fn apply(&self, v: Point) -> Point {
        [self.d11 * v[0] + self.d12 * v[1], self.d12 * v[0] + self.d22 * v[1]]
    }

    /// Smallest eigenvalue λ.
    pub fn min_eigenvalue(&self) -> f64 {
        let half_trace = 0.5 * (self.d11 + self.d22);
        let r = (0.5 * (self.d11 - self.d22)).hypot(self.d12);
        half_trace - r
    }

    /// Entrywise bound β₁ = max |d_ij|.
    pub fn max_entry(&self) -> f64 {
        self.d11.abs().max(self.d12.abs()).max(self.d22.abs())
    }

    /// `D^{1/2}`-weighted squared norm `g·Dg`.
    pub fn energy(&self, g: Point) -> f64 {
        let dg = self.apply(g);
        g[0] * dg[0] + g[1] * dg[1]
    }

    /// `div(D∇C)` from the Hessian `[Cxx, Cxy, Cyy]`.
    pub fn contract_hessian(&self, hess: [f64; 3]) -> f64 {
        self.d11 * hess[0] + 2.0 * self.d12 * hess[1] + self.d22 * hess[2]
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.d11.is_finite() && self.d12.is_finite() && self.d22.is_finite();
        if !finite || !(self.min_eigenvalue() > 0.0) {
            return Err(Error::Problem(format!(
                "diffusion tensor must be symmetric positive definite: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum VelocityField {
    Constant(Point),
    /// Parabolic channel profile `u = (0, 2x(x − width))`.
    Channel { width: f64 },
    Custom(VectorFn),
}

impl VelocityField {
    pub fn eval(&self, p: Point) -> Point {
        match self {
            VelocityField::Constant(u) => *u,
            VelocityField::Channel { width } => [0.0, 2.0 * p[0] * (p[0] - width)],
            VelocityField::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Constant(u) => write!(f, "Constant({u:?})"),
            VelocityField::Channel { width } => write!(f, "Channel {{ width: {width} }}"),
            VelocityField::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Physical data of one transport problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub omega: f64,
    pub rho_s: f64,
    pub diffusion: DiffusionTensor,
    pub velocity: VelocityField,
    /// Dirichlet datum `g(x, t)` on the inflow boundary.
    pub inflow: SpaceTimeFn,
    pub initial: SpaceFn,
    pub forcing: SpaceTimeFn,
    /// Optional flux load on outflow and no-flow edges (zero when absent).
    pub boundary_flux: Option<FluxFn>,
    pub isotherm: Isotherm,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("omega", &self.omega)
            .field("rho_s", &self.rho_s)
            .field("diffusion", &self.diffusion)
            .field("velocity", &self.velocity)
            .field("boundary_flux", &self.boundary_flux.is_some())
            .field("isotherm", &self.isotherm)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Zero data, `ω = 1/2`, `ρ_s = 1`, `D = I`, no flow.
    pub fn new(isotherm: Isotherm) -> Self {
        Self {
            omega: 0.5,
            rho_s: 1.0,
            diffusion: DiffusionTensor::IDENTITY,
            velocity: VelocityField::Constant([0.0, 0.0]),
            inflow: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
            forcing: Arc::new(|_, _| 0.0),
            boundary_flux: None,
            isotherm,
        }
    }

    pub fn with_porosity(mut self, omega: f64, rho_s: f64) -> Self {
        self.omega = omega;
        self.rho_s = rho_s;
        self
    }

    pub fn with_diffusion(mut self, d: DiffusionTensor) -> Self {
        self.diffusion = d;
        self
    }

    pub fn with_velocity(mut self, u: VelocityField) -> Self {
        self.velocity = u;
        self
    }

    pub fn with_inflow(mut self, g: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inflow = Arc::new(g);
        self
    }

    pub fn with_initial(mut self, c0: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(c0);
        self
    }

    pub fn with_forcing(mut self, f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.forcing = Arc::new(f);
        self
    }

    pub fn with_boundary_flux(
        mut self,
        flux: impl Fn(Point, f64, Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.boundary_flux = Some(Arc::new(flux));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Problem(format!("porosity must lie in (0, 1], got {}", self.omega)));
        }
        if !(self.rho_s > 0.0 && self.rho_s.is_finite()) {
            return Err(Error::Problem(format!("density must be positive, got {}", self.rho_s)));
        }
        self.diffusion.validate()?;
        self.isotherm.validate()
    }

    /// Retag the boundary of `mesh` from this problem's velocity.
    pub fn tag_mesh(&self, mesh: Mesh) -> Mesh {
        mesh.tag_boundary(|p| self.velocity.eval(p), TAG_TOLERANCE)
    }

    /// `ω + (1 − ω)ρ_s q′(c)`, the coefficient of `∂C/∂t`.
    pub fn storage_coefficient(&self, c: f64) -> Result<f64> {
        Ok(self.omega + (1.0 - self.omega) * self.rho_s * self.isotherm.dq(c)?)
    }

    /// `ωc + (1 − ω)ρ_s q(c)`, the total mass density.
    pub fn mass_density(&self, c: f64) -> Result<f64> {
        Ok(self.omega * c + (1.0 - self.omega) * self.rho_s * self.isotherm.q(c)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_bounds() {
        let d = DiffusionTensor {
            d11: 2.0,
            d12: 1.0,
            d22: 2.0,
        };
        assert!((d.min_eigenvalue() - 1.0).abs() < 1e-15);
        assert_eq!(d.max_entry(), 2.0);
        assert!(d.validate().is_ok());
        let bad = DiffusionTensor {
            d11: 1.0,
            d12: 2.0,
            d22: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn porosity_bounds() {
        let iso = Isotherm::Constant { k: 0.0 };
        assert!(ProblemSpec::new(iso).with_porosity(0.0, 1.0).validate().is_err());
        assert!(ProblemSpec::new(iso).with_porosity(1.0, 1.0).validate().is_ok());
        assert!(ProblemSpec::new(iso).with_porosity(0.5, 0.0).validate().is_err());
    }

    #[test]
    fn channel_profile() {
        let u = VelocityField::Channel { width: 2.0 };
        assert_eq!(u.eval([1.0, 3.0]), [0.0, -2.0]);
        assert_eq!(u.eval([0.0, 3.0]), [0.0, 0.0]);
    }
}
