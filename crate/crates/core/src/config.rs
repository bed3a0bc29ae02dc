//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! isotherm.type = langmuir
//! mesh.h = 1/128
//! dt_ladder = 1/2, 1/4, 1/8
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{DiffusionTensor, ProblemSpec, VelocityField};
use crate::isotherm::Isotherm;
use crate::linalg::{PreconditionerKind, SolverMethod};
use crate::mesh::{build_rect_mesh, Mesh};
use crate::mms::{manufactured_problem, ManufacturedSolution};
use crate::stepper::{Scheme, SchemeConfig};

/// Velocity presets selectable from a config file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityPreset {
    Constant([f64; 2]),
    /// `u = (0, 2x(x − Lx))`
    Channel,
}

/// Source of the inflow datum and initial value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryDatum {
    /// Constant inflow `g`, with a constant initial value.
    Value(f64),
    /// Trace of the cubic-cosine manufactured solution, with matching forcing.
    Mms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub omega: f64,
    pub rho_s: f64,
    pub diffusion: DiffusionTensor,
    pub velocity: VelocityPreset,
    pub isotherm: Isotherm,
    pub scheme: SchemeConfig,
    /// Time steps of a convergence study; `[scheme.dt]` when absent.
    pub dt_ladder: Vec<f64>,
    pub t_final: f64,
    pub boundary: BoundaryDatum,
    pub initial: f64,
    pub output_dir: PathBuf,
    pub stride: usize,
}

/// The manufactured-solution convergence setup at `h = 1/128`.
impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            nx: 128,
            ny: 128,
            omega: 0.5,
            rho_s: 1.0,
            diffusion: DiffusionTensor::IDENTITY,
            velocity: VelocityPreset::Constant([1.0, 1.0]),
            isotherm: Isotherm::Langmuir { q_max: 1.0, k_eq: 1.0 },
            scheme: SchemeConfig::new(Scheme::MidpointExtrapolated, 0.5),
            dt_ladder: vec![0.5, 0.25, 0.125, 0.0625, 0.03125],
            t_final: 1.0,
            boundary: BoundaryDatum::Mms,
            initial: 0.0,
            output_dir: PathBuf::from("out"),
            stride: 1,
        }
    }
}

/// Parse a number, accepting simple fractions such as `1/128`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("`{s}` is not a number"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: `{}` is not a nonnegative integer", s.trim())))
}

/// Cells along a side of length `len` for target size `h`; must divide evenly.
fn cells_for(len: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("mesh.h must be positive, got {h}")));
    }
    let n = len / h;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * r {
        return Err(Error::Config(format!("mesh.h = {h} does not divide the side length {len}")));
    }
    Ok(r as usize)
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let mut cfg = RunConfig::default();
        let get = |k: &str| entries.get(k).map(|(_, v)| v.as_str());
        let num = |k: &str| get(k).map(parse_number).transpose();

        if let Some(v) = num("domain.lx")? {
            cfg.lx = v;
        }
        if let Some(v) = num("domain.ly")? {
            cfg.ly = v;
        }
        match (get("mesh.h"), get("mesh.nx"), get("mesh.ny")) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config("give either mesh.h or mesh.nx/mesh.ny, not both".into()))
            }
            (Some(h), None, None) => {
                let h = parse_number(h)?;
                cfg.nx = cells_for(cfg.lx, h)?;
                cfg.ny = cells_for(cfg.ly, h)?;
            }
            (None, nx, ny) => {
                if let Some(nx) = nx {
                    cfg.nx = parse_count("mesh.nx", nx)?;
                }
                if let Some(ny) = ny {
                    cfg.ny = parse_count("mesh.ny", ny)?;
                }
            }
        }

        if let Some(v) = num("physics.omega")? {
            cfg.omega = v;
        }
        if let Some(v) = num("physics.rho_s")? {
            cfg.rho_s = v;
        }
        if let Some(v) = num("physics.d11")? {
            cfg.diffusion.d11 = v;
        }
        if let Some(v) = num("physics.d12")? {
            cfg.diffusion.d12 = v;
        }
        if let Some(v) = num("physics.d22")? {
            cfg.diffusion.d22 = v;
        }

        match get("velocity.type") {
            None | Some("constant") => {
                let [mut ux, mut uy] = match cfg.velocity {
                    VelocityPreset::Constant(u) => u,
                    VelocityPreset::Channel => [0.0; 2],
                };
                if let Some(v) = num("velocity.ux")? {
                    ux = v;
                }
                if let Some(v) = num("velocity.uy")? {
                    uy = v;
                }
                cfg.velocity = VelocityPreset::Constant([ux, uy]);
            }
            Some("channel") => {
                if get("velocity.ux").is_some() || get("velocity.uy").is_some() {
                    return Err(Error::Config("velocity.ux/uy only apply to velocity.type = constant".into()));
                }
                cfg.velocity = VelocityPreset::Channel;
            }
            Some(other) => return Err(Error::Config(format!("unknown velocity.type `{other}`"))),
        }

        let require = |k: &str| -> Result<f64> {
            num(k)?.ok_or_else(|| Error::Config(format!("missing `{k}` for the selected isotherm")))
        };
        let iso_keys = ["isotherm.K", "isotherm.K1", "isotherm.K2", "isotherm.q_max", "isotherm.K_eq"];
        let allowed: &[&str] = match get("isotherm.type") {
            None => &[],
            Some("constant") => {
                cfg.isotherm = Isotherm::Constant { k: require("isotherm.K")? };
                &["isotherm.K"]
            }
            Some("affine") => {
                cfg.isotherm = Isotherm::Affine {
                    k1: require("isotherm.K1")?,
                    k2: require("isotherm.K2")?,
                };
                &["isotherm.K1", "isotherm.K2"]
            }
            Some("langmuir") => {
                cfg.isotherm = Isotherm::Langmuir {
                    q_max: require("isotherm.q_max")?,
                    k_eq: require("isotherm.K_eq")?,
                };
                &["isotherm.q_max", "isotherm.K_eq"]
            }
            Some(other) => return Err(Error::Config(format!("unknown isotherm.type `{other}`"))),
        };
        if let Some(k) = iso_keys.iter().find(|k| get(k).is_some() && !allowed.contains(k)) {
            return Err(Error::Config(format!("`{k}` does not apply to the selected isotherm")));
        }

        if let Some(s) = get("scheme") {
            cfg.scheme.scheme = s.parse()?;
        }
        let dt = num("dt")?;
        let ladder = get("dt_ladder")
            .map(|s| s.split(',').map(parse_number).collect::<Result<Vec<_>>>())
            .transpose()?;
        match (dt, ladder) {
            (Some(dt), Some(l)) => {
                cfg.scheme.dt = dt;
                cfg.dt_ladder = l;
            }
            (Some(dt), None) => {
                cfg.scheme.dt = dt;
                cfg.dt_ladder = vec![dt];
            }
            (None, Some(l)) => {
                cfg.scheme.dt = *l
                    .first()
                    .ok_or_else(|| Error::Config("dt_ladder is empty".into()))?;
                cfg.dt_ladder = l;
            }
            (None, None) => {}
        }
        if let Some(v) = num("T")? {
            cfg.t_final = v;
        }
        if let Some(v) = num("picard.tol")? {
            cfg.scheme.picard_tol = v;
        }
        if let Some(v) = get("picard.max") {
            cfg.scheme.picard_max = parse_count("picard.max", v)?;
        }

        if let Some(m) = get("solver.method") {
            cfg.scheme.solver.method = match m {
                "auto" => SolverMethod::Auto,
                "direct" => SolverMethod::Direct,
                "gmres" => SolverMethod::Gmres,
                other => return Err(Error::Config(format!("unknown solver.method `{other}`"))),
            };
        }
        if let Some(p) = get("solver.preconditioner") {
            cfg.scheme.solver.preconditioner = match p {
                "none" => PreconditionerKind::None,
                "jacobi" => PreconditionerKind::Jacobi,
                "ilu0" => PreconditionerKind::Ilu0,
                other => return Err(Error::Config(format!("unknown solver.preconditioner `{other}`"))),
            };
        }
        if let Some(v) = num("solver.tol")? {
            cfg.scheme.solver.tol = v;
        }
        if let Some(v) = get("solver.max_iter") {
            cfg.scheme.solver.max_iter = parse_count("solver.max_iter", v)?;
        }
        if let Some(v) = get("solver.restart") {
            cfg.scheme.solver.restart = parse_count("solver.restart", v)?;
        }

        match get("boundary.g") {
            None => {}
            Some("mms") => cfg.boundary = BoundaryDatum::Mms,
            Some(v) => cfg.boundary = BoundaryDatum::Value(parse_number(v)?),
        }
        if let Some(v) = num("initial.c0")? {
            if cfg.boundary == BoundaryDatum::Mms {
                return Err(Error::Config("initial.c0 conflicts with boundary.g = mms".into()));
            }
            cfg.initial = v;
        }
        if let Some(v) = get("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = get("output.stride") {
            cfg.stride = parse_count("output.stride", v)?;
        }

        const KNOWN: &[&str] = &[
            "domain.lx",
            "domain.ly",
            "mesh.h",
            "mesh.nx",
            "mesh.ny",
            "physics.omega",
            "physics.rho_s",
            "physics.d11",
            "physics.d12",
            "physics.d22",
            "velocity.type",
            "velocity.ux",
            "velocity.uy",
            "isotherm.type",
            "isotherm.K",
            "isotherm.K1",
            "isotherm.K2",
            "isotherm.q_max",
            "isotherm.K_eq",
            "scheme",
            "dt",
            "dt_ladder",
            "T",
            "picard.tol",
            "picard.max",
            "solver.method",
            "solver.preconditioner",
            "solver.tol",
            "solver.max_iter",
            "solver.restart",
            "boundary.g",
            "initial.c0",
            "output.dir",
            "output.stride",
        ];
        if let Some((k, (line, _))) = entries.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("line {line}: unknown key `{k}`")));
        }

        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// Check everything that can be checked without allocating the mesh.
    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(Error::Config(format!("domain must have positive size, got {} x {}", self.lx, self.ly)));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("mesh needs at least one cell per direction".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("output.stride must be at least 1".into()));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("T must be nonnegative, got {}", self.t_final)));
        }
        if self.dt_ladder.iter().any(|&dt| !(dt > 0.0)) {
            return Err(Error::Config("every dt must be positive".into()));
        }
        if let BoundaryDatum::Value(g) = self.boundary {
            self.isotherm.validate()?;
            for c in [g, self.initial] {
                self.isotherm.dq(c)?;
            }
        }
        self.scheme.validate()?;
        self.base_spec().validate()
    }

    fn base_spec(&self) -> ProblemSpec {
        let velocity = match self.velocity {
            VelocityPreset::Constant(u) => VelocityField::Constant(u),
            VelocityPreset::Channel => VelocityField::Channel { width: self.lx },
        };
        ProblemSpec::new(self.isotherm)
            .with_porosity(self.omega, self.rho_s)
            .with_diffusion(self.diffusion)
            .with_velocity(velocity)
    }

    /// Manufactured solution driving the run, if any.
    pub fn manufactured(&self) -> Option<ManufacturedSolution> {
        (self.boundary == BoundaryDatum::Mms).then(ManufacturedSolution::cubic_cosine)
    }

    /// Problem data for this configuration.
    pub fn problem(&self) -> ProblemSpec {
        let base = self.base_spec();
        match self.boundary {
            BoundaryDatum::Mms => manufactured_problem(&ManufacturedSolution::cubic_cosine(), base),
            BoundaryDatum::Value(g) => {
                let c0 = self.initial;
                base.with_inflow(move |_, _| g).with_initial(move |_| c0)
            }
        }
    }

    /// Mesh with boundary tags derived from the configured velocity.
    pub fn mesh(&self, spec: &ProblemSpec) -> Result<Mesh> {
        Ok(spec.tag_mesh(build_rect_mesh(self.nx, self.ny, self.lx, self.ly)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!("".parse::<RunConfig>().unwrap(), RunConfig::default());
    }

    #[test]
    fn fractions_and_comments() {
        assert_eq!(parse_number(" 1/128 ").unwrap(), 1.0 / 128.0);
        assert_eq!(parse_number("2.5e-1").unwrap(), 0.25);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
        let cfg: RunConfig = "# header\nmesh.h = 1/32 # trailing\n".parse().unwrap();
        assert_eq!((cfg.nx, cfg.ny), (32, 32));
    }

    #[test]
    fn channel_setup() {
        let text = "domain.lx = 2\ndomain.ly = 10\nmesh.h = 1/32\nvelocity.type = channel\n\
                    boundary.g = 1\nT = 3\ndt = 1/32\nisotherm.type = langmuir\n\
                    isotherm.q_max = 1\nisotherm.K_eq = 1\noutput.stride = 8\n";
        let cfg: RunConfig = text.parse().unwrap();
        assert_eq!((cfg.nx, cfg.ny), (64, 320));
        assert_eq!(cfg.velocity, VelocityPreset::Channel);
        assert_eq!(cfg.boundary, BoundaryDatum::Value(1.0));
        assert_eq!(cfg.dt_ladder, vec![1.0 / 32.0]);
        assert_eq!(cfg.stride, 8);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "mesh.h = 0.3",
            "mesh.h = 1/4\nmesh.nx = 4",
            "unknown.key = 1",
            "dt = 1\ndt = 2",
            "no equals sign",
            "isotherm.type = langmuir\nisotherm.q_max = 1",
            "isotherm.type = constant\nisotherm.K = 1\nisotherm.K_eq = 2",
            "physics.omega = 1.5",
            "physics.d11 = 1\nphysics.d12 = 2",
            "scheme = rk4",
            "dt_ladder = 1/2, 0",
            "velocity.type = channel\nvelocity.ux = 1",
            "boundary.g = mms\ninitial.c0 = 1",
            "output.stride = 0",
        ] {
            let err = text.parse::<RunConfig>().unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn scheme_and_solver_keys() {
        let cfg: RunConfig = "scheme = be_lagged\ndt_ladder = 1/4, 1/8\nsolver.method = gmres\n\
                              solver.preconditioner = jacobi\npicard.max = 7"
            .parse()
            .unwrap();
        assert_eq!(cfg.scheme.scheme, Scheme::BeLagged);
        assert_eq!(cfg.scheme.dt, 0.25);
        assert_eq!(cfg.dt_ladder, vec![0.25, 0.125]);
        assert_eq!(cfg.scheme.solver.method, SolverMethod::Gmres);
        assert_eq!(cfg.scheme.solver.preconditioner, PreconditionerKind::Jacobi);
        assert_eq!(cfg.scheme.picard_max, 7);
    }
}
