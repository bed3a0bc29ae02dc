//! Sparse storage and linear solvers for the assembled transport systems.

mod banded;
mod csr;
mod gmres;
mod precond;

pub use banded::BandedLu;
pub use csr::SparseMatrix;
pub use gmres::gmres;
pub use precond::{Identity, Ilu0, Jacobi, Preconditioner};

use crate::error::{Error, Result};

/// Systems up to this size go to the banded direct solver under `Auto`.
pub const AUTO_DIRECT_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    /// Direct for `n <= AUTO_DIRECT_LIMIT`, GMRES otherwise.
    Auto,
    Direct,
    Gmres,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tol: 1e-12,
            max_iter: 2000,
            restart: 50,
            preconditioner: PreconditionerKind::Ilu0,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        Self {
            method: SolverMethod::Direct,
            ..Self::default()
        }
    }

    pub fn gmres(preconditioner: PreconditionerKind) -> Self {
        Self {
            method: SolverMethod::Gmres,
            preconditioner,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.restart == 0 {
            return Err(Error::Config("GMRES restart length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖` (0 for direct solves with `b = 0`).
    pub residual: f64,
}

/// Solve `A x = b` according to `cfg`, reporting iteration count and residual.
pub fn solve_detailed(a: &SparseMatrix, b: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if b.len() != a.n() {
        return Err(Error::Dimension {
            expected: a.n(),
            got: b.len(),
        });
    }
    let direct = match cfg.method {
        SolverMethod::Direct => true,
        SolverMethod::Gmres => false,
        SolverMethod::Auto => a.n() <= AUTO_DIRECT_LIMIT,
    };
    if direct {
        let x = BandedLu::factor(a)?.solve(b);
        let r = a.matvec(&x);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rn = r.iter().zip(b).map(|(ri, bi)| (ri - bi).powi(2)).sum::<f64>().sqrt();
        return Ok(SolveReport {
            x,
            iterations: 1,
            residual: if bn > 0.0 { rn / bn } else { rn },
        });
    }
    let run = |p: &dyn Preconditioner| gmres(a, b, None, p, cfg.tol, cfg.restart, cfg.max_iter);
    match cfg.preconditioner {
        PreconditionerKind::None => run(&Identity),
        PreconditionerKind::Jacobi => run(&Jacobi::new(a)?),
        PreconditionerKind::Ilu0 => run(&Ilu0::new(a)?),
    }
}

pub fn solve(a: &SparseMatrix, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    solve_detailed(a, b, cfg).map(|r| r.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = SparseMatrix::identity(2);
        for cfg in [SolverConfig::direct(), SolverConfig::gmres(PreconditionerKind::Ilu0)] {
            assert_eq!(solve(&a, &[4.0, 5.0], &cfg).unwrap(), vec![4.0, 5.0]);
        }
    }

    #[test]
    fn diagonal_system() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        for cfg in [
            SolverConfig::direct(),
            SolverConfig::gmres(PreconditionerKind::None),
            SolverConfig::gmres(PreconditionerKind::Jacobi),
        ] {
            let x = solve(&a, &[2.0, 3.0], &cfg).unwrap();
            assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let r = solve_detailed(&a, &[0.0, 0.0], &SolverConfig::gmres(PreconditionerKind::Ilu0)).unwrap();
        assert_eq!(r.x, vec![0.0, 0.0]);
    }

    #[test]
    fn budget_exhaustion_reports_residual() {
        // 1D Laplacian, unpreconditioned, two iterations cannot converge.
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &t).unwrap();
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::gmres(PreconditionerKind::None)
        };
        match solve(&a, &vec![1.0; n], &cfg) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-3);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let a = SparseMatrix::identity(1);
        let cfg = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(solve(&a, &[1.0], &cfg), Err(Error::Config(_))));
        let cfg = SolverConfig {
            restart: 0,
            ..SolverConfig::default()
        };
        assert!(solve(&a, &[1.0], &cfg).is_err());
    }
}
