use super::csr::SparseMatrix;
use super::precond::Preconditioner;
use super::SolveReport;
use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted right-preconditioned GMRES with modified Gram-Schmidt.
///
/// Convergence is judged on the true residual `‖b − Ax‖ ≤ tol‖b‖`, which is
/// recomputed at every restart.
pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = a.n();
    let m = restart.max(1);
    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![vec![0.0; n]; m + 1];
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut iterations = 0;

    loop {
        a.matvec_into(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return Ok(SolveReport {
                x,
                iterations,
                residual: rel,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: rel,
            });
        }

        basis[0].iter_mut().zip(&r).for_each(|(v, ri)| *v = ri / beta);
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut cols = 0;

        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            a.matvec_into(&z, &mut w);
            for i in 0..=j {
                let h = dot(&w, &basis[i]);
                hess[i][j] = h;
                w.iter_mut().zip(&basis[i]).for_each(|(wk, vk)| *wk -= h * vk);
            }
            let hnext = norm(&w);
            hess[j + 1][j] = hnext;

            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hess[j][j] / denom;
                sn[j] = hess[j + 1][j] / denom;
            }
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            iterations += 1;
            cols = j + 1;
            if g[j + 1].abs() <= tol * bnorm || iterations >= max_iter || hnext == 0.0 {
                break;
            }
            basis[j + 1].iter_mut().zip(&w).for_each(|(v, wk)| *v = wk / hnext);
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in i + 1..cols {
                acc -= hess[i][k] * y[k];
            }
            y[i] = if hess[i][i] != 0.0 { acc / hess[i][i] } else { 0.0 };
        }
        r.iter_mut().for_each(|v| *v = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            r.iter_mut().zip(v).for_each(|(rk, vk)| *rk += yi * vk);
        }
        precond.apply(&r, &mut z);
        x.iter_mut().zip(&z).for_each(|(xk, zk)| *xk += zk);
    }
}
