use super::csr::SparseMatrix;
use crate::error::{Error, Result};

/// Approximate inverse applied on the right inside GMRES.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let inv_diag = (0..a.n())
            .map(|i| match a.get(i, i) {
                d if d != 0.0 => Ok(1.0 / d),
                _ => Err(Error::Singular { row: i }),
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// Incomplete LU factorization with zero fill, stored on the pattern of `A`.
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.n();
        let mut lu = a.clone();
        let diag = (0..n)
            .map(|i| a.position(i, i).ok_or(Error::Singular { row: i }))
            .collect::<Result<Vec<_>>>()?;

        let offsets = lu.offsets().to_vec();
        let cols = lu.col_indices().to_vec();
        let vals = lu.values_mut();
        // marker[j] = storage index of (i, j) in the current row, or usize::MAX
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (offsets[i], offsets[i + 1]);
            for k in start..end {
                marker[cols[k]] = k;
            }
            for kk in start..diag[i] {
                let k = cols[kk];
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::Singular { row: k });
                }
                let lik = vals[kk] / pivot;
                vals[kk] = lik;
                for kj in diag[k] + 1..offsets[k + 1] {
                    let slot = marker[cols[kj]];
                    if slot != usize::MAX {
                        vals[slot] -= lik * vals[kj];
                    }
                }
            }
            if vals[diag[i]] == 0.0 {
                return Err(Error::Singular { row: i });
            }
            for k in start..end {
                marker[cols[k]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n();
        let offsets = self.lu.offsets();
        let cols = self.lu.col_indices();
        let vals = self.lu.values();
        for i in 0..n {
            let mut acc = r[i];
            for k in offsets[i]..self.diag[i] {
                acc -= vals[k] * z[cols[k]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in self.diag[i] + 1..offsets[i + 1] {
                acc -= vals[k] * z[cols[k]];
            }
            z[i] = acc / vals[self.diag[i]];
        }
    }
}
