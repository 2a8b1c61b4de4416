//! Compressed sparse rows and a Jacobi-preconditioned conjugate gradient.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric matrix stored as full compressed rows.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T: Real> {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Assembles from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_start = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("merged entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_start[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self { n, row_start, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = T::zero();
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_start[i]..self.row_start[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map(|k| self.vals[k])
                    .unwrap_or_else(T::zero)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport<T> {
    pub iterations: usize,
    pub relative_residual: T,
}

fn dotv<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solves `A x = b` in place from the initial guess in `x`, stopping when
/// `‖b − A x‖ ≤ tol·‖b‖`.
pub fn pcg<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<CgReport<T>> {
    let n = a.dim();
    let bnorm = dotv(b, b).sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgReport { iterations: 0, relative_residual: T::zero() });
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let mut r = vec![T::zero(); n];
    a.mul_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dotv(&r, &z);
    let mut rel = dotv(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            return Err(Error::NumericalFailure { iterations: it, residual: rel.to_f64_lossy() });
        }
        a.mul_into(&p, &mut ap);
        let pap = dotv(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::NumericalFailure { iterations: it, residual: rel.to_f64_lossy() });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dotv(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(CgReport { iterations: it, relative_residual: rel })
}
