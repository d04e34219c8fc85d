//! Jacobi-preconditioned conjugate gradients for the reduced VEM system.

use sprs::CsMat;

use crate::error::{Error, Result};

/// Residual bound every returned solution satisfies: `‖b - Ax‖ ≤ CONTRACT·(1 + ‖b‖)`.
pub const CONTRACT: f64 = 1e-10;
const TARGET: f64 = 1e-14;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    let indptr = a.indptr();
    let indptr = indptr.raw_storage();
    let idx = a.indices();
    let val = a.data();
    for (row, out) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in indptr[row]..indptr[row + 1] {
            s += val[k] * x[idx[k]];
        }
        *out = s;
    }
}

/// Solves `Ax = b` for a symmetric positive definite CSR matrix.
pub fn solve_spd(a: &CsMat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.rows() != n || a.cols() != n {
        return Err(Error::SingularSystem("matrix and right-hand side sizes differ"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut inv_diag = vec![0.0; n];
    for (row, vec) in a.outer_iterator().enumerate() {
        let d = vec.get(row).copied().unwrap_or(0.0);
        if d <= 0.0 {
            return Err(Error::SingularSystem("non-positive diagonal entry"));
        }
        inv_diag[row] = 1.0 / d;
    }
    let bnorm = norm(b);
    let bound = CONTRACT * (1.0 + bnorm);
    let stop = TARGET * (1.0 + bnorm);

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n + 100;
    let mut it = 0;
    while it < max_iter && norm(&r) > stop {
        matvec(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        // Refresh the recursive residual now and then against drift.
        if it % 200 == 0 {
            matvec(a, &x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
        }
    }
    matvec(a, &x, &mut ap);
    let residual = norm(&b.iter().zip(&ap).map(|(b, ax)| b - ax).collect::<Vec<_>>());
    if residual > bound || !residual.is_finite() {
        return Err(Error::SolverFailure {
            iterations: it,
            residual,
            bound,
        });
    }
    Ok(x)
}
