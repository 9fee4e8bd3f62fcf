//! Dense symmetric solvers used by the ridge and kernel-ridge paths.
//!
//! Everything here is sequential by design: the learning pipeline keeps all
//! floating-point reductions on one thread so results are identical for any
//! thread count. Matrix products at the call sites go through `ndarray::dot`
//! (single-threaded matrixmultiply backend), factorizations happen here.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Jitter ladder for barely-singular systems, applied relative to the mean
/// diagonal: try the plain factorization first, then escalate.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factorization `A = L L^T` of a symmetric positive-definite
/// matrix. Returns the lower factor as a row-major buffer. Fails on a
/// non-positive pivot, reporting where the factorization broke down.
pub fn cholesky_lower(a: ArrayView2<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[[i, j]] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Numerical(format!(
                        "Cholesky pivot {i} of {n} is {s:.3e}; matrix is not positive definite"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the lower factor from [`cholesky_lower`].
pub fn cholesky_solve(l: &[f64], b: ArrayView1<f64>) -> Array1<f64> {
    let n = b.len();
    debug_assert_eq!(l.len(), n * n);
    let mut x = b.to_owned();
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &x.as_slice().unwrap()[..i]);
        x[i] = (x[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solves `A x = b` for symmetric positive semi-definite `A`, escalating a
/// diagonal jitter (1e-12 up to 1e-8 of the mean diagonal) when the plain
/// factorization hits a non-positive pivot.
pub fn solve_spd(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {n}x{n} but rhs has length {}",
            b.len()
        )));
    }
    let mean_diag = (0..n).map(|i| a[[i, i]].abs()).sum::<f64>() / n as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut last = None;
    for &jitter in &JITTER_LADDER {
        let result = if jitter == 0.0 {
            cholesky_lower(a)
        } else {
            let mut shifted = a.to_owned();
            for i in 0..n {
                shifted[[i, i]] += jitter * scale;
            }
            cholesky_lower(shifted.view())
        };
        match result {
            Ok(l) => return Ok(cholesky_solve(&l, b)),
            Err(e) => last = Some(e),
        }
    }
    match last.unwrap() {
        Error::Numerical(msg) => Err(Error::Numerical(format!(
            "{msg} (after jitter up to {:.0e} of mean diagonal {mean_diag:.3e})",
            JITTER_LADDER[JITTER_LADDER.len() - 1]
        ))),
        other => Err(other),
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration from a fixed start vector.
pub fn max_eig_sym(a: ArrayView2<f64>, iters: usize) -> f64 {
    let n = a.nrows();
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.25 * (i % 3) as f64);
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    let mut lam = 0.0;
    for _ in 0..iters {
        let w = a.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        lam = v.dot(&w);
        v = w / norm;
    }
    lam
}

/// True when the symmetric matrix has `min_eig >= -rel_tol * max_eig`,
/// verified by factorizing the shifted matrix rather than computing a full
/// eigendecomposition.
pub fn psd_within(a: ArrayView2<f64>, rel_tol: f64) -> bool {
    let n = a.nrows();
    let max_eig = max_eig_sym(a, 200).max(0.0);
    let shift = rel_tol * max_eig + f64::MIN_POSITIVE;
    let mut shifted = a.to_owned();
    for i in 0..n {
        shifted[[i, i]] += shift;
    }
    cholesky_lower(shifted.view()).is_ok()
}

/// `A + c I` in place, for assembling ridge systems.
pub fn add_diag(a: &mut Array2<f64>, c: f64) {
    for i in 0..a.nrows() {
        a[[i, i]] += c;
    }
}
