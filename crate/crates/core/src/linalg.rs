//! Small dense complex-matrix helpers used by the propagator and the
//! moment calculus. Everything here is plain O(N^2..N^3) ndarray code;
//! the matrices involved are at most a few hundred rows.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((m.ncols(), m.nrows()));
    for ((i, j), v) in m.indexed_iter() {
        out[[j, i]] = v.conj();
    }
    out
}

/// `m · m†`, Hermitian by construction.
pub fn aat(m: &Array2<C64>) -> Array2<C64> {
    m.dot(&adjoint(m))
}

/// Largest entry magnitude.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Squared Frobenius norm. For Hermitian `n` this equals `trace(n²)`.
pub fn frobenius_sq(m: &Array2<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

/// Symmetrize to remove floating-point Hermiticity drift: `(m + m†)/2`.
pub fn hermitize(m: &Array2<C64>) -> Array2<C64> {
    let adj = adjoint(m);
    let mut out = m.clone();
    out.zip_mut_with(&adj, |a, b| *a = (*a + *b) * 0.5);
    out
}

/// Hermitian quadratic form `v† m v` (real part; imaginary part is
/// roundoff for Hermitian `m`).
pub fn quadratic_form(v: &Array1<C64>, m: &Array2<C64>) -> f64 {
    let mv = m.dot(v);
    v.iter().zip(mv.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

pub fn norm_sq(v: &Array1<C64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Attempt a Cholesky factorization of a Hermitian matrix; true if the
/// matrix is positive definite.
fn cholesky_ok(m: &Array2<C64>) -> bool {
    let n = m.nrows();
    let mut l = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let mut diag = m[[j, j]].re;
        for k in 0..j {
            diag -= l[[j, k]].norm_sqr();
        }
        if diag <= 0.0 || !diag.is_finite() {
            return false;
        }
        let dj = diag.sqrt();
        l[[j, j]] = C64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = s / dj;
        }
    }
    true
}

/// Lower bound on the smallest eigenvalue of a Hermitian matrix, found by
/// bisecting the shift `t` for which `m + t·I` stays positive definite.
/// Accurate to roughly `scale · 1e-12`; avoids pulling in a LAPACK backend
/// for the one place an eigenvalue bound is needed.
pub fn min_eigenvalue(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let scale = max_abs(m).max(1e-300);
    let shifted = |t: f64| {
        let mut s = m.clone();
        for i in 0..n {
            s[[i, i]] += C64::new(t, 0.0);
        }
        s
    };
    // Gershgorin-style bracket.
    let mut lo = -2.0 * scale * n as f64; // m + (-lo) I surely PD
    let mut hi = 2.0 * scale * n as f64; // m + (-hi)... sign handled below
    // We bisect on lambda: m - lambda I PD  <=>  lambda < lambda_min.
    let is_pd_at = |lambda: f64| cholesky_ok(&shifted(-lambda));
    if !is_pd_at(lo) {
        return lo;
    }
    if is_pd_at(hi) {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if is_pd_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * scale.max(1.0) {
            break;
        }
    }
    lo
}

/// Deterministic pairwise sum; independent of any parallel evaluation
/// order upstream because the slice order is fixed by sample index.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
