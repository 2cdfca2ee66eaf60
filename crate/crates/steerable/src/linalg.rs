//! Minimal dense complex linear algebra: modified Gram–Schmidt QR,
//! triangular solves, least squares and Gauss–Legendre nodes.
//!
//! Every system in this crate is small (at most a few hundred rows), so MGS
//! with a single reorthogonalization pass is accurate to near machine
//! precision and a LAPACK binding would be dead weight.

use crate::{C64, Error, Result};
use ndarray::{Array1, Array2, ArrayView1};
use std::f64::consts::PI;

/// Thin QR factorization a = q·r with q^† q = I (m×n, m ≥ n) and r upper
/// triangular. Errors if a column's residual drops below `rel_tol` times the
/// largest original column norm (numerical rank deficiency).
pub(crate) fn mgs_qr(a: &Array2<C64>, rel_tol: f64) -> Result<(Array2<C64>, Array2<C64>)> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::ShapeMismatch(format!(
            "QR needs at least as many rows as columns, got {m}×{n}"
        )));
    }
    let mut q = a.clone();
    let mut r = Array2::<C64>::zeros((n, n));
    let scale = (0..n)
        .map(|j| q.column(j).map(|z| z.norm_sqr()).sum().sqrt())
        .fold(0.0f64, f64::max);
    for j in 0..n {
        // Two orthogonalization passes ("twice is enough") keep Q orthonormal
        // to machine precision even for moderately ill-conditioned input.
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let proj: C64 = qi.iter().zip(q.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
                r[[i, j]] += proj;
                let mut col = q.column_mut(j);
                col.zip_mut_with(&qi, |c, &b| *c -= proj * b);
            }
        }
        let norm: f64 = q.column(j).map(|z| z.norm_sqr()).sum().sqrt();
        if norm <= rel_tol * scale {
            return Err(Error::RankDeficient(format!(
                "column {j} lies in the span of its predecessors (residual {norm:.3e})"
            )));
        }
        r[[j, j]] = C64::new(norm, 0.0);
        q.column_mut(j).map_inplace(|z| *z /= norm);
    }
    Ok((q, r))
}

/// Back substitution for an upper-triangular r (nonzero diagonal).
pub(crate) fn solve_upper(r: &Array2<C64>, b: ArrayView1<C64>) -> Array1<C64> {
    let n = r.nrows();
    let mut x = Array1::<C64>::zeros(n);
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= r[[i, j]] * x[j];
        }
        x[i] = acc / r[[i, i]];
    }
    x
}

/// Least-squares solve of a·x = b (per column of b) through the thin QR of a.
pub(crate) fn lstsq(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let (q, r) = mgs_qr(a, 1e-12)?;
    let qtb = conj_transpose(&q).dot(b);
    let n = r.nrows();
    let mut x = Array2::<C64>::zeros((n, b.ncols()));
    for (j, col) in qtb.columns().into_iter().enumerate() {
        x.column_mut(j).assign(&solve_upper(&r, col));
    }
    Ok(x)
}

/// Conjugate transpose.
pub(crate) fn conj_transpose(a: &Array2<C64>) -> Array2<C64> {
    a.t().map(|z| z.conj())
}

/// Largest |entry| of a − b; both must have the same shape.
pub(crate) fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1], exact for
/// polynomials of degree ≤ 2n−1. Roots of P_n by Newton iteration from the
/// Chebyshev-like initial guesses; weights w = 2 / ((1−x²) P_n'(x)²).
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    // Ascending nodes; the initial guesses run from +1 toward −1.
    rule.reverse();
    rule
}
