//! Tiny special-function helpers shared by the group and sphere modules:
//! factorials, half-integer Gamma values and the surface area of S^{d-1}.

use std::f64::consts::PI;

/// n! as `f64`. Exact up to n = 22 (the last factorial below 2^53) and
/// correctly rounded to within a few ulps beyond. Panics for n > 170 where
/// the result overflows `f64`; nothing in this crate comes close.
pub(crate) fn factorial(n: usize) -> f64 {
    assert!(n <= 170, "factorial({n}) overflows f64");
    let mut acc = 1.0;
    for k in 2..=n {
        acc *= k as f64;
    }
    acc
}

/// Double factorial n!! with the usual empty-product conventions
/// (-1)!! = 0!! = 1.
pub(crate) fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Γ(k/2) for integer k ≥ 1, via Γ(m) = (m-1)! for even k and
/// Γ(m + 1/2) = √π (2m-1)!! / 2^m for odd k.
pub(crate) fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1, "gamma_half needs a positive half-integer argument");
    if k % 2 == 0 {
        factorial(k / 2 - 1)
    } else {
        PI.sqrt() * double_factorial(k as i64 - 2) / 2f64.powi((k as i32 - 1) / 2)
    }
}

/// Surface area A(S^{d-1}) = 2 π^{d/2} / Γ(d/2) of the unit sphere in R^d.
pub(crate) fn surface_area(d: usize) -> f64 {
    assert!(d >= 1);
    let half_pow = if d % 2 == 0 {
        PI.powi(d as i32 / 2)
    } else {
        PI.powi((d as i32 - 1) / 2) * PI.sqrt()
    };
    2.0 * half_pow / gamma_half(d)
}

/// Binomial coefficient C(n, k) as `f64` (n small enough that this is exact).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}
