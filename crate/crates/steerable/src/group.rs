//! Rigid motions of R^d and unitary irreducible representations of SO(d).
//!
//! Rotations are parameterized per dimension: a single angle for SO(2), z-y-z
//! Euler angles for SO(3), and an explicit orthogonal matrix for d ≥ 4.
//! Irreps are labeled by the harmonic degree ℓ they act on: the circle has
//! the characters e^{ικφ}, SO(3) has the Wigner-D matrices, and for d ≥ 4 the
//! irrep carried by the degree-ℓ harmonics is recovered numerically from the
//! transformation law of the harmonic basis itself ([`irrep_general`]).
//!
//! The phase convention is tied to [`crate::sphere::harmonic`]: for every
//! rotation R,
//!
//! ```text
//!     Y^{(ℓ)}(R s) = ρ^{(ℓ)}(R) · Y^{(ℓ)}(s).
//! ```
//!
//! For SO(3), with harmonics built on P_ℓ^{-m} (components ordered
//! m = −ℓ..ℓ), this fixes
//!
//! ```text
//!     ρ^{(ℓ)}_{m m'}(α, β, γ) = (−1)^{m−m'} e^{ιmα} d^ℓ_{m m'}(β) e^{ιm'γ}
//! ```
//!
//! where d^ℓ is the standard real Wigner little-d matrix. The sign decoration
//! is validated against an independent change-of-basis oracle at ℓ = 1 in the
//! tests below.

use crate::linalg::{gauss_legendre, lstsq};
use crate::special::binomial;
use crate::{C64, Error, Result};
use ndarray::Array2;
use rand::Rng;
use std::f64::consts::{PI, TAU};

/// Label of an SO(d) irrep as it appears in this crate: the representation
/// carried by the degree-ℓ spherical harmonics on S^{d-1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IrrepId {
    /// Ambient dimension d ≥ 2.
    pub dim: usize,
    /// Harmonic degree ℓ ≥ 0. For d = 2 this is the circular frequency κ;
    /// negative frequencies arise only as intermediate differences and are
    /// reduced modulo the angular grid size before they become labels.
    pub degree: usize,
}

impl IrrepId {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim >= 2, "ambient dimension must be at least 2");
        IrrepId { dim, degree }
    }

    /// Dimension of the irrep: 1 for d = 2, 2ℓ+1 for d = 3, the
    /// hyperspherical count for d ≥ 4.
    pub fn irrep_dim(&self) -> usize {
        irrep_dim(self.dim, self.degree)
    }
}

/// Number of linearly independent spherical harmonics of degree ℓ on
/// S^{d-1}: 1 for d = 2, else (2ℓ+d−2)/(d−2) · C(ℓ+d−3, ℓ).
pub fn irrep_dim(d: usize, ell: usize) -> usize {
    assert!(d >= 2);
    if d == 2 || ell == 0 {
        1
    } else {
        let val = (2 * ell + d - 2) as f64 / (d - 2) as f64 * binomial(ell + d - 3, ell);
        val.round() as usize
    }
}

/// Rotation part of a rigid motion, parameterized per dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum Rotation {
    /// SO(2): counter-clockwise angle φ ∈ [0, 2π).
    Angle(f64),
    /// SO(3): z-y-z Euler angles, R = R_z(α) R_y(β) R_z(γ), with
    /// α, γ ∈ [0, 2π) and β ∈ [0, π]. At the gimbal-locked poles
    /// β ∈ {0, π} the canonical form has γ = 0.
    Euler { alpha: f64, beta: f64, gamma: f64 },
    /// SO(d) for d ≥ 4: the orthogonal matrix itself.
    Matrix(Array2<f64>),
}

impl Rotation {
    /// The rotation as a d×d matrix.
    pub fn matrix(&self) -> Array2<f64> {
        match self {
            Rotation::Angle(phi) => rot2(*phi),
            Rotation::Euler { alpha, beta, gamma } => euler_zyz(*alpha, *beta, *gamma),
            Rotation::Matrix(m) => m.clone(),
        }
    }

    /// Ambient dimension the variant encodes.
    pub fn dim(&self) -> usize {
        match self {
            Rotation::Angle(_) => 2,
            Rotation::Euler { .. } => 3,
            Rotation::Matrix(m) => m.nrows(),
        }
    }

    /// Canonical parameterization of a rotation matrix: angle for 2×2, Euler
    /// angles for 3×3, the (validated) matrix itself for d ≥ 4.
    pub fn from_matrix(m: &Array2<f64>) -> Result<Rotation> {
        let d = m.nrows();
        if m.ncols() != d || d < 2 {
            return Err(Error::ShapeMismatch(format!(
                "rotation matrix must be square of size ≥ 2, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_rotation(m, 1e-9) {
            return Err(Error::InvalidArgument(
                "matrix is not special orthogonal within 1e-9".into(),
            ));
        }
        Ok(match d {
            2 => Rotation::Angle(wrap_tau(m[[1, 0]].atan2(m[[0, 0]]))),
            3 => {
                let (alpha, beta, gamma) = euler_from_matrix(m);
                Rotation::Euler { alpha, beta, gamma }
            }
            _ => Rotation::Matrix(m.clone()),
        })
    }

    /// Inverse rotation, staying in the canonical parameterization.
    pub fn inverse(&self) -> Rotation {
        match self {
            Rotation::Angle(phi) => Rotation::Angle(wrap_tau(-phi)),
            Rotation::Euler { alpha, beta, gamma } => {
                // (R_z(α) R_y(β) R_z(γ))^{-1} = R_z(−γ) R_y(−β) R_z(−α);
                // fold the negative β back into [0, π] via R_y(−β) =
                // R_z(π) R_y(β) R_z(π). At β = 0 the rotation is R_z(α+γ);
                // at β = π it is the involution R_z(α−γ) R_y(π).
                if beta.abs() < 1e-12 {
                    canonical_euler(-(alpha + gamma), 0.0)
                } else if (beta - PI).abs() < 1e-12 {
                    canonical_euler(alpha - gamma, PI)
                } else {
                    Rotation::Euler {
                        alpha: wrap_tau(-gamma + PI),
                        beta: *beta,
                        gamma: wrap_tau(-alpha + PI),
                    }
                }
            }
            Rotation::Matrix(m) => Rotation::Matrix(m.t().to_owned()),
        }
    }
}

/// An element (t, R) of the special Euclidean group SE(d), acting on points
/// as x ↦ R x + t.
#[derive(Clone, Debug)]
pub struct RigidMotion {
    pub dim: usize,
    pub translation: Vec<f64>,
    pub rotation: Rotation,
}

impl RigidMotion {
    /// Validating constructor; the rotation variant must match the length of
    /// the translation vector.
    pub fn new(translation: Vec<f64>, rotation: Rotation) -> Result<Self> {
        let dim = translation.len();
        let want = rotation.dim();
        if dim != want {
            return Err(Error::ShapeMismatch(format!(
                "translation has length {dim} but the rotation is {want}-dimensional"
            )));
        }
        match &rotation {
            Rotation::Angle(phi) => {
                if !phi.is_finite() {
                    return Err(Error::InvalidArgument("non-finite rotation angle".into()));
                }
            }
            Rotation::Euler { alpha, beta, gamma } => {
                if ![alpha, beta, gamma].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite Euler angles".into()));
                }
                if *beta < -1e-12 || *beta > PI + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "Euler β = {beta} outside [0, π]"
                    )));
                }
            }
            Rotation::Matrix(m) => {
                if m.nrows() < 4 {
                    return Err(Error::InvalidArgument(
                        "matrix rotations are reserved for d ≥ 4; use Angle or Euler".into(),
                    ));
                }
                if !is_rotation(m, 1e-9) {
                    return Err(Error::InvalidArgument(
                        "matrix is not special orthogonal within 1e-9".into(),
                    ));
                }
            }
        }
        Ok(RigidMotion { dim, translation, rotation })
    }

    /// The identity motion of SE(d).
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 2);
        let rotation = match dim {
            2 => Rotation::Angle(0.0),
            3 => Rotation::Euler { alpha: 0.0, beta: 0.0, gamma: 0.0 },
            _ => Rotation::Matrix(Array2::eye(dim)),
        };
        RigidMotion { dim, translation: vec![0.0; dim], rotation }
    }

    /// Pure planar rotation by `phi` (counter-clockwise).
    pub fn rotation2(phi: f64) -> Self {
        RigidMotion {
            dim: 2,
            translation: vec![0.0; 2],
            rotation: Rotation::Angle(wrap_tau(phi)),
        }
    }

    /// Pure 3D rotation from z-y-z Euler angles, β ∈ [0, π].
    pub fn rotation3(alpha: f64, beta: f64, gamma: f64) -> Self {
        assert!((-1e-12..=PI + 1e-12).contains(&beta), "β = {beta} outside [0, π]");
        let rotation = if beta.abs() < 1e-12 || (beta - PI).abs() < 1e-12 {
            canonical_euler(alpha + gamma, beta.clamp(0.0, PI))
        } else {
            Rotation::Euler { alpha: wrap_tau(alpha), beta, gamma: wrap_tau(gamma) }
        };
        RigidMotion { dim: 3, translation: vec![0.0; 3], rotation }
    }

    /// Rotation matrix of the motion.
    pub fn rotation_matrix(&self) -> Array2<f64> {
        debug_assert_eq!(self.rotation.dim(), self.dim, "inconsistent RigidMotion");
        self.rotation.matrix()
    }

    /// Apply the motion to a point: R x + t.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "point has the wrong dimension");
        let r = self.rotation_matrix();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| r[[i, j]] * x[j]).sum::<f64>() + self.translation[i])
            .collect()
    }
}

/// Composition of rigid motions: (t₁, R₁)(t₂, R₂) = (t₁ + R₁t₂, R₁R₂).
pub fn se_compose(a: &RigidMotion, b: &RigidMotion) -> Result<RigidMotion> {
    if a.dim != b.dim {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose SE({}) with SE({})",
            a.dim, b.dim
        )));
    }
    let ra = a.rotation_matrix();
    let translation: Vec<f64> = (0..a.dim)
        .map(|i| {
            a.translation[i]
                + (0..a.dim).map(|j| ra[[i, j]] * b.translation[j]).sum::<f64>()
        })
        .collect();
    let rotation = match (&a.rotation, &b.rotation) {
        (Rotation::Angle(x), Rotation::Angle(y)) => Rotation::Angle(wrap_tau(x + y)),
        _ => Rotation::from_matrix(&ra.dot(&b.rotation_matrix()))?,
    };
    Ok(RigidMotion { dim: a.dim, translation, rotation })
}

/// Inverse motion: (t, R)^{-1} = (−R^{-1} t, R^{-1}).
pub fn se_inverse(m: &RigidMotion) -> RigidMotion {
    let r = m.rotation_matrix();
    let translation: Vec<f64> = (0..m.dim)
        .map(|i| -(0..m.dim).map(|j| r[[j, i]] * m.translation[j]).sum::<f64>())
        .collect();
    RigidMotion { dim: m.dim, translation, rotation: m.rotation.inverse() }
}

/// 2×2 counter-clockwise rotation by φ.
pub fn rot2(phi: f64) -> Array2<f64> {
    let (s, c) = phi.sin_cos();
    ndarray::array![[c, -s], [s, c]]
}

/// z-y-z Euler rotation R_z(α) R_y(β) R_z(γ).
pub fn euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Array2<f64> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    ndarray::array![
        [ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb],
        [sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb],
        [-sb * cg, sb * sg, cb],
    ]
}

/// Extract canonical z-y-z Euler angles (α, β, γ) from a rotation matrix:
/// α, γ ∈ [0, 2π), β ∈ [0, π], and γ = 0 whenever β is gimbal-locked.
pub fn euler_from_matrix(r: &Array2<f64>) -> (f64, f64, f64) {
    assert_eq!(r.dim(), (3, 3));
    let sb = r[[0, 2]].hypot(r[[1, 2]]);
    let beta = sb.atan2(r[[2, 2]]);
    if sb < 1e-12 {
        if r[[2, 2]] > 0.0 {
            // R = R_z(α + γ); put everything into α.
            (wrap_tau(r[[1, 0]].atan2(r[[0, 0]])), 0.0, 0.0)
        } else {
            // R = R_z(α − γ) R_y(π); put everything into α.
            (wrap_tau((-r[[1, 0]]).atan2(-r[[0, 0]])), PI, 0.0)
        }
    } else {
        (
            wrap_tau(r[[1, 2]].atan2(r[[0, 2]])),
            beta,
            wrap_tau(r[[2, 1]].atan2(-r[[2, 0]])),
        )
    }
}

/// Character of SO(2): the 1×1 irrep value e^{ικφ}.
pub fn irrep_so2(k: i64, phi: f64) -> C64 {
    C64::cis(k as f64 * phi)
}

/// Real Wigner little-d matrix d^ℓ(β), indexed [m'+ℓ, m+ℓ] (row m',
/// column m), from Wigner's factorial sum. Stable for the small ℓ used here.
pub fn wigner_little_d(ell: usize, beta: f64) -> Array2<f64> {
    let l = ell as i64;
    let n = 2 * ell + 1;
    let (sh, ch) = (0.5 * beta).sin_cos();
    let fact = |x: i64| crate::special::factorial(x as usize);
    let mut d = Array2::<f64>::zeros((n, n));
    for mp in -l..=l {
        for m in -l..=l {
            let pref = (fact(l + mp) * fact(l - mp) * fact(l + m) * fact(l - m)).sqrt();
            let s_min = 0.max(m - mp);
            let s_max = (l + m).min(l - mp);
            let mut acc = 0.0;
            for s in s_min..=s_max {
                let sign = if (mp - m + s) % 2 == 0 { 1.0 } else { -1.0 };
                let num = ch.powi((2 * l + m - mp - 2 * s) as i32) * sh.powi((mp - m + 2 * s) as i32);
                let den = fact(l + m - s) * fact(s) * fact(mp - m + s) * fact(l - mp - s);
                acc += sign * num / den;
            }
            d[[(mp + l) as usize, (m + l) as usize]] = pref * acc;
        }
    }
    d
}

/// Wigner-D matrix ρ^{(ℓ)}(α, β, γ) in the crate's harmonic convention
/// (see the module docs), indexed [m+ℓ, m'+ℓ].
pub fn wigner_d(ell: usize, alpha: f64, beta: f64, gamma: f64) -> Array2<C64> {
    let l = ell as i64;
    let little = wigner_little_d(ell, beta);
    Array2::from_shape_fn((2 * ell + 1, 2 * ell + 1), |(i, j)| {
        let (m, mp) = (i as i64 - l, j as i64 - l);
        let sign = if (m - mp).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        C64::cis(m as f64 * alpha) * C64::cis(mp as f64 * gamma) * (sign * little[[i, j]])
    })
}

/// Matrix of the degree-ℓ irrep evaluated at a rotation, dispatching on the
/// ambient dimension: e^{ικφ} for d = 2, Wigner-D for d = 3,
/// [`irrep_general`] for d ≥ 4.
pub fn irrep_matrix(id: IrrepId, rot: &Rotation) -> Result<Array2<C64>> {
    if rot.dim() != id.dim {
        return Err(Error::ShapeMismatch(format!(
            "rotation is {}-dimensional but the irrep lives on SO({})",
            rot.dim(),
            id.dim
        )));
    }
    match rot {
        Rotation::Angle(phi) => Ok(Array2::from_elem((1, 1), irrep_so2(id.degree as i64, *phi))),
        Rotation::Euler { alpha, beta, gamma } => Ok(wigner_d(id.degree, *alpha, *beta, *gamma)),
        Rotation::Matrix(m) => irrep_general(id.dim, id.degree, m),
    }
}

/// Numerical realization of the degree-ℓ irrep of SO(d) for d ≥ 4 (also
/// valid at d = 3, where it reproduces [`wigner_d`]): solve the harmonic
/// transformation law Y(R s_i) = ρ Y(s_i) in the least-squares sense over
/// 2·dim_ℓ deterministic sample directions. Errors if the sample matrix is
/// rank deficient, if the input is not a rotation, or if the recovered
/// matrix fails to be unitary within 1e-8 (which would mean the samples did
/// not pin the representation down).
pub fn irrep_general(d: usize, ell: usize, r: &Array2<f64>) -> Result<Array2<C64>> {
    use rand::SeedableRng;
    if r.nrows() != d || r.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "expected a {d}×{d} rotation, got {}×{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if !is_rotation(r, 1e-8) {
        return Err(Error::InvalidArgument(
            "matrix is not special orthogonal within 1e-8".into(),
        ));
    }
    let dh = irrep_dim(d, ell);
    let n_samples = 2 * dh;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
        0x5eed_ab1e_0000_0000 ^ ((d as u64) << 24) ^ ell as u64,
    );
    let mut lhs = Array2::<C64>::zeros((n_samples, dh));
    let mut rhs = Array2::<C64>::zeros((n_samples, dh));
    for i in 0..n_samples {
        let s = random_direction(d, &mut rng);
        let rs: Vec<f64> = (0..d)
            .map(|a| (0..d).map(|b| r[[a, b]] * s[b]).sum())
            .collect();
        let ys = crate::sphere::harmonic(d, ell, &crate::sphere::sphere_angles(&s));
        let yrs = crate::sphere::harmonic(d, ell, &crate::sphere::sphere_angles(&rs));
        for u in 0..dh {
            lhs[[i, u]] = ys[u];
            rhs[[i, u]] = yrs[u];
        }
    }
    // Row i of both sides is a transposed harmonic vector, so the unknown in
    // lhs · W = rhs is W = ρᵀ (plain transpose, no conjugation).
    let w = lstsq(&lhs, &rhs)?;
    let rho = w.t().to_owned();
    let gram = crate::linalg::conj_transpose(&rho).dot(&rho);
    let defect = crate::linalg::max_abs_diff(&gram, &Array2::eye(dh));
    if defect > 1e-8 {
        return Err(Error::Numerical(format!(
            "recovered degree-{ell} representation is not unitary (defect {defect:.3e})"
        )));
    }
    Ok(rho)
}

/// Product quadrature on SO(3) in Euler angles with n nodes per axis:
/// midpoint rule in α, β, γ and weights proportional to sin β, normalized to
/// total mass exactly 1 (the Haar measure of the full group). The rule is
/// second-order accurate; node order is lexicographic in (α, β, γ) indices.
pub fn so3_quadrature(n: usize) -> Vec<([f64; 3], f64)> {
    assert!(n >= 1);
    let beta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
    let sin_sum: f64 = beta.iter().map(|b| b.sin()).sum();
    let mut nodes = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let alpha = TAU * (i as f64 + 0.5) / n as f64;
        for (j, &b) in beta.iter().enumerate() {
            let w = beta[j].sin() / (sin_sum * (n * n) as f64);
            for k in 0..n {
                let gamma = TAU * (k as f64 + 0.5) / n as f64;
                nodes.push(([alpha, b, gamma], w));
            }
        }
    }
    nodes
}

/// Band-exact product quadrature on SO(3): trapezoidal-equivalent midpoint
/// rules in α and γ with band+1 nodes and Gauss–Legendre in cos β, exact for
/// every matrix element of ρ^{(ℓ1)} ⊗ ρ^{(ℓ2)} ⊗ ρ^{(ℓ)} with
/// ℓ1+ℓ2+ℓ ≤ band. The Clebsch–Gordan construction relies on it, where
/// the second-order rule above could not reach the required tolerances.
pub fn so3_exact_quadrature(band: usize) -> Vec<([f64; 3], f64)> {
    let n_az = band + 1;
    let n_beta = band / 2 + 1;
    let gl = gauss_legendre(n_beta);
    let mut nodes = Vec::with_capacity(n_az * n_az * n_beta);
    for i in 0..n_az {
        let alpha = TAU * (i as f64 + 0.5) / n_az as f64;
        for &(x, w) in &gl {
            let beta = x.acos();
            let weight = w / (2.0 * (n_az * n_az) as f64);
            for k in 0..n_az {
                let gamma = TAU * (k as f64 + 0.5) / n_az as f64;
                nodes.push(([alpha, beta, gamma], weight));
            }
        }
    }
    nodes
}

/// Haar-distributed random rotation (exact for d ∈ {2, 3}, Gram–Schmidt of a
/// Gaussian matrix for d ≥ 4). Used throughout the self-checks.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Rotation {
    match dim {
        2 => Rotation::Angle(rng.random_range(0.0..TAU)),
        3 => {
            let alpha = rng.random_range(0.0..TAU);
            let gamma = rng.random_range(0.0..TAU);
            let beta = rng.random_range(-1.0f64..1.0).acos();
            Rotation::Euler { alpha, beta, gamma }
        }
        d => loop {
            let mut q = Array2::<f64>::from_shape_fn((d, d), |_| {
                rng.sample(rand_distr::StandardNormal)
            });
            if let Some(()) = gram_schmidt_real(&mut q) {
                if det(&q) < 0.0 {
                    for i in 0..d {
                        q[[i, d - 1]] = -q[[i, d - 1]];
                    }
                }
                return Rotation::Matrix(q);
            }
        },
    }
}

/// Is the matrix orthogonal with det +1, up to `tol` entrywise?
pub(crate) fn is_rotation(m: &Array2<f64>, tol: f64) -> bool {
    let d = m.nrows();
    if m.ncols() != d {
        return false;
    }
    let gram = m.t().dot(m);
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram[[i, j]] - want).abs() > tol {
                return false;
            }
        }
    }
    det(m) > 0.0
}

/// Determinant by Gaussian elimination with partial pivoting (tiny d only).
fn det(m: &Array2<f64>) -> f64 {
    let d = m.nrows();
    let mut a = m.clone();
    let mut sign = 1.0;
    for k in 0..d {
        let pivot = (k..d).max_by(|&i, &j| a[[i, k]].abs().total_cmp(&a[[j, k]].abs())).unwrap();
        if a[[pivot, k]] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for j in 0..d {
                let tmp = a[[k, j]];
                a[[k, j]] = a[[pivot, j]];
                a[[pivot, j]] = tmp;
            }
            sign = -sign;
        }
        for i in k + 1..d {
            let f = a[[i, k]] / a[[k, k]];
            for j in k..d {
                a[[i, j]] -= f * a[[k, j]];
            }
        }
    }
    sign * (0..d).map(|i| a[[i, i]]).product::<f64>()
}

/// In-place real modified Gram–Schmidt; `None` if a column degenerates.
fn gram_schmidt_real(q: &mut Array2<f64>) -> Option<()> {
    let d = q.nrows();
    for j in 0..d {
        for i in 0..j {
            let proj: f64 = (0..d).map(|r| q[[r, i]] * q[[r, j]]).sum();
            for r in 0..d {
                q[[r, j]] -= proj * q[[r, i]];
            }
        }
        let norm: f64 = (0..d).map(|r| q[[r, j]] * q[[r, j]]).sum::<f64>().sqrt();
        if norm < 1e-6 {
            return None;
        }
        for r in 0..d {
            q[[r, j]] /= norm;
        }
    }
    Some(())
}

/// Gaussian direction on S^{d-1}, rejecting near-zero draws.
fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

pub(crate) fn wrap_tau(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y == TAU {
        0.0
    } else {
        y
    }
}

/// Euler triple for a gimbal-locked rotation: R_z(δ) for β = 0, or
/// R_z(δ) R_y(π) for β = π, in canonical (γ = 0) form.
fn canonical_euler(delta: f64, beta: f64) -> Rotation {
    Rotation::Euler { alpha: wrap_tau(delta), beta, gamma: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{conj_transpose, max_abs_diff};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn motion3(t: [f64; 3], e: [f64; 3]) -> RigidMotion {
        let mut m = RigidMotion::rotation3(e[0], e[1], e[2]);
        m.translation = t.to_vec();
        m
    }

    #[test]
    fn irrep_dims_match_known_counts() {
        assert_eq!(irrep_dim(2, 7), 1);
        for ell in 0..6 {
            assert_eq!(irrep_dim(3, ell), 2 * ell + 1);
        }
        assert_eq!(irrep_dim(4, 2), 9);
        assert_eq!(irrep_dim(5, 3), 30);
    }

    #[test]
    fn parameterized_rotations_are_special_orthogonal() {
        assert!(is_rotation(&rot2(1.234), 1e-12));
        assert!(is_rotation(&euler_zyz(0.3, 1.1, 5.0), 1e-12));
        assert!((det(&euler_zyz(0.3, 1.1, 5.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euler_extraction_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (a, b, g) = (
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..TAU),
            );
            let r = euler_zyz(a, b, g);
            let (a2, b2, g2) = euler_from_matrix(&r);
            assert!(max_abs_diff_real(&euler_zyz(a2, b2, g2), &r) < 1e-12);
        }
        // Gimbal-locked cases keep the canonical γ = 0 form.
        let (a, b, g) = euler_from_matrix(&euler_zyz(1.0, 0.0, 0.5));
        assert!((a - 1.5).abs() < 1e-12 && b == 0.0 && g == 0.0);
        let (a, b, g) = euler_from_matrix(&euler_zyz(1.0, PI, 0.5));
        assert!((a - 0.5).abs() < 1e-12 && (b - PI).abs() < 1e-12 && g == 0.0);
    }

    fn max_abs_diff_real(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn compose_is_associative_and_inverse_cancels() {
        let m1 = motion3([0.3, -1.0, 2.0], [0.2, 0.9, 4.0]);
        let m2 = motion3([1.5, 0.0, -0.5], [5.1, 2.2, 0.7]);
        let m3 = motion3([-2.0, 0.25, 0.0], [3.0, 0.1, 1.0]);
        let left = se_compose(&se_compose(&m1, &m2).unwrap(), &m3).unwrap();
        let right = se_compose(&m1, &se_compose(&m2, &m3).unwrap()).unwrap();
        assert!(max_abs_diff_real(&left.rotation_matrix(), &right.rotation_matrix()) < 1e-12);
        for i in 0..3 {
            assert!((left.translation[i] - right.translation[i]).abs() < 1e-12);
        }
        let inv = se_inverse(&m1);
        let id = se_compose(&m1, &inv).unwrap();
        assert!(max_abs_diff_real(&id.rotation_matrix(), &Array2::eye(3)) < 1e-12);
        assert!(id.translation.iter().all(|t| t.abs() < 1e-12));
        // Mixed dimensions must refuse to compose.
        assert!(se_compose(&m1, &RigidMotion::rotation2(0.1)).is_err());
    }

    #[test]
    fn little_d_matches_closed_form_at_ell_1() {
        let beta = 0.77f64;
        let (s, c) = beta.sin_cos();
        let r2 = std::f64::consts::SQRT_2;
        let want = array![
            [(1.0 + c) / 2.0, -s / r2, (1.0 - c) / 2.0],
            [s / r2, c, -s / r2],
            [(1.0 - c) / 2.0, s / r2, (1.0 + c) / 2.0],
        ];
        // Rows m' = 1..-1 in the closed-form table correspond to our
        // [m'+ℓ, m+ℓ] layout with both indices ascending, so flip both axes.
        let got = wigner_little_d(1, beta);
        for mp in 0..3 {
            for m in 0..3 {
                assert!((got[[2 - mp, 2 - m]] - want[[mp, m]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn wigner_d_is_a_unitary_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ell in 0..=4usize {
            for _ in 0..8 {
                let g1 = RigidMotion::rotation3(
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..PI),
                    rng.random_range(0.0..TAU),
                );
                let g2 = RigidMotion::rotation3(
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..PI),
                    rng.random_range(0.0..TAU),
                );
                let id = IrrepId::new(3, ell);
                let d1 = irrep_matrix(id, &g1.rotation).unwrap();
                let d2 = irrep_matrix(id, &g2.rotation).unwrap();
                let d12 = irrep_matrix(id, &se_compose(&g1, &g2).unwrap().rotation).unwrap();
                assert!(max_abs_diff(&d1.dot(&d2), &d12) < 1e-10, "homomorphism at ℓ={ell}");
                let gram = conj_transpose(&d1).dot(&d1);
                assert!(max_abs_diff(&gram, &Array2::eye(2 * ell + 1)) < 1e-10);
            }
        }
    }

    /// Independent convention oracle: at ℓ = 1 the harmonics are, up to the
    /// fixed unitary B below, just the Cartesian coordinates, so the irrep
    /// must be B R B†. This pins both the little-d layout and the
    /// (−1)^{m−m'} decoration.
    #[test]
    fn wigner_d_matches_cartesian_conjugation_at_ell_1() {
        let r2 = std::f64::consts::SQRT_2;
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        // Rows are Y_{-1} = -(x-ιy)/√2, Y_0 = z, Y_{+1} = (x+ιy)/√2.
        let b = array![
            [-one / r2, i / r2, C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0), one],
            [one / r2, i / r2, C64::new(0.0, 0.0)],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let (a, be, g) = (
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..TAU),
            );
            let r = euler_zyz(a, be, g).map(|&x| C64::new(x, 0.0));
            let want = b.dot(&r).dot(&conj_transpose(&b));
            let got = wigner_d(1, a, be, g);
            assert!(max_abs_diff(&got, &want) < 1e-13);
        }
    }

    #[test]
    fn so2_characters_multiply() {
        for k in -4i64..=4 {
            let (p, q) = (0.81, 2.3);
            let prod = irrep_so2(k, p) * irrep_so2(k, q);
            assert!((prod - irrep_so2(k, p + q)).norm() < 1e-14);
        }
    }

    #[test]
    fn so3_quadrature_mass_and_positivity() {
        for n in [1usize, 4, 16] {
            let quad = so3_quadrature(n);
            assert_eq!(quad.len(), n * n * n);
            assert!(quad.iter().all(|&(_, w)| w > 0.0));
            let total: f64 = quad.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn so3_quadrature_respects_peter_weyl_at_n16() {
        let quad = so3_quadrature(16);
        let mut mean = Array2::<C64>::zeros((3, 3));
        let mut sq = Array2::<f64>::zeros((3, 3));
        for &([a, b, g], w) in &quad {
            let rho = wigner_d(1, a, b, g);
            for r in 0..3 {
                for c in 0..3 {
                    mean[[r, c]] += w * rho[[r, c]];
                    sq[[r, c]] += w * rho[[r, c]].norm_sqr();
                }
            }
        }
        for r in 0..3 {
            for c in 0..3 {
                assert!(mean[[r, c]].norm() < 1e-3, "∫ρ_{{{r}{c}}} = {}", mean[[r, c]]);
                // Schur orthogonality: ∫ |ρ_{mm'}|² dμ = 1/(2ℓ+1). The rule
                // is second order; at n = 16 the worst entry sits at ~1.1e-3.
                assert!(
                    (sq[[r, c]] - 1.0 / 3.0).abs() < 2e-3,
                    "∫|ρ_{{{r}{c}}}|² = {}",
                    sq[[r, c]]
                );
            }
        }
    }

    #[test]
    fn exact_quadrature_is_schur_exact() {
        // ∫ ρ^{(1)}_{ab} conj(ρ^{(1)}_{cd}) dμ = δ_ac δ_bd / 3, and the
        // band-exact rule must hit it to machine precision.
        let quad = so3_exact_quadrature(2);
        let mut acc = [[C64::new(0.0, 0.0); 9]; 9];
        for &([a, b, g], w) in &quad {
            let rho = wigner_d(1, a, b, g);
            for p in 0..9 {
                for q in 0..9 {
                    acc[p][q] += w * rho[[p / 3, p % 3]] * rho[[q / 3, q % 3]].conj();
                }
            }
        }
        for p in 0..9 {
            for q in 0..9 {
                let want = if p == q { 1.0 / 3.0 } else { 0.0 };
                assert!((acc[p][q] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn random_matrix_rotations_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let rot = random_rotation(4, &mut rng);
            let m = rot.matrix();
            assert!(is_rotation(&m, 1e-10));
            assert!(RigidMotion::new(vec![0.0; 4], rot).is_ok());
        }
        // A reflection must be rejected.
        let mut refl = Array2::<f64>::eye(4);
        refl[[0, 0]] = -1.0;
        assert!(RigidMotion::new(vec![0.0; 4], Rotation::Matrix(refl)).is_err());
    }
}
