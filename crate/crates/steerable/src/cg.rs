//! Clebsch–Gordan intertwiners for SO(2) and SO(3) tensor products, and the
//! diagonal restriction of two-argument Fourier coefficients.
//!
//! On the circle, harmonic degrees compose additively — e^{ικ₁φ}e^{ικ₂φ} =
//! e^{ι(κ₁+κ₂)φ} — so the intertwiner degenerates to the indicator
//! [`cg_so2`]. For SO(3) the tensor product of degree ℓ₁ and ℓ₂ irreps
//! contains each ℓ in the triangle range |ℓ₁−ℓ₂| ≤ ℓ ≤ ℓ₁+ℓ₂ exactly once;
//! [`cg_so3`] realizes the isometry C : H_ℓ → H_ℓ₁ ⊗ H_ℓ₂ numerically:
//! group-averaging a seed matrix,
//!
//! ```text
//!     P(X) = ∫ (ρ₁ ⊗ ρ₂)(g) · X · ρ(g)† dμ(g),
//! ```
//!
//! projects onto the (one-dimensional) space of intertwiners, QR
//! orthonormalizes the surviving column frame, and a deterministic phase pin
//! (first significant entry made real positive) removes the remaining gauge
//! freedom, so repeated builds are bit-identical. The average uses the
//! band-exact Euler quadrature, which integrates the matrix-coefficient
//! integrand exactly, keeping the block accurate to machine precision.
//!
//! Kronecker index convention: the row of C for the pair (i₁, i₂) is
//! i₁·d₂ + i₂ (row-major in the first factor), matching
//! `ndarray::linalg::kron`.

use crate::group::{irrep_dim, so3_exact_quadrature, wigner_d, IrrepId};
use crate::linalg::{conj_transpose, max_abs_diff, mgs_qr};
use crate::{C64, Error, Result};
use ndarray::linalg::kron;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Isometric intertwiner C : H_ρ → H_ρ₁ ⊗ H_ρ₂ for one triple of irreps,
/// with columns indexed by the components of ρ.
#[derive(Clone, Debug)]
pub struct CGBlock {
    pub rho1: IrrepId,
    pub rho2: IrrepId,
    pub rho: IrrepId,
    /// Shape (d_ρ₁·d_ρ₂, d_ρ); columns are orthonormal.
    pub matrix: Array2<C64>,
}

impl CGBlock {
    /// Reshaped conjugate slices C̃_m ∈ C^{d₂×d₁} with
    /// (C̃_m)_{i₂,i₁} = conj(C_{i₁·d₂+i₂, m}) — the form in which the block
    /// enters higher-layer filter banks.
    pub fn tilde_slices(&self) -> Vec<Array2<C64>> {
        let d1 = self.rho1.irrep_dim();
        let d2 = self.rho2.irrep_dim();
        (0..self.rho.irrep_dim())
            .map(|m| {
                Array2::from_shape_fn((d2, d1), |(i2, i1)| {
                    self.matrix[[i1 * d2 + i2, m]].conj()
                })
            })
            .collect()
    }
}

/// SO(2) fusion rule: the product of frequencies κ₁ and κ₂ contains κ iff
/// κ = κ₁ + κ₂ (the 1×1 intertwiner is the scalar 1, so no block type is
/// needed).
pub fn cg_so2(k1: i64, k2: i64, k: i64) -> bool {
    k == k1 + k2
}

/// Degrees ℓ admitted by the SO(3) triangle rule for ℓ₁ ⊗ ℓ₂.
pub fn triangle_range(ell1: usize, ell2: usize) -> std::ops::RangeInclusive<usize> {
    ell1.abs_diff(ell2)..=ell1 + ell2
}

/// Clebsch–Gordan block for SO(3), or `None` when the triangle rule rules
/// the triple out. Construction is deterministic; see the module docs.
pub fn cg_so3(ell1: usize, ell2: usize, ell: usize) -> Option<CGBlock> {
    if !triangle_range(ell1, ell2).contains(&ell) {
        return None;
    }
    let (d1, d2, dr) = (irrep_dim(3, ell1), irrep_dim(3, ell2), irrep_dim(3, ell));
    let quad = so3_exact_quadrature(ell1 + ell2 + ell);
    for attempt in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(
            0xc1eb_5c44_0000_0000
                ^ ((ell1 as u64) << 40)
                ^ ((ell2 as u64) << 28)
                ^ ((ell as u64) << 16)
                ^ attempt,
        );
        let seed = Array2::<C64>::from_shape_fn((d1 * d2, dr), |_| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let mut avg = Array2::<C64>::zeros((d1 * d2, dr));
        for &([alpha, beta, gamma], w) in &quad {
            let r1 = wigner_d(ell1, alpha, beta, gamma);
            let r2 = wigner_d(ell2, alpha, beta, gamma);
            let r = wigner_d(ell, alpha, beta, gamma);
            let lhs = kron(&r1, &r2).dot(&seed).dot(&conj_transpose(&r));
            avg.zip_mut_with(&lhs, |a, &l| *a += l * w);
        }
        let fro: f64 = avg.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if fro < 1e-6 {
            continue; // seed had (numerically) no intertwiner component
        }
        let (mut q, _r) = mgs_qr(&avg, 1e-9).expect("projected frame cannot be rank deficient");
        // Pin the global phase: first entry (row-major) within 2× of the
        // largest magnitude becomes real positive.
        let peak = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let anchor = *q.iter().find(|z| z.norm() >= 0.5 * peak).unwrap();
        let phase = anchor.conj() / anchor.norm();
        q.map_inplace(|z| *z *= phase);

        let block = CGBlock {
            rho1: IrrepId::new(3, ell1),
            rho2: IrrepId::new(3, ell2),
            rho: IrrepId::new(3, ell),
            matrix: q,
        };
        debug_assert!(intertwining_residual(&block, 5) < 1e-10);
        return Some(block);
    }
    unreachable!("eight independent Gaussian seeds cannot all be orthogonal to a 1-dim space")
}

/// Diagonal restriction of a two-argument Fourier coefficient: the
/// contribution of f̂(ρ₁, ρ₂) (shape (d₁d₂)×(d₁d₂)) to f̂_diag(ρ),
///
/// ```text
///     (d_ρ₁ d_ρ₂ / d_ρ) · C† f̂(ρ₁,ρ₂) C.
/// ```
pub fn cg_decompose(block: &CGBlock, coeff: &Array2<C64>) -> Result<Array2<C64>> {
    let d12 = block.rho1.irrep_dim() * block.rho2.irrep_dim();
    if coeff.dim() != (d12, d12) {
        return Err(Error::ShapeMismatch(format!(
            "two-argument coefficient must be {d12}×{d12}, got {}×{}",
            coeff.nrows(),
            coeff.ncols()
        )));
    }
    let scale = d12 as f64 / block.rho.irrep_dim() as f64;
    let mut out = conj_transpose(&block.matrix).dot(coeff).dot(&block.matrix);
    out.map_inplace(|z| *z *= scale);
    Ok(out)
}

/// Precomputed blocks for every admissible triple of degrees up to a cutoff,
/// keyed (ℓ₁, ℓ₂, ℓ). For d = 2 the table is empty — SO(2) intertwiners are
/// scalar indicators and never need storage.
#[derive(Clone, Debug)]
pub struct CGTable {
    pub dim: usize,
    pub cutoff: usize,
    blocks: std::collections::BTreeMap<(usize, usize, usize), CGBlock>,
}

impl CGTable {
    pub fn build(dim: usize, cutoff: usize) -> Self {
        let mut blocks = std::collections::BTreeMap::new();
        if dim == 3 {
            for ell1 in 0..=cutoff {
                for ell2 in 0..=cutoff {
                    for ell in triangle_range(ell1, ell2).filter(|&l| l <= cutoff) {
                        let b = cg_so3(ell1, ell2, ell).expect("triangle range is admissible");
                        blocks.insert((ell1, ell2, ell), b);
                    }
                }
            }
        }
        CGTable { dim, cutoff, blocks }
    }

    pub fn get(&self, ell1: usize, ell2: usize, ell: usize) -> Option<&CGBlock> {
        self.blocks.get(&(ell1, ell2, ell))
    }
}

/// Largest deviation of (ρ₁⊗ρ₂)(g) C − C ρ(g) over `n` pseudo-random
/// rotations; zero for an exact intertwiner.
pub fn intertwining_residual(block: &CGBlock, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57_0001);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (a, b, g) = (
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let lhs = kron(
            &wigner_d(block.rho1.degree, a, b, g),
            &wigner_d(block.rho2.degree, a, b, g),
        )
        .dot(&block.matrix);
        let rhs = block.matrix.dot(&wigner_d(block.rho.degree, a, b, g));
        worst = worst.max(max_abs_diff(&lhs, &rhs));
    }
    worst
}
