//! Equivariant non-convolution layers: tensor-square (CG) nonlinearity,
//! norm normalization, window pooling, and the invariant flattening head.
//!
//! Each layer commutes with the group action on steerable fields,
//! (g·f)(x, ρ) = ρ(R)† f(Rx + t, ρ), restricted to motions that map the
//! lattice box onto itself. The nonlinearity is the only layer that mixes
//! degrees: it routes the per-site tensor square back into irreps,
//!
//! ```text
//!   2D:  f̂^out(x, k) = Σ_{k'} η_{k,k'} · f̂(x, k') · f̂(x, [k − k']_{n_a}),
//!   3D:  f̂^out(x, ℓ) = Σ_{ℓ1,ℓ2} η_{ℓ,ℓ1,ℓ2} · C_{ℓ1ℓ2}^{ℓ†} (f̂(x,ℓ1) ⊗ f̂(x,ℓ2)),
//! ```
//!
//! with products truncated to the input band (tensor squares reach degree
//! 2·cutoff; everything above the carried degrees is dropped). The 2D bracket
//! is reduction mod n_a — the same azimuthal aliasing the filter bases use —
//! so equivariance under the order-n cyclic subgroup survives the folding.

use crate::cg::CGTable;
use crate::conv::SteerableField;
use crate::{C64, Error, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Learnable coefficients of the CG nonlinearity. In 2D one complex scalar
/// per ordered pair (k, k'); in 3D one per triple (ℓ, ℓ1, ℓ2) satisfying the
/// triangle rule, all indices within the cutoff.
#[derive(Clone, Debug)]
pub struct EtaSet {
    pub dim: usize,
    pub cutoff: usize,
    /// 2D table, shape (cutoff+1, cutoff+1), row = output degree. Empty in 3D.
    pub pairs: Array2<C64>,
    /// 3D entries keyed (ℓ_out, ℓ1, ℓ2) in generation order. Empty in 2D.
    pub triples: Vec<((usize, usize, usize), C64)>,
}

impl EtaSet {
    /// Standard complex Gaussian coefficients, deterministic in the seed.
    pub fn gaussian(dim: usize, cutoff: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        };
        if dim == 2 {
            let n = cutoff + 1;
            let mut pairs = Array2::zeros((n, n));
            for k in 0..n {
                for kp in 0..n {
                    pairs[[k, kp]] = draw(&mut rng);
                }
            }
            EtaSet { dim, cutoff, pairs, triples: Vec::new() }
        } else {
            let mut triples = Vec::new();
            for l in 0..=cutoff {
                for l1 in 0..=cutoff {
                    for l2 in 0..=cutoff {
                        if crate::cg::triangle_range(l1, l2).contains(&l) {
                            triples.push(((l, l1, l2), draw(&mut rng)));
                        }
                    }
                }
            }
            EtaSet { dim, cutoff, pairs: Array2::zeros((0, 0)), triples }
        }
    }
}

/// Per-site tensor square routed through the CG structure. `n_a` is the
/// azimuthal grid order used for the 2D modular reduction [k − k']_{n_a}
/// (ignored in 3D, where the CG table supplies the selection rule). Triples
/// whose degrees are not carried by the field, or that fold above the band,
/// are truncated.
pub fn cg_nonlinearity(
    f: &SteerableField,
    eta: &EtaSet,
    n_a: usize,
    cg: &CGTable,
) -> Result<SteerableField> {
    if eta.dim != f.dim {
        return Err(Error::ShapeMismatch("η built for a different dimension".into()));
    }
    if f.irreps.iter().any(|(id, _)| id.degree > eta.cutoff) {
        return Err(Error::ShapeMismatch(
            "field carries degrees beyond the η cutoff".into(),
        ));
    }
    if f.dim == 2 && n_a == 0 {
        return Err(Error::InvalidArgument("modular fusion needs n_a ≥ 1".into()));
    }
    let mut out = SteerableField::zeros(f.dim, f.origin.clone(), f.shape.clone(), f.irreps.clone());
    let n_sites = f.site_count();
    for (ri, &(id, ch)) in f.irreps.iter().enumerate() {
        let d_out = id.irrep_dim();
        let rows = crate::par::map_indexed(n_sites, |s| {
            let mut acc = vec![C64::new(0.0, 0.0); d_out * ch];
            if f.dim == 2 {
                let k = id.degree;
                for kp in 0..=eta.cutoff {
                    let Some(i1) = f.irrep_index(kp) else { continue };
                    let folded =
                        (k as i64 - kp as i64).rem_euclid(n_a as i64) as usize;
                    let Some(i2) = f.irrep_index(folded) else { continue };
                    let w = eta.pairs[[k, kp]];
                    for c in 0..ch {
                        acc[c] += w * f.blocks[i1][[s, 0, c]] * f.blocks[i2][[s, 0, c]];
                    }
                }
            } else {
                for &((l, l1, l2), w) in &eta.triples {
                    if l != id.degree {
                        continue;
                    }
                    let (Some(i1), Some(i2)) = (f.irrep_index(l1), f.irrep_index(l2)) else {
                        continue;
                    };
                    let Some(block) = cg.get(l1, l2, l) else { continue };
                    let (d1, d2) = (f.blocks[i1].dim().1, f.blocks[i2].dim().1);
                    for c in 0..ch {
                        for m in 0..d_out {
                            let mut s_m = C64::new(0.0, 0.0);
                            for m1 in 0..d1 {
                                for m2 in 0..d2 {
                                    s_m += block.matrix[[m1 * d2 + m2, m]].conj()
                                        * f.blocks[i1][[s, m1, c]]
                                        * f.blocks[i2][[s, m2, c]];
                                }
                            }
                            acc[m * ch + c] += w * s_m;
                        }
                    }
                }
            }
            acc
        });
        for (s, row) in rows.into_iter().enumerate() {
            for m in 0..d_out {
                for c in 0..ch {
                    out.blocks[ri][[s, m, c]] = row[m * ch + c];
                }
            }
        }
    }
    Ok(out)
}

/// Per-site norm division: every coefficient at site x is divided by
/// √(Σ_ρ ‖f̂(x,ρ)‖₂²), the total taken over irreps, components and channels.
/// Sites whose total norm falls below ε = 1e-12 pass through unchanged, so
/// the map is defined (and idempotent) on zero regions.
pub fn normalize(f: &SteerableField) -> SteerableField {
    const EPS: f64 = 1e-12;
    let n_sites = f.site_count();
    let scales = crate::par::map_indexed(n_sites, |s| {
        let total: f64 = f
            .blocks
            .iter()
            .map(|b| {
                let (_, d, ch) = b.dim();
                let mut t = 0.0;
                for m in 0..d {
                    for c in 0..ch {
                        t += b[[s, m, c]].norm_sqr();
                    }
                }
                t
            })
            .sum();
        let norm = total.sqrt();
        if norm < EPS { 1.0 } else { 1.0 / norm }
    });
    let mut out = f.clone();
    for b in out.blocks.iter_mut() {
        let (n, d, ch) = b.dim();
        for s in 0..n {
            for m in 0..d {
                for c in 0..ch {
                    b[[s, m, c]] *= scales[s];
                }
            }
        }
    }
    out
}

/// Non-overlapping window means, anchored at the box corner. The window must
/// divide the shape on every axis; irrep and channel structure pass through.
pub fn avg_pool(f: &SteerableField, window: &[usize]) -> Result<SteerableField> {
    if window.len() != f.dim || window.iter().any(|&w| w == 0) {
        return Err(Error::InvalidArgument("window must give a positive factor per axis".into()));
    }
    for i in 0..f.dim {
        if f.shape[i] % window[i] != 0 {
            return Err(Error::InvalidArgument(format!(
                "window {} does not divide extent {} on axis {i}",
                window[i], f.shape[i]
            )));
        }
    }
    let out_shape: Vec<usize> = f.shape.iter().zip(window).map(|(&s, &w)| s / w).collect();
    // Relabel the pooled lattice with floor-divided coordinates so that
    // shifting the input by a window multiple shifts the output by one cell.
    let out_origin: Vec<i64> =
        f.origin.iter().zip(window).map(|(&o, &w)| o.div_euclid(w as i64)).collect();
    let mut out =
        SteerableField::zeros(f.dim, out_origin, out_shape.clone(), f.irreps.clone());
    let n_out = out.site_count();
    let volume: usize = window.iter().product();
    let inv = 1.0 / volume as f64;
    for (ri, &(id, ch)) in f.irreps.iter().enumerate() {
        let d = id.irrep_dim();
        let rows = crate::par::map_indexed(n_out, |flat| {
            // Decode the pooled cell into the corner of its input window.
            let mut rem = flat;
            let mut corner = vec![0usize; f.dim];
            for i in (0..f.dim).rev() {
                corner[i] = (rem % out_shape[i]) * window[i];
                rem /= out_shape[i];
            }
            let mut acc = vec![C64::new(0.0, 0.0); d * ch];
            for cell in 0..volume {
                let mut rem2 = cell;
                let mut offset = vec![0usize; f.dim];
                for i in (0..f.dim).rev() {
                    offset[i] = rem2 % window[i];
                    rem2 /= window[i];
                }
                let mut src = 0usize;
                for i in 0..f.dim {
                    src = src * f.shape[i] + corner[i] + offset[i];
                }
                for m in 0..d {
                    for c in 0..ch {
                        acc[m * ch + c] += f.blocks[ri][[src, m, c]];
                    }
                }
            }
            for a in acc.iter_mut() {
                *a *= inv;
            }
            acc
        });
        for (flat, row) in rows.into_iter().enumerate() {
            for m in 0..d {
                for c in 0..ch {
                    out.blocks[ri][[flat, m, c]] = row[m * ch + c];
                }
            }
        }
    }
    Ok(out)
}

/// Invariant flattening head: one real descriptor per channel,
/// √(Σ_ρ ‖mean over sites of f̂(·, ρ)‖₂²). Spatial averaging kills the
/// translation part; the 2-norm over components kills the residual unitary
/// irrep action, so the descriptor is unchanged by box-preserving motions.
pub fn flatten_invariant(f: &SteerableField) -> Vec<f64> {
    let channels = f.irreps.iter().map(|&(_, ch)| ch).max().unwrap_or(0);
    let n_sites = f.site_count();
    let inv = 1.0 / n_sites as f64;
    let mut totals = vec![0.0f64; channels];
    for b in &f.blocks {
        let (_, d, ch) = b.dim();
        for c in 0..ch {
            for m in 0..d {
                let mut mean = C64::new(0.0, 0.0);
                for s in 0..n_sites {
                    mean += b[[s, m, c]];
                }
                totals[c] += (mean * inv).norm_sqr();
            }
        }
    }
    totals.into_iter().map(f64::sqrt).collect()
}
