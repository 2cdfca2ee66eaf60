//! Steerable convolution on lattice fields.
//!
//! A steerable field carries, at every lattice site, one complex
//! d_ρ-vector per channel for each irrep ρ it transports. The first layer
//! lifts a scalar field into such a stack,
//!
//! ```text
//!     f̂^pre(x, ρ) = Σ_y K^{(ρ)}(y) f^in(x + y),
//! ```
//!
//! and higher layers mix degrees through the assembled CG kernels,
//!
//! ```text
//!     f̂^pre(x, ρ) = Σ_{ρ1} Σ_y K^{(ρ,ρ1)}(y) f^in(x + y, ρ1).
//! ```
//!
//! Both are cross-correlations (+y, not −y) and valid-only: the output box
//! shrinks by the kernel footprint so every sum sees real data, never
//! padding. Accumulation order is fixed (offsets lexicographic, then input
//! degree, then channel), so outputs are bit-identical regardless of the
//! parallel schedule.
//!
//! [`conv_oracle_first`] re-derives the first layer along the continuous
//! route — interpolate a spherical patch around every site, take a discrete
//! SHT per radial shell, contract with the weights' Fourier data and
//! Riemann-sum the shells. It must agree with [`conv_first`] up to the
//! documented constant 2π^{d-1}h^d/A(S^{d-1}) that the lattice construction
//! absorbs into the learnable weights.

use crate::filters::{AssembledKernels, WeightSet};
use crate::group::{irrep_dim, IrrepId};
use crate::interp::{interp_eval, InterpKernelSpec, ScalarGridField};
use crate::sphere::{angular_grid, sht_with, sphere_point, GridScheme, HarmonicTable};
use crate::{C64, Error, Result};
use ndarray::{Array3, ArrayView2};

/// Lattice field with one (d_ρ × channels) coefficient block per site and
/// irrep. Every field carries the degree-0 irrep (the constant
/// representation) — scalar data is the special case of only that block.
#[derive(Clone, Debug, PartialEq)]
pub struct SteerableField {
    pub dim: usize,
    pub origin: Vec<i64>,
    pub shape: Vec<usize>,
    /// Irreps present, each with its channel count.
    pub irreps: Vec<(IrrepId, usize)>,
    /// One array per irrep, shape (site, m, channel), sites row-major.
    pub blocks: Vec<Array3<C64>>,
}

impl SteerableField {
    pub fn zeros(dim: usize, origin: Vec<i64>, shape: Vec<usize>, irreps: Vec<(IrrepId, usize)>) -> Self {
        assert_eq!(origin.len(), dim);
        assert_eq!(shape.len(), dim);
        assert!(shape.iter().all(|&s| s > 0));
        let sites: usize = shape.iter().product();
        let blocks = irreps
            .iter()
            .map(|&(id, ch)| Array3::zeros((sites, id.irrep_dim(), ch)))
            .collect();
        SteerableField { dim, origin, shape, irreps, blocks }
    }

    /// Wrap a scalar field as the degree-0, single-channel case.
    pub fn from_scalar(f: &ScalarGridField) -> Self {
        let mut out = SteerableField::zeros(
            f.dim,
            f.origin.clone(),
            f.shape.clone(),
            vec![(IrrepId::new(f.dim, 0), 1)],
        );
        for (i, v) in f.values.iter().enumerate() {
            out.blocks[0][[i, 0, 0]] = *v;
        }
        out
    }

    pub fn site_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn site_at(&self, mut flat: usize) -> Vec<i64> {
        let mut site = vec![0i64; self.dim];
        for i in (0..self.dim).rev() {
            site[i] = self.origin[i] + (flat % self.shape[i]) as i64;
            flat /= self.shape[i];
        }
        site
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (i, &s) in site.iter().enumerate() {
            let rel = s - self.origin[i];
            if rel < 0 || rel as usize >= self.shape[i] {
                return None;
            }
            flat = flat * self.shape[i] + rel as usize;
        }
        Some(flat)
    }

    pub fn irrep_index(&self, degree: usize) -> Option<usize> {
        self.irreps.iter().position(|(id, _)| id.degree == degree)
    }

    /// Coefficient block at one site: (m, channel) view.
    pub fn site_block(&self, irrep_idx: usize, flat: usize) -> ArrayView2<'_, C64> {
        self.blocks[irrep_idx].slice(ndarray::s![flat, .., ..])
    }

    /// Σ over sites, irreps, m and channels of |value| — the ℓ1 mass that
    /// normalizes equivariance errors.
    pub fn l1_norm(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.iter()).map(|z| z.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn footprint_reach(kernels: &AssembledKernels) -> i64 {
    kernels.h.ceil() as i64 + 1
}

/// First-layer steerable convolution of a scalar field. The kernels must be
/// first-layer assemblies (trivial input degree, one input channel).
pub fn conv_first(f_in: &ScalarGridField, kernels: &AssembledKernels) -> Result<SteerableField> {
    if kernels.in_degrees != [0] || kernels.in_channels != 1 {
        return Err(Error::InvalidArgument(
            "first-layer convolution needs kernels assembled from a first-layer basis".into(),
        ));
    }
    conv_higher(&SteerableField::from_scalar(f_in), kernels)
}

/// Higher-layer steerable convolution. Every irrep of the input must have a
/// kernel column; the output carries the kernels' output degrees on the
/// valid (footprint-shrunk) box.
pub fn conv_higher(f_in: &SteerableField, kernels: &AssembledKernels) -> Result<SteerableField> {
    if f_in.dim != kernels.dim {
        return Err(Error::ShapeMismatch("field and kernels disagree on dimension".into()));
    }
    // Map each input irrep to its kernel column.
    let columns: Vec<usize> = f_in
        .irreps
        .iter()
        .map(|(id, ch)| {
            if *ch != kernels.in_channels {
                return Err(Error::ShapeMismatch(format!(
                    "field carries {ch} channels, kernels expect {}",
                    kernels.in_channels
                )));
            }
            kernels
                .in_degrees
                .iter()
                .position(|&d| d == id.degree)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "kernels have no input column for degree {}",
                        id.degree
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let reach = footprint_reach(kernels);
    let mut out_shape = Vec::with_capacity(f_in.dim);
    let mut out_origin = Vec::with_capacity(f_in.dim);
    for i in 0..f_in.dim {
        let extent = f_in.shape[i] as i64 - 2 * reach;
        if extent <= 0 {
            return Err(Error::InvalidArgument(format!(
                "input extent {} cannot host a footprint of reach {reach}",
                f_in.shape[i]
            )));
        }
        out_shape.push(extent as usize);
        out_origin.push(f_in.origin[i] + reach);
    }
    let oc = kernels.out_channels;
    let out_irreps: Vec<(IrrepId, usize)> = kernels
        .out_degrees
        .iter()
        .map(|&deg| (IrrepId::new(f_in.dim, deg), oc))
        .collect();
    let mut out = SteerableField::zeros(f_in.dim, out_origin, out_shape, out_irreps);
    let n_out = out.site_count();
    let out_sites: Vec<Vec<i64>> = (0..n_out).map(|i| out.site_at(i)).collect();
    for (ri, &rho) in kernels.out_degrees.iter().enumerate() {
        let d_rho = irrep_dim(f_in.dim, rho);
        let rows = crate::par::map_indexed(n_out, |flat| {
            let x = &out_sites[flat];
            let mut acc = vec![C64::new(0.0, 0.0); d_rho * oc];
            let mut site = vec![0i64; f_in.dim];
            for (yi, y) in kernels.offsets.iter().enumerate() {
                for (i, s) in site.iter_mut().enumerate() {
                    *s = x[i] + y[i];
                }
                let src = f_in.index_of(&site).expect("valid region stays inside the input");
                for (fi, &col) in columns.iter().enumerate() {
                    let k = &kernels.blocks[ri][col][yi];
                    let fb = &f_in.blocks[fi];
                    let (d1, ic) = (fb.dim().1, fb.dim().2);
                    for (row, a) in acc.iter_mut().enumerate() {
                        let mut s = C64::new(0.0, 0.0);
                        for m1 in 0..d1 {
                            for c in 0..ic {
                                s += k[[row, m1 * ic + c]] * fb[[src, m1, c]];
                            }
                        }
                        *a += s;
                    }
                }
            }
            acc
        });
        for (flat, row) in rows.into_iter().enumerate() {
            for m in 0..d_rho {
                for c in 0..oc {
                    out.blocks[ri][[flat, m, c]] = row[m * oc + c];
                }
            }
        }
    }
    Ok(out)
}

/// First layer along the continuous route: per output site, interpolate the
/// spherical patch f^patch_x(r, θ) = I[f](x + r·h/n_r·s(θ)), run a discrete
/// SHT on every shell, contract with the weights and Riemann-sum over r with
/// the physical measure (r·h/n_r)^{d-1}·(h/n_r). Guarded to desk-scale
/// instances — this path exists to check [`conv_first`], not to be fast.
#[allow(clippy::too_many_arguments)]
pub fn conv_oracle_first(
    f_in: &ScalarGridField,
    dim: usize,
    cutoff: usize,
    n_r: usize,
    n_a: usize,
    h: f64,
    spec: &InterpKernelSpec,
    weights: &WeightSet,
) -> Result<SteerableField> {
    if f_in.dim != dim || spec.dim != dim {
        return Err(Error::ShapeMismatch("dimension mismatch".into()));
    }
    if weights.in_channels != 1
        || weights.values.len() != n_r
        || weights.values.iter().any(|v| v.len() != cutoff + 1)
    {
        return Err(Error::ShapeMismatch("weights do not match (n_r, cutoff)".into()));
    }
    let grid = angular_grid(dim, n_a, GridScheme::Uniform)?;
    let reach = h.ceil() as i64 + 1;
    let mut out_shape = Vec::new();
    let mut out_origin = Vec::new();
    for i in 0..dim {
        let extent = f_in.shape[i] as i64 - 2 * reach;
        if extent <= 0 {
            return Err(Error::InvalidArgument("input smaller than the footprint".into()));
        }
        out_shape.push(extent as usize);
        out_origin.push(f_in.origin[i] + reach);
    }
    let n_out: usize = out_shape.iter().product();
    if n_out * n_r * grid.nodes.len() > 8_000_000 {
        return Err(Error::InvalidArgument(
            "oracle instance too large; this path is for desk-scale validation".into(),
        ));
    }
    let tables: Vec<HarmonicTable> =
        (0..=cutoff).map(|l| HarmonicTable::build(&grid, l)).collect();
    let oc = weights.out_channels;
    let out_irreps: Vec<(IrrepId, usize)> =
        (0..=cutoff).map(|deg| (IrrepId::new(dim, deg), oc)).collect();
    let mut out = SteerableField::zeros(dim, out_origin, out_shape, out_irreps);
    let out_sites: Vec<Vec<i64>> = (0..n_out).map(|i| out.site_at(i)).collect();
    let per_site = crate::par::map_indexed(n_out, |flat| {
        let x = &out_sites[flat];
        // coeffs[ρ][m] accumulated over shells.
        let mut acc: Vec<Vec<Vec<C64>>> =
            (0..=cutoff).map(|l| vec![vec![C64::new(0.0, 0.0); irrep_dim(dim, l)]; oc]).collect();
        let mut point = vec![0.0f64; dim];
        for r in 1..=n_r {
            let radius = r as f64 * h / n_r as f64;
            let samples: Vec<C64> = grid
                .nodes
                .iter()
                .map(|theta| {
                    let s = sphere_point(dim, theta);
                    for i in 0..dim {
                        point[i] = x[i] as f64 + radius * s[i];
                    }
                    interp_eval(f_in, spec, &point)
                })
                .collect();
            let coeffs = sht_with(&samples, &tables, &grid)
                .expect("grid and tables were built consistently");
            let measure = radius.powi(dim as i32 - 1) * h / n_r as f64;
            for (l, per_l) in coeffs.iter().enumerate() {
                for o in 0..oc {
                    let w = weights.values[r - 1][l][[o, 0]] * measure;
                    for (m, &c) in per_l.iter().enumerate() {
                        acc[l][o][m] += c * w;
                    }
                }
            }
        }
        acc
    });
    for (flat, acc) in per_site.into_iter().enumerate() {
        for l in 0..=cutoff {
            for (o, per_o) in acc[l].iter().enumerate() {
                for (m, &v) in per_o.iter().enumerate() {
                    out.blocks[l][[flat, m, o]] = v;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::CGTable;
    use crate::filters::{
        assemble, assemble_higher, basis_first, basis_higher, WeightSet,
    };
    use crate::group::{irrep_matrix, rot2, Rotation};
    use crate::interp::resample_onto;
    use crate::special::surface_area;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_scalar(origin: Vec<i64>, shape: Vec<usize>, seed: u64) -> ScalarGridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        let values = (0..n)
            .map(|_| {
                C64::new(
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                )
            })
            .collect();
        ScalarGridField::from_values(origin, shape, values).unwrap()
    }

    fn small_kernels(cutoff: usize, seed: u64) -> crate::filters::AssembledKernels {
        let spec = InterpKernelSpec::linear(2);
        let b = basis_first(2, cutoff, 1, 8, 1.0, &spec, GridScheme::Uniform).unwrap();
        let w = WeightSet::gaussian(1, b.slot_count(), 1, 1, seed);
        assemble(&b, &w).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let k = small_kernels(1, 1);
        let f = ScalarGridField::zeros(vec![0, 0], vec![7, 7]);
        let out = conv_first(&f, &k).unwrap();
        assert_eq!(out.shape, vec![3, 3]);
        assert_eq!(out.origin, vec![2, 2]);
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn too_small_inputs_are_rejected() {
        let k = small_kernels(0, 2);
        let f = ScalarGridField::zeros(vec![0, 0], vec![4, 4]);
        assert!(conv_first(&f, &k).is_err());
    }

    /// A delta input reads the kernel back in correlation geometry:
    /// out(x) = K(s0 − x).
    #[test]
    fn delta_input_reads_back_the_kernel() {
        let k = small_kernels(2, 3);
        let mut f = ScalarGridField::zeros(vec![0, 0], vec![9, 9]);
        let s0 = [4i64, 4];
        f.set(&s0, C64::new(1.0, 0.0));
        let out = conv_first(&f, &k).unwrap();
        for flat in 0..out.site_count() {
            let x = out.site_at(flat);
            let y = [s0[0] - x[0], s0[1] - x[1]];
            for (ri, _) in out.irreps.iter().enumerate() {
                let want = match k.offset_index(&y) {
                    Some(yi) => k.blocks[ri][0][yi][[0, 0]],
                    None => C64::new(0.0, 0.0),
                };
                assert_eq!(out.blocks[ri][[flat, 0, 0]], want);
            }
        }
    }

    #[test]
    fn convolution_is_linear() {
        let k = small_kernels(2, 4);
        let f = random_scalar(vec![0, 0], vec![8, 8], 10);
        let g = random_scalar(vec![0, 0], vec![8, 8], 11);
        let (a, b) = (C64::new(0.7, -1.1), C64::new(-0.3, 0.4));
        let mut combo = f.clone();
        for (i, v) in combo.values.iter_mut().enumerate() {
            *v = a * f.values[i] + b * g.values[i];
        }
        let out_combo = conv_first(&combo, &k).unwrap();
        let out_f = conv_first(&f, &k).unwrap();
        let out_g = conv_first(&g, &k).unwrap();
        for ri in 0..out_f.irreps.len() {
            for (i, v) in out_combo.blocks[ri].iter().enumerate() {
                let want = a * out_f.blocks[ri].as_slice().unwrap()[i]
                    + b * out_g.blocks[ri].as_slice().unwrap()[i];
                assert!((v - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn integer_shifts_commute_exactly() {
        let k = small_kernels(1, 5);
        let f = random_scalar(vec![0, 0], vec![7, 6], 12);
        for z in [[1i64, 0], [0, -2], [3, 1]] {
            let mut shifted = f.clone();
            // shift(f, z)(x) = f(x + z) ⇔ moving the box by −z.
            shifted.origin = vec![f.origin[0] - z[0], f.origin[1] - z[1]];
            let out = conv_first(&f, &k).unwrap();
            let out_shifted = conv_first(&shifted, &k).unwrap();
            assert_eq!(out_shifted.origin, vec![out.origin[0] - z[0], out.origin[1] - z[1]]);
            for ri in 0..out.irreps.len() {
                assert_eq!(out.blocks[ri], out_shifted.blocks[ri]);
            }
        }
    }

    #[test]
    fn higher_layer_with_cutoff_zero_matches_first_layer() {
        let spec = InterpKernelSpec::linear(2);
        let fb = basis_first(2, 0, 2, 8, 1.0, &spec, GridScheme::Uniform).unwrap();
        let cg = CGTable::build(2, 0);
        let hb = basis_higher(2, 0, 2, 8, 1.0, &spec, GridScheme::Uniform, &cg).unwrap();
        let w = WeightSet::gaussian(2, 1, 1, 1, 21);
        let kf = assemble(&fb, &w).unwrap();
        let kh = assemble_higher(&hb, &w).unwrap();
        let f = random_scalar(vec![0, 0], vec![8, 8], 22);
        let first = conv_first(&f, &kf).unwrap();
        let higher = conv_higher(&SteerableField::from_scalar(&f), &kh).unwrap();
        assert_eq!(first, higher);
    }

    /// Quarter-turn equivariance through a two-layer stack: rotating the
    /// input about the grid center transforms every output block by ρ(R)†
    /// at the rotated site.
    #[test]
    fn quarter_turn_equivariance_through_two_layers() {
        let spec = InterpKernelSpec::linear(2);
        let cutoff = 2usize;
        let fb = basis_first(2, cutoff, 1, 8, 1.0, &spec, GridScheme::Uniform).unwrap();
        let cg = CGTable::build(2, cutoff);
        let hb = basis_higher(2, cutoff, 1, 8, 1.0, &spec, GridScheme::Uniform, &cg).unwrap();
        let k1 = assemble(&fb, &WeightSet::gaussian(1, fb.slot_count(), 2, 1, 31)).unwrap();
        let k2 =
            assemble_higher(&hb, &WeightSet::gaussian(1, hb.slot_count(), 1, 2, 32)).unwrap();
        let n = 13usize;
        let f = random_scalar(vec![0, 0], vec![n, n], 33);

        let run = |field: &ScalarGridField| {
            conv_higher(&conv_first(field, &k1).unwrap(), &k2).unwrap()
        };
        let out = run(&f);

        let c = (n as f64 - 1.0) / 2.0;
        let r = rot2(FRAC_PI_2);
        let t: Vec<f64> = (0..2)
            .map(|i| c - (0..2).map(|j| r[[i, j]] * c).sum::<f64>())
            .collect();
        let motion =
            crate::group::RigidMotion::new(t.clone(), Rotation::Angle(FRAC_PI_2)).unwrap();
        let f_rot = resample_onto(&f, &spec, &motion, &f.origin, &f.shape);
        let out_rot = run(&f_rot);

        let mut worst = 0.0f64;
        for (ri, (id, ch)) in out.irreps.iter().enumerate() {
            let rep = irrep_matrix(*id, &Rotation::Angle(FRAC_PI_2)).unwrap();
            let rep_dag = rep.t().map(|z| z.conj());
            for flat in 0..out.site_count() {
                let x = out.site_at(flat);
                // Rx + t, exact for the quarter turn on this centered box.
                let rx: Vec<i64> = (0..2)
                    .map(|i| {
                        ((0..2).map(|j| r[[i, j]] * x[j] as f64).sum::<f64>() + t[i]).round()
                            as i64
                    })
                    .collect();
                let src = out.index_of(&rx).unwrap();
                for cch in 0..*ch {
                    for m in 0..id.irrep_dim() {
                        let mut want = C64::new(0.0, 0.0);
                        for mp in 0..id.irrep_dim() {
                            want += rep_dag[[m, mp]] * out.blocks[ri][[src, mp, cch]];
                        }
                        let got = out_rot.blocks[ri][[flat, m, cch]];
                        worst = worst.max((got - want).norm());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "equivariance defect {worst:.3e}");
    }

    #[test]
    fn oracle_matches_conv_first_up_to_the_documented_constant() {
        let spec = InterpKernelSpec::linear(2);
        let (cutoff, n_r, n_a, h) = (2usize, 2usize, 12usize, 1.0f64);
        let b = basis_first(2, cutoff, n_r, n_a, h, &spec, GridScheme::Uniform).unwrap();
        let w = WeightSet::gaussian(n_r, b.slot_count(), 2, 1, 41);
        let k = assemble(&b, &w).unwrap();
        let f = random_scalar(vec![0, 0], vec![8, 8], 42);
        let fast = conv_first(&f, &k).unwrap();
        let oracle = conv_oracle_first(&f, 2, cutoff, n_r, n_a, h, &spec, &w).unwrap();
        // oracle = 2π^{d-1} h^d / A · conv_first; in 2D the constant is h².
        let scale = 2.0 * PI.powi(1) * h * h / surface_area(2);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for ri in 0..oracle.irreps.len() {
            for (a, b) in oracle.blocks[ri].iter().zip(fast.blocks[ri].iter()) {
                num = num.max((a - b * scale).norm());
                den = den.max(a.norm());
            }
        }
        assert!(num / den < 1e-6, "relative deviation {:.3e}", num / den);
        // Zero input stays zero along the oracle path too.
        let zf = ScalarGridField::zeros(vec![0, 0], vec![8, 8]);
        let zo = conv_oracle_first(&zf, 2, cutoff, n_r, n_a, h, &spec, &w).unwrap();
        assert_eq!(zo.max_abs(), 0.0);
    }

    #[test]
    fn oracle_constant_case_is_exact() {
        // Constant input, cutoff 0: the patch transform is exactly the
        // quadrature mass, so fast and oracle agree to machine precision.
        let spec = InterpKernelSpec::linear(2);
        let (n_r, n_a, h) = (1usize, 8usize, 1.0f64);
        let b = basis_first(2, 0, n_r, n_a, h, &spec, GridScheme::Uniform).unwrap();
        let w = WeightSet::gaussian(n_r, 1, 1, 1, 43);
        let k = assemble(&b, &w).unwrap();
        let mut f = ScalarGridField::zeros(vec![0, 0], vec![7, 7]);
        for v in f.values.iter_mut() {
            *v = C64::new(1.5, -0.25);
        }
        let fast = conv_first(&f, &k).unwrap();
        let oracle = conv_oracle_first(&f, 2, 0, n_r, n_a, h, &spec, &w).unwrap();
        let scale = h * h; // 2π h²/A(S¹)
        for (a, b) in oracle.blocks[0].iter().zip(fast.blocks[0].iter()) {
            assert!((a - b * scale).norm() < 1e-10);
        }
        // Instance guard.
        let big = ScalarGridField::zeros(vec![0, 0], vec![2000, 2000]);
        assert!(conv_oracle_first(&big, 2, 0, n_r, 64, h, &spec, &w).is_err());
    }

    #[test]
    fn field_wrapping_and_indexing_round_trip() {
        let f = random_scalar(vec![-2, 3], vec![4, 5], 50);
        let sf = SteerableField::from_scalar(&f);
        assert_eq!(sf.irreps, vec![(IrrepId::new(2, 0), 1)]);
        for flat in 0..sf.site_count() {
            let site = sf.site_at(flat);
            assert_eq!(sf.index_of(&site), Some(flat));
            assert_eq!(sf.blocks[0][[flat, 0, 0]], f.values[flat]);
        }
        assert!(sf.irrep_index(0).is_some());
        assert!(sf.irrep_index(1).is_none());
        assert!((sf.l1_norm() - f.l1_norm()).abs() < 1e-12);
        let zeros = Array2::<C64>::zeros((2, 2));
        assert_eq!(zeros.iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    }
}
