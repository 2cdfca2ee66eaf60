//! Steerable filter bases and kernel assembly.
//!
//! A first-layer basis element attaches to every integer offset y the
//! d_ρ-vector
//!
//! ```text
//!     M_r^{(ρ)}(y) = r^{d-1}/(n_r^d n_a^{d-1}) · Σ_θ I(r·h/n_r · s(θ), y) Y^{(ρ)}(s(θ)) ω(θ),
//! ```
//!
//! the quadrature of the degree-ρ harmonic over the radius-r shell, pushed
//! onto the lattice through the interpolation kernel I. Higher layers reuse
//! the same radial shells and contract with Clebsch–Gordan blocks,
//!
//! ```text
//!     [M̃_r^{(ρ,ρ1,ρ2)}(y)]_{m,·} = 1/|F| · M_r^{(ρ2)}(y)ᵀ C̃_m^{(ρ,ρ1,ρ2)},
//! ```
//!
//! so one radial/angular table serves every input/output degree pair. The
//! Cartesian baseline replaces the interpolated shell quadrature with a
//! Gaussian ring profile evaluated at the offsets themselves,
//! exp(−(‖y‖−r·h/n_r)²/2τ_r²)·1_{y≠0}·Y^{(ρ)}(y/‖y‖), drops the 1/|F|
//! constant, and (in 2D) keeps the literal frequency difference k−k1 where
//! the grid bases may reduce it modulo n_a — both conventions of the prior
//! formulations it reproduces.
//!
//! Learnable weights enter only through [`assemble`]/[`assemble_higher`],
//! which sum w·M̃ into one dense kernel block K^{(ρ,ρ1)}(y) per degree pair,
//! with channels inlined so a convolution sees plain matrices.

use crate::cg::CGTable;
use crate::group::{irrep_dim, irrep_matrix, IrrepId, Rotation};
use crate::interp::{kernel_weight, InterpKernelSpec};
use crate::sphere::{angular_grid, harmonic, sphere_angles, sphere_point, GridScheme};
use crate::{C64, Error, Result};
use ndarray::linalg::kron;
use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How a basis places mass on the lattice: through an interpolation kernel
/// (the paper's construction) or through Gaussian rings at the offsets
/// (the Cartesian baseline it is compared against).
#[derive(Clone, Debug, PartialEq)]
pub enum FilterKind {
    Interpolating(InterpKernelSpec),
    /// One ring width τ per radial shell.
    Cartesian { taus: Vec<f64> },
}

/// The widths the baseline experiments use: τ = 0.6 everywhere except the
/// outermost ring, which narrows to 0.4.
pub fn default_tau_profile(n_r: usize) -> Vec<f64> {
    (1..=n_r).map(|r| if r == n_r { 0.4 } else { 0.6 }).collect()
}

/// First-layer basis: all M_r^{(ρ)} tables for degrees 0..=cutoff on a fixed
/// offset footprint.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBasisFirst {
    pub dim: usize,
    pub cutoff: usize,
    pub n_r: usize,
    pub n_a: usize,
    pub h: f64,
    pub kind: FilterKind,
    pub scheme: GridScheme,
    /// Integer offsets with ‖y‖∞ ≤ ⌈h⌉+1, lexicographically sorted.
    pub offsets: Vec<Vec<i64>>,
    /// tables[r−1][ρ] has shape (n_offsets, d_ρ).
    pub tables: Vec<Vec<Array2<C64>>>,
}

/// Higher-layer basis: M̃ blocks per admissible degree triple. The ρ2 slot
/// is signed because the Cartesian 2D convention keeps the literal
/// difference k−k1 (grid bases reduce it modulo n_a first).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBasisHigher {
    pub dim: usize,
    pub cutoff: usize,
    pub n_r: usize,
    pub n_a: usize,
    pub h: f64,
    pub kind: FilterKind,
    pub scheme: GridScheme,
    pub offsets: Vec<Vec<i64>>,
    /// (ρ, ρ1, ρ2) in lexicographic order.
    pub triples: Vec<(usize, usize, i64)>,
    /// tables[r−1][triple] has shape (n_offsets, d_ρ, d_ρ1).
    pub tables: Vec<Vec<Array3<C64>>>,
}

impl FilterBasisFirst {
    /// M_r^{(ρ)}(y) for the shell index r (1-based) and offset index.
    pub fn value(&self, r: usize, degree: usize, y_idx: usize) -> ArrayView1<'_, C64> {
        self.tables[r - 1][degree].row(y_idx)
    }

    pub fn offset_index(&self, y: &[i64]) -> Option<usize> {
        offset_index(self.dim, self.h, y)
    }

    /// Number of weight slots per shell (one per stored degree).
    pub fn slot_count(&self) -> usize {
        self.cutoff + 1
    }
}

impl FilterBasisHigher {
    pub fn block(&self, r: usize, triple_idx: usize, y_idx: usize) -> ArrayView2<'_, C64> {
        self.tables[r - 1][triple_idx].slice(s![y_idx, .., ..])
    }

    pub fn offset_index(&self, y: &[i64]) -> Option<usize> {
        offset_index(self.dim, self.h, y)
    }

    pub fn slot_count(&self) -> usize {
        self.triples.len()
    }
}

/// All offsets with ‖y‖∞ ≤ ⌈h⌉ + 1 in lexicographic order — the smallest
/// box on which any shell point r·h/n_r·s(θ) can place interpolation mass.
pub fn footprint_offsets(dim: usize, h: f64) -> Vec<Vec<i64>> {
    let reach = h.ceil() as i64 + 1;
    let side = (2 * reach + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut flat| {
            let mut y = vec![0i64; dim];
            for i in (0..dim).rev() {
                y[i] = (flat % side) as i64 - reach;
                flat /= side;
            }
            y
        })
        .collect()
}

fn offset_index(dim: usize, h: f64, y: &[i64]) -> Option<usize> {
    let reach = h.ceil() as i64 + 1;
    let side = (2 * reach + 1) as usize;
    let mut flat = 0usize;
    for i in 0..dim {
        if y[i].abs() > reach {
            return None;
        }
        flat = flat * side + (y[i] + reach) as usize;
    }
    Some(flat)
}

fn validate_geometry(dim: usize, n_r: usize, h: f64) -> Result<()> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "filter bases are implemented for d ∈ {{2, 3}}, got {dim}"
        )));
    }
    if n_r == 0 {
        return Err(Error::InvalidArgument("need at least one radial shell".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("filter radius h must be positive".into()));
    }
    Ok(())
}

/// Harmonic row for a possibly signed degree: d=2 frequencies are e^{ικθ}
/// for any integer κ; d≥3 degrees are nonnegative.
fn harmonic_row(dim: usize, degree: i64, theta: &[f64]) -> Vec<C64> {
    if dim == 2 {
        vec![C64::cis(degree as f64 * theta[0])]
    } else {
        debug_assert!(degree >= 0);
        harmonic(dim, degree as usize, theta)
    }
}

fn signed_irrep_dim(dim: usize, degree: i64) -> usize {
    if dim == 2 {
        1
    } else {
        irrep_dim(dim, degree as usize)
    }
}

/// Interpolated shell quadrature tables for an arbitrary degree list:
/// result[r−1][deg_idx] has shape (n_offsets, d_deg).
fn interp_first_tables(
    dim: usize,
    degrees: &[i64],
    n_r: usize,
    n_a: usize,
    h: f64,
    spec: &InterpKernelSpec,
    scheme: GridScheme,
    offsets: &[Vec<i64>],
) -> Result<Vec<Vec<Array2<C64>>>> {
    if spec.dim != dim {
        return Err(Error::InvalidArgument("interpolation kernel has the wrong dimension".into()));
    }
    let grid = angular_grid(dim, n_a, scheme)?;
    // Harmonic values per degree: (node, component).
    let harmonics: Vec<Array2<C64>> = degrees
        .iter()
        .map(|&deg| {
            let dd = signed_irrep_dim(dim, deg);
            let mut a = Array2::zeros((grid.nodes.len(), dd));
            for (i, theta) in grid.nodes.iter().enumerate() {
                let row = harmonic_row(dim, deg, theta);
                for (m, v) in row.into_iter().enumerate() {
                    a[[i, m]] = v;
                }
            }
            a
        })
        .collect();
    let tasks = n_r * degrees.len();
    let reach = h.ceil() as i64 + 1;
    let built = crate::par::map_indexed(tasks, |task| {
        let r = task / degrees.len() + 1;
        let deg_idx = task % degrees.len();
        let dd = harmonics[deg_idx].ncols();
        let fac = (r as f64).powi(dim as i32 - 1)
            / (n_r as f64).powi(dim as i32)
            / (n_a as f64).powi(dim as i32 - 1);
        let radius = r as f64 * h / n_r as f64;
        let mut table = Array2::<C64>::zeros((offsets.len(), dd));
        for (i, theta) in grid.nodes.iter().enumerate() {
            let p: Vec<f64> = sphere_point(dim, theta).iter().map(|v| v * radius).collect();
            let w = grid.weights[i] * fac;
            if w == 0.0 {
                continue;
            }
            // Lattice sites the kernel can reach from p.
            let lo: Vec<i64> = p.iter().map(|v| (v - 1.0).ceil() as i64).collect();
            let hi: Vec<i64> = p.iter().map(|v| (v + 1.0).floor() as i64).collect();
            let mut site = lo.clone();
            'sites: loop {
                let iw = kernel_weight(spec, &p, &site);
                if iw != 0.0 {
                    debug_assert!(site.iter().all(|&c| c.abs() <= reach));
                    if let Some(row) = offset_index(dim, h, &site) {
                        let scale = iw * w;
                        for m in 0..dd {
                            table[[row, m]] += harmonics[deg_idx][[i, m]] * scale;
                        }
                    }
                }
                for ax in (0..dim).rev() {
                    site[ax] += 1;
                    if site[ax] <= hi[ax] {
                        continue 'sites;
                    }
                    site[ax] = lo[ax];
                }
                break;
            }
        }
        table
    });
    let mut out: Vec<Vec<Array2<C64>>> = Vec::with_capacity(n_r);
    let mut it = built.into_iter();
    for _ in 0..n_r {
        out.push((0..degrees.len()).map(|_| it.next().unwrap()).collect());
    }
    Ok(out)
}

/// Gaussian-ring tables at the offsets themselves (no quadrature, no
/// interpolation): result[r−1][deg_idx] as above.
fn cartesian_first_tables(
    dim: usize,
    degrees: &[i64],
    n_r: usize,
    h: f64,
    taus: &[f64],
    offsets: &[Vec<i64>],
) -> Result<Vec<Vec<Array2<C64>>>> {
    if taus.len() != n_r {
        return Err(Error::ShapeMismatch(format!(
            "τ profile has {} entries for {n_r} shells",
            taus.len()
        )));
    }
    if taus.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("ring widths must be positive".into()));
    }
    let tasks = n_r * degrees.len();
    let built = crate::par::map_indexed(tasks, |task| {
        let r = task / degrees.len() + 1;
        let deg = degrees[task % degrees.len()];
        let dd = signed_irrep_dim(dim, deg);
        let radius = r as f64 * h / n_r as f64;
        let tau = taus[r - 1];
        let mut table = Array2::<C64>::zeros((offsets.len(), dd));
        for (row, y) in offsets.iter().enumerate() {
            if y.iter().all(|&c| c == 0) {
                continue; // the 1_{y≠0} indicator
            }
            let yf: Vec<f64> = y.iter().map(|&c| c as f64).collect();
            let norm = yf.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radial = (-(norm - radius).powi(2) / (2.0 * tau * tau)).exp();
            let ang = harmonic_row(dim, deg, &sphere_angles(&yf));
            for (m, v) in ang.into_iter().enumerate() {
                table[[row, m]] = v * radial;
            }
        }
        table
    });
    let mut out: Vec<Vec<Array2<C64>>> = Vec::with_capacity(n_r);
    let mut it = built.into_iter();
    for _ in 0..n_r {
        out.push((0..degrees.len()).map(|_| it.next().unwrap()).collect());
    }
    Ok(out)
}

/// First-layer interpolated basis for degrees 0..=cutoff. Degrees at or
/// above n_a alias on the azimuth grid (the 2D tables then repeat modulo
/// n_a); the construction stays well defined.
pub fn basis_first(
    dim: usize,
    cutoff: usize,
    n_r: usize,
    n_a: usize,
    h: f64,
    spec: &InterpKernelSpec,
    scheme: GridScheme,
) -> Result<FilterBasisFirst> {
    validate_geometry(dim, n_r, h)?;
    if n_a < 2 {
        return Err(Error::InvalidArgument("need n_a ≥ 2 angular nodes".into()));
    }
    let offsets = footprint_offsets(dim, h);
    let degrees: Vec<i64> = (0..=cutoff as i64).collect();
    let tables = interp_first_tables(dim, &degrees, n_r, n_a, h, spec, scheme, &offsets)?;
    Ok(FilterBasisFirst {
        dim,
        cutoff,
        n_r,
        n_a,
        h,
        kind: FilterKind::Interpolating(*spec),
        scheme,
        offsets,
        tables,
    })
}

/// First-layer Cartesian baseline on the same footprint (n_a is stored as 0:
/// no angular grid is involved).
pub fn basis_cartesian(
    dim: usize,
    cutoff: usize,
    n_r: usize,
    h: f64,
    taus: &[f64],
) -> Result<FilterBasisFirst> {
    validate_geometry(dim, n_r, h)?;
    let offsets = footprint_offsets(dim, h);
    let degrees: Vec<i64> = (0..=cutoff as i64).collect();
    let tables = cartesian_first_tables(dim, &degrees, n_r, h, taus, &offsets)?;
    Ok(FilterBasisFirst {
        dim,
        cutoff,
        n_r,
        n_a: 0,
        h,
        kind: FilterKind::Cartesian { taus: taus.to_vec() },
        scheme: GridScheme::Uniform,
        offsets,
        tables,
    })
}

/// Degree triples for a higher-layer basis, in lexicographic order. 2D grid
/// bases reduce k−k1 modulo n_a (an exact identity of the azimuth grid);
/// the Cartesian convention keeps the literal difference; 3D admits every
/// ρ2 ≤ cutoff passing the triangle rule.
pub(crate) fn higher_triples(dim: usize, cutoff: usize, n_a: usize, cartesian: bool) -> Vec<(usize, usize, i64)> {
    let mut triples = Vec::new();
    for rho in 0..=cutoff {
        for rho1 in 0..=cutoff {
            if dim == 2 {
                let diff = rho as i64 - rho1 as i64;
                let rho2 = if cartesian { diff } else { diff.rem_euclid(n_a as i64) };
                triples.push((rho, rho1, rho2));
            } else {
                for rho2 in 0..=cutoff {
                    if crate::cg::triangle_range(rho1, rho2).contains(&rho) {
                        triples.push((rho, rho1, rho2 as i64));
                    }
                }
            }
        }
    }
    triples
}

fn build_higher(
    dim: usize,
    cutoff: usize,
    n_r: usize,
    n_a: usize,
    h: f64,
    kind: FilterKind,
    scheme: GridScheme,
    cg: &CGTable,
    first: impl Fn(&[i64]) -> Result<Vec<Vec<Array2<C64>>>>,
) -> Result<FilterBasisHigher> {
    let cartesian = matches!(kind, FilterKind::Cartesian { .. });
    let triples = higher_triples(dim, cutoff, n_a, cartesian);
    if dim == 3 {
        for &(rho, rho1, rho2) in &triples {
            if cg.get(rho1, rho2 as usize, rho).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "CG table is missing the block for (ρ={rho}, ρ1={rho1}, ρ2={rho2})"
                )));
            }
        }
    }
    let mut degrees: Vec<i64> = triples.iter().map(|t| t.2).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let m_tables = first(&degrees)?;
    let offsets = footprint_offsets(dim, h);
    // The interpolation construction keeps the 1/|F| constant; the Cartesian
    // baseline drops it.
    let inv_f = if cartesian { 1.0 } else { 1.0 / (cutoff + 1) as f64 };
    let deg_pos = |deg: i64| degrees.binary_search(&deg).unwrap();
    let mut tables: Vec<Vec<Array3<C64>>> = Vec::with_capacity(n_r);
    for r in 1..=n_r {
        let per_triple = crate::par::map_indexed(triples.len(), |t| {
            let (rho, rho1, rho2) = triples[t];
            let d_rho = signed_irrep_dim(dim, rho as i64);
            let d_rho1 = signed_irrep_dim(dim, rho1 as i64);
            let m_table = &m_tables[r - 1][deg_pos(rho2)];
            let mut block = Array3::<C64>::zeros((offsets.len(), d_rho, d_rho1));
            if dim == 2 {
                for y in 0..offsets.len() {
                    block[[y, 0, 0]] = m_table[[y, 0]] * inv_f;
                }
            } else {
                let slices = cg.get(rho1, rho2 as usize, rho).unwrap().tilde_slices();
                for y in 0..offsets.len() {
                    for (m, tilde) in slices.iter().enumerate() {
                        for m1 in 0..d_rho1 {
                            let mut acc = C64::new(0.0, 0.0);
                            for i2 in 0..tilde.nrows() {
                                acc += m_table[[y, i2]] * tilde[[i2, m1]];
                            }
                            block[[y, m, m1]] = acc * inv_f;
                        }
                    }
                }
            }
            block
        });
        tables.push(per_triple);
    }
    Ok(FilterBasisHigher {
        dim,
        cutoff,
        n_r,
        n_a,
        h,
        kind,
        scheme,
        offsets,
        triples,
        tables,
    })
}

/// Higher-layer basis from interpolated shells.
#[allow(clippy::too_many_arguments)]
pub fn basis_higher(
    dim: usize,
    cutoff: usize,
    n_r: usize,
    n_a: usize,
    h: f64,
    spec: &InterpKernelSpec,
    scheme: GridScheme,
    cg: &CGTable,
) -> Result<FilterBasisHigher> {
    validate_geometry(dim, n_r, h)?;
    if n_a < 2 {
        return Err(Error::InvalidArgument("need n_a ≥ 2 angular nodes".into()));
    }
    let offsets = footprint_offsets(dim, h);
    build_higher(
        dim,
        cutoff,
        n_r,
        n_a,
        h,
        FilterKind::Interpolating(*spec),
        scheme,
        cg,
        |degs| interp_first_tables(dim, degs, n_r, n_a, h, spec, scheme, &offsets),
    )
}

/// Higher-layer Cartesian baseline.
pub fn basis_cartesian_higher(
    dim: usize,
    cutoff: usize,
    n_r: usize,
    h: f64,
    taus: &[f64],
    cg: &CGTable,
) -> Result<FilterBasisHigher> {
    validate_geometry(dim, n_r, h)?;
    let offsets = footprint_offsets(dim, h);
    build_higher(
        dim,
        cutoff,
        n_r,
        0,
        h,
        FilterKind::Cartesian { taus: taus.to_vec() },
        GridScheme::Uniform,
        cg,
        |degs| cartesian_first_tables(dim, degs, n_r, h, taus, &offsets),
    )
}

/// Learnable weights: one (out_channels × in_channels) complex matrix per
/// (shell, slot), where a slot is a degree (first layer) or a triple
/// (higher layer) in table order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    pub out_channels: usize,
    pub in_channels: usize,
    /// values[r−1][slot].
    pub values: Vec<Vec<Array2<C64>>>,
}

impl WeightSet {
    /// Standard complex Gaussian draws in a fixed order (shell, slot, out
    /// channel, in channel, re before im), so a seed pins the whole set.
    pub fn gaussian(
        n_r: usize,
        slots: usize,
        out_channels: usize,
        in_channels: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n_r)
            .map(|_| {
                (0..slots)
                    .map(|_| {
                        Array2::from_shape_fn((out_channels, in_channels), |_| {
                            C64::new(
                                rng.sample(rand_distr::StandardNormal),
                                rng.sample(rand_distr::StandardNormal),
                            )
                        })
                    })
                    .collect()
            })
            .collect();
        WeightSet { out_channels, in_channels, values }
    }

    fn check(&self, n_r: usize, slots: usize) -> Result<()> {
        let ok = self.values.len() == n_r
            && self.values.iter().all(|per_r| {
                per_r.len() == slots
                    && per_r
                        .iter()
                        .all(|w| w.dim() == (self.out_channels, self.in_channels))
            });
        if !ok {
            return Err(Error::ShapeMismatch(
                "weight set does not match the basis index set".into(),
            ));
        }
        if self
            .values
            .iter()
            .flatten()
            .flat_map(|w| w.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        Ok(())
    }
}

/// Weighted kernels ready for convolution: one dense matrix per
/// (output degree, input degree, offset), with channels inlined so entry
/// ((m, oc), (m1, ic)) sits at row m·out_channels+oc, column
/// m1·in_channels+ic — matching the (m, channel) layout of field values.
#[derive(Clone, Debug)]
pub struct AssembledKernels {
    pub dim: usize,
    pub h: f64,
    pub offsets: Vec<Vec<i64>>,
    pub out_degrees: Vec<usize>,
    pub in_degrees: Vec<usize>,
    pub out_channels: usize,
    pub in_channels: usize,
    /// blocks[ρ_idx][ρ1_idx][y_idx].
    pub blocks: Vec<Vec<Vec<Array2<C64>>>>,
}

impl AssembledKernels {
    pub fn offset_index(&self, y: &[i64]) -> Option<usize> {
        offset_index(self.dim, self.h, y)
    }
}

/// K^{(ρ)}(y) = Σ_r w_r^{(ρ)} M_r^{(ρ)}(y) per channel pair; the input side
/// is the trivial degree (a first layer consumes scalar fields).
pub fn assemble(basis: &FilterBasisFirst, weights: &WeightSet) -> Result<AssembledKernels> {
    weights.check(basis.n_r, basis.slot_count())?;
    let (oc, ic) = (weights.out_channels, weights.in_channels);
    let blocks = (0..=basis.cutoff)
        .map(|rho| {
            let d_rho = signed_irrep_dim(basis.dim, rho as i64);
            let per_y = (0..basis.offsets.len())
                .map(|y| {
                    let mut k = Array2::<C64>::zeros((d_rho * oc, ic));
                    for r in 1..=basis.n_r {
                        let w = &weights.values[r - 1][rho];
                        let m_val = basis.value(r, rho, y);
                        for m in 0..d_rho {
                            for o in 0..oc {
                                for i in 0..ic {
                                    k[[m * oc + o, i]] += w[[o, i]] * m_val[m];
                                }
                            }
                        }
                    }
                    k
                })
                .collect();
            vec![per_y]
        })
        .collect();
    Ok(AssembledKernels {
        dim: basis.dim,
        h: basis.h,
        offsets: basis.offsets.clone(),
        out_degrees: (0..=basis.cutoff).collect(),
        in_degrees: vec![0],
        out_channels: oc,
        in_channels: ic,
        blocks,
    })
}

/// K^{(ρ,ρ1)}(y) = Σ_r Σ_{ρ2} w_r^{(ρ,ρ1,ρ2)} M̃_r^{(ρ,ρ1,ρ2)}(y) per channel
/// pair, summed shell-outer/triple-inner for a reproducible accumulation
/// order.
pub fn assemble_higher(
    basis: &FilterBasisHigher,
    weights: &WeightSet,
) -> Result<AssembledKernels> {
    weights.check(basis.n_r, basis.slot_count())?;
    let (oc, ic) = (weights.out_channels, weights.in_channels);
    let degrees: Vec<usize> = (0..=basis.cutoff).collect();
    let blocks = degrees
        .iter()
        .map(|&rho| {
            degrees
                .iter()
                .map(|&rho1| {
                    let d_rho = signed_irrep_dim(basis.dim, rho as i64);
                    let d_rho1 = signed_irrep_dim(basis.dim, rho1 as i64);
                    let mut per_y =
                        vec![Array2::<C64>::zeros((d_rho * oc, d_rho1 * ic)); basis.offsets.len()];
                    for r in 1..=basis.n_r {
                        for (t, &(tr, tr1, _)) in basis.triples.iter().enumerate() {
                            if tr != rho || tr1 != rho1 {
                                continue;
                            }
                            let w = &weights.values[r - 1][t];
                            for (y, k) in per_y.iter_mut().enumerate() {
                                let m_block = basis.block(r, t, y);
                                for m in 0..d_rho {
                                    for m1 in 0..d_rho1 {
                                        let v = m_block[[m, m1]];
                                        for o in 0..oc {
                                            for i in 0..ic {
                                                k[[m * oc + o, m1 * ic + i]] += w[[o, i]] * v;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                    per_y
                })
                .collect()
        })
        .collect();
    Ok(AssembledKernels {
        dim: basis.dim,
        h: basis.h,
        offsets: basis.offsets.clone(),
        out_degrees: degrees.clone(),
        in_degrees: degrees,
        out_channels: oc,
        in_channels: ic,
        blocks,
    })
}

/// Worst-case discrete steerability defect of assembled kernels under one
/// rotation: max over (ρ, ρ1, y) of
///
/// ```text
///     ‖ Σ_z K^{(ρ,ρ1)}(z) I(R⁻¹z, y) − ρ(R) K^{(ρ,ρ1)}(y) ρ1(R)† ‖∞.
/// ```
///
/// Zero (up to roundoff) when the rotation maps the azimuth grid and the
/// lattice to themselves — for the square lattice, multiples of 90° with
/// 4 | n_a.
pub fn discrete_steerability_residual(
    kernels: &AssembledKernels,
    rot: &Rotation,
    spec: &InterpKernelSpec,
) -> f64 {
    let d = kernels.dim;
    let rinv = rot.inverse().matrix();
    let eye_oc = Array2::<C64>::eye(kernels.out_channels);
    let eye_ic = Array2::<C64>::eye(kernels.in_channels);
    let mut worst = 0.0f64;
    for (ri, &rho) in kernels.out_degrees.iter().enumerate() {
        let rep = irrep_matrix(IrrepId::new(d, rho), rot).expect("irrep of a valid rotation");
        let left = kron(&rep, &eye_oc);
        for (si, &rho1) in kernels.in_degrees.iter().enumerate() {
            let rep1 = irrep_matrix(IrrepId::new(d, rho1), rot).expect("irrep of a valid rotation");
            let right = kron(&rep1, &eye_ic).t().map(|z| z.conj());
            for (yi, y) in kernels.offsets.iter().enumerate() {
                let mut lhs =
                    Array2::<C64>::zeros(kernels.blocks[ri][si][yi].dim());
                for (zi, z) in kernels.offsets.iter().enumerate() {
                    let pz: Vec<f64> = (0..d)
                        .map(|a| (0..d).map(|b| rinv[[a, b]] * z[b] as f64).sum())
                        .collect();
                    let w = kernel_weight(spec, &pz, y);
                    if w != 0.0 {
                        lhs.zip_mut_with(&kernels.blocks[ri][si][zi], |l, &k| *l += k * w);
                    }
                }
                let rhs = left.dot(&kernels.blocks[ri][si][yi]).dot(&right);
                let defect = lhs
                    .iter()
                    .zip(rhs.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                worst = worst.max(defect);
            }
        }
    }
    worst
}
