//! Interpolation kernels on Z^d: off-lattice evaluation, rigid-motion
//! resampling, and the loss-of-interpolation functional Δ(g).
//!
//! A kernel I : R^d × Z^d → R extends a lattice function to the continuum,
//! I[f](x) = Σ_y I(x, y) f(y). Both kernels here are separable with
//! footprint radius one: `nearest` puts unit weight on the closest site
//! (ties rounded half up, per axis), `linear` multiplies hat functions
//! max(0, 1 − |x_i − y_i|) across axes. How badly a rigid motion g
//! interacts with the lattice is measured by
//!
//! ```text
//!     Δ(g) = sup_x sup_y | I(g·x, y) − Σ_z I(x, z) I(g·z, y) |,
//! ```
//!
//! the worst-case disagreement between transporting a point directly and
//! transporting its interpolation stencil. Δ vanishes exactly for
//! lattice-preserving motions (integer shifts, axis-aligned quarter turns)
//! and bounds the resampling error for everything else: evaluating the
//! g-translate of f through the kernel deviates from the true translate by
//! at most Δ(g)·‖f‖₁.

use crate::group::RigidMotion;
use crate::{C64, Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Which interpolation rule a kernel applies along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpKind {
    Nearest,
    Linear,
}

/// A concrete kernel: the rule plus the ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpKernelSpec {
    pub kind: InterpKind,
    pub dim: usize,
}

impl InterpKernelSpec {
    pub fn nearest(dim: usize) -> Self {
        InterpKernelSpec { kind: InterpKind::Nearest, dim }
    }

    pub fn linear(dim: usize) -> Self {
        InterpKernelSpec { kind: InterpKind::Linear, dim }
    }

    /// Hölder exponent of x ↦ I(x, y): 0 for the discontinuous nearest rule,
    /// 1 for linear (with constant at most `dim` in the max norm).
    pub fn holder_alpha(&self) -> f64 {
        match self.kind {
            InterpKind::Nearest => 0.0,
            InterpKind::Linear => 1.0,
        }
    }

    /// Reach of the stencil: I(x, y) = 0 whenever ‖x − y‖∞ exceeds this.
    pub fn footprint_radius(&self) -> usize {
        1
    }
}

/// A finitely supported complex function on Z^d, stored row-major on the box
/// `[origin, origin + shape)` and implicitly zero outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGridField {
    pub dim: usize,
    pub origin: Vec<i64>,
    pub shape: Vec<usize>,
    pub values: Vec<C64>,
}

impl ScalarGridField {
    pub fn zeros(origin: Vec<i64>, shape: Vec<usize>) -> Self {
        assert_eq!(origin.len(), shape.len());
        assert!(shape.iter().all(|&s| s > 0), "field extents must be positive");
        let n = shape.iter().product();
        ScalarGridField { dim: origin.len(), origin, shape, values: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_values(origin: Vec<i64>, shape: Vec<usize>, values: Vec<C64>) -> Result<Self> {
        if origin.len() != shape.len() || shape.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument("field box is malformed".into()));
        }
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "box holds {n} sites but {} values were given",
                values.len()
            )));
        }
        Ok(ScalarGridField { dim: origin.len(), origin, shape, values })
    }

    pub fn site_count(&self) -> usize {
        self.values.len()
    }

    /// Flat row-major index of a lattice site, or `None` outside the box.
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

    /// Value at a lattice site; zero outside the stored box.
    pub fn get(&self, site: &[i64]) -> C64 {
        self.index_of(site).map_or(C64::new(0.0, 0.0), |i| self.values[i])
    }

    pub fn set(&mut self, site: &[i64], value: C64) {
        let i = self.index_of(site).expect("site outside the field box");
        self.values[i] = value;
    }

    /// Lattice coordinates of the flat index `flat` (row-major inverse).
    pub fn site_at(&self, mut flat: usize) -> Vec<i64> {
        let mut site = vec![0i64; self.dim];
        for i in (0..self.dim).rev() {
            site[i] = self.origin[i] + (flat % self.shape[i]) as i64;
            flat /= self.shape[i];
        }
        site
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum()
    }
}

/// Kernel value I(x, y) for one evaluation point and one lattice site.
pub fn kernel_weight(spec: &InterpKernelSpec, x: &[f64], y: &[i64]) -> f64 {
    debug_assert_eq!(x.len(), spec.dim);
    debug_assert_eq!(y.len(), spec.dim);
    match spec.kind {
        InterpKind::Nearest => {
            let hit = x
                .iter()
                .zip(y)
                .all(|(&xi, &yi)| (xi + 0.5).floor() as i64 == yi);
            if hit {
                1.0
            } else {
                0.0
            }
        }
        InterpKind::Linear => x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| (1.0 - (xi - yi as f64).abs()).max(0.0))
            .product(),
    }
}

/// Per-axis stencil of an evaluation point: the sites that can carry weight
/// along one axis, paired with their one-dimensional weights.
fn axis_stencil(kind: InterpKind, xi: f64) -> Vec<(i64, f64)> {
    match kind {
        InterpKind::Nearest => vec![((xi + 0.5).floor() as i64, 1.0)],
        InterpKind::Linear => {
            let base = xi.floor();
            let frac = xi - base;
            if frac == 0.0 {
                vec![(base as i64, 1.0)]
            } else {
                vec![(base as i64, 1.0 - frac), (base as i64 + 1, frac)]
            }
        }
    }
}

/// I[f](x) = Σ_y I(x, y) f(y), walking only the non-zero stencil.
pub fn interp_eval(field: &ScalarGridField, spec: &InterpKernelSpec, x: &[f64]) -> C64 {
    assert_eq!(x.len(), field.dim, "evaluation point has the wrong dimension");
    debug_assert_eq!(spec.dim, field.dim);
    let axes: Vec<Vec<(i64, f64)>> =
        x.iter().map(|&xi| axis_stencil(spec.kind, xi)).collect();
    let mut total = C64::new(0.0, 0.0);
    let mut pick = vec![0usize; field.dim];
    let mut site = vec![0i64; field.dim];
    'outer: loop {
        let mut w = 1.0;
        for i in 0..field.dim {
            let (s, wi) = axes[i][pick[i]];
            site[i] = s;
            w *= wi;
        }
        total += field.get(&site) * w;
        for i in (0..field.dim).rev() {
            pick[i] += 1;
            if pick[i] < axes[i].len() {
                continue 'outer;
            }
            pick[i] = 0;
        }
        break;
    }
    total
}

/// Snap coordinates that sit within a relative 1e-9 of an integer onto it,
/// so that motions which map the lattice to itself (integer shifts, quarter
/// turns) reproduce lattice values bit-for-bit despite the floating-point
/// rotation matrix.
fn snap_to_lattice(p: &mut [f64]) {
    for v in p.iter_mut() {
        let r = v.round();
        if (*v - r).abs() <= 1e-9 * (1.0 + v.abs()) {
            *v = r;
        }
    }
}

/// Resample the field onto a caller-chosen box: the result holds
/// g(x) = I[f](R·x + t) for every site x of that box. This realizes the
/// pullback [(t,R)^{-1}·f] — pass the inverse motion to push a field
/// forward.
pub fn resample_onto(
    field: &ScalarGridField,
    spec: &InterpKernelSpec,
    motion: &RigidMotion,
    origin: &[i64],
    shape: &[usize],
) -> ScalarGridField {
    assert_eq!(motion.dim, field.dim, "motion dimension mismatch");
    let mut out = ScalarGridField::zeros(origin.to_vec(), shape.to_vec());
    let rmat = motion.rotation_matrix();
    let d = field.dim;
    let sites: Vec<Vec<i64>> = (0..out.site_count()).map(|i| out.site_at(i)).collect();
    let values = crate::par::map_indexed(out.site_count(), |flat| {
        let site = &sites[flat];
        let mut p = vec![0.0f64; d];
        for (j, pj) in p.iter_mut().enumerate() {
            *pj = (0..d).map(|k| rmat[[j, k]] * site[k] as f64).sum::<f64>()
                + motion.translation[j];
        }
        snap_to_lattice(&mut p);
        interp_eval(field, spec, &p)
    });
    out.values = values;
    out
}

/// Resample under a rigid motion, choosing the box automatically: the
/// preimage of the (footprint-expanded) support is covered, then all-zero
/// boundary slabs are trimmed, so lattice-preserving motions return exactly
/// the permuted input box.
pub fn resample(
    field: &ScalarGridField,
    spec: &InterpKernelSpec,
    motion: &RigidMotion,
) -> ScalarGridField {
    let d = field.dim;
    let rmat = motion.rotation_matrix();
    let pad = spec.footprint_radius() as f64;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    // Corners of the expanded support box, pulled back through x = Rᵀ(c − t).
    for corner in 0..(1usize << d) {
        let c: Vec<f64> = (0..d)
            .map(|i| {
                if corner >> i & 1 == 0 {
                    self::corner_coord(field.origin[i], 0, pad)
                } else {
                    self::corner_coord(field.origin[i], field.shape[i] as i64 - 1, -pad)
                }
            })
            .collect();
        for j in 0..d {
            let x: f64 = (0..d)
                .map(|k| rmat[[k, j]] * (c[k] - motion.translation[k]))
                .sum();
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    let origin: Vec<i64> = lo.iter().map(|&v| v.floor() as i64).collect();
    let shape: Vec<usize> = hi
        .iter()
        .zip(&origin)
        .map(|(&v, &o)| (v.ceil() as i64 - o + 1).max(1) as usize)
        .collect();
    trim_zero_slabs(resample_onto(field, spec, motion, &origin, &shape))
}

fn corner_coord(origin: i64, offset: i64, pad: f64) -> f64 {
    (origin + offset) as f64 - pad
}

/// Shrink the box to the bounding box of non-zero values (a single site at
/// the original origin if the field vanishes identically).
fn trim_zero_slabs(field: ScalarGridField) -> ScalarGridField {
    let d = field.dim;
    let zero = C64::new(0.0, 0.0);
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    let mut any = false;
    for (flat, v) in field.values.iter().enumerate() {
        if *v != zero {
            any = true;
            let site = field.site_at(flat);
            for i in 0..d {
                lo[i] = lo[i].min(site[i]);
                hi[i] = hi[i].max(site[i]);
            }
        }
    }
    if !any {
        return ScalarGridField::zeros(field.origin.clone(), vec![1; d]);
    }
    let shape: Vec<usize> = (0..d).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
    if shape == field.shape {
        return field;
    }
    let mut out = ScalarGridField::zeros(lo, shape);
    for flat in 0..out.site_count() {
        let site = out.site_at(flat);
        out.values[flat] = field.get(&site);
    }
    out
}

/// Estimate Δ(g) = sup_{x,y} |I(g·x, y) − Σ_z I(x, z) I(g·z, y)| by sampling
/// `samples_per_axis` points per axis over the unit cell (translation
/// covariance reduces the sup over x to [0,1)^d) and enumerating the y that
/// the combined stencils can reach. The estimate is a sampled sup: it never
/// exceeds Δ(g) and is monotone in the refinement.
pub fn delta_refined(
    spec: &InterpKernelSpec,
    motion: &RigidMotion,
    box_radius: usize,
    samples_per_axis: usize,
) -> f64 {
    assert!(
        box_radius >= spec.footprint_radius(),
        "truncation box must cover the kernel footprint"
    );
    assert!(samples_per_axis > 0);
    let d = spec.dim;
    assert_eq!(motion.dim, d, "motion dimension mismatch");
    let rmat = motion.rotation_matrix();
    let affine = |x: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|j| {
                (0..d).map(|k| rmat[[j, k]] * x[k]).sum::<f64>() + motion.translation[j]
            })
            .collect()
    };
    // y can only matter within the combined reach of g·x and the g-images of
    // the stencil of x; everything farther contributes exact zeros.
    let reach = box_radius as i64 + (d as f64).sqrt().ceil() as i64;
    let total = samples_per_axis.pow(d as u32);
    let per_sample = crate::par::map_indexed(total, |mut flat| {
        let mut x = vec![0.0f64; d];
        for i in (0..d).rev() {
            x[i] = (flat % samples_per_axis) as f64 / samples_per_axis as f64;
            flat /= samples_per_axis;
        }
        let gx = affine(&x);
        // g-images of the stencil sites of x, with their weights.
        let axes: Vec<Vec<(i64, f64)>> =
            x.iter().map(|&xi| axis_stencil(spec.kind, xi)).collect();
        let mut stencil: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut pick = vec![0usize; d];
        'outer: loop {
            let mut z = vec![0.0f64; d];
            let mut w = 1.0;
            for i in 0..d {
                let (s, wi) = axes[i][pick[i]];
                z[i] = s as f64;
                w *= wi;
            }
            stencil.push((affine(&z), w));
            for i in (0..d).rev() {
                pick[i] += 1;
                if pick[i] < axes[i].len() {
                    continue 'outer;
                }
                pick[i] = 0;
            }
            break;
        }
        let center: Vec<i64> = gx.iter().map(|&v| v.round() as i64).collect();
        let mut worst = 0.0f64;
        let mut y = vec![0i64; d];
        let side = (2 * reach + 1) as usize;
        for mut idx in 0..side.pow(d as u32) {
            for i in (0..d).rev() {
                y[i] = center[i] - reach + (idx % side) as i64;
                idx /= side;
            }
            let direct = kernel_weight(spec, &gx, &y);
            let composed: f64 =
                stencil.iter().map(|(gz, w)| w * kernel_weight(spec, gz, &y)).sum();
            worst = worst.max((direct - composed).abs());
        }
        worst
    });
    per_sample.into_iter().fold(0.0, f64::max)
}

/// Δ(g) at the default refinement of 32 sample points per axis.
pub fn delta(spec: &InterpKernelSpec, motion: &RigidMotion, box_radius: usize) -> f64 {
    delta_refined(spec, motion, box_radius, 32)
}

/// Rotation part of a motion as a reusable matrix (convenience for callers
/// that mix lattice sites and continuum points).
pub fn motion_matrix(motion: &RigidMotion) -> Array2<f64> {
    motion.rotation_matrix()
}
