//! Equivariance measurement harness: rotation scans of an invariant model,
//! resolution (rate) studies, and a self-contained verification suite.
//!
//! The measured quantity is always the same: an invariant descriptor
//! M(f) is computed for a random input and for that input resampled under
//! a rotation about the grid center, and the defect is
//!
//! ```text
//!     error = ‖M(g·f) − M(f)‖∞ / ‖f‖₁.
//! ```
//!
//! Exact equivariance holds only for motions that preserve the lattice
//! (quarter turns in the plane, quarter turns about z on the cube grid);
//! everything else picks up interpolation and quadrature error, which is
//! what the scan quantifies and the rate study tracks against the angular
//! resolution n_a.

use crate::cg::{CGBlock, CGTable};
use crate::conv::{conv_first, conv_higher};
use crate::filters::{
    assemble, assemble_higher, basis_cartesian, basis_cartesian_higher, basis_first,
    basis_higher, default_tau_profile, discrete_steerability_residual, AssembledKernels,
    WeightSet,
};
use crate::group::{
    irrep_matrix, random_rotation, se_inverse, IrrepId, RigidMotion, Rotation,
};
use crate::interp::{
    delta, delta_refined, interp_eval, resample_onto, InterpKernelSpec, ScalarGridField,
};
use crate::layers::{flatten_invariant, normalize};
use crate::sphere::{angular_grid, harmonic, isht, sht, sphere_angles, GridScheme};
use crate::{C64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

/// Filter family driving a scan: the two interpolation kernels, or the
/// Cartesian ring baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterFamily {
    Nearest,
    Linear,
    Cartesian,
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterFamily::Nearest => "nearest",
            FilterFamily::Linear => "linear",
            FilterFamily::Cartesian => "cartesian",
        })
    }
}

/// Rotation axis for 3D scans (2D rotations are always in the plane, which
/// the CSV labels as the z axis).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    Y,
    Z,
}

impl fmt::Display for ScanAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanAxis::Y => "y",
            ScanAxis::Z => "z",
        })
    }
}

fn default_quadrature() -> GridScheme {
    GridScheme::Uniform
}
fn default_axis() -> ScanAxis {
    ScanAxis::Z
}
fn default_seed_count() -> usize {
    1
}

/// Everything a scan needs, mirrored 1:1 by the JSON config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub dim: usize,
    pub cutoff: usize,
    pub n_r: usize,
    pub n_a: usize,
    pub h: f64,
    pub interp: FilterFamily,
    #[serde(default = "default_quadrature")]
    pub quadrature: GridScheme,
    pub shape: Vec<usize>,
    pub angle_count: usize,
    #[serde(default = "default_axis")]
    pub axis: ScanAxis,
    pub seed: u64,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default)]
    pub output: Option<String>,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidArgument("scans cover d = 2 and d = 3".into()));
        }
        if self.shape.len() != self.dim {
            return Err(Error::ShapeMismatch("shape arity must equal dim".into()));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidArgument("h must be positive".into()));
        }
        let footprint = 2 * (self.h.ceil() as usize + 1) + 1;
        if self.shape.iter().any(|&s| s < 2 * footprint) {
            return Err(Error::InvalidArgument(format!(
                "every extent must be at least twice the footprint side {footprint}"
            )));
        }
        if self.angle_count == 0 || self.seed_count == 0 {
            return Err(Error::InvalidArgument(
                "angle_count and seed_count must be at least 1".into(),
            ));
        }
        if self.n_r == 0 || self.n_a == 0 {
            return Err(Error::InvalidArgument("n_r and n_a must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScanConfig = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One scan measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    /// Rotation angle in radians.
    pub angle: f64,
    /// The same angle in degrees, exact on the configured grid.
    pub angle_deg: f64,
    pub axis: ScanAxis,
    pub filter: FilterFamily,
    pub seed: u64,
    pub error: f64,
}

/// One rate-study measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub n_a: usize,
    pub filter: FilterFamily,
    pub seed: u64,
    pub error: f64,
}

/// Channel width of the scan model; small keeps scans fast, and the error
/// statistics do not depend on it.
const MODEL_CHANNELS: usize = 2;
/// Salt mixing the model seed into the input draw (so weights and input are
/// independent streams of one seed).
const INPUT_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Salt separating first- and second-layer weight draws.
const SECOND_LAYER_SALT: u64 = 0x5D8F_21C3_9A6B_E407;

/// The Figure-error pipeline: conv_first → normalize → conv_higher →
/// flatten_invariant, with all weights drawn complex standard Gaussian
/// from the seed.
pub struct Model {
    pub family: FilterFamily,
    k1: AssembledKernels,
    k2: AssembledKernels,
}

/// Build the two-layer invariant model for one filter family. The weight
/// draws depend only on the seed (both families have identical slot
/// layouts), so interpolating and Cartesian models of the same seed use the
/// same coefficients — the comparison isolates the basis.
pub fn build_model(cfg: &ScanConfig, family: FilterFamily, seed: u64) -> Result<Model> {
    cfg.validate()?;
    let cg = CGTable::build(cfg.dim, cfg.cutoff);
    let (b1, b2) = match family {
        FilterFamily::Cartesian => {
            let taus = default_tau_profile(cfg.n_r);
            (
                basis_cartesian(cfg.dim, cfg.cutoff, cfg.n_r, cfg.h, &taus)?,
                basis_cartesian_higher(cfg.dim, cfg.cutoff, cfg.n_r, cfg.h, &taus, &cg)?,
            )
        }
        _ => {
            let spec = match family {
                FilterFamily::Nearest => InterpKernelSpec::nearest(cfg.dim),
                _ => InterpKernelSpec::linear(cfg.dim),
            };
            (
                basis_first(cfg.dim, cfg.cutoff, cfg.n_r, cfg.n_a, cfg.h, &spec, cfg.quadrature)?,
                basis_higher(
                    cfg.dim,
                    cfg.cutoff,
                    cfg.n_r,
                    cfg.n_a,
                    cfg.h,
                    &spec,
                    cfg.quadrature,
                    &cg,
                )?,
            )
        }
    };
    let w1 = WeightSet::gaussian(cfg.n_r, b1.slot_count(), MODEL_CHANNELS, 1, seed);
    let w2 = WeightSet::gaussian(
        cfg.n_r,
        b2.slot_count(),
        MODEL_CHANNELS,
        MODEL_CHANNELS,
        seed ^ SECOND_LAYER_SALT,
    );
    Ok(Model { family, k1: assemble(&b1, &w1)?, k2: assemble_higher(&b2, &w2)? })
}

impl Model {
    /// Invariant descriptor of a scalar input, one real per channel.
    pub fn descriptor(&self, f: &ScalarGridField) -> Result<Vec<f64>> {
        let x = conv_first(f, &self.k1)?;
        let x = normalize(&x);
        let x = conv_higher(&x, &self.k2)?;
        Ok(flatten_invariant(&x))
    }
}

/// Real standard-Gaussian input field on a zero-origin box.
pub fn gaussian_input(shape: &[usize], seed: u64) -> ScalarGridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let values =
        (0..n).map(|_| C64::new(rng.sample(rand_distr::StandardNormal), 0.0)).collect();
    ScalarGridField::from_values(vec![0; shape.len()], shape.to_vec(), values)
        .expect("shape was validated")
}

/// Rotation by `angle` about the scan axis (2D ignores the axis — the plane
/// rotation is the z rotation).
pub fn axis_rotation(dim: usize, axis: ScanAxis, angle: f64) -> Rotation {
    if dim == 2 {
        Rotation::Angle(angle)
    } else {
        match axis {
            ScanAxis::Z => Rotation::Euler { alpha: angle, beta: 0.0, gamma: 0.0 },
            ScanAxis::Y => Rotation::Euler { alpha: 0.0, beta: angle, gamma: 0.0 },
        }
    }
}

/// ‖M(g·f) − M(f)‖∞ / ‖f‖₁ for the rotation about the field center. The
/// input is always resampled with the linear kernel, whatever basis the
/// model uses — the resampling models the physical rotation of the data and
/// must not vary between the compared families.
pub fn equivariance_error(model: &Model, f: &ScalarGridField, rotation: &Rotation) -> Result<f64> {
    let l1 = f.l1_norm();
    if l1 <= 0.0 {
        return Err(Error::InvalidArgument("zero-norm input has no relative error".into()));
    }
    let spec = InterpKernelSpec::linear(f.dim);
    let r = rotation.matrix();
    let c: Vec<f64> = f.shape.iter().map(|&n| (n as f64 - 1.0) / 2.0).collect();
    let t: Vec<f64> = (0..f.dim)
        .map(|i| c[i] - (0..f.dim).map(|j| r[[i, j]] * c[j]).sum::<f64>())
        .collect();
    let motion = RigidMotion::new(t, rotation.clone())?;
    let rotated = resample_onto(f, &spec, &motion, &f.origin, &f.shape);
    let base = model.descriptor(f)?;
    let moved = model.descriptor(&rotated)?;
    let worst = base
        .iter()
        .zip(&moved)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(worst / l1)
}

/// Full rotation scan: for every seed, every angle on the uniform grid of
/// `angle_count` steps over [0°, 360°), every axis (z in 2D; y and z in 3D),
/// and both the configured family and the Cartesian baseline (unless the
/// configured family *is* Cartesian). Rows are ordered
/// (seed, angle, axis, family); angles parallelize, the order does not.
pub fn scan(cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let families = if cfg.interp == FilterFamily::Cartesian {
        vec![FilterFamily::Cartesian]
    } else {
        vec![cfg.interp, FilterFamily::Cartesian]
    };
    let axes: Vec<ScanAxis> =
        if cfg.dim == 3 { vec![ScanAxis::Y, ScanAxis::Z] } else { vec![ScanAxis::Z] };
    let step_deg = 360.0 / cfg.angle_count as f64;
    let mut rows = Vec::new();
    for s in 0..cfg.seed_count {
        let seed = cfg.seed.wrapping_add(s as u64);
        let input = gaussian_input(&cfg.shape, seed ^ INPUT_SALT);
        // errors[family][axis * angle_count + k]
        let mut errors = Vec::with_capacity(families.len());
        for &family in &families {
            let model = build_model(cfg, family, seed)?;
            let per = crate::par::map_indexed(axes.len() * cfg.angle_count, |idx| {
                let axis = axes[idx / cfg.angle_count];
                let k = idx % cfg.angle_count;
                let angle = (k as f64 * step_deg).to_radians();
                let rot = axis_rotation(cfg.dim, axis, angle);
                equivariance_error(&model, &input, &rot)
            });
            errors.push(per.into_iter().collect::<Result<Vec<f64>>>()?);
        }
        for k in 0..cfg.angle_count {
            let angle_deg = k as f64 * step_deg;
            for (ai, &axis) in axes.iter().enumerate() {
                for (fi, &filter) in families.iter().enumerate() {
                    rows.push(ScanRow {
                        angle: angle_deg.to_radians(),
                        angle_deg,
                        axis,
                        filter,
                        seed,
                        error: errors[fi][ai * cfg.angle_count + k],
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// CSV with columns `angle_deg,axis,filter,seed,error`; floats use Rust's
/// shortest-roundtrip formatting, so identical rows give identical bytes.
pub fn write_scan_csv(rows: &[ScanRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scan_csv(rows))?;
    Ok(())
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("angle_deg,axis,filter,seed,error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.angle_deg, r.axis, r.filter, r.seed, r.error
        ));
    }
    out
}

/// Resolution sweep: the equivariance defect of a single first-layer
/// convolution at a fixed 30° rotation (about cfg.axis in 3D), measured per
/// requested n_a for both interpolation kernels. The Cartesian family has
/// no n_a to sweep, so it does not appear here.
///
/// The defect is measured field-to-field: the input is pulled back through
/// the rotation, convolved, and the result pushed forward again (both
/// resamples use the family's own kernel), then compared with the directly
/// convolved output. A flattening head would average most of the defect
/// away; the raw field keeps the angular-quadrature component visible, so
/// the sweep actually probes the resolution dependence.
pub fn rate_study(cfg: &ScanConfig, n_as: &[usize]) -> Result<Vec<RateRow>> {
    cfg.validate()?;
    if n_as.is_empty() {
        return Err(Error::InvalidArgument("rate study needs at least one n_a".into()));
    }
    let rot = axis_rotation(cfg.dim, cfg.axis, PI / 6.0);
    let mut rows = Vec::new();
    for family in [FilterFamily::Nearest, FilterFamily::Linear] {
        let spec = match family {
            FilterFamily::Nearest => InterpKernelSpec::nearest(cfg.dim),
            _ => InterpKernelSpec::linear(cfg.dim),
        };
        for &n_a in n_as {
            let basis =
                basis_first(cfg.dim, cfg.cutoff, cfg.n_r, n_a, cfg.h, &spec, cfg.quadrature)?;
            for s in 0..cfg.seed_count {
                let seed = cfg.seed.wrapping_add(s as u64);
                let weights = WeightSet::gaussian(cfg.n_r, basis.slot_count(), 1, 1, seed);
                let kernels = assemble(&basis, &weights)?;
                let input = gaussian_input(&cfg.shape, seed ^ INPUT_SALT);
                let error = single_layer_field_error(&input, &kernels, &spec, &rot)?;
                rows.push(RateRow { n_a, filter: family, seed, error });
            }
        }
    }
    Ok(rows)
}

/// ‖g·[K ⋆ g⁻¹·f] − K ⋆ f‖∞ / ‖f‖₁ for the centered rotation g. The input
/// pullback g⁻¹·f and the output pushforward both interpolate with `spec`;
/// the pushforward additionally rotates components by the irrep matrices.
/// Output sites whose pulled-back stencil leaves the output box carry
/// boundary artifacts rather than equivariance defect, so they are cropped
/// from the comparison.
fn single_layer_field_error(
    input: &ScalarGridField,
    kernels: &AssembledKernels,
    spec: &InterpKernelSpec,
    rot: &Rotation,
) -> Result<f64> {
    let dim = input.dim;
    let r = rot.matrix();
    let c: Vec<f64> = input.shape.iter().map(|&n| (n as f64 - 1.0) / 2.0).collect();
    let t: Vec<f64> = (0..dim)
        .map(|i| c[i] - (0..dim).map(|j| r[[i, j]] * c[j]).sum::<f64>())
        .collect();
    let motion = RigidMotion::new(t, rot.clone())?;
    let back = se_inverse(&motion);
    let pulled = resample_onto(input, spec, &motion, &input.origin, &input.shape);
    let out_ref = conv_first(input, kernels)?;
    let out_rot = conv_first(&pulled, kernels)?;

    let margin = spec.footprint_radius() as f64;
    let lo: Vec<f64> = out_rot.origin.iter().map(|&o| o as f64 + margin).collect();
    let hi: Vec<f64> = (0..dim)
        .map(|i| (out_rot.origin[i] + out_rot.shape[i] as i64 - 1) as f64 - margin)
        .collect();
    let mut worst = 0.0f64;
    let mut compared = false;
    for (idx, &(id, channels)) in out_ref.irreps.iter().enumerate() {
        let d_rho = id.irrep_dim();
        let rho = irrep_matrix(id, rot)?;
        let comps: Vec<ScalarGridField> = (0..d_rho * channels)
            .map(|mc| {
                let mut sf =
                    ScalarGridField::zeros(out_rot.origin.clone(), out_rot.shape.clone());
                for s in 0..out_rot.site_count() {
                    sf.values[s] = out_rot.blocks[idx][[s, mc / channels, mc % channels]];
                }
                sf
            })
            .collect();
        for s in 0..out_ref.site_count() {
            let site = out_ref.site_at(s);
            let xf: Vec<f64> = site.iter().map(|&v| v as f64).collect();
            let p = back.apply(&xf);
            if (0..dim).any(|i| p[i] < lo[i] || p[i] > hi[i]) {
                continue;
            }
            compared = true;
            for ch in 0..channels {
                let vals: Vec<C64> = (0..d_rho)
                    .map(|m| interp_eval(&comps[m * channels + ch], spec, &p))
                    .collect();
                for m in 0..d_rho {
                    let pushed: C64 = (0..d_rho).map(|m1| rho[[m, m1]] * vals[m1]).sum();
                    worst = worst.max((pushed - out_ref.blocks[idx][[s, m, ch]]).norm());
                }
            }
        }
    }
    if !compared {
        return Err(Error::InvalidArgument(
            "field too small: no output site survives the rotated-stencil crop".into(),
        ));
    }
    let l1 = input.l1_norm();
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("zero-norm input".into()));
    }
    Ok(worst / l1)
}

pub fn rate_csv(rows: &[RateRow]) -> String {
    let mut out = String::from("n_a,filter,seed,error\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n_a, r.filter, r.seed, r.error));
    }
    out
}

pub fn write_rate_csv(rows: &[RateRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, rate_csv(rows))?;
    Ok(())
}

/// Least-squares slope of ln(y) against ln(x). Points with y = 0 are
/// clamped to 1e-300 (they only arise in exact-equivariance corner cases).
pub fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Worst ratio of each value to the median of its ±3 neighborhood — a smoke
/// detector for resampling spikes in an angle scan. Near-zero dips (exact
/// lattice angles) do not trip it because they only lower the numerator.
pub fn worst_spike_ratio(errors: &[f64]) -> f64 {
    let n = errors.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut window: Vec<f64> = (1..=3)
            .flat_map(|d| [errors[(i + d) % n], errors[(i + n - d) % n]])
            .collect();
        window.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (window[2] + window[3]);
        worst = worst.max(errors[i] / median.max(1e-12));
    }
    worst
}

// ---------------------------------------------------------------------------
// verification suites

/// Named groups of built-in consistency checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifySuite {
    All,
    Cg,
    Sht,
    Steer,
    Delta,
    Oracle,
}

impl std::str::FromStr for VerifySuite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => VerifySuite::All,
            "cg" => VerifySuite::Cg,
            "sht" => VerifySuite::Sht,
            "steer" => VerifySuite::Steer,
            "delta" => VerifySuite::Delta,
            "oracle" => VerifySuite::Oracle,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite '{other}' (expected all|cg|sht|steer|delta|oracle)"
                )))
            }
        })
    }
}

/// Result of one check. For ordinary checks `passed` means
/// residual ≤ tolerance; negative controls invert this (the name says so)
/// because they pass exactly when the detector fires.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn within(name: &'static str, residual: f64, tolerance: f64) -> Self {
        CheckResult { name, residual, tolerance, passed: residual <= tolerance }
    }
    fn exceeds(name: &'static str, residual: f64, tolerance: f64) -> Self {
        CheckResult { name, residual, tolerance, passed: residual > tolerance }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<55} residual {:>12.3e}  tolerance {:>9.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )?;
        }
        writeln!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Run the named suite (or all of them) and collect per-check residuals.
pub fn verify(suite: VerifySuite) -> VerifyReport {
    let mut checks = Vec::new();
    if matches!(suite, VerifySuite::All | VerifySuite::Cg) {
        checks.extend(cg_checks());
    }
    if matches!(suite, VerifySuite::All | VerifySuite::Sht) {
        checks.extend(sht_checks());
    }
    if matches!(suite, VerifySuite::All | VerifySuite::Steer) {
        checks.extend(steer_checks());
    }
    if matches!(suite, VerifySuite::All | VerifySuite::Delta) {
        checks.extend(delta_checks());
    }
    if matches!(suite, VerifySuite::All | VerifySuite::Oracle) {
        checks.extend(oracle_checks());
    }
    VerifyReport { checks }
}

fn cg_checks() -> Vec<CheckResult> {
    let table = CGTable::build(3, 2);
    let mut ortho: f64 = 0.0;
    let mut twine: f64 = 0.0;
    let mut sample: Option<&CGBlock> = None;
    for l1 in 0..=2usize {
        for l2 in 0..=2usize {
            for l in crate::cg::triangle_range(l1, l2) {
                if l > 2 {
                    continue;
                }
                let block = table.get(l1, l2, l).expect("table covers its cutoff");
                let c = &block.matrix;
                let gram = c.t().map(|z| z.conj()).dot(c);
                for i in 0..gram.nrows() {
                    for j in 0..gram.ncols() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        ortho = ortho.max((gram[[i, j]] - C64::new(want, 0.0)).norm());
                    }
                }
                twine = twine.max(crate::cg::intertwining_residual(block, 20));
                if (l1, l2, l) == (1, 1, 1) {
                    sample = Some(block);
                }
            }
        }
    }
    // Negative control: damage one coupling entry; the intertwining
    // detector must notice.
    let block = sample.expect("(1,1,1) is inside the table");
    let mut corrupt = block.clone();
    corrupt.matrix[[1, 0]] += C64::new(0.3, 0.0);
    let fired = crate::cg::intertwining_residual(&corrupt, 10);
    vec![
        CheckResult::within("cg column orthonormality (d=3, degrees ≤ 2)", ortho, 1e-10),
        CheckResult::within("cg intertwining over 20 random rotations", twine, 1e-9),
        CheckResult::exceeds("cg negative control: corrupted block is detected", fired, 1e-3),
    ]
}

fn sht_checks() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5147);
    // Driscoll–Healy exactness: synthesize from random coefficients, read
    // them back on the n_a = 10 grid.
    let grid = angular_grid(3, 10, GridScheme::DriscollHealy).expect("even n_a");
    let coeffs: Vec<Vec<C64>> = (0..=4usize)
        .map(|l| {
            (0..2 * l + 1)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let samples = isht(&coeffs, &grid);
    let back = sht(&samples, 4, &grid).expect("band fits the grid");
    let mut roundtrip: f64 = 0.0;
    for (a, b) in coeffs.iter().zip(&back) {
        for (x, y) in a.iter().zip(b) {
            roundtrip = roundtrip.max((x - y).norm());
        }
    }
    // Harmonic steerability Y(Rs) = ρ(R) Y(s) at random rotations/points.
    let mut steer: f64 = 0.0;
    for d in [2usize, 3] {
        for _ in 0..20 {
            let rot = random_rotation(d, &mut rng);
            let rmat = rot.matrix();
            let theta: Vec<f64> = if d == 2 {
                vec![rng.random_range(0.0..TAU)]
            } else {
                vec![rng.random_range(0.1..PI - 0.1), rng.random_range(0.0..TAU)]
            };
            let s = crate::sphere::sphere_point(d, &theta);
            let rs: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| rmat[[i, j]] * s[j]).sum())
                .collect();
            for ell in 0..=3usize {
                let lhs = harmonic(d, ell, &sphere_angles(&rs));
                let rho = irrep_matrix(IrrepId::new(d, ell), &rot).expect("valid rotation");
                let y = harmonic(d, ell, &theta);
                for (u, l) in lhs.iter().enumerate() {
                    let r: C64 = (0..y.len()).map(|v| rho[[u, v]] * y[v]).sum();
                    steer = steer.max((l - r).norm());
                }
            }
        }
    }
    // Group-quadrature form of the spherical transform: the SO(3) average
    // must converge (second order) to the sphere-side expression.
    let band: Vec<Vec<C64>> = (0..=2usize)
        .map(|l| {
            (0..2 * l + 1)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let coarse = crate::sphere::prop_sht_check(&band, 2, 16);
    let fine = crate::sphere::prop_sht_check(&band, 2, 32);
    let mut out = vec![
        CheckResult::within("driscoll–healy roundtrip (degrees ≤ 4, n_a = 10)", roundtrip, 1e-8),
        CheckResult::within("harmonic steerability (d = 2, 3, degrees ≤ 3)", steer, 1e-10),
        CheckResult::within("so(3) quadrature matches the sphere transform", fine, 2e-3),
    ];
    out.push(CheckResult::exceeds(
        "so(3) quadrature error shrinks when n doubles",
        coarse / fine.max(1e-300),
        1.0,
    ));
    out
}

fn steer_checks() -> Vec<CheckResult> {
    let spec2 = InterpKernelSpec::linear(2);
    let b1 = basis_first(2, 2, 2, 8, 2.0, &spec2, GridScheme::Uniform).expect("valid basis");
    let k1 = assemble(&b1, &WeightSet::gaussian(2, b1.slot_count(), 2, 1, 0xbead)).unwrap();
    let cg2 = CGTable::build(2, 2);
    let b2 =
        basis_higher(2, 2, 2, 8, 2.0, &spec2, GridScheme::Uniform, &cg2).expect("valid basis");
    let k2 =
        assemble_higher(&b2, &WeightSet::gaussian(2, b2.slot_count(), 1, 2, 0xbeef)).unwrap();
    let quarter_turns = [PI / 2.0, PI, 3.0 * PI / 2.0];
    let first = quarter_turns
        .iter()
        .map(|&a| discrete_steerability_residual(&k1, &Rotation::Angle(a), &spec2))
        .fold(0.0, f64::max);
    let higher = quarter_turns
        .iter()
        .map(|&a| discrete_steerability_residual(&k2, &Rotation::Angle(a), &spec2))
        .fold(0.0, f64::max);
    let spec3 = InterpKernelSpec::linear(3);
    let b3 = basis_first(3, 1, 1, 8, 1.0, &spec3, GridScheme::Uniform).expect("valid basis");
    let k3 = assemble(&b3, &WeightSet::gaussian(1, b3.slot_count(), 1, 1, 0xbea7)).unwrap();
    let z_quarter = Rotation::Euler { alpha: PI / 2.0, beta: 0.0, gamma: 0.0 };
    let third = discrete_steerability_residual(&k3, &z_quarter, &spec3);
    vec![
        CheckResult::within("lattice steerability, 2D first layer, quarter turns", first, 1e-9),
        CheckResult::within("lattice steerability, 2D higher layer, quarter turns", higher, 1e-9),
        CheckResult::within("lattice steerability, 3D first layer, z quarter turn", third, 1e-9),
    ]
}

fn delta_checks() -> Vec<CheckResult> {
    let lin = InterpKernelSpec::linear(2);
    let identity = delta(&lin, &RigidMotion::identity(2), 2);
    let quarter = delta(
        &lin,
        &RigidMotion::new(vec![0.0, 0.0], Rotation::Angle(PI / 2.0)).unwrap(),
        2,
    );
    let half = delta(
        &lin,
        &RigidMotion::new(vec![0.5, 0.0], Rotation::Angle(0.0)).unwrap(),
        2,
    );
    let thirty = RigidMotion::new(vec![0.0, 0.0], Rotation::Angle(PI / 6.0)).unwrap();
    let coarse = delta_refined(&lin, &thirty, 2, 32);
    let fine = delta_refined(&lin, &thirty, 2, 64);
    vec![
        CheckResult::within("Δ(identity) vanishes", identity, 0.0),
        CheckResult::within("Δ(quarter turn, linear kernel) vanishes", quarter, 1e-14),
        // The half-lattice shift has the closed form Δ = 1/2 for the linear
        // kernel in 2D (the midpoint keeps weight 1 directly but only 1/2
        // through any composition).
        CheckResult::within("Δ(half-lattice shift) equals 1/2", (half - 0.5).abs(), 1e-12),
        CheckResult::within(
            "Δ(30°) stable under refinement doubling",
            (fine - coarse).abs() / coarse.max(1e-300),
            0.05,
        ),
    ]
}

fn oracle_checks() -> Vec<CheckResult> {
    // SO(2) product spectra: CG fusion against a plain DFT on the circle.
    let cutoff = 4i64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dac);
    let mut coeff = |_| {
        (-cutoff..=cutoff)
            .map(|k| (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect::<Vec<_>>()
    };
    let f1 = coeff(0);
    let f2 = coeff(1);
    let eval = |c: &[(i64, C64)], phi: f64| -> C64 {
        c.iter().map(|&(k, a)| a * C64::cis(-(k as f64) * phi)).sum()
    };
    let n = 128usize;
    let mut dft_worst: f64 = 0.0;
    for k in -2 * cutoff..=2 * cutoff {
        let mut dft = C64::new(0.0, 0.0);
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            dft += eval(&f1, phi) * eval(&f2, phi) * C64::cis(k as f64 * phi);
        }
        dft /= n as f64;
        let fused: C64 = f1
            .iter()
            .flat_map(|&(k1, a)| f2.iter().map(move |&(k2, b)| (k1 + k2, a * b)))
            .filter(|&(ks, _)| ks == k)
            .map(|(_, ab)| ab)
            .sum();
        dft_worst = dft_worst.max((dft - fused).norm());
    }
    // Integral-path convolution oracle against the lattice construction.
    let spec = InterpKernelSpec::linear(2);
    let (c, n_r, n_a, h) = (2usize, 2usize, 12usize, 1.0f64);
    let basis = basis_first(2, c, n_r, n_a, h, &spec, GridScheme::Uniform).unwrap();
    let w = WeightSet::gaussian(n_r, basis.slot_count(), 1, 1, 0x0dad);
    let kernels = assemble(&basis, &w).unwrap();
    let input = gaussian_input(&[8, 8], 0x0dae);
    let fast = conv_first(&input, &kernels).unwrap();
    let oracle =
        crate::conv::conv_oracle_first(&input, 2, c, n_r, n_a, h, &spec, &w).unwrap();
    let scale = h * h; // 2π h² / A(S¹)
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for ri in 0..oracle.irreps.len() {
        for (a, b) in oracle.blocks[ri].iter().zip(fast.blocks[ri].iter()) {
            num = num.max((a - b * scale).norm());
            den = den.max(a.norm());
        }
    }
    vec![
        CheckResult::within("so(2) product spectrum matches the circle dft", dft_worst, 1e-10),
        CheckResult::within("conv_first matches the integral-path oracle", num / den, 1e-6),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ScanConfig {
        ScanConfig {
            dim: 2,
            cutoff: 1,
            n_r: 1,
            n_a: 8,
            h: 1.0,
            interp: FilterFamily::Linear,
            quadrature: GridScheme::Uniform,
            shape: vec![10, 10],
            angle_count: 4,
            axis: ScanAxis::Z,
            seed: 3,
            seed_count: 1,
            output: None,
        }
    }

    #[test]
    fn config_json_round_trips_with_defaults() {
        let text = r#"{
            "dim": 2, "cutoff": 1, "n_r": 1, "n_a": 8, "h": 1.0,
            "interp": "linear", "shape": [10, 10],
            "angle_count": 4, "seed": 3
        }"#;
        let cfg = ScanConfig::from_json(text).unwrap();
        assert_eq!(cfg, tiny_config());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScanConfig::from_json(&json).unwrap(), cfg);
        assert!(ScanConfig::from_json(r#"{"dim": 5}"#).is_err());
    }

    #[test]
    fn config_validation_guards_geometry() {
        let mut cfg = tiny_config();
        cfg.shape = vec![9, 10]; // footprint side is 5, needs ≥ 10
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.angle_count = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.shape = vec![10, 10, 10];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn models_are_deterministic_in_the_seed() {
        let cfg = tiny_config();
        let f = gaussian_input(&cfg.shape, 77);
        let a = build_model(&cfg, FilterFamily::Linear, 5).unwrap();
        let b = build_model(&cfg, FilterFamily::Linear, 5).unwrap();
        assert_eq!(a.descriptor(&f).unwrap(), b.descriptor(&f).unwrap());
        let c = build_model(&cfg, FilterFamily::Linear, 6).unwrap();
        assert_ne!(a.descriptor(&f).unwrap(), c.descriptor(&f).unwrap());
    }

    #[test]
    fn identity_motion_has_exactly_zero_error() {
        let cfg = tiny_config();
        let model = build_model(&cfg, FilterFamily::Linear, 9).unwrap();
        let f = gaussian_input(&cfg.shape, 9 ^ INPUT_SALT);
        let e = equivariance_error(&model, &f, &Rotation::Angle(0.0)).unwrap();
        assert_eq!(e, 0.0);
        let zero = ScalarGridField::zeros(vec![0, 0], vec![10, 10]);
        assert!(equivariance_error(&model, &zero, &Rotation::Angle(0.0)).is_err());
    }

    #[test]
    fn quarter_turn_scan_errors_are_lattice_exact_for_interp_filters() {
        let rows = scan(&tiny_config()).unwrap();
        // 4 angles × 1 axis × 2 families.
        assert_eq!(rows.len(), 8);
        for row in &rows {
            if row.filter == FilterFamily::Linear {
                assert!(
                    row.error < 1e-6,
                    "angle {}°: interp error {}",
                    row.angle_deg,
                    row.error
                );
            }
            assert!(row.error.is_finite() && row.error >= 0.0);
        }
        assert_eq!(rows[0].angle_deg, 0.0);
        assert_eq!(rows[0].error, 0.0);
    }

    #[test]
    fn scans_are_reproducible_row_for_row() {
        let cfg = tiny_config();
        let a = scan(&cfg).unwrap();
        let b = scan(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(scan_csv(&a), scan_csv(&b));
        let csv = scan_csv(&a);
        assert!(csv.starts_with("angle_deg,axis,filter,seed,error\n"));
        assert_eq!(csv.lines().count(), 1 + a.len());
    }

    #[test]
    fn off_lattice_angles_see_more_error_than_lattice_angles() {
        let mut cfg = tiny_config();
        cfg.angle_count = 8; // includes 45°, 135°, …
        let rows = scan(&cfg).unwrap();
        let lattice: f64 = rows
            .iter()
            .filter(|r| r.filter == FilterFamily::Linear && r.angle_deg % 90.0 == 0.0)
            .map(|r| r.error)
            .fold(0.0, f64::max);
        let diagonal: f64 = rows
            .iter()
            .filter(|r| r.filter == FilterFamily::Linear && r.angle_deg % 90.0 != 0.0)
            .map(|r| r.error)
            .fold(f64::INFINITY, f64::min);
        assert!(lattice < 1e-9 && diagonal > 1e-9, "{lattice} vs {diagonal}");
    }

    #[test]
    fn three_dimensional_scans_cover_both_axes() {
        let cfg = ScanConfig {
            dim: 3,
            cutoff: 0,
            n_r: 1,
            n_a: 4,
            h: 1.0,
            interp: FilterFamily::Linear,
            quadrature: GridScheme::Uniform,
            shape: vec![10, 10, 10],
            angle_count: 2,
            axis: ScanAxis::Z,
            seed: 1,
            seed_count: 1,
            output: None,
        };
        let rows = scan(&cfg).unwrap();
        // 2 angles × 2 axes × 2 families.
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().any(|r| r.axis == ScanAxis::Y));
        assert!(rows.iter().any(|r| r.axis == ScanAxis::Z));
    }

    #[test]
    fn rate_rows_cover_both_kernels_and_stay_positive() {
        let mut cfg = tiny_config();
        cfg.cutoff = 2;
        cfg.seed_count = 2;
        let rows = rate_study(&cfg, &[8, 16]).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        for r in &rows {
            assert!(r.error.is_finite() && r.error > 0.0);
        }
        let csv = rate_csv(&rows);
        assert!(csv.starts_with("n_a,filter,seed,error\n"));
        assert!(rate_study(&cfg, &[]).is_err());
    }

    #[test]
    fn slope_fit_recovers_power_laws() {
        let pts: Vec<(f64, f64)> =
            [8.0, 16.0, 32.0, 64.0].iter().map(|&x| (x, 3.0 / x)).collect();
        assert!((fit_log_slope(&pts) + 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&x| (x, 0.7)).collect();
        assert!(fit_log_slope(&flat).abs() < 1e-12);
    }

    #[test]
    fn spike_detector_accepts_smooth_profiles_and_flags_spikes() {
        let smooth: Vec<f64> = (0..24)
            .map(|i| 1.0 + 0.3 * (TAU * i as f64 / 24.0).sin())
            .collect();
        assert!(worst_spike_ratio(&smooth) < 3.0);
        let mut spiked = smooth;
        spiked[11] = 100.0;
        assert!(worst_spike_ratio(&spiked) > 10.0);
    }

    #[test]
    fn scan_error_profile_is_spike_free() {
        let mut cfg = tiny_config();
        cfg.angle_count = 24;
        let rows = scan(&cfg).unwrap();
        let linear: Vec<f64> = rows
            .iter()
            .filter(|r| r.filter == FilterFamily::Linear)
            .map(|r| r.error)
            .collect();
        assert_eq!(linear.len(), 24);
        assert!(worst_spike_ratio(&linear) < 10.0);
    }

    #[test]
    fn verify_suites_pass_and_the_negative_control_fires() {
        let report = verify(VerifySuite::All);
        assert!(report.passed(), "{report}");
        assert!(report
            .checks
            .iter()
            .any(|c| c.name.contains("negative control") && c.passed));
        for suite in [
            VerifySuite::Cg,
            VerifySuite::Sht,
            VerifySuite::Steer,
            VerifySuite::Delta,
            VerifySuite::Oracle,
        ] {
            assert!(verify(suite).passed());
        }
        assert!("bogus".parse::<VerifySuite>().is_err());
        assert_eq!("delta".parse::<VerifySuite>().unwrap(), VerifySuite::Delta);
    }
}
