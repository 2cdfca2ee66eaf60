//! SE(d)-steerable convolution on integer lattices.
//!
//! The crate builds rotation-steerable convolution kernels out of three
//! ingredients:
//!
//! * spherical harmonics in d dimensions together with the unitary irreps of
//!   SO(d) they transform under ([`sphere`], [`group`]),
//! * Clebsch–Gordan decompositions of irrep tensor products, which restrict
//!   two-argument Fourier coefficients to the diagonal ([`cg`]),
//! * explicit interpolation kernels that move lattice data onto spherical
//!   sampling grids and whose self-consistency defect Δ bounds the loss of
//!   equivariance ([`interp`]).
//!
//! [`filters`] combines the three into precomputed filter bases, [`conv`]
//! contracts them with learnable radial weights and input fields, and
//! [`layers`] supplies the equivariant nonlinearity, normalization, pooling
//! and invariant read-out. [`harness`] measures the loss of equivariance of
//! assembled models under continuous rotations and hosts the self-check
//! suites; [`io`] gives every precomputed object a deterministic binary
//! format.
//!
//! Complex scalars are [`num_complex::Complex64`] throughout. Lattice fields
//! are stored densely with explicit strides, and every accumulation runs in a
//! fixed order, so results are bit-identical across runs and thread counts
//! (the `parallel` feature only changes who executes which slice, never the
//! order of floating-point additions within a slice).

pub mod cg;
pub mod conv;
pub mod filters;
pub mod group;
pub mod harness;
pub mod interp;
pub mod io;
pub mod layers;
pub mod sphere;

mod linalg;
mod par;
mod special;

use num_complex::Complex64;

/// Errors reported by fallible operations in this crate.
///
/// Numerical routines that merely lose accuracy do not error; errors are
/// reserved for structural misuse (mismatched dimensions, invalid grids,
/// malformed files) and for genuinely failed computations (rank-deficient
/// solves, corrupt checksums).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two objects that must agree on a dimension or shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A parameter is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A linear solve met a (numerically) rank-deficient system.
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),
    /// A computation finished but failed its own consistency check.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A file had the wrong magic, version, checksum or layout.
    #[error("malformed file: {0}")]
    Format(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex scalar used for all field and filter values.
pub type C64 = Complex64;
