//! Binary file formats for fields, filter banks and weights.
//!
//! Three deterministic little-endian layouts share one toolbox:
//!
//! * `STFD1` — steerable field: `u32 dim`, `i64 origin[dim]`,
//!   `u64 shape[dim]`, `u32 irrep-count`, per irrep
//!   (`u32 degree, u32 irrep_dim, u32 channels`), then `complex128` values
//!   row-major in (irrep, site, m, channel) order. A scalar grid field is
//!   the special case of one degree-0 irrep with one channel.
//! * `STFB1` — filter bank: header
//!   (`u32 dim, u32 cutoff, u32 n_r, u32 n_a, f64 h, u8 interp-kind,
//!   u8 layer-kind, u8 quadrature`), the offset list (`u32 count`, then
//!   `i64` coordinates lexicographically), then the complex table in
//!   (r, ρ[, ρ1, ρ2], y, entries row-major) order, and a trailing SHA-256
//!   of everything before it. Degree triples of higher-layer banks are not
//!   stored — they are a pure function of the header, and the reader
//!   rebuilds them. Cartesian banks (interp-kind 2) always carry the
//!   default ring-width profile, so `n_r` pins it.
//! * `STFW1` — weight tensor: `u32 n_r, u32 slots, u32 out, u32 in`, then
//!   `complex128` in (shell, slot, out, in) order, SHA-256 appended.
//!
//! Readers check the magic, the checksum (where present) and every length
//! before touching values, and answer corruption with [`Error::Format`].

use crate::conv::SteerableField;
use crate::filters::{
    default_tau_profile, higher_triples, FilterBasisFirst, FilterBasisHigher, FilterKind,
    WeightSet,
};
use crate::group::{irrep_dim, IrrepId};
use crate::interp::{InterpKernelSpec, InterpKind, ScalarGridField};
use crate::sphere::GridScheme;
use crate::{C64, Error, Result};
use ndarray::{Array2, Array3};
use sha2::{Digest, Sha256};
use std::path::Path;

const FIELD_MAGIC: &[u8; 5] = b"STFD1";
const BANK_MAGIC: &[u8; 5] = b"STFB1";
const WEIGHT_MAGIC: &[u8; 5] = b"STFW1";

/// A filter bank on disk is either a first-layer basis (trivial input
/// degree) or a higher-layer basis of M̃ blocks.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterBank {
    First(FilterBasisFirst),
    Higher(FilterBasisHigher),
}

// ---------------------------------------------------------------------------
// byte-level plumbing

#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn c64(&mut self, v: C64) {
        self.f64(v.re);
        self.f64(v.im);
    }
    fn seal(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.0);
        self.0.extend_from_slice(&digest);
        self.0
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Dec<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Dec { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("file is truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn c64(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn expect_magic(dec: &mut Dec, magic: &[u8; 5]) -> Result<()> {
    if dec.take(5)? != magic {
        return Err(Error::Format(format!(
            "wrong magic (expected {})",
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

/// Split off and verify the trailing SHA-256; returns the payload.
fn checked_payload(buf: &[u8]) -> Result<&[u8]> {
    if buf.len() < 32 {
        return Err(Error::Format("file too short to carry a checksum".into()));
    }
    let (payload, tail) = buf.split_at(buf.len() - 32);
    let digest = Sha256::digest(payload);
    if digest.as_slice() != tail {
        return Err(Error::Format("checksum mismatch — file is corrupt".into()));
    }
    Ok(payload)
}

fn small_usize(v: u64, what: &str) -> Result<usize> {
    if v == 0 || v > (1 << 32) {
        return Err(Error::Format(format!("implausible {what}: {v}")));
    }
    Ok(v as usize)
}

// ---------------------------------------------------------------------------
// STFD1 fields

fn encode_field(f: &SteerableField) -> Vec<u8> {
    let mut e = Enc::default();
    e.0.extend_from_slice(FIELD_MAGIC);
    e.u32(f.dim as u32);
    for &o in &f.origin {
        e.i64(o);
    }
    for &s in &f.shape {
        e.u64(s as u64);
    }
    e.u32(f.irreps.len() as u32);
    for &(id, ch) in &f.irreps {
        e.u32(id.degree as u32);
        e.u32(id.irrep_dim() as u32);
        e.u32(ch as u32);
    }
    for b in &f.blocks {
        for &v in b.iter() {
            e.c64(v);
        }
    }
    e.0
}

pub fn write_field(path: impl AsRef<Path>, f: &SteerableField) -> Result<()> {
    std::fs::write(path, encode_field(f))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<SteerableField> {
    let buf = std::fs::read(path)?;
    decode_field(&buf)
}

fn decode_field(buf: &[u8]) -> Result<SteerableField> {
    let mut d = Dec::new(buf);
    expect_magic(&mut d, FIELD_MAGIC)?;
    let dim = small_usize(d.u32()? as u64, "dimension")?;
    if dim > 8 {
        return Err(Error::Format(format!("implausible dimension: {dim}")));
    }
    let origin: Vec<i64> = (0..dim).map(|_| d.i64()).collect::<Result<_>>()?;
    let mut shape = Vec::with_capacity(dim);
    let mut sites = 1usize;
    for _ in 0..dim {
        let s = small_usize(d.u64()?, "extent")?;
        sites = sites
            .checked_mul(s)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| Error::Format("field too large".into()))?;
        shape.push(s);
    }
    let n_irreps = small_usize(d.u32()? as u64, "irrep count")?;
    let mut irreps = Vec::with_capacity(n_irreps);
    for _ in 0..n_irreps {
        let degree = d.u32()? as usize;
        let stored_dim = d.u32()? as usize;
        let ch = small_usize(d.u32()? as u64, "channel count")?;
        let id = IrrepId::new(dim, degree);
        if stored_dim != id.irrep_dim() {
            return Err(Error::Format(format!(
                "degree {degree} in dimension {dim} has irrep dimension {}, file says {stored_dim}",
                id.irrep_dim()
            )));
        }
        irreps.push((id, ch));
    }
    let mut f = SteerableField::zeros(dim, origin, shape, irreps);
    for b in f.blocks.iter_mut() {
        for v in b.iter_mut() {
            *v = d.c64()?;
        }
    }
    d.done()?;
    Ok(f)
}

/// Write a scalar field as its one-irrep STFD1 embedding.
pub fn write_scalar_field(path: impl AsRef<Path>, f: &ScalarGridField) -> Result<()> {
    write_field(path, &SteerableField::from_scalar(f))
}

/// Read a field that must be the scalar special case (one degree-0 irrep,
/// one channel).
pub fn read_scalar_field(path: impl AsRef<Path>) -> Result<ScalarGridField> {
    let f = read_field(path)?;
    if f.irreps.len() != 1 || f.irreps[0].0.degree != 0 || f.irreps[0].1 != 1 {
        return Err(Error::Format(
            "not a scalar field (needs exactly one degree-0 irrep with one channel)".into(),
        ));
    }
    let values: Vec<C64> = f.blocks[0].iter().copied().collect();
    ScalarGridField::from_values(f.origin, f.shape, values)
}

// ---------------------------------------------------------------------------
// STFB1 filter banks

fn interp_byte(kind: &FilterKind) -> u8 {
    match kind {
        FilterKind::Interpolating(spec) => match spec.kind {
            InterpKind::Nearest => 0,
            InterpKind::Linear => 1,
        },
        FilterKind::Cartesian { .. } => 2,
    }
}

fn kind_from_byte(byte: u8, dim: usize, n_r: usize) -> Result<FilterKind> {
    Ok(match byte {
        0 => FilterKind::Interpolating(InterpKernelSpec::nearest(dim)),
        1 => FilterKind::Interpolating(InterpKernelSpec::linear(dim)),
        2 => FilterKind::Cartesian { taus: default_tau_profile(n_r) },
        b => return Err(Error::Format(format!("unknown interpolation kind {b}"))),
    })
}

fn scheme_byte(scheme: GridScheme) -> u8 {
    match scheme {
        GridScheme::Uniform => 0,
        GridScheme::DriscollHealy => 1,
    }
}

fn scheme_from_byte(byte: u8) -> Result<GridScheme> {
    Ok(match byte {
        0 => GridScheme::Uniform,
        1 => GridScheme::DriscollHealy,
        b => return Err(Error::Format(format!("unknown quadrature scheme {b}"))),
    })
}

#[allow(clippy::too_many_arguments)]
fn encode_bank_header(
    e: &mut Enc,
    dim: usize,
    cutoff: usize,
    n_r: usize,
    n_a: usize,
    h: f64,
    kind: &FilterKind,
    layer: u8,
    scheme: GridScheme,
    offsets: &[Vec<i64>],
) {
    e.0.extend_from_slice(BANK_MAGIC);
    e.u32(dim as u32);
    e.u32(cutoff as u32);
    e.u32(n_r as u32);
    e.u32(n_a as u32);
    e.f64(h);
    e.u8(interp_byte(kind));
    e.u8(layer);
    e.u8(scheme_byte(scheme));
    e.u32(offsets.len() as u32);
    for y in offsets {
        for &c in y {
            e.i64(c);
        }
    }
}

fn encode_bank(bank: &FilterBank) -> Vec<u8> {
    let mut e = Enc::default();
    match bank {
        FilterBank::First(b) => {
            encode_bank_header(
                &mut e, b.dim, b.cutoff, b.n_r, b.n_a, b.h, &b.kind, 0, b.scheme, &b.offsets,
            );
            for per_r in &b.tables {
                for table in per_r {
                    for &v in table.iter() {
                        e.c64(v);
                    }
                }
            }
        }
        FilterBank::Higher(b) => {
            encode_bank_header(
                &mut e, b.dim, b.cutoff, b.n_r, b.n_a, b.h, &b.kind, 1, b.scheme, &b.offsets,
            );
            for per_r in &b.tables {
                for table in per_r {
                    for &v in table.iter() {
                        e.c64(v);
                    }
                }
            }
        }
    }
    e.seal()
}

pub fn write_filter_bank(path: impl AsRef<Path>, bank: &FilterBank) -> Result<()> {
    std::fs::write(path, encode_bank(bank))?;
    Ok(())
}

pub fn read_filter_bank(path: impl AsRef<Path>) -> Result<FilterBank> {
    let buf = std::fs::read(path)?;
    decode_bank(&buf)
}

fn decode_bank(buf: &[u8]) -> Result<FilterBank> {
    let payload = checked_payload(buf)?;
    let mut d = Dec::new(payload);
    expect_magic(&mut d, BANK_MAGIC)?;
    let dim = small_usize(d.u32()? as u64, "dimension")?;
    let cutoff = d.u32()? as usize;
    let n_r = small_usize(d.u32()? as u64, "shell count")?;
    let n_a = d.u32()? as usize;
    let h = d.f64()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Format("radius h must be positive".into()));
    }
    let interp = d.u8()?;
    let layer = d.u8()?;
    let scheme = scheme_from_byte(d.u8()?)?;
    let kind = kind_from_byte(interp, dim, n_r)?;
    let n_offsets = small_usize(d.u32()? as u64, "offset count")?;
    let mut offsets = Vec::with_capacity(n_offsets);
    for _ in 0..n_offsets {
        offsets.push((0..dim).map(|_| d.i64()).collect::<Result<Vec<i64>>>()?);
    }
    match layer {
        0 => {
            let mut tables = Vec::with_capacity(n_r);
            for _ in 0..n_r {
                let mut per_r = Vec::with_capacity(cutoff + 1);
                for rho in 0..=cutoff {
                    let d_rho = irrep_dim(dim, rho);
                    let mut t = Array2::zeros((n_offsets, d_rho));
                    for v in t.iter_mut() {
                        *v = d.c64()?;
                    }
                    per_r.push(t);
                }
                tables.push(per_r);
            }
            d.done()?;
            Ok(FilterBank::First(FilterBasisFirst {
                dim,
                cutoff,
                n_r,
                n_a,
                h,
                kind,
                scheme,
                offsets,
                tables,
            }))
        }
        1 => {
            let cartesian = interp == 2;
            let triples = higher_triples(dim, cutoff, n_a, cartesian);
            let mut tables = Vec::with_capacity(n_r);
            for _ in 0..n_r {
                let mut per_r = Vec::with_capacity(triples.len());
                for &(rho, rho1, _) in &triples {
                    let mut t =
                        Array3::zeros((n_offsets, irrep_dim(dim, rho), irrep_dim(dim, rho1)));
                    for v in t.iter_mut() {
                        *v = d.c64()?;
                    }
                    per_r.push(t);
                }
                tables.push(per_r);
            }
            d.done()?;
            Ok(FilterBank::Higher(FilterBasisHigher {
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
            }))
        }
        b => Err(Error::Format(format!("unknown layer kind {b}"))),
    }
}

// ---------------------------------------------------------------------------
// STFW1 weights

fn encode_weights(w: &WeightSet) -> Vec<u8> {
    let slots = w.values.first().map_or(0, |v| v.len());
    let mut e = Enc::default();
    e.0.extend_from_slice(WEIGHT_MAGIC);
    e.u32(w.values.len() as u32);
    e.u32(slots as u32);
    e.u32(w.out_channels as u32);
    e.u32(w.in_channels as u32);
    for per_r in &w.values {
        for m in per_r {
            for &v in m.iter() {
                e.c64(v);
            }
        }
    }
    e.seal()
}

pub fn write_weights(path: impl AsRef<Path>, w: &WeightSet) -> Result<()> {
    std::fs::write(path, encode_weights(w))?;
    Ok(())
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightSet> {
    let buf = std::fs::read(path)?;
    decode_weights(&buf)
}

fn decode_weights(buf: &[u8]) -> Result<WeightSet> {
    let payload = checked_payload(buf)?;
    let mut d = Dec::new(payload);
    expect_magic(&mut d, WEIGHT_MAGIC)?;
    let n_r = small_usize(d.u32()? as u64, "shell count")?;
    let slots = small_usize(d.u32()? as u64, "slot count")?;
    let oc = small_usize(d.u32()? as u64, "output channels")?;
    let ic = small_usize(d.u32()? as u64, "input channels")?;
    let mut values = Vec::with_capacity(n_r);
    for _ in 0..n_r {
        let mut per_r = Vec::with_capacity(slots);
        for _ in 0..slots {
            let mut m = Array2::zeros((oc, ic));
            for v in m.iter_mut() {
                *v = d.c64()?;
            }
            per_r.push(m);
        }
        values.push(per_r);
    }
    d.done()?;
    Ok(WeightSet { out_channels: oc, in_channels: ic, values })
}
