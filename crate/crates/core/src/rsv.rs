//! Resilient set vectorizer: Index-of-Max hashing over seeded Gaussian
//! projections.
//!
//! A [`Nonce`] names an infinite family of standard-normal matrices `Y_i`
//! (`i = 0, 1, ...`), each with rows `r` and columns `c`. Entries are never
//! stored; they are re-derived from the nonce on demand.
//!
//! # Entry derivation
//!
//! Entry `(i, r, c)` of the matrix family for seed `s` is computed as follows:
//!
//! 1. Key a ChaCha8 stream cipher (the `rand_chacha` implementation) with the
//!    32 bytes `s.to_be_bytes() || b"ske/iom-gaussian"`.
//! 2. Select stream `i` (the 64-bit ChaCha nonce) and seek to 32-bit word
//!    position `4 * (r * 2^32 + c)`.
//! 3. Read two little-endian `u64` words `a`, `b` (four keystream words).
//! 4. Map each to the open unit interval: `u = ((w >> 11) + 0.5) * 2^-53`.
//! 5. Return `sqrt(-2 ln u_a) * cos(2 pi u_b)` (Box-Muller, cosine branch).
//!
//! Consecutive columns of one row therefore occupy consecutive keystream
//! words, so a row is generated by a single seek followed by a linear read.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

const GAUSSIAN_DOMAIN: &[u8; 16] = b"ske/iom-gaussian";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RsvError {
    #[error("input vector has zero norm")]
    ZeroVector,
    #[error("input vector contains a non-finite value")]
    NonFinite,
    #[error("vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hash shape: m={m}, range={range}, dim={dim}")]
    InvalidShape { m: usize, range: u32, dim: usize },
    #[error("resilient vectors differ in shape: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, u32, usize, u32),
}

/// 128-bit public seed identifying one independent set of projection matrices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nonce(u128);

impl Nonce {
    pub const fn new(seed: u128) -> Self {
        Self(seed)
    }

    pub fn seed(&self) -> u128 {
        self.0
    }

    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        Self(u128::from_be_bytes(bytes))
    }

    pub fn to_bytes(&self) -> [u8; 16] {
        self.0.to_be_bytes()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random())
    }

    /// Deterministic child nonce, used when enrollment has to redraw `N`.
    pub fn reseed(&self, attempt: u32) -> Self {
        let mut h = Sha256::new();
        h.update(b"ske/nonce-reseed");
        h.update(self.0.to_be_bytes());
        h.update(attempt.to_be_bytes());
        let digest = h.finalize();
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        Self::from_bytes(out)
    }

    fn stream(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..16].copy_from_slice(&self.0.to_be_bytes());
        key[16..].copy_from_slice(GAUSSIAN_DOMAIN);
        ChaCha8Rng::from_seed(key)
    }
}

impl fmt::Debug for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonce({:032x})", self.0)
    }
}

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl FromStr for Nonce {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u128::from_str_radix(s.trim_start_matches("0x"), 16).map(Self)
    }
}

#[inline]
fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> f64 {
    let u1 = unit_open(a);
    let u2 = unit_open(b);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[inline]
fn word_pos(row: u32, col: u32) -> u128 {
    (((row as u128) << 32) | col as u128) * 4
}

/// Entry `(matrix, row, col)` of the Gaussian family named by `nonce`.
pub fn derive_gaussian_entry(nonce: Nonce, matrix: u64, row: u32, col: u32) -> f64 {
    let mut rng = nonce.stream();
    rng.set_stream(matrix);
    rng.set_word_pos(word_pos(row, col));
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

/// Fills `out` with columns `0..out.len()` of one matrix row.
pub fn gaussian_row(nonce: Nonce, matrix: u64, row: u32, out: &mut [f64]) {
    let mut rng = nonce.stream();
    fill_row(&mut rng, matrix, row, out);
}

fn fill_row(rng: &mut ChaCha8Rng, matrix: u64, row: u32, out: &mut [f64]) {
    rng.set_stream(matrix);
    rng.set_word_pos(word_pos(row, 0));
    for v in out.iter_mut() {
        let a = rng.next_u64();
        let b = rng.next_u64();
        *v = box_muller(a, b);
    }
}

/// Output of IoM hashing: `m` indices, each in `0..range`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResilientVector {
    entries: Vec<u32>,
    range: u32,
}

impl ResilientVector {
    pub fn new(entries: Vec<u32>, range: u32) -> Result<Self, RsvError> {
        if entries.is_empty() || range < 2 || entries.iter().any(|&e| e >= range) {
            return Err(RsvError::InvalidShape {
                m: entries.len(),
                range,
                dim: 0,
            });
        }
        Ok(Self { entries, range })
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct index values.
    pub fn unique_count(&self) -> usize {
        let mut seen = vec![false; self.range as usize];
        let mut n = 0;
        for &e in &self.entries {
            if !std::mem::replace(&mut seen[e as usize], true) {
                n += 1;
            }
        }
        n
    }
}

fn validate_input(x: &[f64], dim: usize) -> Result<(), RsvError> {
    if x.len() != dim {
        return Err(RsvError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RsvError::NonFinite);
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(RsvError::ZeroVector);
    }
    Ok(())
}

/// Dot product; inputs of 8 or more entries use eight independent partial
/// sums combined pairwise.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 8 {
        let mut s = 0.0;
        for (u, v) in a.iter().zip(b) {
            s += u * v;
        }
        return s;
    }
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(u, v)| u * v).sum();
    for (u, v) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += u[l] * v[l];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Index-of-Max hasher for a fixed `(nonce, m, range, dim)`.
///
/// By default rows are re-derived for every call. [`IomHasher::materialize`]
/// trades `m * range * dim * 8` bytes of memory for speed when one nonce is
/// reused across many inputs; both paths produce identical output.
#[derive(Clone)]
pub struct IomHasher {
    nonce: Nonce,
    m: usize,
    range: u32,
    dim: usize,
    matrices: Option<Vec<f64>>,
}

impl fmt::Debug for IomHasher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IomHasher")
            .field("nonce", &self.nonce)
            .field("m", &self.m)
            .field("range", &self.range)
            .field("dim", &self.dim)
            .field("materialized", &self.matrices.is_some())
            .finish()
    }
}

impl IomHasher {
    pub fn new(nonce: Nonce, m: usize, range: u32, dim: usize) -> Result<Self, RsvError> {
        if m == 0 || range < 2 || dim == 0 {
            return Err(RsvError::InvalidShape { m, range, dim });
        }
        Ok(Self {
            nonce,
            m,
            range,
            dim,
            matrices: None,
        })
    }

    pub fn materialized(nonce: Nonce, m: usize, range: u32, dim: usize) -> Result<Self, RsvError> {
        let mut h = Self::new(nonce, m, range, dim)?;
        h.materialize();
        Ok(h)
    }

    pub fn materialize(&mut self) {
        if self.matrices.is_some() {
            return;
        }
        let per_matrix = self.range as usize * self.dim;
        let mut data = vec![0.0f64; self.m * per_matrix];
        let (nonce, dim) = (self.nonce, self.dim);
        data.par_chunks_mut(per_matrix)
            .enumerate()
            .for_each(|(i, block)| {
                let mut rng = nonce.stream();
                for (r, row) in block.chunks_mut(dim).enumerate() {
                    fill_row(&mut rng, i as u64, r as u32, row);
                }
            });
        self.matrices = Some(data);
    }

    pub fn is_materialized(&self) -> bool {
        self.matrices.is_some()
    }

    pub fn nonce(&self) -> Nonce {
        self.nonce
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hash(&self, x: &[f64]) -> Result<ResilientVector, RsvError> {
        Ok(self.hash_batch(&[x])?.pop().expect("one input"))
    }

    /// Hashes several inputs in one pass over the projection rows.
    pub fn hash_batch(&self, xs: &[&[f64]]) -> Result<Vec<ResilientVector>, RsvError> {
        for x in xs {
            validate_input(x, self.dim)?;
        }
        let n = xs.len();
        // columns[i] holds the argmax of matrix i for every input
        let columns: Vec<Vec<u32>> = (0..self.m)
            .into_par_iter()
            .map(|i| self.argmax_for_matrix(i, xs))
            .collect();
        let mut out: Vec<Vec<u32>> = vec![Vec::with_capacity(self.m); n];
        for col in &columns {
            for (j, &idx) in col.iter().enumerate() {
                out[j].push(idx);
            }
        }
        Ok(out
            .into_iter()
            .map(|entries| ResilientVector {
                entries,
                range: self.range,
            })
            .collect())
    }

    fn argmax_for_matrix(&self, i: usize, xs: &[&[f64]]) -> Vec<u32> {
        // strict comparisons keep the smallest row index on ties
        match &self.matrices {
            Some(data) => {
                let per_matrix = self.range as usize * self.dim;
                let block = &data[i * per_matrix..(i + 1) * per_matrix];
                xs.iter()
                    .map(|x| {
                        let mut best = (f64::NEG_INFINITY, 0u32);
                        for (r, row) in block.chunks_exact(self.dim).enumerate() {
                            let v = dot(row, x);
                            if v > best.0 {
                                best = (v, r as u32);
                            }
                        }
                        best.1
                    })
                    .collect()
            }
            None => {
                let mut best = vec![(f64::NEG_INFINITY, 0u32); xs.len()];
                let mut rng = self.nonce.stream();
                let mut row = vec![0.0; self.dim];
                for r in 0..self.range {
                    fill_row(&mut rng, i as u64, r, &mut row);
                    for (slot, x) in best.iter_mut().zip(xs) {
                        let v = dot(&row, x);
                        if v > slot.0 {
                            *slot = (v, r);
                        }
                    }
                }
                best.into_iter().map(|(_, r)| r).collect()
            }
        }
    }
}

/// IoM hash of `x` with `m` matrices of `range` rows under `nonce`.
pub fn iom_hash(x: &[f64], m: usize, range: u32, nonce: Nonce) -> Result<ResilientVector, RsvError> {
    IomHasher::new(nonce, m, range, x.len())?.hash(x)
}

/// Number of positions where the two vectors agree.
pub fn collision_count(a: &ResilientVector, b: &ResilientVector) -> Result<usize, RsvError> {
    if a.len() != b.len() || a.range != b.range {
        return Err(RsvError::ShapeMismatch(a.len(), a.range, b.len(), b.range));
    }
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .filter(|(u, v)| u == v)
        .count())
}

/// Empirical estimate of the per-index collision probability of `x` and `y`.
pub fn estimate_similarity(
    x: &[f64],
    y: &[f64],
    m_probe: usize,
    range: u32,
    nonce: Nonce,
) -> Result<f64, RsvError> {
    if x.len() != y.len() {
        return Err(RsvError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let hasher = IomHasher::new(nonce, m_probe, range, x.len())?;
    let rvs = hasher.hash_batch(&[x, y])?;
    Ok(collision_count(&rvs[0], &rvs[1])? as f64 / m_probe as f64)
}
