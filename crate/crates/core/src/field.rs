//! Prime-field arithmetic and the polynomial machinery behind secret binding.
//!
//! Elements are plain `u32` values in `[0, p)`; the modulus lives in a
//! [`PrimeField`] context that every operation goes through. Moduli are capped
//! at `2^16` so that every element fits the two-byte encodings used by tags
//! and the helper-data container.

use std::collections::BTreeMap;

use thiserror::Error;

/// Largest admissible modulus (exclusive upper bound on element values).
pub const MAX_MODULUS: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not a prime in [2, 65536]")]
    InvalidModulus(u32),
    #[error("element {value} is outside the field of order {p}")]
    OutOfRange { value: u32, p: u32 },
    #[error("duplicate x-coordinate {x} with differing y values")]
    DuplicateX { x: u32 },
    #[error("need {needed} points to interpolate, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("{failed} of {extra} surplus points are not on the interpolated polynomial")]
    InconsistentPoints { failed: usize, extra: usize },
    #[error("secret does not fit in {k} digits base {p}")]
    SecretTooLarge { k: usize, p: u32 },
    #[error("polynomial length must be at least 1")]
    EmptyPolynomial,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A prime field `GF(p)` with `2 <= p <= 2^16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if p > MAX_MODULUS || !is_prime(p) {
            return Err(FieldError::InvalidModulus(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Number of bits needed to write any element, `ceil(log2 p)`.
    pub fn bit_width(&self) -> u32 {
        32 - (self.p - 1).leading_zeros()
    }

    #[inline]
    pub fn contains(&self, a: u32) -> bool {
        a < self.p
    }

    pub fn check(&self, a: u32) -> Result<u32, FieldError> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(FieldError::OutOfRange { value: a, p: self.p })
        }
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        let mut b = base % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem. Returns `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p as u64 - 2))
        }
    }
}

/// Polynomial over `GF(p)` with exactly `k` coefficients, lowest degree first.
///
/// The leading coefficient may be zero: the secret dictates the coefficients,
/// so the formal degree bound `k - 1` is what matters, not the actual degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPoly {
    field: PrimeField,
    coeffs: Vec<u32>,
}

impl FieldPoly {
    pub fn new(field: PrimeField, coeffs: Vec<u32>) -> Result<Self, FieldError> {
        if coeffs.is_empty() {
            return Err(FieldError::EmptyPolynomial);
        }
        for &c in &coeffs {
            field.check(c)?;
        }
        Ok(Self { field, coeffs })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// Number of coefficients (the threshold `k`).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: u32) -> u32 {
        let f = self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }
}

pub fn poly_eval(poly: &FieldPoly, x: u32) -> u32 {
    poly.eval(x)
}

/// Interpolates the unique polynomial with `k` coefficients through `points`.
///
/// Points are deduplicated and sorted by x; the first `k` are interpolated and
/// every remaining point is checked against the result.
pub fn lagrange_interpolate(
    field: PrimeField,
    points: &[(u32, u32)],
    k: usize,
) -> Result<FieldPoly, FieldError> {
    if k == 0 {
        return Err(FieldError::EmptyPolynomial);
    }
    let mut unique: BTreeMap<u32, u32> = BTreeMap::new();
    for &(x, y) in points {
        field.check(x)?;
        field.check(y)?;
        match unique.get(&x) {
            Some(&prev) if prev != y => return Err(FieldError::DuplicateX { x }),
            Some(_) => {}
            None => {
                unique.insert(x, y);
            }
        }
    }
    if unique.len() < k {
        return Err(FieldError::InsufficientPoints {
            needed: k,
            got: unique.len(),
        });
    }
    let sorted: Vec<(u32, u32)> = unique.into_iter().collect();
    let (basis, surplus) = sorted.split_at(k);
    let poly = interpolate_exact(field, basis);

    let failed = surplus.iter().filter(|&&(x, y)| poly.eval(x) != y).count();
    if failed > 0 {
        return Err(FieldError::InconsistentPoints {
            failed,
            extra: surplus.len(),
        });
    }
    Ok(poly)
}

/// Lagrange interpolation through exactly `points.len()` distinct points.
///
/// Builds the master polynomial `M(x) = prod (x - x_j)` once, then divides out
/// each root synthetically, so the whole pass is `O(k^2)` multiplications.
fn interpolate_exact(field: PrimeField, points: &[(u32, u32)]) -> FieldPoly {
    let k = points.len();
    let f = field;

    // master[j] is the coefficient of x^j, degree k.
    let mut master = vec![0u32; k + 1];
    master[0] = 1;
    for (deg, &(xj, _)) in points.iter().enumerate() {
        let neg_x = f.neg(xj);
        for j in (0..=deg + 1).rev() {
            let shifted = if j > 0 { master[j - 1] } else { 0 };
            master[j] = f.add(shifted, f.mul(master[j], neg_x));
        }
    }

    let mut coeffs = vec![0u32; k];
    let mut quotient = vec![0u32; k];
    for &(xj, yj) in points {
        // quotient = master / (x - xj)
        let mut carry = 0u32;
        for j in (0..k).rev() {
            carry = f.add(master[j + 1], f.mul(carry, xj));
            quotient[j] = carry;
        }
        let denom = quotient.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, xj), c));
        let scale = f.mul(yj, f.inv(denom).expect("distinct x-coordinates"));
        for (c, &q) in coeffs.iter_mut().zip(&quotient) {
            *c = f.add(*c, f.mul(scale, q));
        }
    }
    FieldPoly {
        field,
        coeffs,
    }
}

/// Field multiplications performed by [`lagrange_interpolate`] for `k` basis
/// points and `surplus` verification points (inversions not included).
pub fn interpolation_cost(k: usize, surplus: usize) -> u64 {
    let k = k as u64;
    let master = k * (k + 1) / 2 + k;
    let per_point = k + k + 1 + k;
    master + k * per_point + surplus as u64 * k
}

/// Maps a big-endian byte string to the base-`p` digits of its integer value,
/// least significant digit first, zero-padded to `k` coefficients.
pub fn encode_secret(secret: &[u8], k: usize, field: PrimeField) -> Result<FieldPoly, FieldError> {
    if k == 0 {
        return Err(FieldError::EmptyPolynomial);
    }
    let p = field.modulus();
    let mut num: Vec<u8> = strip_leading_zeros(secret).to_vec();
    let mut digits = Vec::with_capacity(k);
    while !num.is_empty() {
        if digits.len() == k {
            return Err(FieldError::SecretTooLarge { k, p });
        }
        let mut rem = 0u32;
        for byte in num.iter_mut() {
            let cur = (rem << 8) | *byte as u32;
            *byte = (cur / p) as u8;
            rem = cur % p;
        }
        digits.push(rem);
        num = strip_leading_zeros(&num).to_vec();
    }
    digits.resize(k, 0);
    Ok(FieldPoly {
        field,
        coeffs: digits,
    })
}

/// Inverse of [`encode_secret`]: the minimal big-endian bytes of the integer
/// whose base-`p` digits are the coefficients. Zero maps to the empty string.
pub fn decode_secret(poly: &FieldPoly) -> Vec<u8> {
    let p = poly.field.modulus();
    // little-endian bytes while accumulating
    let mut acc: Vec<u8> = Vec::new();
    for &digit in poly.coeffs.iter().rev() {
        let mut carry = digit;
        for byte in acc.iter_mut() {
            let cur = *byte as u32 * p + carry;
            *byte = (cur & 0xff) as u8;
            carry = cur >> 8;
        }
        while carry > 0 {
            acc.push((carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    while acc.last() == Some(&0) {
        acc.pop();
    }
    acc.reverse();
    acc
}

fn strip_leading_zeros(bytes: &[u8]) -> &[u8] {
    let start = bytes.iter().position(|&b| b != 0).unwrap_or(bytes.len());
    &bytes[start..]
}
