//! Symmetric keyring encryption: binding a secret to an input vector and
//! retrieving it from a similar one.
//!
//! Enrollment hashes the input twice, under `N` and `N̂`, producing the
//! resilient vector pair `(φ, φ̂)`. The secret becomes the coefficients of a
//! polynomial `f`; its projections `f(φ_i)` are XOR-masked by `φ̂_i` into the
//! secure sketch, and each index gets a tag `H(φ_i || ss_i || φ̂_i)`.
//! Retrieval recomputes the pair from the query, keeps the indices whose tags
//! match, unmasks them, and interpolates once enough distinct points survive.

mod container;
mod tag;

pub use container::{deserialize_helper, serialize_helper, FORMAT_VERSION, MAGIC};
pub use tag::{compute_tag, Tag};

use thiserror::Error;

use crate::field::{self, FieldError, FieldPoly, PrimeField};
use crate::rsv::{IomHasher, Nonce, ResilientVector, RsvError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Rsv(#[from] RsvError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("only {unique} distinct hash indices after {attempts} attempts, need {needed}")]
    InsufficientDiversity {
        unique: usize,
        needed: usize,
        attempts: u32,
    },
    #[error("the two nonces must differ")]
    IdenticalNonces,
    #[error("sequence lengths disagree: {0}")]
    ShapeMismatch(String),
    #[error("malformed helper container: {0}")]
    MalformedContainer(String),
    #[error("unsupported helper format version {0}")]
    VersionUnsupported(u16),
    #[error("helper data violates an invariant: {0}")]
    InvariantViolation(String),
}

impl SkeError {
    pub fn is_zero_vector(&self) -> bool {
        matches!(self, SkeError::Rsv(RsvError::ZeroVector))
    }
}

/// Scheme parameters shared by enrollment, retrieval and the helper container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SkeParams {
    /// Input dimension.
    pub dim: usize,
    /// Resilient vector length.
    pub m: usize,
    /// Field order, which is also the IoM index range.
    pub p: u32,
    /// Secret length in field elements (interpolation threshold).
    pub k: usize,
    /// Tag length in bits.
    pub tag_bits: u16,
}

impl SkeParams {
    pub fn new(dim: usize, m: usize, p: u32, k: usize, tag_bits: u16) -> Result<Self, SkeError> {
        let params = Self {
            dim,
            m,
            p,
            k,
            tag_bits,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SkeError> {
        let bad = |msg: String| Err(SkeError::InvalidParams(msg));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.dim > u32::MAX as usize || self.m > u32::MAX as usize {
            return bad("dimension and m must fit in 32 bits".into());
        }
        if PrimeField::new(self.p).is_err() {
            return bad(format!("p = {} is not a prime in [2, 65536]", self.p));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.k == 0 || self.k > self.m {
            return bad(format!("k = {} must satisfy 1 <= k <= m = {}", self.k, self.m));
        }
        if self.k > self.p as usize {
            return bad(format!("k = {} exceeds the number of field points p = {}", self.k, self.p));
        }
        if !(128..=256).contains(&self.tag_bits) || !self.tag_bits.is_multiple_of(8) {
            return bad(format!(
                "tag length {} must be a multiple of 8 in [128, 256]",
                self.tag_bits
            ));
        }
        Ok(())
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated modulus")
    }

    /// Width of one sketch value in bits, `ceil(log2 p)`.
    pub fn sketch_bits(&self) -> u32 {
        self.field().bit_width()
    }

    /// Bytes per sketch value in the container.
    pub fn sketch_bytes(&self) -> usize {
        if self.sketch_bits() <= 8 {
            1
        } else {
            2
        }
    }

    pub fn tag_bytes(&self) -> usize {
        self.tag_bits as usize / 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnrollOptions {
    /// How many times `N` may be redrawn when `φ` has fewer than `k` distinct values.
    pub max_reseed: u32,
}

impl Default for EnrollOptions {
    fn default() -> Self {
        Self { max_reseed: 8 }
    }
}

/// Public record stored after enrollment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperData {
    pub params: SkeParams,
    pub nonce_n: Nonce,
    pub nonce_nhat: Nonce,
    pub ss: Vec<u32>,
    pub tags: Vec<Tag>,
    pub format_version: u16,
}

impl HelperData {
    pub fn validate(&self) -> Result<(), SkeError> {
        self.params.validate()?;
        let bad = |msg: String| Err(SkeError::InvariantViolation(msg));
        if self.format_version != FORMAT_VERSION {
            return Err(SkeError::VersionUnsupported(self.format_version));
        }
        if self.nonce_n == self.nonce_nhat {
            return bad("nonces are identical".into());
        }
        if self.ss.len() != self.params.m || self.tags.len() != self.params.m {
            return bad(format!(
                "expected {} sketch values and tags, found {} and {}",
                self.params.m,
                self.ss.len(),
                self.tags.len()
            ));
        }
        let limit = 1u32 << self.params.sketch_bits();
        if let Some(i) = self.ss.iter().position(|&v| v >= limit) {
            return bad(format!("sketch value {} at index {i} exceeds its bit width", self.ss[i]));
        }
        if let Some(i) = self.tags.iter().position(|t| t.len() != self.params.tag_bytes()) {
            return bad(format!("tag {i} has the wrong length"));
        }
        Ok(())
    }
}

/// The two resilient vectors derived from one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RvPair {
    pub phi: ResilientVector,
    pub phihat: ResilientVector,
}

/// Deduplicated points recovered by tag matching.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnlockingSet {
    pairs: Vec<(u32, u32)>,
}

impl UnlockingSet {
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Outcome of a retrieval attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Retrieval {
    Recovered { secret: Vec<u8>, unlocked: usize },
    Failed { unlocked: usize, needed: usize },
}

impl Retrieval {
    pub fn unlocked(&self) -> usize {
        match self {
            Retrieval::Recovered { unlocked, .. } | Retrieval::Failed { unlocked, .. } => *unlocked,
        }
    }

    pub fn secret(&self) -> Option<&[u8]> {
        match self {
            Retrieval::Recovered { secret, .. } => Some(secret),
            Retrieval::Failed { .. } => None,
        }
    }

    pub fn is_recovered(&self) -> bool {
        matches!(self, Retrieval::Recovered { .. })
    }
}

fn hashers(params: &SkeParams, n: Nonce, nhat: Nonce) -> Result<(IomHasher, IomHasher), SkeError> {
    Ok((
        IomHasher::new(n, params.m, params.p, params.dim)?,
        IomHasher::new(nhat, params.m, params.p, params.dim)?,
    ))
}

fn rv_pair_with(phi: &IomHasher, phihat: &IomHasher, x: &[f64]) -> Result<RvPair, SkeError> {
    Ok(RvPair {
        phi: phi.hash(x)?,
        phihat: phihat.hash(x)?,
    })
}

/// Binds `secret` to `x`, redrawing `N` if `φ` lacks `k` distinct values.
pub fn enroll(
    x: &[f64],
    secret: &[u8],
    params: &SkeParams,
    nonce_n: Nonce,
    nonce_nhat: Nonce,
) -> Result<HelperData, SkeError> {
    enroll_with(x, secret, params, nonce_n, nonce_nhat, EnrollOptions::default())
}

pub fn enroll_with(
    x: &[f64],
    secret: &[u8],
    params: &SkeParams,
    nonce_n: Nonce,
    nonce_nhat: Nonce,
    opts: EnrollOptions,
) -> Result<HelperData, SkeError> {
    params.validate()?;
    if nonce_n == nonce_nhat {
        return Err(SkeError::IdenticalNonces);
    }
    let poly = field::encode_secret(secret, params.k, params.field())?;
    let phihat = IomHasher::new(nonce_nhat, params.m, params.p, params.dim)?.hash(x)?;

    let mut candidate = nonce_n;
    let mut best_unique = 0;
    for attempt in 0..=opts.max_reseed {
        if attempt > 0 {
            candidate = nonce_n.reseed(attempt);
            if candidate == nonce_nhat {
                continue;
            }
        }
        let phi = IomHasher::new(candidate, params.m, params.p, params.dim)?.hash(x)?;
        let unique = phi.unique_count();
        if unique >= params.k {
            let rvs = RvPair { phi, phihat };
            return Ok(seal(&rvs, &poly, params, candidate, nonce_nhat));
        }
        best_unique = best_unique.max(unique);
    }
    Err(SkeError::InsufficientDiversity {
        unique: best_unique,
        needed: params.k,
        attempts: opts.max_reseed + 1,
    })
}

/// Builds helper data from precomputed resilient vectors without reseeding.
pub fn bind_rvs(
    rvs: &RvPair,
    secret: &[u8],
    params: &SkeParams,
    nonce_n: Nonce,
    nonce_nhat: Nonce,
) -> Result<HelperData, SkeError> {
    params.validate()?;
    if nonce_n == nonce_nhat {
        return Err(SkeError::IdenticalNonces);
    }
    check_rv_shape(rvs, params)?;
    let poly = field::encode_secret(secret, params.k, params.field())?;
    let unique = rvs.phi.unique_count();
    if unique < params.k {
        return Err(SkeError::InsufficientDiversity {
            unique,
            needed: params.k,
            attempts: 1,
        });
    }
    Ok(seal(rvs, &poly, params, nonce_n, nonce_nhat))
}

fn check_rv_shape(rvs: &RvPair, params: &SkeParams) -> Result<(), SkeError> {
    for rv in [&rvs.phi, &rvs.phihat] {
        if rv.len() != params.m || rv.range() != params.p {
            return Err(SkeError::ShapeMismatch(format!(
                "resilient vector ({}, {}) does not match m = {}, p = {}",
                rv.len(),
                rv.range(),
                params.m,
                params.p
            )));
        }
    }
    Ok(())
}

fn seal(rvs: &RvPair, poly: &FieldPoly, params: &SkeParams, n: Nonce, nhat: Nonce) -> HelperData {
    let (ss, tags): (Vec<u32>, Vec<Tag>) = rvs
        .phi
        .entries()
        .iter()
        .zip(rvs.phihat.entries())
        .map(|(&phi, &phihat)| {
            let ss = phihat ^ poly.eval(phi);
            (ss, compute_tag(phi, ss, phihat, params.tag_bits))
        })
        .unzip();
    HelperData {
        params: *params,
        nonce_n: n,
        nonce_nhat: nhat,
        ss,
        tags,
        format_version: FORMAT_VERSION,
    }
}

/// Tag-gated decryption followed by x-coordinate deduplication.
///
/// For every index whose tags agree, `ss_i XOR φ̂'_i` is paired with `φ'_i`.
/// The first occurrence of each x-coordinate wins and pairs outside the field
/// are dropped.
pub fn filter_unlock(
    tags: &[Tag],
    query_tags: &[Tag],
    phi: &[u32],
    phihat: &[u32],
    ss: &[u32],
    field: PrimeField,
) -> Result<UnlockingSet, SkeError> {
    let m = tags.len();
    if [query_tags.len(), phi.len(), phihat.len(), ss.len()]
        .iter()
        .any(|&len| len != m)
    {
        return Err(SkeError::ShapeMismatch(format!(
            "tags {}, query tags {}, phi {}, phihat {}, ss {}",
            m,
            query_tags.len(),
            phi.len(),
            phihat.len(),
            ss.len()
        )));
    }
    let p = field.modulus() as usize;
    let mut seen = vec![false; p];
    let mut pairs = Vec::new();
    for i in 0..m {
        if tags[i] != query_tags[i] {
            continue;
        }
        let x = phi[i];
        let y = ss[i] ^ phihat[i];
        if !field.contains(x) || !field.contains(y) {
            continue;
        }
        if !std::mem::replace(&mut seen[x as usize], true) {
            pairs.push((x, y));
        }
    }
    Ok(UnlockingSet { pairs })
}

/// Unlocking set for a query resilient-vector pair.
pub fn unlocking_set(rvs: &RvPair, helper: &HelperData) -> Result<UnlockingSet, SkeError> {
    check_rv_shape(rvs, &helper.params)?;
    let phi = rvs.phi.entries();
    let phihat = rvs.phihat.entries();
    if helper.ss.len() != phi.len() {
        return Err(SkeError::ShapeMismatch(format!(
            "helper has {} sketch values, query has {}",
            helper.ss.len(),
            phi.len()
        )));
    }
    let query_tags: Vec<Tag> = phi
        .iter()
        .zip(phihat)
        .zip(&helper.ss)
        .map(|((&a, &b), &s)| compute_tag(a, s, b, helper.params.tag_bits))
        .collect();
    filter_unlock(&helper.tags, &query_tags, phi, phihat, &helper.ss, helper.params.field())
}

/// Retrieval from a precomputed query pair.
pub fn unlock_rvs(rvs: &RvPair, helper: &HelperData) -> Result<Retrieval, SkeError> {
    let set = unlocking_set(rvs, helper)?;
    let k = helper.params.k;
    if set.len() < k {
        return Ok(Retrieval::Failed {
            unlocked: set.len(),
            needed: k,
        });
    }
    let poly = field::lagrange_interpolate(helper.params.field(), set.pairs(), k)?;
    Ok(Retrieval::Recovered {
        secret: field::decode_secret(&poly),
        unlocked: set.len(),
    })
}

/// Recomputes the resilient-vector pair of `query` and attempts retrieval.
pub fn retrieve(query: &[f64], helper: &HelperData) -> Result<Retrieval, SkeError> {
    helper.validate()?;
    let (phi, phihat) = hashers(&helper.params, helper.nonce_n, helper.nonce_nhat)?;
    let rvs = rv_pair_with(&phi, &phihat, query)?;
    unlock_rvs(&rvs, helper)
}

/// A parameter set with both projection families held in memory.
///
/// Useful when many inputs are enrolled or queried under the same nonce pair;
/// results are identical to the free functions.
#[derive(Debug, Clone)]
pub struct Keyring {
    params: SkeParams,
    phi: IomHasher,
    phihat: IomHasher,
}

impl Keyring {
    pub fn new(params: SkeParams, nonce_n: Nonce, nonce_nhat: Nonce) -> Result<Self, SkeError> {
        params.validate()?;
        if nonce_n == nonce_nhat {
            return Err(SkeError::IdenticalNonces);
        }
        let (mut phi, mut phihat) = hashers(&params, nonce_n, nonce_nhat)?;
        phi.materialize();
        phihat.materialize();
        Ok(Self {
            params,
            phi,
            phihat,
        })
    }

    pub fn params(&self) -> &SkeParams {
        &self.params
    }

    pub fn nonces(&self) -> (Nonce, Nonce) {
        (self.phi.nonce(), self.phihat.nonce())
    }

    pub fn rv_pair(&self, x: &[f64]) -> Result<RvPair, SkeError> {
        rv_pair_with(&self.phi, &self.phihat, x)
    }

    pub fn rv_pairs(&self, xs: &[&[f64]]) -> Result<Vec<RvPair>, SkeError> {
        let phi = self.phi.hash_batch(xs)?;
        let phihat = self.phihat.hash_batch(xs)?;
        Ok(phi
            .into_iter()
            .zip(phihat)
            .map(|(phi, phihat)| RvPair { phi, phihat })
            .collect())
    }

    /// Enrollment under this keyring's nonces, falling back to [`enroll_with`]
    /// (and its reseeding) if `φ` is not diverse enough.
    pub fn enroll(&self, x: &[f64], secret: &[u8]) -> Result<HelperData, SkeError> {
        let (n, nhat) = self.nonces();
        let rvs = self.rv_pair(x)?;
        match bind_rvs(&rvs, secret, &self.params, n, nhat) {
            Err(SkeError::InsufficientDiversity { .. }) => {
                enroll_with(x, secret, &self.params, n, nhat, EnrollOptions::default())
            }
            other => other,
        }
    }

    pub fn retrieve(&self, query: &[f64], helper: &HelperData) -> Result<Retrieval, SkeError> {
        if helper.params != self.params || (helper.nonce_n, helper.nonce_nhat) != self.nonces() {
            return retrieve(query, helper);
        }
        helper.validate()?;
        unlock_rvs(&self.rv_pair(query)?, helper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn params() -> SkeParams {
        SkeParams::new(16, 64, 251, 8, 256).unwrap()
    }

    fn gaussian(rng: &mut impl Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn params_validation() {
        assert!(SkeParams::new(16, 64, 251, 8, 256).is_ok());
        assert!(SkeParams::new(16, 64, 251, 8, 128).is_ok());
        for (d, m, p, k, l) in [
            (0, 64, 251, 8, 256),
            (16, 0, 251, 1, 256),
            (16, 64, 250, 8, 256),
            (16, 64, 251, 0, 256),
            (16, 64, 251, 65, 256),
            (16, 64, 5, 6, 256),
            (16, 64, 251, 8, 120),
            (16, 64, 251, 8, 264),
            (16, 64, 251, 8, 130),
        ] {
            assert!(
                matches!(SkeParams::new(d, m, p, k, l), Err(SkeError::InvalidParams(_))),
                "{d} {m} {p} {k} {l}"
            );
        }
        assert_eq!(params().sketch_bytes(), 1);
        assert_eq!(SkeParams::new(4, 256, 65521, 192, 256).unwrap().sketch_bytes(), 2);
    }

    #[test]
    fn xor_involution_exhaustive() {
        for width in 1..=8u32 {
            let top = 1u32 << width;
            for a in 0..top {
                for b in 0..top {
                    let c = a ^ b;
                    assert!(c < top);
                    assert_eq!(c ^ b, a);
                }
            }
        }
    }

    #[test]
    fn enroll_then_retrieve_same_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params();
        for _ in 0..10 {
            let x = gaussian(&mut rng, p.dim);
            let secret: Vec<u8> = (0..6).map(|_| rng.random_range(1..=255)).collect();
            let (n, nhat) = (Nonce::random(&mut rng), Nonce::random(&mut rng));
            let helper = enroll(&x, &secret, &p, n, nhat).unwrap();
            helper.validate().unwrap();
            let out = retrieve(&x, &helper).unwrap();
            assert_eq!(out.secret(), Some(secret.as_slice()));
        }
    }

    #[test]
    fn enrollment_is_deterministic() {
        let p = params();
        let x: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let a = enroll(&x, b"key", &p, Nonce::new(1), Nonce::new(2)).unwrap();
        let b = enroll(&x, b"key", &p, Nonce::new(1), Nonce::new(2)).unwrap();
        assert_eq!(serialize_helper(&a), serialize_helper(&b));
    }

    #[test]
    fn enroll_errors() {
        let p = params();
        let x = vec![1.0; 16];
        assert!(enroll(&[0.0; 16], b"s", &p, Nonce::new(1), Nonce::new(2))
            .unwrap_err()
            .is_zero_vector());
        assert_eq!(
            enroll(&x, b"s", &p, Nonce::new(1), Nonce::new(1)),
            Err(SkeError::IdenticalNonces)
        );
        // 251^8 < 2^64
        assert!(matches!(
            enroll(&x, &[0xff; 9], &p, Nonce::new(1), Nonce::new(2)),
            Err(SkeError::Field(FieldError::SecretTooLarge { .. }))
        ));
    }

    #[test]
    fn single_coefficient_always_enrolls() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = SkeParams::new(4, 8, 251, 1, 256).unwrap();
        for _ in 0..50 {
            let x = gaussian(&mut rng, 4);
            let opts = EnrollOptions { max_reseed: 0 };
            let helper =
                enroll_with(&x, &[200], &p, Nonce::random(&mut rng), Nonce::new(0), opts).unwrap();
            assert_eq!(retrieve(&x, &helper).unwrap().secret(), Some(&[200u8][..]));
        }
    }

    #[test]
    fn insufficient_diversity_after_retries() {
        // With p = m = k = 3, phi must be a permutation of {0, 1, 2}.
        let p = SkeParams::new(1, 3, 3, 3, 256).unwrap();
        let mut failures = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let opts = EnrollOptions { max_reseed: 0 };
            let r = enroll_with(&[1.0], &[], &p, Nonce::random(&mut rng), Nonce::new(0), opts);
            match r {
                Err(SkeError::InsufficientDiversity { needed: 3, attempts: 1, .. }) => failures += 1,
                Ok(h) => assert_eq!(retrieve(&[1.0], &h).unwrap().secret(), Some(&[][..])),
                Err(e) => panic!("{e}"),
            }
        }
        // P(all distinct) = 3!/27 = 2/9
        assert!(failures > 5, "{failures}");
        let opts = EnrollOptions { max_reseed: 40 };
        let h = enroll_with(&[1.0], &[7], &p, Nonce::new(10), Nonce::new(11), opts).unwrap();
        assert_eq!(retrieve(&[1.0], &h).unwrap().secret(), Some(&[7u8][..]));
    }

    fn toy_tags(phi: &[u32], ss: &[u32], phihat: &[u32]) -> Vec<Tag> {
        phi.iter()
            .zip(ss)
            .zip(phihat)
            .map(|((&a, &s), &b)| compute_tag(a, s, b, 256))
            .collect()
    }

    #[test]
    fn filter_unlock_cases() {
        let f = PrimeField::new(5).unwrap();
        let poly = FieldPoly::new(f, vec![2, 2, 1]).unwrap();
        let phi = [3u32, 1, 2, 3, 2];
        let phihat = [2u32, 3, 0, 1, 1];
        let ss: Vec<u32> = phi.iter().zip(&phihat).map(|(&a, &b)| b ^ poly.eval(a)).collect();
        let tags = toy_tags(&phi, &ss, &phihat);

        // perfect match: unique x-coordinates, all on the polynomial
        let u = filter_unlock(&tags, &tags, &phi, &phihat, &ss, f).unwrap();
        assert_eq!(u.pairs(), &[(3, poly.eval(3)), (1, poly.eval(1)), (2, poly.eval(2))]);

        // nothing matches
        let other = toy_tags(&[0, 0, 0, 0, 0], &ss, &[4, 4, 4, 4, 4]);
        assert!(filter_unlock(&tags, &other, &phi, &phihat, &ss, f).unwrap().is_empty());

        // only index 1 matches
        let q_phi = [0u32, 1, 4, 4, 4];
        let q_phihat = [4u32, 3, 4, 4, 4];
        let q_tags = toy_tags(&q_phi, &ss, &q_phihat);
        let u = filter_unlock(&tags, &q_tags, &q_phi, &q_phihat, &ss, f).unwrap();
        assert_eq!(u.pairs(), &[(1, ss[1] ^ phihat[1])]);
        assert_eq!(u.pairs()[0].1, poly.eval(1));

        assert!(matches!(
            filter_unlock(&tags, &tags[..4], &phi, &phihat, &ss, f),
            Err(SkeError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn filter_drops_out_of_field_values() {
        let f = PrimeField::new(5).unwrap();
        // ss ^ phihat = 6 >= 5, tags forced equal
        let t = vec![compute_tag(0, 0, 0, 128)];
        let u = filter_unlock(&t, &t, &[1], &[2], &[4], f).unwrap();
        assert!(u.is_empty());
    }

    /// End-to-end walkthrough on GF(5); every expected value comes from
    /// direct evaluation.
    #[test]
    fn toy_walkthrough_gf5() {
        let f = PrimeField::new(5).unwrap();
        let secret_poly = FieldPoly::new(f, vec![2, 2, 1]).unwrap();
        let projections: Vec<u32> = [3u32, 1, 2, 3, 2].iter().map(|&x| secret_poly.eval(x)).collect();
        assert_eq!(projections, vec![2, 0, 0, 2, 0]);
        let phihat = [2u32, 3, 0, 1, 1];
        let ss: Vec<u32> = projections.iter().zip(&phihat).map(|(a, b)| a ^ b).collect();
        assert_eq!(ss, vec![0, 3, 0, 3, 1]);

        let phi = [3u32, 1, 2, 3, 2];
        let tags = toy_tags(&phi, &ss, &phihat);
        let q_phi = [3u32, 1, 1, 2, 2];
        let q_phihat = [2u32, 3, 1, 0, 1];
        let q_tags = toy_tags(&q_phi, &ss, &q_phihat);
        let u = filter_unlock(&tags, &q_tags, &q_phi, &q_phihat, &ss, f).unwrap();
        assert_eq!(u.pairs(), &[(3, 2), (1, 0), (2, 0)]);
        let rec = field::lagrange_interpolate(f, u.pairs(), 3).unwrap();
        assert_eq!(rec, secret_poly);
        assert_eq!(rec.eval(0), 2);
    }

    #[test]
    fn keyring_matches_free_functions() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ring = Keyring::new(p, Nonce::new(3), Nonce::new(4)).unwrap();
        let x = gaussian(&mut rng, p.dim);
        let y = gaussian(&mut rng, p.dim);
        let a = ring.enroll(&x, b"abc").unwrap();
        let b = enroll(&x, b"abc", &p, Nonce::new(3), Nonce::new(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ring.retrieve(&y, &a).unwrap(), retrieve(&y, &a).unwrap());
        assert_eq!(ring.retrieve(&x, &a).unwrap().secret(), Some(&b"abc"[..]));
        let batch = ring.rv_pairs(&[&x, &y]).unwrap();
        assert_eq!(batch[1], ring.rv_pair(&y).unwrap());
    }

    #[test]
    fn altered_sketch_drops_exactly_that_index() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = gaussian(&mut rng, p.dim);
        let helper = enroll(&x, b"zz", &p, Nonce::new(5), Nonce::new(6)).unwrap();
        let ring = Keyring::new(p, Nonce::new(5), Nonce::new(6)).unwrap();
        let rvs = ring.rv_pair(&x).unwrap();
        let before = unlocking_set(&rvs, &helper).unwrap();
        // choose an index whose x-coordinate is not repeated elsewhere
        let phi = rvs.phi.entries();
        let i = (0..p.m)
            .find(|&i| phi.iter().filter(|&&v| v == phi[i]).count() == 1)
            .unwrap();
        let mut tampered = helper.clone();
        tampered.ss[i] ^= 1;
        let after = unlocking_set(&rvs, &tampered).unwrap();
        assert_eq!(after.len(), before.len() - 1);
        assert!(!after.pairs().iter().any(|&(xc, _)| xc == phi[i]));
    }
}
