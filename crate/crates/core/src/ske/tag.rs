use sha2::{Digest, Sha256};

const PHI_SEP: u8 = 0x01;
const SS_SEP: u8 = 0x02;
const PHIHAT_SEP: u8 = 0x03;

/// Truncated SHA-256 tag of one `(φ_i, ss_i, φ̂_i)` triple.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag {
    bytes: [u8; 32],
    len: u8,
}

impl Tag {
    /// Builds a tag from raw bytes (1 to 32 of them).
    pub fn from_slice(raw: &[u8]) -> Option<Self> {
        if raw.is_empty() || raw.len() > 32 {
            return None;
        }
        let mut bytes = [0u8; 32];
        bytes[..raw.len()].copy_from_slice(raw);
        Some(Self {
            bytes,
            len: raw.len() as u8,
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl std::fmt::Debug for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tag(")?;
        for b in self.as_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// `H(φ || ss || φ̂)` truncated to `tag_bits`.
///
/// Hash input is nine bytes: `0x01 φ 0x02 ss 0x03 φ̂`, each operand a 16-bit
/// big-endian integer. Only the low 16 bits of each operand are encoded.
pub fn compute_tag(phi: u32, ss: u32, phihat: u32, tag_bits: u16) -> Tag {
    let mut input = [0u8; 9];
    input[0] = PHI_SEP;
    input[1..3].copy_from_slice(&(phi as u16).to_be_bytes());
    input[3] = SS_SEP;
    input[4..6].copy_from_slice(&(ss as u16).to_be_bytes());
    input[6] = PHIHAT_SEP;
    input[7..9].copy_from_slice(&(phihat as u16).to_be_bytes());
    let digest = Sha256::digest(input);
    let len = (tag_bits / 8).clamp(1, 32) as usize;
    Tag::from_slice(&digest[..len]).expect("length within digest")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn deterministic_and_truncated() {
        let a = compute_tag(3, 0, 2, 256);
        assert_eq!(a, compute_tag(3, 0, 2, 256));
        assert_eq!(a.len(), 32);
        let short = compute_tag(3, 0, 2, 128);
        assert_eq!(short.len(), 16);
        assert_eq!(short.as_bytes(), &a.as_bytes()[..16]);
    }

    #[test]
    fn order_sensitive() {
        assert_ne!(compute_tag(3, 0, 2, 256), compute_tag(2, 0, 3, 256));
        assert_ne!(compute_tag(1, 2, 3, 256), compute_tag(2, 1, 3, 256));
    }

    #[test]
    fn known_encoding() {
        let input = [0x01, 0x00, 0x03, 0x02, 0x00, 0x00, 0x03, 0x00, 0x02];
        let expect = Sha256::digest(input);
        assert_eq!(compute_tag(3, 0, 2, 256).as_bytes(), &expect[..]);
    }

    #[test]
    fn single_bit_flips_change_the_tag() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut seen = HashSet::new();
        for _ in 0..1000 {
            let v = [rng.random::<u16>() as u32, rng.random::<u16>() as u32, rng.random::<u16>() as u32];
            let base = compute_tag(v[0], v[1], v[2], 256);
            seen.insert(base);
            let which = rng.random_range(0..3);
            let bit = rng.random_range(0..16);
            let mut w = v;
            w[which] ^= 1 << bit;
            assert_ne!(base, compute_tag(w[0], w[1], w[2], 256));
        }
        assert!(seen.len() >= 999);
    }
}
