//! Binary helper-data container.
//!
//! ```text
//! offset  size          field
//! 0       4             magic "SKE1"
//! 4       2             format version (1)
//! 6       4             d
//! 10      4             m
//! 14      2             p
//! 16      2             k
//! 18      2             tag length in bits
//! 20      16            seed of N
//! 36      16            seed of N̂
//! 52      m * w         sketch values, w = 1 if p < 256 else 2
//! ..      m * bits/8    tags
//! ```
//!
//! All integers are big-endian. Trailing bytes are rejected.

use super::{HelperData, SkeError, SkeParams, Tag};
use crate::rsv::Nonce;

pub const MAGIC: &[u8; 4] = b"SKE1";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 52;

pub fn serialize_helper(helper: &HelperData) -> Vec<u8> {
    let params = &helper.params;
    let width = params.sketch_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + params.m * (width + params.tag_bytes()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&helper.format_version.to_be_bytes());
    out.extend_from_slice(&(params.dim as u32).to_be_bytes());
    out.extend_from_slice(&(params.m as u32).to_be_bytes());
    out.extend_from_slice(&(params.p as u16).to_be_bytes());
    out.extend_from_slice(&(params.k as u16).to_be_bytes());
    out.extend_from_slice(&params.tag_bits.to_be_bytes());
    out.extend_from_slice(&helper.nonce_n.to_bytes());
    out.extend_from_slice(&helper.nonce_nhat.to_bytes());
    for &v in &helper.ss {
        if width == 1 {
            out.push(v as u8);
        } else {
            out.extend_from_slice(&(v as u16).to_be_bytes());
        }
    }
    for tag in &helper.tags {
        out.extend_from_slice(tag.as_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], SkeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            SkeError::MalformedContainer(format!(
                "truncated while reading {what} at offset {}",
                self.pos
            ))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, SkeError> {
        Ok(u16::from_be_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, SkeError> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn nonce(&mut self, what: &str) -> Result<Nonce, SkeError> {
        Ok(Nonce::from_bytes(self.take(16, what)?.try_into().unwrap()))
    }
}

pub fn deserialize_helper(bytes: &[u8]) -> Result<HelperData, SkeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(SkeError::MalformedContainer("bad magic".into()));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(SkeError::VersionUnsupported(version));
    }
    let dim = r.u32("d")? as usize;
    let m = r.u32("m")? as usize;
    let p = r.u16("p")? as u32;
    let k = r.u16("k")? as usize;
    let tag_bits = r.u16("tag length")?;
    let params = SkeParams {
        dim,
        m,
        p,
        k,
        tag_bits,
    };
    params
        .validate()
        .map_err(|e| SkeError::InvariantViolation(e.to_string()))?;
    let nonce_n = r.nonce("seed N")?;
    let nonce_nhat = r.nonce("seed N-hat")?;

    let width = params.sketch_bytes();
    let raw = r.take(m * width, "sketch")?;
    let ss: Vec<u32> = if width == 1 {
        raw.iter().map(|&b| b as u32).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
            .collect()
    };
    let tag_len = params.tag_bytes();
    let tags: Vec<Tag> = r
        .take(m * tag_len, "tags")?
        .chunks_exact(tag_len)
        .map(|c| Tag::from_slice(c).expect("tag length validated"))
        .collect();
    if r.pos != bytes.len() {
        return Err(SkeError::MalformedContainer(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let helper = HelperData {
        params,
        nonce_n,
        nonce_nhat,
        ss,
        tags,
        format_version: version,
    };
    helper.validate()?;
    Ok(helper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ske::compute_tag;
    use proptest::prelude::*;

    fn arb_helper() -> impl Strategy<Value = HelperData> {
        (
            prop_oneof![Just(5u32), Just(251), Just(257), Just(65521)],
            1usize..40,
            prop_oneof![Just(128u16), Just(192), Just(256)],
            any::<u128>(),
            any::<u128>(),
            1usize..300,
        )
            .prop_filter("distinct nonces", |t| t.3 != t.4)
            .prop_flat_map(|(p, m, bits, n, nhat, dim)| {
                let width = crate::field::PrimeField::new(p).unwrap().bit_width();
                (
                    Just((p, m, bits, n, nhat, dim)),
                    proptest::collection::vec(0u32..(1 << width), m),
                    proptest::collection::vec((0u32..p, 0u32..p), m),
                    1usize..=m.min(p as usize),
                )
            })
            .prop_map(|((p, m, bits, n, nhat, dim), ss, coords, k)| {
                let tags = ss
                    .iter()
                    .zip(&coords)
                    .map(|(&s, &(a, b))| compute_tag(a, s, b, bits))
                    .collect();
                HelperData {
                    params: SkeParams::new(dim, m, p, k, bits).unwrap(),
                    nonce_n: Nonce::new(n),
                    nonce_nhat: Nonce::new(nhat),
                    ss,
                    tags,
                    format_version: FORMAT_VERSION,
                }
            })
    }

    proptest! {
        #[test]
        fn roundtrip_identity(helper in arb_helper()) {
            let bytes = serialize_helper(&helper);
            let expected_len = HEADER_LEN
                + helper.params.m * (helper.params.sketch_bytes() + helper.params.tag_bytes());
            prop_assert_eq!(bytes.len(), expected_len);
            let back = deserialize_helper(&bytes).unwrap();
            prop_assert_eq!(serialize_helper(&back), bytes);
            prop_assert_eq!(back, helper);
        }
    }

    fn sample() -> HelperData {
        let params = SkeParams::new(3, 4, 251, 2, 128).unwrap();
        HelperData {
            params,
            nonce_n: Nonce::new(1),
            nonce_nhat: Nonce::new(2),
            ss: vec![0, 255, 17, 3],
            tags: (0..4).map(|i| compute_tag(i, 0, i, 128)).collect(),
            format_version: FORMAT_VERSION,
        }
    }

    #[test]
    fn header_layout() {
        let bytes = serialize_helper(&sample());
        assert_eq!(&bytes[..4], b"SKE1");
        assert_eq!(&bytes[4..6], &[0, 1]);
        assert_eq!(&bytes[6..10], &[0, 0, 0, 3]);
        assert_eq!(&bytes[10..14], &[0, 0, 0, 4]);
        assert_eq!(&bytes[14..16], &[0, 251]);
        assert_eq!(&bytes[16..18], &[0, 2]);
        assert_eq!(&bytes[18..20], &[0, 128]);
        assert_eq!(bytes[35], 1);
        assert_eq!(bytes[51], 2);
        assert_eq!(&bytes[52..56], &[0, 255, 17, 3]);
        assert_eq!(bytes.len(), 52 + 4 + 4 * 16);
    }

    #[test]
    fn truncated_input_is_malformed() {
        let bytes = serialize_helper(&sample());
        for cut in [0, 3, 10, 51, 55, bytes.len() - 1] {
            assert!(matches!(
                deserialize_helper(&bytes[..cut]),
                Err(SkeError::MalformedContainer(_))
            ));
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(deserialize_helper(&long), Err(SkeError::MalformedContainer(_))));
    }

    #[test]
    fn rejects_bad_header_fields() {
        let good = serialize_helper(&sample());
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(deserialize_helper(&b), Err(SkeError::MalformedContainer(_))));
        let mut b = good.clone();
        b[5] = 2;
        assert_eq!(deserialize_helper(&b), Err(SkeError::VersionUnsupported(2)));
        let mut b = good.clone();
        b[15] = 250; // p = 250
        assert!(matches!(deserialize_helper(&b), Err(SkeError::InvariantViolation(_))));
        let mut b = good.clone();
        b[51] = 1; // identical nonces
        assert!(matches!(deserialize_helper(&b), Err(SkeError::InvariantViolation(_))));
    }

    #[test]
    fn wide_sketch_values_are_bounded() {
        let params = SkeParams::new(3, 2, 257, 1, 128).unwrap();
        let mut h = HelperData {
            params,
            nonce_n: Nonce::new(1),
            nonce_nhat: Nonce::new(2),
            ss: vec![511, 0],
            tags: vec![compute_tag(0, 0, 0, 128); 2],
            format_version: FORMAT_VERSION,
        };
        assert_eq!(deserialize_helper(&serialize_helper(&h)).unwrap(), h);
        h.ss[0] = 512;
        assert!(matches!(
            deserialize_helper(&serialize_helper(&h)),
            Err(SkeError::InvariantViolation(_))
        ));
    }
}
