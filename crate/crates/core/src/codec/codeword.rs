//! Bit-exact codeword format.
//!
//! ```text
//! "TCPD" | 0x01 | N:u8 | R:u8 | n:u16be | gamma_num:u32be | gamma_den:u32be
//!        | model_sha256:[u8; 32] | flag:u8 (0 typical, 1 fallback) | L:u8 | index:[u8; L] (big-endian)
//! ```
//!
//! The index uses the fewest bytes that hold it, so index 0 has `L = 0` and a
//! leading zero byte is rejected.

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;

use crate::error::{CodewordError, Error, Result};
use crate::model::ModelSpec;
use crate::rational::{self, Rational};
use crate::typicality::TypicalityParams;

pub const MAGIC: &[u8; 4] = b"TCPD";
pub const VERSION: u8 = 0x01;
/// Bytes before the index payload.
pub const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 2 + 4 + 4 + 32 + 1 + 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CodewordHeader {
    pub order: u8,
    pub components: u8,
    pub dim: u16,
    pub gamma_num: u32,
    pub gamma_den: u32,
    pub model_hash: [u8; 32],
}

impl CodewordHeader {
    pub fn new(m: &ModelSpec, p: &TypicalityParams) -> Result<Self> {
        let too_big = |what: &str| Error::InvalidParameter(format!("{what} does not fit the codeword header"));
        let g = p.gamma();
        Ok(CodewordHeader {
            order: u8::try_from(m.order()).map_err(|_| too_big("order"))?,
            components: u8::try_from(m.components()).map_err(|_| too_big("components"))?,
            dim: u16::try_from(m.dim()).map_err(|_| too_big("dim"))?,
            gamma_num: g.numer().to_u32().ok_or_else(|| too_big("gamma numerator"))?,
            gamma_den: g.denom().to_u32().ok_or_else(|| too_big("gamma denominator"))?,
            model_hash: m.hash(),
        })
    }

    pub fn gamma(&self) -> Rational {
        Rational::new(BigInt::from(self.gamma_num), BigInt::from(self.gamma_den))
    }

    /// Names the first field that differs from `other`.
    pub(crate) fn mismatch(&self, other: &CodewordHeader) -> Option<&'static str> {
        if self.order != other.order {
            Some("order")
        } else if self.components != other.components {
            Some("components")
        } else if self.dim != other.dim {
            Some("dim")
        } else if self.gamma_num != other.gamma_num || self.gamma_den != other.gamma_den {
            Some("gamma")
        } else if self.model_hash != other.model_hash {
            Some("model hash")
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flag {
    Typical,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub header: CodewordHeader,
    pub flag: Flag,
    pub index: u64,
}

impl Codeword {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let index = self.index.to_be_bytes();
        let skip = index.iter().take_while(|&&b| b == 0).count();
        let mut out = Vec::with_capacity(HEADER_LEN + 8);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(h.order);
        out.push(h.components);
        out.extend_from_slice(&h.dim.to_be_bytes());
        out.extend_from_slice(&h.gamma_num.to_be_bytes());
        out.extend_from_slice(&h.gamma_den.to_be_bytes());
        out.extend_from_slice(&h.model_hash);
        out.push(match self.flag {
            Flag::Typical => 0,
            Flag::Fallback => 1,
        });
        out.push((8 - skip) as u8);
        out.extend_from_slice(&index[skip..]);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CodewordError> {
        if buf.len() < 4 {
            return Err(CodewordError::Truncated);
        }
        if &buf[..4] != MAGIC {
            return Err(CodewordError::BadMagic);
        }
        let version = *buf.get(4).ok_or(CodewordError::Truncated)?;
        if version != VERSION {
            return Err(CodewordError::UnsupportedVersion(version));
        }
        if buf.len() < HEADER_LEN {
            return Err(CodewordError::Truncated);
        }
        let be_u32 = |at: usize| u32::from_be_bytes([buf[at], buf[at + 1], buf[at + 2], buf[at + 3]]);
        let mut model_hash = [0u8; 32];
        model_hash.copy_from_slice(&buf[17..49]);
        let header = CodewordHeader {
            order: buf[5],
            components: buf[6],
            dim: u16::from_be_bytes([buf[7], buf[8]]),
            gamma_num: be_u32(9),
            gamma_den: be_u32(13),
            model_hash,
        };
        let flag = match buf[49] {
            0 => Flag::Typical,
            1 => Flag::Fallback,
            b => return Err(CodewordError::BadFlag(b)),
        };
        let len = buf[50] as usize;
        let payload = &buf[HEADER_LEN..];
        if payload.len() < len {
            return Err(CodewordError::Truncated);
        }
        if payload.len() > len {
            return Err(CodewordError::TrailingBytes(payload.len() - len));
        }
        if payload.first() == Some(&0) {
            return Err(CodewordError::NonCanonicalIndex);
        }
        let value = BigUint::from_bytes_be(payload);
        let index = value.to_u64().ok_or_else(|| CodewordError::IndexOutOfRange {
            index: value.to_string(),
            size: u64::MAX,
        })?;
        Ok(Codeword { header, flag, index })
    }

    /// Payload length in nats: `L * 8 * ln 2`.
    pub fn payload_nats(&self) -> f64 {
        let bytes = 8 - self.index.leading_zeros() as usize / 8;
        bytes as f64 * 8.0 * std::f64::consts::LN_2
    }

    pub fn gamma_string(&self) -> String {
        rational::format(&self.header.gamma())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Distribution};
    use proptest::prelude::*;

    fn header() -> CodewordHeader {
        let m = ModelSpec::iid(3, 4, 1, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        CodewordHeader::new(&m, &TypicalityParams::parse("1/10").unwrap()).unwrap()
    }

    #[test]
    fn layout_is_pinned() {
        let c = Codeword {
            header: header(),
            flag: Flag::Fallback,
            index: 0x0102,
        };
        let b = c.to_bytes();
        assert_eq!(&b[..9], &[b'T', b'C', b'P', b'D', 1, 3, 1, 0, 4]);
        assert_eq!(&b[9..17], &[0, 0, 0, 1, 0, 0, 0, 10]);
        assert_eq!(&b[49..], &[1, 2, 1, 2]);
        assert_eq!(b.len(), HEADER_LEN + 2);
    }

    #[test]
    fn zero_index_has_empty_payload() {
        let c = Codeword {
            header: header(),
            flag: Flag::Typical,
            index: 0,
        };
        let b = c.to_bytes();
        assert_eq!(b.len(), HEADER_LEN);
        assert_eq!(b[50], 0);
        assert_eq!(Codeword::from_bytes(&b).unwrap(), c);
    }

    #[test]
    fn malformed_codewords_are_rejected() {
        let good = Codeword {
            header: header(),
            flag: Flag::Typical,
            index: 300,
        }
        .to_bytes();
        assert_eq!(Codeword::from_bytes(&good[..good.len() - 1]), Err(CodewordError::Truncated));
        assert_eq!(Codeword::from_bytes(&good[..20]), Err(CodewordError::Truncated));
        let mut t = good.clone();
        t.push(7);
        assert_eq!(Codeword::from_bytes(&t), Err(CodewordError::TrailingBytes(1)));
        let mut m = good.clone();
        m[1] = b'X';
        assert_eq!(Codeword::from_bytes(&m), Err(CodewordError::BadMagic));
        let mut v = good.clone();
        v[4] = 2;
        assert_eq!(Codeword::from_bytes(&v), Err(CodewordError::UnsupportedVersion(2)));
        let mut f = good.clone();
        f[49] = 9;
        assert_eq!(Codeword::from_bytes(&f), Err(CodewordError::BadFlag(9)));
        let mut z = good[..HEADER_LEN].to_vec();
        z[50] = 3;
        z.extend_from_slice(&[0, 1, 44]);
        assert_eq!(Codeword::from_bytes(&z), Err(CodewordError::NonCanonicalIndex));
        let mut huge = good[..HEADER_LEN].to_vec();
        huge[50] = 9;
        huge.extend_from_slice(&[1; 9]);
        assert!(matches!(Codeword::from_bytes(&huge), Err(CodewordError::IndexOutOfRange { .. })));
    }

    #[test]
    fn oversized_gamma_is_refused() {
        let m = ModelSpec::iid(1, 2, 1, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        let p = TypicalityParams::new(Rational::new(1.into(), BigInt::from(1u64 << 40))).unwrap();
        assert!(CodewordHeader::new(&m, &p).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(index in any::<u64>(), fallback in any::<bool>(), hash in any::<[u8; 32]>()) {
            let mut h = header();
            h.model_hash = hash;
            let c = Codeword { header: h, flag: if fallback { Flag::Fallback } else { Flag::Typical }, index };
            let b = c.to_bytes();
            prop_assert_eq!(Codeword::from_bytes(&b).unwrap(), c.clone());
            prop_assert_eq!(Codeword::from_bytes(&b).unwrap().to_bytes(), b);
        }
    }
}
