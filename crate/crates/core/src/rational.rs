//! Exact rational scalars and their text and binary encodings.
//!
//! Text form is `"p"` or `"p/q"` in lowest terms with `q > 1`. The binary
//! form is a zigzag LEB128 numerator followed by an LEB128 denominator.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::ParseRational(s.to_owned());
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest `f64`. Values close to one keep full relative precision.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // out of f64 range: fall back to the sign
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Natural logarithm of a positive rational, accurate near one.
pub fn ln(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let half = ratio(1, 2);
    let two = int(2);
    if *r > half && *r < two {
        (to_f64(&(r - Rational::one()))).ln_1p()
    } else {
        to_f64(r).ln()
    }
}

/// Serde adapter: rationals travel as `"p/q"` strings, integers are also accepted on input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JsonRational(pub Rational);

impl Serialize for JsonRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(&self.0))
    }
}

impl<'de> Deserialize<'de> for JsonRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = JsonRational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                parse(v).map(JsonRational).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(JsonRational(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(JsonRational(Rational::from_integer(BigInt::from(v))))
            }
        }
        d.deserialize_any(V)
    }
}

impl From<Rational> for JsonRational {
    fn from(r: Rational) -> Self {
        JsonRational(r)
    }
}

pub(crate) fn to_json_vec(v: &[Rational]) -> Vec<JsonRational> {
    v.iter().cloned().map(JsonRational).collect()
}

pub(crate) fn from_json_vec(v: Vec<JsonRational>) -> Vec<Rational> {
    v.into_iter().map(|j| j.0).collect()
}

// ---- varints ----

pub fn write_uvarint(v: &BigUint, out: &mut Vec<u8>) {
    let mut bytes = v.to_radix_le(128);
    // to_radix_le(0) yields [0]
    let last = bytes.len() - 1;
    for b in &mut bytes[..last] {
        *b |= 0x80;
    }
    out.extend_from_slice(&bytes);
}

pub fn write_svarint(v: &BigInt, out: &mut Vec<u8>) {
    let mag = v.magnitude();
    let zz: BigUint = if v.sign() == Sign::Minus {
        (mag << 1u32) - 1u32
    } else {
        mag << 1u32
    };
    write_uvarint(&zz, out);
}

pub(crate) fn write_svarint_i128(v: i128, out: &mut Vec<u8>) {
    let mut zz = ((v << 1) ^ (v >> 127)) as u128;
    loop {
        let byte = (zz & 0x7f) as u8;
        zz >>= 7;
        if zz == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Reads one LEB128 value, advancing `pos`. `None` on truncation.
pub fn read_uvarint(buf: &[u8], pos: &mut usize) -> Option<BigUint> {
    let start = *pos;
    loop {
        let b = *buf.get(*pos)?;
        *pos += 1;
        if b & 0x80 == 0 {
            break;
        }
    }
    let digits: Vec<u8> = buf[start..*pos].iter().map(|b| b & 0x7f).collect();
    BigUint::from_radix_le(&digits, 128)
}

pub fn read_svarint(buf: &[u8], pos: &mut usize) -> Option<BigInt> {
    let zz = read_uvarint(buf, pos)?;
    let neg = zz.is_odd();
    let mag: BigUint = (zz + u32::from(neg)) >> 1u32;
    Some(if neg {
        -BigInt::from(mag)
    } else {
        BigInt::from(mag)
    })
}

pub fn write_rational(r: &Rational, out: &mut Vec<u8>) {
    write_svarint(r.numer(), out);
    write_uvarint(r.denom().magnitude(), out);
}

pub fn read_rational(buf: &[u8], pos: &mut usize) -> Option<Rational> {
    let num = read_svarint(buf, pos)?;
    let den = read_uvarint(buf, pos)?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, BigInt::from(den)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_normalizes() {
        assert_eq!(parse("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse("-3").unwrap(), int(-3));
        assert_eq!(parse(" 6 / -4 ").unwrap(), ratio(-3, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert_eq!(format(&ratio(6, -4)), "-3/2");
        assert_eq!(format(&int(7)), "7");
    }

    #[test]
    fn json_accepts_ints_and_strings() {
        let v: Vec<JsonRational> = serde_json::from_str(r#"[1, "-1", "3/6"]"#).unwrap();
        assert_eq!(from_json_vec(v), vec![int(1), int(-1), ratio(1, 2)]);
        let s = serde_json::to_string(&to_json_vec(&[ratio(-2, 3), int(4)])).unwrap();
        assert_eq!(s, r#"["-2/3","4"]"#);
    }

    #[test]
    fn small_varints_are_hand_checked() {
        let mut out = Vec::new();
        write_svarint(&BigInt::from(-1), &mut out);
        write_svarint(&BigInt::from(1), &mut out);
        write_svarint(&BigInt::from(64), &mut out);
        write_uvarint(&BigUint::from(300u32), &mut out);
        assert_eq!(out, vec![0x01, 0x02, 0x80, 0x01, 0xac, 0x02]);
    }

    #[test]
    fn ln_is_accurate_near_one() {
        let r = ratio(999_999, 1_000_000);
        let expected = -1.000_000_500_000_333_3e-6;
        assert!((ln(&r) - expected).abs() < 1e-20);
    }

    proptest! {
        #[test]
        fn i128_and_bigint_varints_agree(v in any::<i64>(), shift in 0u32..60) {
            let x = (v as i128) << shift;
            let mut a = Vec::new();
            let mut b = Vec::new();
            write_svarint_i128(x, &mut a);
            write_svarint(&BigInt::from(x), &mut b);
            prop_assert_eq!(&a, &b);
            let mut pos = 0;
            prop_assert_eq!(read_svarint(&a, &mut pos), Some(BigInt::from(x)));
            prop_assert_eq!(pos, a.len());
        }

        #[test]
        fn rational_binary_round_trip(n in any::<i64>(), d in 1i64..i64::MAX) {
            let r = ratio(n, d);
            let mut buf = Vec::new();
            write_rational(&r, &mut buf);
            let mut pos = 0;
            prop_assert_eq!(read_rational(&buf, &mut pos), Some(r));
            prop_assert_eq!(pos, buf.len());
        }
    }
}
