//! Binary dumps of tensors and factor matrices.
//!
//! Tensor: `"TCPT" 0x01 order:u8 dim:u16be` then the entries row-major.
//! Matrix: `"TCPM" 0x01 mode:u8 rows:u16be cols:u16be` then the entries row-major.
//! Each entry is a zigzag LEB128 numerator followed by a LEB128 denominator,
//! in lowest terms.

use super::dense::ExactTensor;
use super::matrix::RationalMatrix;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

const TENSOR_MAGIC: &[u8; 4] = b"TCPT";
const MATRIX_MAGIC: &[u8; 4] = b"TCPM";
const VERSION: u8 = 1;

fn malformed(msg: impl Into<String>) -> Error {
    Error::Dump(msg.into())
}

fn narrow<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| malformed(format!("{what} {v} does not fit the header")))
}

pub fn write_tensor(t: &ExactTensor) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + 2 * t.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.push(VERSION);
    out.push(narrow::<u8>(t.order(), "order")?);
    out.extend_from_slice(&narrow::<u16>(t.dim(), "dim")?.to_be_bytes());
    for e in t.entries() {
        rational::write_rational(e, &mut out);
    }
    Ok(out)
}

pub fn write_matrix(m: &RationalMatrix, mode: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + 2 * m.data().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.push(VERSION);
    out.push(narrow::<u8>(mode, "mode")?);
    out.extend_from_slice(&narrow::<u16>(m.rows(), "rows")?.to_be_bytes());
    out.extend_from_slice(&narrow::<u16>(m.cols(), "cols")?.to_be_bytes());
    for e in m.data() {
        rational::write_rational(e, &mut out);
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let s = self.buf.get(self.pos..end).ok_or_else(|| malformed("truncated header"))?;
        self.pos = end;
        Ok(s)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(malformed("bad magic bytes"));
        }
        match self.take(1)?[0] {
            VERSION => Ok(()),
            v => Err(malformed(format!("unsupported version {v}"))),
        }
    }

    fn u8(&mut self) -> Result<usize> {
        Ok(self.take(1)?[0] as usize)
    }

    fn u16(&mut self) -> Result<usize> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]) as usize)
    }

    fn entries(&mut self, count: usize) -> Result<Vec<Rational>> {
        // guard against absurd counts before allocating: each entry takes at least 2 bytes
        if count > (self.buf.len() - self.pos) / 2 {
            return Err(malformed("truncated entries"));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let num_start = self.pos;
            let r = rational::read_rational(self.buf, &mut self.pos)
                .ok_or_else(|| malformed(format!("bad entry at byte {num_start}")))?;
            let mut canonical = Vec::new();
            rational::write_rational(&r, &mut canonical);
            if canonical != self.buf[num_start..self.pos] {
                return Err(malformed(format!("non-canonical entry at byte {num_start}")));
            }
            out.push(r);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(malformed(format!("{n} trailing bytes"))),
        }
    }
}

pub fn read_tensor(buf: &[u8]) -> Result<ExactTensor> {
    let mut r = Reader { buf, pos: 0 };
    r.header(TENSOR_MAGIC)?;
    let order = r.u8()?;
    let dim = r.u16()?;
    let len = u32::try_from(order)
        .ok()
        .and_then(|o| dim.checked_pow(o))
        .ok_or_else(|| malformed("tensor too large"))?;
    let entries = r.entries(len)?;
    r.finish()?;
    ExactTensor::new(order, dim, entries)
}

/// Reads a matrix dump, returning its mode tag and the matrix.
pub fn read_matrix(buf: &[u8]) -> Result<(usize, RationalMatrix)> {
    let mut r = Reader { buf, pos: 0 };
    r.header(MATRIX_MAGIC)?;
    let mode = r.u8()?;
    let rows = r.u16()?;
    let cols = r.u16()?;
    let data = r.entries(rows * cols)?;
    r.finish()?;
    Ok((mode, RationalMatrix::new(rows, cols, data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn tensor_bytes_are_hand_checked() {
        let t = ExactTensor::new(1, 3, vec![int(-1), ratio(1, 2), int(64)]).unwrap();
        let bytes = write_tensor(&t).unwrap();
        assert_eq!(
            bytes,
            [b'T', b'C', b'P', b'T', 1, 1, 0, 3, 0x01, 0x01, 0x02, 0x02, 0x80, 0x01, 0x01]
        );
        assert_eq!(read_tensor(&bytes).unwrap(), t);
    }

    #[test]
    fn malformed_dumps_are_rejected() {
        let t = ExactTensor::new(2, 2, vec![int(1), int(0), int(0), int(1)]).unwrap();
        let good = write_tensor(&t).unwrap();
        assert!(read_tensor(&good[..good.len() - 1]).is_err());
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(read_tensor(&trailing).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(read_tensor(&magic).is_err());
        // 2/2 is not in lowest terms
        let mut unreduced = good[..8].to_vec();
        unreduced.extend_from_slice(&[0x04, 0x02, 0x00, 0x01, 0x00, 0x01, 0x02, 0x01]);
        assert!(read_tensor(&unreduced).is_err());
    }

    #[test]
    fn matrix_round_trip_keeps_mode() {
        let m = RationalMatrix::from_rows(vec![
            vec![ratio(-3, 7), int(0)],
            vec![int(5), ratio(1, 1000)],
            vec![int(1), int(-1)],
        ])
        .unwrap();
        let bytes = write_matrix(&m, 2).unwrap();
        assert_eq!(&bytes[..10], &[b'T', b'C', b'P', b'M', 1, 2, 0, 3, 0, 2]);
        assert_eq!(read_matrix(&bytes).unwrap(), (2, m));
    }

    proptest! {
        #[test]
        fn tensor_round_trip(order in 1usize..4, dim in 1usize..4, seed in any::<Vec<(i64, i64)>>()) {
            let len = dim.pow(order as u32);
            let entries: Vec<Rational> = (0..len)
                .map(|k| {
                    let (n, d) = seed.get(k).copied().unwrap_or((k as i64, 1));
                    ratio(n, if d == 0 { 1 } else { d })
                })
                .collect();
            let t = ExactTensor::new(order, dim, entries).unwrap();
            prop_assert_eq!(read_tensor(&write_tensor(&t).unwrap()).unwrap(), t);
        }
    }
}
