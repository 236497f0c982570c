//! Byte-oriented range coder with 32-bit range, carry propagation through a
//! cached byte, and 16-bit frequency tables.

use super::cdf::{CdfTable, PRECISION_BITS, TOTAL_FREQ};
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;
const FLUSH_BYTES: usize = 5;

/// Raw coder output plus the number of symbols it holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Payload {
    pub bytes: Vec<u8>,
    pub symbol_count: usize,
}

impl Payload {
    pub fn bits(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    count: usize,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new(), count: 0 }
    }

    pub fn encode(&mut self, symbol: i32, table: &CdfTable) -> Result<()> {
        let (start, freq) = table.interval(symbol).ok_or_else(|| {
            Error::Encode(format!(
                "symbol {symbol} outside table range [{}, {}]",
                table.s_min(),
                table.s_max()
            ))
        })?;
        let r = self.range >> PRECISION_BITS;
        self.low += r as u64 * start as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
        self.count += 1;
        Ok(())
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Payload {
        for _ in 0..FLUSH_BYTES {
            self.shift_low();
        }
        Payload { bytes: self.out, symbol_count: self.count }
    }
}

pub struct RangeDecoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self> {
        let mut dec = Self { bytes, pos: 0, code: 0, range: u32::MAX };
        // The coded value is below one, so the leading byte is always zero.
        if dec.next_byte()? != 0 {
            return Err(Error::Decode("payload does not start with a zero byte".into()));
        }
        for _ in 1..FLUSH_BYTES {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| Error::Decode("payload truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn decode(&mut self, table: &CdfTable) -> Result<i32> {
        let r = self.range >> PRECISION_BITS;
        let target = (self.code / r).min(TOTAL_FREQ - 1);
        let (symbol, start, freq) = table.lookup(target);
        let offset = self.code - r * start;
        if offset >= r * freq {
            return Err(Error::Decode("range coder state out of bounds".into()));
        }
        self.code = offset;
        self.range = r * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Fails if bytes remain unread after the last symbol, or if the flushed
    /// tail differs from the interval base the symbols imply.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes after last symbol",
                self.bytes.len() - self.pos
            )));
        }
        if self.code != 0 {
            return Err(Error::Decode("payload tail is inconsistent with the decoded symbols".into()));
        }
        Ok(())
    }
}

/// Encodes `symbols[i]` with `tables[i]`.
pub fn range_encode<'t>(
    symbols: &[i32],
    tables: impl IntoIterator<Item = &'t CdfTable>,
) -> Result<Payload> {
    let mut enc = RangeEncoder::new();
    let mut tables = tables.into_iter();
    for &s in symbols {
        let t = tables
            .next()
            .ok_or_else(|| Error::Encode("fewer tables than symbols".into()))?;
        enc.encode(s, t)?;
    }
    Ok(enc.finish())
}

/// Decodes `payload.symbol_count` symbols, one per table.
pub fn range_decode<'t>(
    payload: &Payload,
    tables: impl IntoIterator<Item = &'t CdfTable>,
) -> Result<Vec<i32>> {
    let mut dec = RangeDecoder::new(&payload.bytes)?;
    let mut out = Vec::with_capacity(payload.symbol_count);
    let mut tables = tables.into_iter();
    for _ in 0..payload.symbol_count {
        let t = tables
            .next()
            .ok_or_else(|| Error::Decode("fewer tables than symbols".into()))?;
        out.push(dec.decode(t)?);
    }
    dec.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::cdf::build_cdf_table;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_stream_flushes_small() {
        let p = range_encode(&[], std::iter::empty()).unwrap();
        assert!(p.bytes.len() <= 8);
        assert_eq!(range_decode(&p, std::iter::empty()).unwrap(), Vec::<i32>::new());
    }

    #[test]
    fn uniform_alphabet_costs_a_byte_per_symbol() {
        let t = CdfTable::uniform(0, 255).unwrap();
        let syms: Vec<i32> = (0..1000).map(|i| (i * 97 + 13) % 256).collect();
        let p = range_encode(&syms, std::iter::repeat(&t)).unwrap();
        assert!((p.bytes.len() as i64 - 1000).abs() <= 8, "{} bytes", p.bytes.len());
        assert_eq!(range_decode(&p, std::iter::repeat(&t)).unwrap(), syms);
    }

    #[test]
    fn out_of_range_symbol_is_an_encode_error() {
        let t = build_cdf_table(0.0, 1.0, -3, 3).unwrap();
        assert!(matches!(range_encode(&[4], [&t]), Err(Error::Encode(_))));
    }

    #[test]
    fn truncation_is_detected() {
        let t = build_cdf_table(0.0, 2.0, -20, 20).unwrap();
        let syms: Vec<i32> = (0..500).map(|i| (i * 7) % 41 - 20).collect();
        let mut p = range_encode(&syms, std::iter::repeat(&t)).unwrap();
        p.bytes.truncate(p.bytes.len() - 3);
        assert!(matches!(range_decode(&p, std::iter::repeat(&t)), Err(Error::Decode(_))));
    }

    #[test]
    fn every_single_byte_corruption_is_detected() {
        let t = build_cdf_table(0.0, 1.5, -12, 12).unwrap();
        let syms: Vec<i32> = (0..64).map(|i| (i * 5) % 25 - 12).collect();
        let p = range_encode(&syms, std::iter::repeat(&t)).unwrap();
        for i in 0..p.bytes.len() {
            for flip in [0x01u8, 0x80, 0xff] {
                let mut bad = p.clone();
                bad.bytes[i] ^= flip;
                let r = range_decode(&bad, std::iter::repeat(&t));
                assert!(r.as_ref().map_or(true, |s| *s != syms), "byte {i} flip {flip:#x} went unnoticed");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trips_with_mixed_tables(
            params in proptest::collection::vec((-5.0f64..5.0, 0.05f64..20.0, -40i32..0, 1i32..40, 0.0f64..1.0), 1..200)
        ) {
            let mut tables = Vec::new();
            let mut syms = Vec::new();
            for &(mean, scale, lo, hi, u) in &params {
                tables.push(build_cdf_table(mean, scale, lo, hi).unwrap());
                syms.push(lo + ((hi - lo) as f64 * u).round() as i32);
            }
            let p = range_encode(&syms, &tables).unwrap();
            prop_assert_eq!(range_decode(&p, &tables).unwrap(), syms);
        }
    }
}
