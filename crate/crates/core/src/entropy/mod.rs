//! Quantization, Laplace and factorized probability models, 16-bit CDF
//! tables, and the range coder that turns latents into payload bytes.

mod cdf;
mod factorized;
mod laplace;
mod quantize;
mod range_coder;

pub use cdf::{build_cdf_table, laplace_table_masses, CdfTable, PRECISION_BITS, TOTAL_FREQ};
pub use factorized::FactorizedPrior;
pub use laplace::{
    estimate_rate_bits, laplace_bin_mass, laplace_bin_probability, laplace_cdf, laplace_interval_mass,
    EntropyParameters, P_MIN, SCALE_FLOOR,
};
pub use quantize::{dequantize, quantize, Quantized};
pub use range_coder::{range_decode, range_encode, Payload, RangeDecoder, RangeEncoder};

use crate::error::{Error, Result};

/// Inclusive symbol interval written alongside each payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolRange {
    pub min: i32,
    pub max: i32,
}

impl SymbolRange {
    /// `[min − 1, max + 1]` of `symbols`; must fit the container's `i16` fields.
    pub fn covering(symbols: &[i32]) -> Result<Self> {
        let lo = symbols.iter().copied().min().unwrap_or(0) as i64 - 1;
        let hi = symbols.iter().copied().max().unwrap_or(0) as i64 + 1;
        if lo < i16::MIN as i64 || hi > i16::MAX as i64 {
            return Err(Error::Encode(format!(
                "symbol range [{lo}, {hi}] does not fit 16-bit header fields"
            )));
        }
        Ok(Self { min: lo as i32, max: hi as i32 })
    }
}

/// How coded integers relate to the Laplace location.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolMode {
    /// Symbols are `round(y − μ)`; every table is centred on zero.
    MeanOffset,
    /// Symbols are `round(y)`; tables are centred on `μ`.
    Plain,
}

/// One table per latent element.
pub fn laplace_tables(
    params: &EntropyParameters<f32>,
    mode: SymbolMode,
    range: SymbolRange,
) -> Result<Vec<CdfTable>> {
    params
        .mean()
        .as_slice()
        .iter()
        .zip(params.scale().as_slice())
        .map(|(&m, &b)| {
            let centre = match mode {
                SymbolMode::MeanOffset => 0.0,
                SymbolMode::Plain => m as f64,
            };
            build_cdf_table(centre, b as f64, range.min, range.max)
        })
        .collect()
}

/// Per-element tables for a `channels × plane_len` tensor under a factorized prior.
pub fn factorized_tables(
    prior: &FactorizedPrior,
    plane_len: usize,
    range: SymbolRange,
) -> Result<Vec<CdfTable>> {
    let per_channel = prior.tables(range.min, range.max)?;
    Ok(per_channel
        .into_iter()
        .flat_map(|t| std::iter::repeat_n(t, plane_len))
        .collect())
}

/// A coded tensor: payload, its symbol range, and the table-based size estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct CodedTensor {
    pub payload: Payload,
    pub range: SymbolRange,
    /// `Σ −log2(freq / 2¹⁶)` over the integerized tables actually used.
    pub estimated_bits: f64,
}

pub fn encode_with_tables(symbols: &[i32], tables: &[CdfTable], range: SymbolRange) -> Result<CodedTensor> {
    if symbols.len() != tables.len() {
        return Err(Error::Encode(format!(
            "{} symbols but {} tables",
            symbols.len(),
            tables.len()
        )));
    }
    let mut estimated_bits = 0.0;
    for (&s, t) in symbols.iter().zip(tables) {
        estimated_bits += t
            .bits(s)
            .ok_or_else(|| Error::Encode(format!("symbol {s} outside its table")))?;
    }
    let payload = range_encode(symbols, tables)?;
    Ok(CodedTensor { payload, range, estimated_bits })
}

pub fn decode_with_tables(bytes: &[u8], tables: &[CdfTable]) -> Result<Vec<i32>> {
    let payload = Payload { bytes: bytes.to_vec(), symbol_count: tables.len() };
    range_decode(&payload, tables)
}
