//! Two-stage latent coding shared by the motion, contextual and intra paths:
//! a hyper latent under a factorized prior, then the main latent under Laplace
//! parameters derived from the decoded hyper latent.

use crate::entropy::{
    decode_with_tables, dequantize, encode_with_tables, factorized_tables, laplace_tables, quantize,
    CodedTensor, EntropyParameters, FactorizedPrior, SymbolMode, SymbolRange,
};
use crate::error::{dim_err, Error, Result};
use crate::model::{hyper_decoder, hyper_encoder, Chain, ParamBuilder};
use crate::tensor::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct HyperPrior {
    pub encoder: Chain,
    pub decoder: Chain,
    pub prior: FactorizedPrior,
    pub latent_channels: usize,
    pub hyper_channels: usize,
}

impl HyperPrior {
    /// `decoder_out` is the channel count the hyper decoder emits.
    pub fn build(b: &mut ParamBuilder<'_>, latent: usize, hyper: usize, decoder_out: usize) -> Result<Self> {
        Ok(Self {
            encoder: b.scope("hyper_encoder", |b| hyper_encoder(b, latent, hyper))?,
            decoder: b.scope("hyper_decoder", |b| hyper_decoder(b, hyper, decoder_out))?,
            prior: b.factorized_prior("hyper_prior", hyper)?,
            latent_channels: latent,
            hyper_channels: hyper,
        })
    }

    /// Hyper latent shape for a main latent of `height × width`.
    pub fn hyper_shape(&self, height: usize, width: usize) -> (usize, usize, usize) {
        (self.hyper_channels, height.div_ceil(4), width.div_ceil(4))
    }
}

/// Range and bytes of one coded tensor, as stored in the container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamPayload {
    pub range: SymbolRange,
    pub bytes: Vec<u8>,
}

impl StreamPayload {
    pub fn bits(&self) -> u64 {
        8 * self.bytes.len() as u64
    }
}

impl From<&CodedTensor> for StreamPayload {
    fn from(c: &CodedTensor) -> Self {
        Self { range: c.range, bytes: c.payload.bytes.clone() }
    }
}

/// Result of coding one latent with its hyper latent.
#[derive(Clone, Debug)]
pub struct CodedLatent {
    pub main: CodedTensor,
    pub hyper: CodedTensor,
    /// The decoder-side dequantized latent.
    pub y_hat: Grid,
}

impl CodedLatent {
    pub fn payloads(&self) -> [StreamPayload; 2] {
        [(&self.main).into(), (&self.hyper).into()]
    }
    pub fn estimated_bits(&self) -> f64 {
        self.main.estimated_bits + self.hyper.estimated_bits
    }
}

fn symbols_to_grid(symbols: &[i32], shape: (usize, usize, usize)) -> Result<Grid> {
    Grid::new(shape.0, shape.1, shape.2, symbols.iter().map(|&s| s as f32).collect())
}

/// Codes `y`; `params` maps the decoded hyper-decoder output to Laplace parameters.
pub fn encode_latent(
    y: &Grid,
    hp: &HyperPrior,
    mode: SymbolMode,
    params: impl Fn(&Grid) -> Result<EntropyParameters>,
) -> Result<CodedLatent> {
    if y.channels() != hp.latent_channels {
        return Err(dim_err!("latent has {} channels, hyper prior expects {}", y.channels(), hp.latent_channels));
    }
    let z = hp.encoder.forward(y)?;
    let zq = quantize(&z, None)?;
    let z_range = SymbolRange::covering(&zq.symbols)?;
    let z_tables = factorized_tables(&hp.prior, z.plane_len(), z_range)?;
    let hyper = encode_with_tables(&zq.symbols, &z_tables, z_range)?;

    let p = params(&hp.decoder.forward(&zq.values)?)?;
    if p.shape() != y.shape() {
        return Err(dim_err!("entropy parameters {:?} do not match latent {:?}", p.shape(), y.shape()));
    }
    let yq = match mode {
        SymbolMode::MeanOffset => quantize(y, Some(p.mean()))?,
        SymbolMode::Plain => quantize(y, None)?,
    };
    let range = SymbolRange::covering(&yq.symbols)?;
    let tables = laplace_tables(&p, mode, range)?;
    let main = encode_with_tables(&yq.symbols, &tables, range)?;
    Ok(CodedLatent { main, hyper, y_hat: yq.values })
}

/// Inverse of [`encode_latent`] for a latent of `shape`.
pub fn decode_latent(
    main: &StreamPayload,
    hyper: &StreamPayload,
    shape: (usize, usize, usize),
    hp: &HyperPrior,
    mode: SymbolMode,
    params: impl Fn(&Grid) -> Result<EntropyParameters>,
) -> Result<Grid> {
    let zs = hp.hyper_shape(shape.1, shape.2);
    let z_tables = factorized_tables(&hp.prior, zs.1 * zs.2, hyper.range)?;
    let z_sym = decode_with_tables(&hyper.bytes, &z_tables)?;
    let z_hat = symbols_to_grid(&z_sym, zs)?;

    let p = params(&hp.decoder.forward(&z_hat)?)?;
    if p.shape() != shape {
        return Err(Error::Decode(format!("entropy parameters {:?} do not match latent {:?}", p.shape(), shape)));
    }
    let tables = laplace_tables(&p, mode, main.range)?;
    let sym = decode_with_tables(&main.bytes, &tables)?;
    match mode {
        SymbolMode::MeanOffset => dequantize(&sym, shape, Some(p.mean())),
        SymbolMode::Plain => symbols_to_grid(&sym, shape),
    }
}

/// Splits a `2M`-channel tensor into Laplace mean (first half) and scale.
pub fn split_mean_scale(t: &Grid) -> Result<EntropyParameters> {
    let m = t.channels() / 2;
    if m == 0 || t.channels() % 2 != 0 {
        return Err(dim_err!("cannot split {} channels into mean and scale", t.channels()));
    }
    EntropyParameters::new(t.channel_range(0, m)?, t.channel_range(m, 2 * m)?)
}
