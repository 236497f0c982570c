//! Hyper-prior autoencoder for motion fields. The latent is plainly rounded;
//! the hyper decoder's mean only shapes the coding tables.

use crate::entropy::SymbolMode;
use crate::error::{dim_err, Result};
use crate::hyperprior::{decode_latent, encode_latent, split_mean_scale, CodedLatent, HyperPrior, StreamPayload};
use crate::model::{down_chain, up_chain, Chain, ModelConfig, ParamBuilder};
use crate::tensor::{Grid, MotionField};

/// Spatial reduction from a motion field to its latent.
pub const MV_STRIDE: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct MvWeights {
    pub encoder: Chain,
    pub decoder: Chain,
    pub hyper: HyperPrior,
}

impl MvWeights {
    pub fn build(b: &mut ParamBuilder<'_>, config: &ModelConfig) -> Result<Self> {
        let (n, m, z) = (config.mv_channels, config.mv_latent_channels, config.mv_hyper_channels);
        Ok(Self {
            encoder: b.scope("encoder", |b| down_chain(b, "down", &[2, n, n, n, m]))?,
            decoder: b.scope("decoder", |b| up_chain(b, "up", &[m, n, n, n, 2]))?,
            hyper: HyperPrior::build(b, m, z, 2 * m)?,
        })
    }

    pub fn latent_channels(&self) -> usize {
        self.hyper.latent_channels
    }
}

/// Output of [`mv_compress`].
#[derive(Clone, Debug)]
pub struct MvCoded {
    pub latent: CodedLatent,
    /// `v̂`, produced by the same synthesis the decoder runs.
    pub reconstructed: MotionField,
}

impl MvCoded {
    /// `[mv_main, mv_hyper]`.
    pub fn payloads(&self) -> [StreamPayload; 2] {
        self.latent.payloads()
    }
    pub fn estimated_bits(&self) -> f64 {
        self.latent.estimated_bits()
    }
}

fn synthesize(y_hat: &Grid, weights: &MvWeights) -> Result<MotionField> {
    MotionField::from_grid(weights.decoder.forward(y_hat)?)
}

pub fn mv_compress(flow: &MotionField, weights: &MvWeights) -> Result<MvCoded> {
    let (h, w) = (flow.height(), flow.width());
    if h % MV_STRIDE != 0 || w % MV_STRIDE != 0 {
        return Err(dim_err!("motion field {h}×{w} is not a multiple of {MV_STRIDE}"));
    }
    flow.as_grid().check_finite("motion field")?;
    let y = weights.encoder.forward(flow.as_grid())?;
    let latent = encode_latent(&y, &weights.hyper, SymbolMode::Plain, split_mean_scale)?;
    let reconstructed = synthesize(&latent.y_hat, weights)?;
    Ok(MvCoded { latent, reconstructed })
}

/// Rebuilds `v̂` for a `height × width` field from its two payloads.
pub fn mv_decompress(
    main: &StreamPayload,
    hyper: &StreamPayload,
    height: usize,
    width: usize,
    weights: &MvWeights,
) -> Result<MotionField> {
    let shape = (weights.latent_channels(), height / MV_STRIDE, width / MV_STRIDE);
    let y_hat = decode_latent(main, hyper, shape, &weights.hyper, SymbolMode::Plain, split_mean_scale)?;
    synthesize(&y_hat, weights)
}
