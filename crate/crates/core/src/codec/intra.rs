//! Hyper-prior image codec for I frames, plus the extractor that turns an I
//! reconstruction into the feature stored in the picture buffer.

use crate::entropy::SymbolMode;
use crate::error::{dim_err, Result};
use crate::hyperprior::{decode_latent, encode_latent, split_mean_scale, CodedLatent, HyperPrior, StreamPayload};
use crate::model::{down_chain, up_chain, Chain, Layer, ModelConfig, ParamBuilder};
use crate::tensor::{Activation, Grid};
use crate::Frame;

/// Spatial reduction from a frame to its latent.
pub const LATENT_STRIDE: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct IntraWeights {
    pub encoder: Chain,
    pub decoder: Chain,
    pub hyper: HyperPrior,
    pub feature_extractor: Chain,
}

impl IntraWeights {
    pub fn build(b: &mut ParamBuilder<'_>, config: &ModelConfig) -> Result<Self> {
        let (c, n, m, d) = (config.frame_channels, config.codec_channels, config.latent_channels, config.dpb_channels);
        Ok(Self {
            encoder: b.scope("encoder", |b| down_chain(b, "down", &[c, n, n, n, m]))?,
            decoder: b.scope("decoder", |b| up_chain(b, "up", &[m, n, n, n, c]))?,
            hyper: HyperPrior::build(b, m, config.hyper_channels, 2 * m)?,
            feature_extractor: b.scope("feature", |b| {
                Ok(Chain::new(vec![
                    Layer::Conv(b.conv("0", 3, c, d, 1, Activation::Leaky)?),
                    Layer::Conv(b.conv("1", 3, d, d, 1, Activation::None)?),
                ]))
            })?,
        })
    }

    fn synthesize(&self, y_hat: &Grid) -> Result<Frame> {
        Ok(self.decoder.forward(y_hat)?.map(|v| v.clamp(0.0, 1.0)))
    }

    /// Feature stored in the picture buffer after an I frame.
    pub fn extract_feature(&self, x_hat: &Frame) -> Result<Grid> {
        self.feature_extractor.forward(x_hat)
    }
}

#[derive(Clone, Debug)]
pub struct IntraCoded {
    pub latent: CodedLatent,
    pub recon: Frame,
}

pub fn encode_intra_frame(x: &Frame, weights: &IntraWeights) -> Result<IntraCoded> {
    if !x.height().is_multiple_of(LATENT_STRIDE) || !x.width().is_multiple_of(LATENT_STRIDE) {
        return Err(dim_err!("frame {}×{} is not a multiple of {LATENT_STRIDE}", x.height(), x.width()));
    }
    let y = weights.encoder.forward(x)?;
    let latent = encode_latent(&y, &weights.hyper, SymbolMode::MeanOffset, split_mean_scale)?;
    let recon = weights.synthesize(&latent.y_hat)?;
    Ok(IntraCoded { latent, recon })
}

/// Decodes `[img_main, img_hyper]` for a `height × width` frame.
pub fn decode_intra_frame(
    main: &StreamPayload,
    hyper: &StreamPayload,
    height: usize,
    width: usize,
    weights: &IntraWeights,
) -> Result<Frame> {
    let shape = (weights.hyper.latent_channels, height / LATENT_STRIDE, width / LATENT_STRIDE);
    let y_hat = decode_latent(main, hyper, shape, &weights.hyper, SymbolMode::MeanOffset, split_mean_scale)?;
    weights.synthesize(&y_hat)
}
