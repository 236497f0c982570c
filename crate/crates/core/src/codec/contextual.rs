//! Context-conditioned networks of the inter path. Contexts enter every stack
//! at the scale they were mined at: `C̄^l` lives at `1/2^l` resolution.

use crate::entropy::EntropyParameters;
use crate::error::{config_err, dim_err, Result};
use crate::hyperprior::{split_mean_scale, HyperPrior};
use crate::model::{Chain, Layer, ModelConfig, ParamBuilder};
use crate::tensor::{conv2d, pixel_shuffle_up, residual_forward, Activation, ConvSpec, Grid, ResidualBlock};
use crate::Frame;

/// Stride-2 stages between the frame and its latent.
pub const STAGES: usize = 4;

/// Bound on the frame generator's propagated feature. Untrained weights
/// amplify the feature recurrence from frame to frame; the clamp keeps long
/// prediction chains finite and inside the coder's symbol range.
pub const FEATURE_LIMIT: f32 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameGenerator {
    pub entry: ConvSpec,
    pub blocks: Vec<ResidualBlock>,
    pub output: ConvSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextualWeights {
    pub emitted_contexts: usize,
    pub encoder: Vec<ConvSpec>,
    pub decoder: Vec<ConvSpec>,
    pub generator: FrameGenerator,
    pub temporal_encoder: Vec<ConvSpec>,
    pub hyper: HyperPrior,
    pub fusion: Chain,
}

fn stage_act(i: usize) -> Activation {
    if i + 1 < STAGES {
        Activation::Leaky
    } else {
        Activation::None
    }
}

impl ContextualWeights {
    pub fn build(b: &mut ParamBuilder<'_>, config: &ModelConfig, context_channels: &[usize]) -> Result<Self> {
        let m = config.tcm_contexts;
        let ctx = |l: usize| if l < m { context_channels[l] } else { 0 };
        let (n, lat, d) = (config.codec_channels, config.latent_channels, config.dpb_channels);
        let out = |i: usize| if i + 1 < STAGES { n } else { lat };

        let encoder = (0..STAGES)
            .map(|i| {
                let cin = if i == 0 { config.frame_channels } else { n } + ctx(i);
                b.conv(&format!("encoder.{i}"), 3, cin, out(i), 2, stage_act(i))
            })
            .collect::<Result<_>>()?;

        let decoder = (0..STAGES)
            .map(|j| {
                // Stage j lifts 1/2^(4−j) to 1/2^(3−j); context 4−j joins its input.
                let cin = if j == 0 { lat } else { n + ctx(STAGES - j) };
                let cout = if j + 1 < STAGES { n } else { config.feature_channels };
                b.conv(&format!("decoder.{j}"), 3, cin, 4 * cout, 1, stage_act(j))
            })
            .collect::<Result<_>>()?;

        let generator = b.scope("generator", |b| {
            Ok(FrameGenerator {
                entry: b.conv("entry", 3, config.feature_channels + context_channels[0], d, 1, Activation::None)?,
                blocks: vec![b.bottleneck("block0", d, d / 2)?, b.bottleneck("block1", d, d / 2)?],
                output: b.conv("output", 3, d, config.frame_channels, 1, Activation::None)?,
            })
        })?;

        let temporal_encoder = (0..STAGES)
            .map(|i| {
                let cin = if i == 0 { context_channels[0] } else { n + ctx(i) };
                b.conv(&format!("temporal_encoder.{i}"), 3, cin, out(i), 2, stage_act(i))
            })
            .collect::<Result<_>>()?;

        let hyper = HyperPrior::build(b, lat, config.hyper_channels, lat)?;
        let fusion = b.scope("fusion", |b| {
            Ok(Chain::new(vec![
                Layer::Conv(b.conv("0", 3, 2 * lat, n, 1, Activation::Leaky)?),
                Layer::Conv(b.conv("1", 3, n, 2 * lat, 1, Activation::None)?),
            ]))
        })?;

        Ok(Self { emitted_contexts: m, encoder, decoder, generator, temporal_encoder, hyper, fusion })
    }

    fn context<'a>(&self, contexts: &'a [Grid], l: usize) -> Option<&'a Grid> {
        (l < self.emitted_contexts).then(|| &contexts[l])
    }

    fn check(&self, contexts: &[Grid]) -> Result<()> {
        if contexts.len() < self.emitted_contexts {
            return Err(config_err!("{} contexts supplied, {} required", contexts.len(), self.emitted_contexts));
        }
        Ok(())
    }

    fn join(x: Grid, c: Option<&Grid>) -> Result<Grid> {
        match c {
            Some(c) if !c.same_spatial(&x) => Err(dim_err!("context {:?} does not match {:?}", c.shape(), x.shape())),
            Some(c) => Grid::concat(&[&x, c]),
            None => Ok(x),
        }
    }

    /// `x_t` → contextual latent `y`.
    pub fn encode(&self, x: &Frame, contexts: &[Grid]) -> Result<Grid> {
        self.check(contexts)?;
        let mut h = x.clone();
        for (i, conv) in self.encoder.iter().enumerate() {
            h = conv2d(&Self::join(h, self.context(contexts, i))?, conv)?;
        }
        Ok(h)
    }

    /// `ŷ` → `F̂_t`.
    pub fn decode(&self, y_hat: &Grid, contexts: &[Grid]) -> Result<Grid> {
        self.check(contexts)?;
        let mut h = y_hat.clone();
        for (j, conv) in self.decoder.iter().enumerate() {
            if j > 0 {
                h = Self::join(h, self.context(contexts, STAGES - j))?;
            }
            h = pixel_shuffle_up(&conv2d(&h, conv)?, 2)?;
        }
        Ok(h)
    }

    /// `(F̂_t, C̄^0)` → `(x̂_t, F_t)`; `x̂_t` is clamped to `[0, 1]`.
    pub fn generate(&self, f_hat: &Grid, contexts: &[Grid]) -> Result<(Frame, Grid)> {
        self.check(contexts)?;
        let g = &self.generator;
        let mut h = conv2d(&Self::join(f_hat.clone(), Some(&contexts[0]))?, &g.entry)?;
        for block in &g.blocks {
            h = residual_forward(&h, block)?;
        }
        let h = h.map(|v| v.clamp(-FEATURE_LIMIT, FEATURE_LIMIT));
        let frame = conv2d(&h, &g.output)?.map(|v| v.clamp(0.0, 1.0));
        Ok((frame, h))
    }

    /// Contexts → temporal prior `f_c` at latent resolution.
    pub fn temporal_context_encode(&self, contexts: &[Grid]) -> Result<Grid> {
        self.check(contexts)?;
        let mut h = contexts[0].clone();
        for (i, conv) in self.temporal_encoder.iter().enumerate() {
            if i > 0 {
                h = Self::join(h, self.context(contexts, i))?;
            }
            h = conv2d(&h, conv)?;
        }
        Ok(h)
    }

    /// Laplace parameters of the contextual latent from both priors.
    pub fn fuse_priors(&self, f_c: &Grid, hyper_out: &Grid) -> Result<EntropyParameters> {
        if !f_c.same_spatial(hyper_out) {
            return Err(config_err!("temporal prior {:?} vs hyper prior {:?}", f_c.shape(), hyper_out.shape()));
        }
        split_mean_scale(&self.fusion.forward(&Grid::concat(&[f_c, hyper_out])?)?)
    }
}
