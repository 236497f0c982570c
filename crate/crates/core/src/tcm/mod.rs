//! Temporal context mining: multi-scale features of the propagated feature
//! are warped by the decoded motion, fused top-down and refined into contexts.

mod dpb;

pub use dpb::{Dpb, DpbEntry, FeatureSource};

use crate::error::{config_err, dim_err, Result};
use crate::model::{ModelConfig, ParamBuilder};
use crate::scalar::Scalar;
use crate::tensor::{
    bilinear_downsample, bilinear_warp, conv2d, pixel_shuffle_up, residual_forward, Activation, ConvSpec, Grid,
    MotionField, ResidualBlock,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcmConfig {
    pub levels: usize,
    /// Width of each level's features and context.
    pub context_channels: Vec<usize>,
    /// Contexts handed to the codec, finest first.
    pub emitted_contexts: usize,
}

impl TcmConfig {
    pub fn new(levels: usize, context_channels: Vec<usize>, emitted_contexts: usize) -> Result<Self> {
        if levels == 0 {
            return Err(config_err!("at least one level is required"));
        }
        if context_channels.len() != levels || context_channels.contains(&0) {
            return Err(config_err!("need one positive width per level, got {context_channels:?}"));
        }
        if emitted_contexts == 0 || emitted_contexts > levels {
            return Err(config_err!("emitted contexts {emitted_contexts} must be in 1..={levels}"));
        }
        Ok(Self { levels, context_channels, emitted_contexts })
    }

    pub fn from_model(config: &ModelConfig) -> Result<Self> {
        Self::new(config.tcm_levels, vec![config.context_channels; config.tcm_levels], config.tcm_contexts)
    }
}

/// Weights of one pyramid level.
#[derive(Clone, Debug, PartialEq)]
pub struct TcmLevel<S: Scalar = f32> {
    pub extract_conv: ConvSpec<S>,
    pub extract_block: ResidualBlock<S>,
    /// Brings level `l + 1` up to this level; absent on the deepest level.
    pub upsample: Option<(ConvSpec<S>, ResidualBlock<S>)>,
    pub refine_conv: ConvSpec<S>,
    pub refine_block: ResidualBlock<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcmWeights<S: Scalar = f32> {
    pub config: TcmConfig,
    pub input_channels: usize,
    pub levels: Vec<TcmLevel<S>>,
}

impl TcmWeights<f32> {
    pub fn build(b: &mut ParamBuilder<'_>, input_channels: usize, config: &TcmConfig) -> Result<Self> {
        let ch = &config.context_channels;
        let n = config.levels;
        let mut levels = Vec::with_capacity(n);
        for l in 0..n {
            let level = b.scope(format!("level{l}"), |b| {
                let (cin, stride) = if l == 0 { (input_channels, 1) } else { (ch[l - 1], 2) };
                let extract_conv = b.conv("extract.conv", 3, cin, ch[l], stride, Activation::None)?;
                let extract_block = b.residual("extract.block", ch[l])?;
                let upsample = if l + 1 < n {
                    Some((
                        b.conv("upsample.conv", 3, ch[l + 1], 4 * ch[l], 1, Activation::None)?,
                        b.residual("upsample.block", ch[l])?,
                    ))
                } else {
                    None
                };
                let refine_in = if l + 1 < n { 2 * ch[l] } else { ch[l] };
                let refine_conv = b.conv("refine.conv", 3, refine_in, ch[l], 1, Activation::None)?;
                let refine_block = b.residual("refine.block", ch[l])?;
                Ok(TcmLevel { extract_conv, extract_block, upsample, refine_conv, refine_block })
            })?;
            levels.push(level);
        }
        Ok(Self { config: config.clone(), input_channels, levels })
    }
}

impl<S: Scalar> TcmWeights<S> {
    pub fn cast<T: Scalar>(&self) -> TcmWeights<T> {
        let levels = self
            .levels
            .iter()
            .map(|l| TcmLevel {
                extract_conv: l.extract_conv.cast(),
                extract_block: l.extract_block.cast(),
                upsample: l.upsample.as_ref().map(|(c, r)| (c.cast(), r.cast())),
                refine_conv: l.refine_conv.cast(),
                refine_block: l.refine_block.cast(),
            })
            .collect();
        TcmWeights { config: self.config.clone(), input_channels: self.input_channels, levels }
    }
}

/// Every intermediate of one mining pass, finest level first.
#[derive(Clone, Debug, PartialEq)]
pub struct TcmStageBuffers<S: Scalar = f32> {
    pub mvs: Vec<MotionField<S>>,
    pub extracted: Vec<Grid<S>>,
    pub warped: Vec<Grid<S>>,
    /// One per level except the deepest.
    pub fused: Vec<Grid<S>>,
    pub contexts: Vec<Grid<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalContextSet<S: Scalar = f32> {
    pub stages: TcmStageBuffers<S>,
}

impl<S: Scalar> TemporalContextSet<S> {
    /// The first `emitted_contexts` contexts.
    pub fn contexts(&self, emitted: usize) -> &[Grid<S>] {
        &self.stages.contexts[..emitted.min(self.stages.contexts.len())]
    }
    pub fn level(&self, l: usize) -> Option<&Grid<S>> {
        self.stages.contexts.get(l)
    }
}

/// Level 0 is `mv`; each further level is the bilinear half-size field divided by 2.
pub fn derive_multiscale_mv<S: Scalar>(mv: &MotionField<S>, levels: usize) -> Result<Vec<MotionField<S>>> {
    if levels == 0 {
        return Err(config_err!("at least one level is required"));
    }
    let unit = 1 << (levels - 1);
    if !mv.height().is_multiple_of(unit) || !mv.width().is_multiple_of(unit) {
        return Err(config_err!("{}×{} field is not divisible by {unit}", mv.height(), mv.width()));
    }
    let half = S::narrow(0.5);
    let mut out = vec![mv.clone()];
    for l in 1..levels {
        let down = bilinear_downsample(out[l - 1].as_grid())?.map(|v| v * half);
        out.push(MotionField::from_grid(down)?);
    }
    Ok(out)
}

/// Runs extraction, warping, hierarchical fusion and refinement on `f_prev`.
pub fn mine_contexts<S: Scalar>(
    f_prev: &Grid<S>,
    mv: &MotionField<S>,
    weights: &TcmWeights<S>,
) -> Result<TemporalContextSet<S>> {
    if f_prev.channels() != weights.input_channels {
        return Err(config_err!(
            "feature has {} channels, context miner expects {}",
            f_prev.channels(),
            weights.input_channels
        ));
    }
    if f_prev.height() != mv.height() || f_prev.width() != mv.width() {
        return Err(dim_err!(
            "feature {}×{} vs motion {}×{}",
            f_prev.height(),
            f_prev.width(),
            mv.height(),
            mv.width()
        ));
    }
    let n = weights.levels.len();
    let mvs = derive_multiscale_mv(mv, n)?;

    let mut extracted: Vec<Grid<S>> = Vec::with_capacity(n);
    for (l, level) in weights.levels.iter().enumerate() {
        let input = if l == 0 { f_prev } else { &extracted[l - 1] };
        let f = residual_forward(&conv2d(input, &level.extract_conv)?, &level.extract_block)?;
        extracted.push(f);
    }
    let warped = extracted
        .iter()
        .zip(&mvs)
        .map(|(f, v)| bilinear_warp(f, v))
        .collect::<Result<Vec<_>>>()?;

    let mut fused = Vec::with_capacity(n.saturating_sub(1));
    let mut contexts = vec![None; n];
    for l in (0..n).rev() {
        let level = &weights.levels[l];
        let refine_in = match &level.upsample {
            Some((conv, block)) => {
                let up = residual_forward(&pixel_shuffle_up(&conv2d(&warped[l + 1], conv)?, 2)?, block)?;
                let f = Grid::concat(&[&warped[l], &up])?;
                fused.push(f);
                fused.last().unwrap()
            }
            None => &warped[l],
        };
        let residue = residual_forward(&conv2d(refine_in, &level.refine_conv)?, &level.refine_block)?;
        contexts[l] = Some(warped[l].add(&residue)?);
    }
    fused.reverse();
    let contexts = contexts.into_iter().map(|c| c.expect("every level refined")).collect();
    Ok(TemporalContextSet { stages: TcmStageBuffers { mvs, extracted, warped, fused, contexts } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_flow_halves_per_level() {
        let levels = derive_multiscale_mv(&MotionField::<f32>::constant(16, 16, 4.0, 4.0), 3).unwrap();
        for (l, want) in [4.0, 2.0, 1.0].into_iter().enumerate() {
            assert_eq!(levels[l].as_grid().shape(), (2, 16 >> l, 16 >> l));
            assert!(levels[l].as_grid().as_slice().iter().all(|&v| v == want));
        }
    }

    #[test]
    fn context_pyramid_shapes() {
        for n in 1..=4 {
            for m in 1..=n {
                let cfg = TcmConfig::new(n, vec![4; n], m).unwrap();
                let w = TcmWeights::build(&mut ParamBuilder::init(1), 6, &cfg).unwrap();
                let f = Grid::from_fn(6, 16, 16, |c, y, x| ((c + y * x) % 5) as f32 * 0.1);
                let set = mine_contexts(&f, &MotionField::zeros(16, 16), &w).unwrap();
                assert_eq!(set.contexts(m).len(), m);
                for (l, c) in set.stages.contexts.iter().enumerate() {
                    assert_eq!(c.shape(), (4, 16 >> l, 16 >> l));
                }
                assert_eq!(set.stages.fused.len(), n - 1);
                for (e, w) in set.stages.extracted.iter().zip(&set.stages.warped) {
                    assert!(e.bit_eq(w));
                }
            }
        }
    }

    #[test]
    fn bad_configs() {
        assert!(TcmConfig::new(3, vec![64; 3], 4).is_err());
        assert!(TcmConfig::new(2, vec![64; 3], 1).is_err());
        assert!(TcmConfig::new(0, vec![], 0).is_err());
    }
}
