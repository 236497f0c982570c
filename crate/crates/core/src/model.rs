//! Architecture configuration and the parameter builder every network uses to
//! declare its tensors.
//!
//! Networks are constructed by asking a [`ParamBuilder`] for named layers. In
//! init mode the builder draws fresh values from a seeded generator; in load
//! mode it fetches them from a [`WeightFile`] and checks the shapes. Because
//! both paths run the same construction code, the set of tensor names and
//! shapes in a weight file is defined in exactly one place.

use std::collections::HashMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::FactorizedPrior;
use crate::error::{config_err, Error, Result};
use crate::io::weights::{NamedTensor, WeightFile};
use crate::scalar::Scalar;
use crate::tensor::{
    conv2d, pixel_shuffle_up, residual_forward, Activation, ConvSpec, Grid, ResidualBlock,
};

/// λ for each model index: four MSE-trained rate points, then four MS-SSIM ones.
pub const LAMBDAS: [f64; 8] = [256.0, 512.0, 1024.0, 2048.0, 8.0, 16.0, 32.0, 64.0];

/// DPB feature widths exercised by the ablation configurations.
pub const DPB_CHANNEL_CHOICES: [usize; 4] = [64, 48, 15, 9];

/// Frames are padded to a multiple of this before coding.
pub const SPATIAL_ALIGN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionKind {
    Mse,
    MsSsim,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Index into [`LAMBDAS`].
    pub model_id: u8,
    pub frame_channels: usize,
    pub tcm_levels: usize,
    pub tcm_contexts: usize,
    pub dpb_channels: usize,
    pub context_channels: usize,
    pub latent_channels: usize,
    pub hyper_channels: usize,
    /// Hidden width of the contextual encoder/decoder and temporal context encoder.
    pub codec_channels: usize,
    /// Width of the contextual decoder output fed to the frame generator.
    pub feature_channels: usize,
    pub mv_channels: usize,
    pub mv_latent_channels: usize,
    pub mv_hyper_channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model_id: 0,
            frame_channels: 3,
            tcm_levels: 3,
            tcm_contexts: 3,
            dpb_channels: 64,
            context_channels: 64,
            latent_channels: 96,
            hyper_channels: 64,
            codec_channels: 64,
            feature_channels: 64,
            mv_channels: 64,
            mv_latent_channels: 64,
            mv_hyper_channels: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model_id as usize >= LAMBDAS.len() {
            return Err(config_err!("model id {} out of range 0..{}", self.model_id, LAMBDAS.len()));
        }
        if self.frame_channels != 1 && self.frame_channels != 3 {
            return Err(config_err!("frames must have 1 or 3 channels, got {}", self.frame_channels));
        }
        if !(1..=4).contains(&self.tcm_levels) {
            return Err(config_err!("tcm levels must be 1..=4, got {}", self.tcm_levels));
        }
        if self.tcm_contexts == 0 || self.tcm_contexts > self.tcm_levels {
            return Err(config_err!(
                "emitted contexts {} must be in 1..={}",
                self.tcm_contexts,
                self.tcm_levels
            ));
        }
        if self.dpb_channels < 2 || self.dpb_channels > 255 {
            return Err(config_err!("dpb channels must be 2..=255, got {}", self.dpb_channels));
        }
        let widths = [
            self.context_channels,
            self.latent_channels,
            self.hyper_channels,
            self.codec_channels,
            self.feature_channels,
            self.mv_channels,
            self.mv_latent_channels,
            self.mv_hyper_channels,
        ];
        if widths.iter().any(|&w| w == 0 || w > u16::MAX as usize) {
            return Err(config_err!("layer widths must be in 1..=65535"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        LAMBDAS[self.model_id as usize]
    }

    pub fn distortion(&self) -> DistortionKind {
        if self.model_id < 4 {
            DistortionKind::Mse
        } else {
            DistortionKind::MsSsim
        }
    }

    /// Model index whose λ equals `lambda`, if any.
    pub fn model_id_for_lambda(lambda: f64) -> Option<u8> {
        LAMBDAS.iter().position(|&l| l == lambda).map(|i| i as u8)
    }
}

enum Source<'a> {
    Init { rng: ChaCha20Rng, tensors: Vec<NamedTensor> },
    Load { tensors: HashMap<&'a str, &'a NamedTensor>, used: usize },
}

/// Hands out named parameter tensors, either freshly initialized or loaded.
pub struct ParamBuilder<'a> {
    source: Source<'a>,
    prefix: Vec<String>,
}

impl<'a> ParamBuilder<'a> {
    pub fn init(seed: u64) -> Self {
        Self {
            source: Source::Init { rng: ChaCha20Rng::seed_from_u64(seed), tensors: Vec::new() },
            prefix: Vec::new(),
        }
    }

    pub fn load(file: &'a WeightFile) -> Result<Self> {
        let mut tensors = HashMap::new();
        for t in &file.tensors {
            if tensors.insert(t.name.as_str(), t).is_some() {
                return Err(Error::Format(format!("duplicate tensor {}", t.name)));
            }
        }
        Ok(Self { source: Source::Load { tensors, used: 0 }, prefix: Vec::new() })
    }

    /// Runs `f` with `name` appended to the tensor-name prefix.
    pub fn scope<T>(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.prefix.push(name.into());
        let out = f(self);
        self.prefix.pop();
        out
    }

    fn full_name(&self, leaf: &str) -> String {
        let mut s = self.prefix.join(".");
        if !s.is_empty() {
            s.push('.');
        }
        s.push_str(leaf);
        s
    }

    /// A tensor initialized uniform in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn tensor(&mut self, leaf: &str, shape: &[usize], fan_in: usize, fan_out: usize) -> Result<Vec<f32>> {
        let name = self.full_name(leaf);
        let len: usize = shape.iter().product();
        match &mut self.source {
            Source::Init { rng, tensors } => {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
                let dist = Uniform::new_inclusive(-bound, bound);
                let data: Vec<f32> = (0..len).map(|_| dist.sample(rng)).collect();
                tensors.push(NamedTensor { name, shape: shape.to_vec(), data: data.clone() });
                Ok(data)
            }
            Source::Load { tensors, used } => {
                let t = tensors
                    .get(name.as_str())
                    .ok_or_else(|| Error::Format(format!("weight file lacks tensor {name}")))?;
                if t.shape != shape {
                    return Err(Error::Format(format!(
                        "tensor {name} has shape {:?}, architecture needs {:?}",
                        t.shape, shape
                    )));
                }
                *used += 1;
                Ok(t.data.clone())
            }
        }
    }

    pub fn conv(
        &mut self,
        leaf: &str,
        kernel: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        act: Activation,
    ) -> Result<ConvSpec<f32>> {
        let kk = kernel * kernel;
        let (fan_in, fan_out) = (cin * kk, cout * kk);
        let w = self.tensor(&format!("{leaf}.weight"), &[cout, cin, kernel, kernel], fan_in, fan_out)?;
        let b = self.tensor(&format!("{leaf}.bias"), &[cout], fan_in, fan_out)?;
        ConvSpec::new(kernel, cin, cout, stride, w, b, act)
    }

    pub fn residual(&mut self, leaf: &str, channels: usize) -> Result<ResidualBlock<f32>> {
        let c1 = self.conv(&format!("{leaf}.conv1"), 3, channels, channels, 1, Activation::Leaky)?;
        let c2 = self.conv(&format!("{leaf}.conv2"), 3, channels, channels, 1, Activation::None)?;
        ResidualBlock::plain(c1, c2)
    }

    pub fn bottleneck(&mut self, leaf: &str, channels: usize, mid: usize) -> Result<ResidualBlock<f32>> {
        let c1 = self.conv(&format!("{leaf}.conv1"), 3, channels, mid, 1, Activation::Leaky)?;
        let c2 = self.conv(&format!("{leaf}.conv2"), 3, mid, channels, 1, Activation::None)?;
        ResidualBlock::bottleneck(c1, c2)
    }

    /// Per-channel Laplace location and log-scale.
    pub fn factorized_prior(&mut self, leaf: &str, channels: usize) -> Result<FactorizedPrior> {
        let loc = self.tensor(&format!("{leaf}.loc"), &[channels], channels, channels)?;
        let log_scale = self.tensor(&format!("{leaf}.log_scale"), &[channels], channels, channels)?;
        let scale = log_scale.iter().map(|&v| libm::expf(v)).collect();
        FactorizedPrior::new(loc, scale)
    }

    /// Tensors drawn so far (init mode only).
    pub fn into_tensors(self) -> Result<Vec<NamedTensor>> {
        match self.source {
            Source::Init { tensors, .. } => Ok(tensors),
            Source::Load { .. } => Err(config_err!("loaded builders do not own tensors")),
        }
    }

    /// Fails if the loaded file holds tensors the architecture did not ask for.
    pub fn finish_load(self) -> Result<()> {
        match self.source {
            Source::Load { tensors, used } if used == tensors.len() => Ok(()),
            Source::Load { tensors, used } => Err(Error::Format(format!(
                "weight file has {} tensors the architecture does not use",
                tensors.len() - used
            ))),
            Source::Init { .. } => Ok(()),
        }
    }
}

/// One step of a sequential network.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer<S: Scalar = f32> {
    Conv(ConvSpec<S>),
    Residual(ResidualBlock<S>),
    /// Sub-pixel rearrangement by 2.
    Shuffle,
}

/// Layers applied in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Chain<S: Scalar = f32> {
    pub layers: Vec<Layer<S>>,
}

impl<S: Scalar> Chain<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Self {
        Self { layers }
    }

    pub fn forward(&self, input: &Grid<S>) -> Result<Grid<S>> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Conv(c) => conv2d(&x, c)?,
                Layer::Residual(r) => residual_forward(&x, r)?,
                Layer::Shuffle => pixel_shuffle_up(&x, 2)?,
            };
        }
        Ok(x)
    }
}

/// Stride-2 down-sampling stack: `widths[0] → … → widths[n]`, leaky between stages.
pub(crate) fn down_chain(b: &mut ParamBuilder<'_>, leaf: &str, widths: &[usize]) -> Result<Chain> {
    let n = widths.len() - 1;
    let mut layers = Vec::with_capacity(n);
    for i in 0..n {
        let act = if i + 1 < n { Activation::Leaky } else { Activation::None };
        layers.push(Layer::Conv(b.conv(&format!("{leaf}.{i}"), 3, widths[i], widths[i + 1], 2, act)?));
    }
    Ok(Chain::new(layers))
}

/// Sub-pixel up-sampling stack mirroring [`down_chain`].
pub(crate) fn up_chain(b: &mut ParamBuilder<'_>, leaf: &str, widths: &[usize]) -> Result<Chain> {
    let n = widths.len() - 1;
    let mut layers = Vec::with_capacity(2 * n);
    for i in 0..n {
        let act = if i + 1 < n { Activation::Leaky } else { Activation::None };
        layers.push(Layer::Conv(b.conv(&format!("{leaf}.{i}"), 3, widths[i], 4 * widths[i + 1], 1, act)?));
        layers.push(Layer::Shuffle);
    }
    Ok(Chain::new(layers))
}

/// Hyper encoder `latent → hyper` at a quarter of the latent resolution.
pub(crate) fn hyper_encoder(b: &mut ParamBuilder<'_>, latent: usize, hyper: usize) -> Result<Chain> {
    Ok(Chain::new(vec![
        Layer::Conv(b.conv("0", 3, latent, hyper, 1, Activation::Leaky)?),
        Layer::Conv(b.conv("1", 3, hyper, hyper, 2, Activation::Leaky)?),
        Layer::Conv(b.conv("2", 3, hyper, hyper, 2, Activation::None)?),
    ]))
}

/// Hyper decoder `hyper → out` back at latent resolution.
pub(crate) fn hyper_decoder(b: &mut ParamBuilder<'_>, hyper: usize, out: usize) -> Result<Chain> {
    Ok(Chain::new(vec![
        Layer::Conv(b.conv("0", 3, hyper, 4 * hyper, 1, Activation::Leaky)?),
        Layer::Shuffle,
        Layer::Conv(b.conv("1", 3, hyper, 4 * hyper, 1, Activation::Leaky)?),
        Layer::Shuffle,
        Layer::Conv(b.conv("2", 3, hyper, out, 1, Activation::None)?),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.lambda(), 256.0);
        assert_eq!(c.distortion(), DistortionKind::Mse);
        assert_eq!(ModelConfig::model_id_for_lambda(32.0), Some(6));
    }

    #[test]
    fn invalid_configs() {
        for c in [
            ModelConfig { tcm_levels: 0, ..Default::default() },
            ModelConfig { tcm_levels: 5, tcm_contexts: 1, ..Default::default() },
            ModelConfig { tcm_contexts: 4, ..Default::default() },
            ModelConfig { model_id: 8, ..Default::default() },
            ModelConfig { dpb_channels: 1, ..Default::default() },
            ModelConfig { frame_channels: 2, ..Default::default() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let mut a = ParamBuilder::init(7);
        let ta = a.tensor("w", &[4, 2, 3, 3], 18, 36).unwrap();
        let bound = (6.0f64 / 54.0).sqrt() as f32;
        assert!(ta.iter().all(|v| v.abs() <= bound));
        let mut b = ParamBuilder::init(7);
        assert_eq!(ta, b.tensor("w", &[4, 2, 3, 3], 18, 36).unwrap());
        let mut c = ParamBuilder::init(8);
        assert_ne!(ta, c.tensor("w", &[4, 2, 3, 3], 18, 36).unwrap());
    }

    #[test]
    fn scopes_prefix_names() {
        let mut b = ParamBuilder::init(1);
        b.scope("net", |b| b.scope("up", |b| b.conv("0", 3, 2, 2, 1, Activation::None)))
            .unwrap();
        let names: Vec<_> = b.into_tensors().unwrap().into_iter().map(|t| t.name).collect();
        assert_eq!(names, vec!["net.up.0.weight", "net.up.0.bias"]);
    }
}
