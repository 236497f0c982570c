//! Conditional inter coding with mined temporal contexts, a hyper-prior intra
//! codec, and sequence-level sessions that drive the picture buffer.

mod contextual;
mod inter;
mod intra;
mod session;

pub use contextual::{ContextualWeights, FrameGenerator, FEATURE_LIMIT, STAGES};
pub use inter::{decode_inter_frame, encode_inter_frame, InterCoded, InterTrace};
pub use intra::{decode_intra_frame, encode_intra_frame, IntraCoded, IntraWeights, LATENT_STRIDE};
pub use session::{frame_type_at, recon_crc, EncodedFrame, SequenceDecoder, SequenceEncoder};

use crate::entropy::EntropyParameters;
use crate::error::{config_err, Result};
use crate::hyperprior::StreamPayload;
use crate::io::WeightFile;
use crate::model::{ModelConfig, ParamBuilder};
use crate::motion::MvWeights;
use crate::tcm::{TcmConfig, TcmWeights};
use crate::tensor::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameType {
    Intra,
    Inter,
}

impl FrameType {
    pub fn code(self) -> u8 {
        match self {
            Self::Intra => 0,
            Self::Inter => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Intra),
            1 => Some(Self::Inter),
            _ => None,
        }
    }

    /// Number of payloads a record of this type carries.
    pub fn payload_count(self) -> usize {
        match self {
            Self::Intra => 2,
            Self::Inter => 4,
        }
    }
}

/// One frame's entropy-coded payloads and reconstruction checksum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub frame_type: FrameType,
    /// Inter: mv_main, mv_hyper, ctx_main, ctx_hyper. Intra: img_main, img_hyper.
    pub payloads: Vec<StreamPayload>,
    /// CRC-32 of the padded reconstruction as little-endian `f32`.
    pub recon_crc: u32,
}

impl FrameRecord {
    pub fn bits(&self) -> u64 {
        self.payloads.iter().map(StreamPayload::bits).sum()
    }

    /// Bits of the motion payloads (zero for intra frames).
    pub fn motion_bits(&self) -> u64 {
        match self.frame_type {
            FrameType::Intra => 0,
            FrameType::Inter => self.payloads.iter().take(2).map(StreamPayload::bits).sum(),
        }
    }

    /// Bits of the frame content payloads (contextual or image latent).
    pub fn content_bits(&self) -> u64 {
        self.bits() - self.motion_bits()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdConfig {
    pub lambda: f64,
    pub cascade_frames: usize,
}

impl RdConfig {
    pub fn new(lambda: f64, cascade_frames: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(config_err!("lambda must be positive, got {lambda}"));
        }
        if cascade_frames == 0 {
            return Err(config_err!("cascade length must be positive"));
        }
        Ok(Self { lambda, cascade_frames })
    }

    pub fn for_model(config: &ModelConfig) -> Self {
        Self { lambda: config.lambda(), cascade_frames: 4 }
    }
}

/// Every network of the codec.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecModel {
    pub config: ModelConfig,
    pub mv: MvWeights,
    pub tcm: TcmWeights,
    pub contextual: ContextualWeights,
    pub intra: IntraWeights,
}

impl CodecModel {
    /// Declares every tensor through `b`; the order fixes the weight-file layout.
    pub fn build(b: &mut ParamBuilder<'_>, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let tcm_config = TcmConfig::from_model(config)?;
        let mv = b.scope("mv", |b| MvWeights::build(b, config))?;
        let tcm = b.scope("tcm", |b| TcmWeights::build(b, config.dpb_channels, &tcm_config))?;
        let contextual =
            b.scope("contextual", |b| ContextualWeights::build(b, config, &tcm_config.context_channels))?;
        let intra = b.scope("intra", |b| IntraWeights::build(b, config))?;
        Ok(Self { config: config.clone(), mv, tcm, contextual, intra })
    }

    pub fn from_weights(file: &WeightFile) -> Result<Self> {
        let mut b = ParamBuilder::load(file)?;
        let model = Self::build(&mut b, &file.config)?;
        b.finish_load()?;
        Ok(model)
    }

    pub fn init(seed: u64, config: &ModelConfig) -> Result<Self> {
        Self::build(&mut ParamBuilder::init(seed), config)
    }
}

/// Temporal prior `f_c` from the emitted contexts.
pub fn temporal_context_encode(contexts: &[Grid], model: &CodecModel) -> Result<Grid> {
    model.contextual.temporal_context_encode(contexts)
}

/// Laplace parameters of the contextual latent from the temporal and hyper priors.
pub fn fuse_priors(f_c: &Grid, hyper_out: &Grid, model: &CodecModel) -> Result<EntropyParameters> {
    model.contextual.fuse_priors(f_c, hyper_out)
}
