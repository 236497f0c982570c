//! Versioned JSON reports written by the encoder, decoder and evaluator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ms_ssim, ms_ssim_scales, mse, psnr};
use crate::Frame;

/// Bumped whenever a field is added, removed or changes meaning.
pub const REPORT_VERSION: u32 = 1;
/// Frames per cascaded-loss window.
pub const CASCADE_FRAMES: usize = 4;

/// JSON has no infinity, so non-finite PSNR values travel as the strings `"inf"`/`"-inf"`/`"nan"`.
pub mod db {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

/// Per-frame quality against the source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameQuality {
    pub mse: f64,
    #[serde(with = "db")]
    pub psnr: f64,
    /// Absent when the frame is too small for a single MS-SSIM scale.
    pub ms_ssim: Option<f64>,
}

impl FrameQuality {
    pub fn measure(original: &Frame, decoded: &Frame) -> Result<Self> {
        let ms_ssim = if ms_ssim_scales(original.height().min(original.width())) > 0 {
            Some(ms_ssim(original, decoded)?)
        } else {
            None
        };
        Ok(Self { mse: mse(original, decoded)?, psnr: psnr(original, decoded, 1.0)?, ms_ssim })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedFrameReport {
    pub index: usize,
    /// `"I"` or `"P"`.
    pub frame_type: String,
    /// Bits of each payload in container order.
    pub payload_bits: Vec<u64>,
    /// Table-based estimate of each payload.
    pub estimated_payload_bits: Vec<f64>,
    pub mv_bits: u64,
    pub content_bits: u64,
    pub total_bits: u64,
    #[serde(flatten)]
    pub quality: FrameQuality,
    /// MSE or `1 − MS-SSIM`, by model family.
    pub distortion: f64,
    /// `λ·D + (R_v + R_f) / pixels`.
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub frames: usize,
    pub total_bits: u64,
    /// Payload bits over original-size pixels; headers excluded.
    pub bpp: f64,
    #[serde(with = "db")]
    pub mean_psnr: f64,
    pub mean_ms_ssim: Option<f64>,
    pub cascade_frames: usize,
    /// Mean loss of the first `cascade_frames` frames; absent for shorter sequences.
    pub cascaded_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub version: u32,
    pub model_id: u8,
    pub lambda: f64,
    /// `"mse"` or `"ms-ssim"`.
    pub distortion_metric: String,
    pub weight_digest: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub padded_width: usize,
    pub padded_height: usize,
    pub intra_period: usize,
    pub container_bytes: usize,
    pub frames: Vec<EncodedFrameReport>,
    pub sequence: SequenceSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedFrameReport {
    pub index: usize,
    pub frame_type: String,
    pub total_bits: u64,
    pub recon_crc: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub version: u32,
    pub model_id: u8,
    pub weight_digest: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub intra_period: usize,
    pub frames: Vec<DecodedFrameReport>,
    pub total_bits: u64,
    pub bpp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalFrameReport {
    pub index: usize,
    #[serde(flatten)]
    pub quality: FrameQuality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub frames: Vec<EvalFrameReport>,
    #[serde(with = "db")]
    pub mean_psnr: f64,
    pub mean_ms_ssim: Option<f64>,
    /// Present when the bitstream was supplied.
    pub bpp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub version: u32,
    pub test_points: usize,
    pub anchor_points: usize,
    /// Negative values are bit-rate savings of the test curve.
    pub bd_rate_percent: f64,
}

/// Mean PSNR (per frame, then averaged) and mean MS-SSIM when every frame has one.
pub fn mean_quality<'a>(frames: impl IntoIterator<Item = &'a FrameQuality>) -> (f64, Option<f64>) {
    let mut n = 0usize;
    let mut psnr = 0.0;
    let mut ssim = Some(0.0);
    for q in frames {
        n += 1;
        psnr += q.psnr;
        ssim = ssim.zip(q.ms_ssim).map(|(a, b)| a + b);
    }
    if n == 0 {
        return (f64::NAN, None);
    }
    (psnr / n as f64, ssim.map(|s| s / n as f64))
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Format(format!("report serialization failed: {e}")))
}

pub fn write_json<T: Serialize>(report: &T, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut text = to_json(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<std::path::Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("malformed report: {e}")))
}
