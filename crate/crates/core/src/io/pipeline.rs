//! Whole-video encode, decode, evaluation and curve comparison, in memory and
//! against files.

use std::path::Path;

use crate::codec::{CodecModel, EncodedFrame, FrameType, SequenceDecoder, SequenceEncoder};
use crate::error::{config_err, dim_err, Error, Result};
use crate::metrics::{bd_rate, bpp, cascaded_loss, rd_loss, RdCurve};
use crate::model::{DistortionKind, SPATIAL_ALIGN};
use crate::Frame;

use super::container::{
    header_u16, BitstreamContainer, ContainerHeader, FLAG_PADDED, FLAG_SINGLE_CHANNEL, VERSION,
};
use super::raw::{crop, reflect_pad, RawVideo};
use super::report::{
    mean_quality, write_json, CompareReport, DecodeReport, DecodedFrameReport, EncodeReport, EncodedFrameReport,
    EvalFrameReport, EvalReport, FrameQuality, SequenceSummary, CASCADE_FRAMES, REPORT_VERSION,
};
use super::weights::{digest_hex, WeightFile};

/// Default distance between intra frames.
pub const DEFAULT_INTRA_PERIOD: usize = 32;
/// Default number of frames to code.
pub const DEFAULT_FRAMES: usize = 96;

pub struct EncodeOutput {
    pub container: BitstreamContainer,
    pub bytes: Vec<u8>,
    pub report: EncodeReport,
    /// Encoder-side reconstructions at the padded size.
    pub padded_recons: Vec<Frame>,
    pub frames: Vec<EncodedFrame>,
}

pub struct DecodeOutput {
    pub video: RawVideo,
    pub padded_recons: Vec<Frame>,
    pub report: DecodeReport,
}

fn type_label(t: FrameType) -> String {
    match t {
        FrameType::Intra => "I",
        FrameType::Inter => "P",
    }
    .to_string()
}

/// Codes the first `frames` frames (all when `None`) of `video`.
pub fn encode_video(
    video: &RawVideo,
    weights: &WeightFile,
    model: &CodecModel,
    intra_period: usize,
    frames: Option<usize>,
) -> Result<EncodeOutput> {
    let config = &model.config;
    if video.channels != config.frame_channels {
        return Err(config_err!("video has {} channels, model codes {}", video.channels, config.frame_channels));
    }
    let n = frames.unwrap_or(video.frame_count());
    if n == 0 || n > video.frame_count() {
        return Err(config_err!("cannot code {n} frames of a {}-frame video", video.frame_count()));
    }
    let header = ContainerHeader {
        version: VERSION,
        flags: {
            let padded = !video.width.is_multiple_of(SPATIAL_ALIGN) || !video.height.is_multiple_of(SPATIAL_ALIGN);
            (if padded { FLAG_PADDED } else { 0 }) | (if video.channels == 1 { FLAG_SINGLE_CHANNEL } else { 0 })
        },
        width: header_u16(video.width, "width")?,
        height: header_u16(video.height, "height")?,
        frame_count: header_u16(n, "frame count")?,
        intra_period: header_u16(intra_period, "intra period")?,
        model_id: config.model_id,
        tcm_levels: config.tcm_levels as u8,
        tcm_contexts: config.tcm_contexts as u8,
        dpb_channels: config.dpb_channels as u8,
        weight_digest: weights.digest(),
    };

    let lambda = config.lambda();
    let pixels = video.width * video.height;
    let mut encoder = SequenceEncoder::new(model, intra_period)?;
    let mut records = Vec::with_capacity(n);
    let mut frame_reports = Vec::with_capacity(n);
    let mut padded_recons = Vec::with_capacity(n);
    let mut coded = Vec::with_capacity(n);
    for (index, x) in video.frames[..n].iter().enumerate() {
        let out = encoder.encode(&reflect_pad(x, SPATIAL_ALIGN))?;
        let recon = crop(&out.recon, video.height, video.width);
        let quality = FrameQuality::measure(x, &recon)?;
        let distortion = match config.distortion() {
            DistortionKind::Mse => quality.mse,
            DistortionKind::MsSsim => {
                1.0 - quality.ms_ssim.ok_or_else(|| {
                    Error::Eval(format!("{}×{} frames are too small for MS-SSIM", video.width, video.height))
                })?
            }
        };
        let r = &out.record;
        frame_reports.push(EncodedFrameReport {
            index,
            frame_type: type_label(r.frame_type),
            payload_bits: r.payloads.iter().map(|p| p.bits()).collect(),
            estimated_payload_bits: out.estimated_bits.clone(),
            mv_bits: r.motion_bits(),
            content_bits: r.content_bits(),
            total_bits: r.bits(),
            loss: rd_loss(distortion, r.motion_bits() as f64, r.content_bits() as f64, lambda, pixels),
            distortion,
            quality,
        });
        records.push(r.clone());
        padded_recons.push(out.recon.clone());
        coded.push(out);
    }

    let container = BitstreamContainer { header, records };
    let bytes = container.to_bytes()?;
    let total_bits = container.payload_bits();
    let (mean_psnr, mean_ms_ssim) = mean_quality(frame_reports.iter().map(|f| &f.quality));
    let cascaded = if n >= CASCADE_FRAMES {
        let losses: Vec<f64> = frame_reports[..CASCADE_FRAMES].iter().map(|f| f.loss).collect();
        Some(cascaded_loss(&losses, CASCADE_FRAMES)?)
    } else {
        None
    };
    let padded = reflect_pad(&video.frames[0], SPATIAL_ALIGN);
    let report = EncodeReport {
        version: REPORT_VERSION,
        model_id: config.model_id,
        lambda,
        distortion_metric: match config.distortion() {
            DistortionKind::Mse => "mse",
            DistortionKind::MsSsim => "ms-ssim",
        }
        .to_string(),
        weight_digest: digest_hex(&container.header.weight_digest),
        width: video.width,
        height: video.height,
        channels: video.channels,
        padded_width: padded.width(),
        padded_height: padded.height(),
        intra_period,
        container_bytes: bytes.len(),
        frames: frame_reports,
        sequence: SequenceSummary {
            frames: n,
            total_bits,
            bpp: bpp(total_bits, video.width, video.height, n),
            mean_psnr,
            mean_ms_ssim,
            cascade_frames: CASCADE_FRAMES,
            cascaded_loss: cascaded,
        },
    };
    Ok(EncodeOutput { container, bytes, report, padded_recons, frames: coded })
}

/// Rejects a container whose digest or architecture fields disagree with `weights`.
pub fn check_compatible(header: &ContainerHeader, weights: &WeightFile) -> Result<()> {
    let actual = weights.digest();
    if header.weight_digest != actual {
        return Err(Error::Digest { expected: digest_hex(&header.weight_digest), actual: digest_hex(&actual) });
    }
    let c = &weights.config;
    let stream = (header.model_id, header.tcm_levels, header.tcm_contexts, header.dpb_channels, header.channels());
    let model = (c.model_id, c.tcm_levels as u8, c.tcm_contexts as u8, c.dpb_channels as u8, c.frame_channels);
    if stream != model {
        return Err(Error::Format(format!(
            "stream (model, levels, contexts, dpb, channels) = {stream:?} but weights have {model:?}"
        )));
    }
    Ok(())
}

pub fn decode_container(container: &BitstreamContainer, weights: &WeightFile, model: &CodecModel) -> Result<DecodeOutput> {
    let h = &container.header;
    check_compatible(h, weights)?;
    let (width, height) = (h.width as usize, h.height as usize);
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("invalid frame size {width}×{height}")));
    }
    let align = |v: usize| v.div_ceil(SPATIAL_ALIGN) * SPATIAL_ALIGN;
    let padded = width != align(width) || height != align(height);
    if padded != (h.flags & FLAG_PADDED != 0) {
        return Err(Error::Format("padding flag disagrees with frame size".into()));
    }
    let mut decoder = SequenceDecoder::new(model, align(height), align(width));
    let mut padded_recons = Vec::with_capacity(container.records.len());
    let mut frames = Vec::with_capacity(container.records.len());
    let mut reports = Vec::with_capacity(container.records.len());
    for (index, r) in container.records.iter().enumerate() {
        let recon = decoder.decode(r)?;
        frames.push(crop(&recon, height, width));
        padded_recons.push(recon);
        reports.push(DecodedFrameReport {
            index,
            frame_type: type_label(r.frame_type),
            total_bits: r.bits(),
            recon_crc: r.recon_crc,
        });
    }
    let total_bits = container.payload_bits();
    let n = frames.len();
    let video = RawVideo::new(width, height, h.channels(), frames)?;
    let report = DecodeReport {
        version: REPORT_VERSION,
        model_id: h.model_id,
        weight_digest: digest_hex(&h.weight_digest),
        width,
        height,
        channels: h.channels(),
        intra_period: h.intra_period as usize,
        frames: reports,
        total_bits,
        bpp: if n == 0 { 0.0 } else { bpp(total_bits, width, height, n) },
    };
    Ok(DecodeOutput { video, padded_recons, report })
}

/// Geometry of a headerless raw file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawGeometry {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

pub fn run_encode(
    input: &Path,
    geometry: RawGeometry,
    weights_path: &Path,
    intra_period: usize,
    frames: Option<usize>,
    out: &Path,
    report_path: Option<&Path>,
) -> Result<EncodeReport> {
    let video = RawVideo::read(input, geometry.width, geometry.height, geometry.channels)?;
    let weights = WeightFile::read(weights_path)?;
    let model = CodecModel::from_weights(&weights)?;
    let n = frames.map(|f| f.min(video.frame_count()));
    let output = encode_video(&video, &weights, &model, intra_period, n)?;
    std::fs::write(out, &output.bytes)?;
    if let Some(p) = report_path {
        write_json(&output.report, p)?;
    }
    Ok(output.report)
}

/// Checks the weight digest before any frame is decoded.
pub fn run_decode(input: &Path, weights_path: &Path, out: &Path, report_path: Option<&Path>) -> Result<DecodeReport> {
    let container = BitstreamContainer::parse(&std::fs::read(input)?)?;
    let weights = WeightFile::read(weights_path)?;
    check_compatible(&container.header, &weights)?;
    let model = CodecModel::from_weights(&weights)?;
    let output = decode_container(&container, &weights, &model)?;
    output.video.write(out)?;
    if let Some(p) = report_path {
        write_json(&output.report, p)?;
    }
    Ok(output.report)
}

pub fn evaluate(original: &RawVideo, decoded: &RawVideo, total_bits: Option<u64>) -> Result<EvalReport> {
    if (original.width, original.height, original.channels) != (decoded.width, decoded.height, decoded.channels) {
        return Err(dim_err!(
            "original is {}×{}×{}, decoded is {}×{}×{}",
            original.channels,
            original.height,
            original.width,
            decoded.channels,
            decoded.height,
            decoded.width
        ));
    }
    let n = decoded.frame_count();
    if n == 0 || n > original.frame_count() {
        return Err(dim_err!("{n} decoded frames against {} originals", original.frame_count()));
    }
    let frames = original
        .frames
        .iter()
        .zip(&decoded.frames)
        .enumerate()
        .map(|(index, (a, b))| Ok(EvalFrameReport { index, quality: FrameQuality::measure(a, b)? }))
        .collect::<Result<Vec<_>>>()?;
    let (mean_psnr, mean_ms_ssim) = mean_quality(frames.iter().map(|f| &f.quality));
    Ok(EvalReport {
        version: REPORT_VERSION,
        width: original.width,
        height: original.height,
        channels: original.channels,
        frames,
        mean_psnr,
        mean_ms_ssim,
        bpp: total_bits.map(|b| bpp(b, original.width, original.height, n)),
    })
}

/// Quality of `recon` against the first frames of `orig`; bpp when a bitstream is given.
pub fn run_eval(
    orig: &Path,
    recon: &Path,
    geometry: RawGeometry,
    bitstream: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<EvalReport> {
    let original = RawVideo::read(orig, geometry.width, geometry.height, geometry.channels)?;
    let decoded = RawVideo::read(recon, geometry.width, geometry.height, geometry.channels)?;
    let bits = match bitstream {
        Some(p) => Some(BitstreamContainer::parse(&std::fs::read(p)?)?.payload_bits()),
        None => None,
    };
    let report = evaluate(&original, &decoded, bits)?;
    if let Some(p) = report_path {
        write_json(&report, p)?;
    }
    Ok(report)
}

/// BD-rate of the `test` curve against the `anchor` curve, both `rate,quality` CSV files.
pub fn run_compare(test: &Path, anchor: &Path, report_path: Option<&Path>) -> Result<CompareReport> {
    let t = RdCurve::read_csv(std::fs::File::open(test)?)?;
    let a = RdCurve::read_csv(std::fs::File::open(anchor)?)?;
    let report = CompareReport {
        version: REPORT_VERSION,
        test_points: t.points().len(),
        anchor_points: a.points().len(),
        bd_rate_percent: bd_rate(&t, &a)?,
    };
    if let Some(p) = report_path {
        write_json(&report, p)?;
    }
    Ok(report)
}
