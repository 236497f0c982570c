//! Low-delay sequence coding: an I frame every `intra_period` frames, P frames
//! predicted from the single buffered reconstruction in between.

use crate::error::{config_err, Error, Result};
use crate::tcm::{Dpb, FeatureSource};
use crate::tensor::Grid;
use crate::Frame;

use super::inter::{decode_inter_frame, encode_inter_frame, InterTrace};
use super::intra::{decode_intra_frame, encode_intra_frame};
use super::{CodecModel, FrameRecord, FrameType};

pub fn frame_type_at(index: usize, intra_period: usize) -> FrameType {
    if intra_period == 0 || index.is_multiple_of(intra_period) {
        FrameType::Intra
    } else {
        FrameType::Inter
    }
}

pub fn recon_crc(recon: &Frame) -> u32 {
    crc32fast::hash(&recon.to_le_bytes())
}

#[derive(Clone, Debug)]
pub struct EncodedFrame {
    pub record: FrameRecord,
    pub recon: Frame,
    /// Feature stored in the picture buffer after this frame.
    pub feature: Grid,
    /// Table-based estimate for each payload, aligned with `record.payloads`.
    pub estimated_bits: Vec<f64>,
    pub trace: Option<InterTrace>,
}

pub struct SequenceEncoder<'m> {
    model: &'m CodecModel,
    intra_period: usize,
    dpb: Dpb,
    index: usize,
}

impl<'m> SequenceEncoder<'m> {
    pub fn new(model: &'m CodecModel, intra_period: usize) -> Result<Self> {
        if intra_period == 0 {
            return Err(config_err!("intra period must be positive"));
        }
        Ok(Self { model, intra_period, dpb: Dpb::new(model.config.dpb_channels), index: 0 })
    }

    pub fn dpb(&self) -> &Dpb {
        &self.dpb
    }

    pub fn frames_coded(&self) -> usize {
        self.index
    }

    /// Codes the next frame, which must already be padded.
    pub fn encode(&mut self, x: &Frame) -> Result<EncodedFrame> {
        if x.channels() != self.model.config.frame_channels {
            return Err(config_err!(
                "frame has {} channels, model codes {}",
                x.channels(),
                self.model.config.frame_channels
            ));
        }
        let frame_type = frame_type_at(self.index, self.intra_period);
        let out = match (frame_type, self.dpb.entry()) {
            (FrameType::Inter, Some(entry)) => {
                let coded = encode_inter_frame(x, entry, self.model)?;
                self.dpb.update(coded.recon.clone(), coded.feature.clone(), FeatureSource::FrameGenerator)?;
                EncodedFrame {
                    record: FrameRecord {
                        frame_type,
                        payloads: coded.payloads,
                        recon_crc: recon_crc(&coded.recon),
                    },
                    recon: coded.recon,
                    feature: coded.feature,
                    estimated_bits: coded.estimated_bits,
                    trace: Some(coded.trace),
                }
            }
            _ => {
                let coded = encode_intra_frame(x, &self.model.intra)?;
                let feature = self.model.intra.extract_feature(&coded.recon)?;
                self.dpb.update(coded.recon.clone(), feature.clone(), FeatureSource::IntraExtractor)?;
                EncodedFrame {
                    record: FrameRecord {
                        frame_type: FrameType::Intra,
                        payloads: coded.latent.payloads().to_vec(),
                        recon_crc: recon_crc(&coded.recon),
                    },
                    estimated_bits: vec![coded.latent.main.estimated_bits, coded.latent.hyper.estimated_bits],
                    recon: coded.recon,
                    feature,
                    trace: None,
                }
            }
        };
        self.index += 1;
        Ok(out)
    }
}

pub struct SequenceDecoder<'m> {
    model: &'m CodecModel,
    height: usize,
    width: usize,
    dpb: Dpb,
    index: usize,
}

impl<'m> SequenceDecoder<'m> {
    /// Decodes frames of the padded size `height × width`.
    pub fn new(model: &'m CodecModel, height: usize, width: usize) -> Self {
        Self { model, height, width, dpb: Dpb::new(model.config.dpb_channels), index: 0 }
    }

    pub fn dpb(&self) -> &Dpb {
        &self.dpb
    }

    /// Reconstructs the next frame and verifies its checksum before buffering it.
    pub fn decode(&mut self, record: &FrameRecord) -> Result<Frame> {
        let n = record.frame_type.payload_count();
        if record.payloads.len() != n {
            return Err(Error::Decode(format!(
                "frame {} carries {} payloads, expected {n}",
                self.index,
                record.payloads.len()
            )));
        }
        let index = self.index;
        let with_frame = |e: Error| match e {
            Error::Decode(m) => Error::Decode(format!("frame {index}: {m}")),
            other => other,
        };
        let (recon, feature, source) = match record.frame_type {
            FrameType::Intra => {
                let p = &record.payloads;
                let recon = decode_intra_frame(&p[0], &p[1], self.height, self.width, &self.model.intra)
                    .map_err(with_frame)?;
                let feature = self.model.intra.extract_feature(&recon)?;
                (recon, feature, FeatureSource::IntraExtractor)
            }
            FrameType::Inter => {
                let entry = self.dpb.entry().ok_or_else(|| {
                    Error::Decode(format!("frame {} is predicted but no reference is buffered", self.index))
                })?;
                let (recon, feature) = decode_inter_frame(&record.payloads, entry, self.model).map_err(with_frame)?;
                (recon, feature, FeatureSource::FrameGenerator)
            }
        };
        if recon_crc(&recon) != record.recon_crc {
            return Err(Error::Crc { frame: self.index });
        }
        self.dpb.update(recon.clone(), feature, source)?;
        self.index += 1;
        Ok(recon)
    }
}
