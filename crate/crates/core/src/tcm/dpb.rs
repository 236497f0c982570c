use crate::error::{config_err, dim_err, Result};
use crate::tensor::Grid;
use crate::Frame;

/// Which network produced the stored feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    /// Extracted from a reconstructed I frame.
    IntraExtractor,
    /// Tapped before the frame generator's last conv.
    FrameGenerator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpbEntry {
    pub frame: Frame,
    pub feature: Grid,
    pub source: FeatureSource,
}

/// Single-entry decoded picture buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Dpb {
    channels: usize,
    entry: Option<DpbEntry>,
}

impl Dpb {
    pub fn new(channels: usize) -> Self {
        Self { channels, entry: None }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.entry.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.entry.is_none()
    }

    pub fn entry(&self) -> Option<&DpbEntry> {
        self.entry.as_ref()
    }

    /// Replaces the stored entry.
    pub fn update(&mut self, frame: Frame, feature: Grid, source: FeatureSource) -> Result<&DpbEntry> {
        if feature.channels() != self.channels {
            return Err(config_err!("feature has {} channels, buffer holds {}", feature.channels(), self.channels));
        }
        if !feature.same_spatial(&frame) {
            return Err(dim_err!("feature {:?} and frame {:?} differ spatially", feature.shape(), frame.shape()));
        }
        Ok(self.entry.insert(DpbEntry { frame, feature, source }))
    }
}
