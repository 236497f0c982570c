//! Headerless planar 8-bit video: frames of `channels × height × width`
//! bytes stored back to back.

use std::fs;
use std::path::Path;

use crate::error::{config_err, Error, Result};
use crate::tensor::Grid;
use crate::Frame;

#[derive(Clone, Debug, PartialEq)]
pub struct RawVideo {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Samples normalized to `[0, 1]`.
    pub frames: Vec<Frame>,
}

impl RawVideo {
    pub fn new(width: usize, height: usize, channels: usize, frames: Vec<Frame>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(config_err!("invalid video geometry {width}×{height}×{channels}"));
        }
        if let Some(f) = frames.iter().find(|f| f.shape() != (channels, height, width)) {
            return Err(config_err!("frame {:?} does not match {channels}×{height}×{width}", f.shape()));
        }
        Ok(Self { width, height, channels, frames })
    }

    pub fn frame_bytes(&self) -> usize {
        self.width * self.height * self.channels
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn from_bytes(bytes: &[u8], width: usize, height: usize, channels: usize) -> Result<Self> {
        let frame_len = width * height * channels;
        if frame_len == 0 {
            return Err(config_err!("invalid video geometry {width}×{height}×{channels}"));
        }
        if !bytes.len().is_multiple_of(frame_len) {
            return Err(Error::Format(format!(
                "{} bytes is not a whole number of {width}×{height}×{channels} frames",
                bytes.len()
            )));
        }
        let frames = bytes
            .chunks_exact(frame_len)
            .map(|chunk| Grid::new(channels, height, width, chunk.iter().map(|&b| b as f32 / 255.0).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, channels, frames)
    }

    /// Samples are rounded to the nearest 8-bit level after clamping to `[0, 1]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.frames
            .iter()
            .flat_map(|f| f.as_slice().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    pub fn read(path: impl AsRef<Path>, width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, width, height, channels)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Keeps at most the first `n` frames.
    pub fn truncate(&mut self, n: usize) {
        self.frames.truncate(n);
    }
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Pads on the bottom and right by mirroring (without repeating the edge) up
/// to the next multiple of `multiple`.
pub fn reflect_pad(frame: &Frame, multiple: usize) -> Frame {
    let (c, h, w) = frame.shape();
    let (ph, pw) = (h.next_multiple_of(multiple), w.next_multiple_of(multiple));
    if (ph, pw) == (h, w) {
        return frame.clone();
    }
    Grid::from_fn(c, ph, pw, |ch, y, x| frame.get(ch, reflect(y as isize, h), reflect(x as isize, w)))
}

/// Top-left `height × width` window.
pub fn crop(frame: &Frame, height: usize, width: usize) -> Frame {
    if frame.height() == height && frame.width() == width {
        return frame.clone();
    }
    Grid::from_fn(frame.channels(), height, width, |c, y, x| frame.get(c, y, x))
}
