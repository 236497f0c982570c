//! Versioned binary weight files: a model configuration plus a flat list of
//! named little-endian `f32` tensors.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ParamBuilder};

const MAGIC: &[u8; 4] = b"TCMW";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightFile {
    pub config: ModelConfig,
    /// Generator seed when the tensors were synthesized.
    pub seed: Option<u64>,
    pub tensors: Vec<NamedTensor>,
}

/// Synthesizes every tensor the configured architecture declares.
pub fn init_weights(seed: u64, config: &ModelConfig) -> Result<WeightFile> {
    config.validate()?;
    let mut b = ParamBuilder::init(seed);
    crate::codec::CodecModel::build(&mut b, config)?;
    Ok(WeightFile { config: config.clone(), seed: Some(seed), tensors: b.into_tensors()? })
}

impl WeightFile {
    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.parameter_count());
        out.extend_from_slice(MAGIC);
        let c = &self.config;
        // Writes into a Vec cannot fail.
        let w = &mut out;
        w.write_u16::<LE>(VERSION).unwrap();
        w.write_u8(c.model_id).unwrap();
        for v in [c.frame_channels, c.tcm_levels, c.tcm_contexts, c.dpb_channels] {
            w.write_u8(v as u8).unwrap();
        }
        for v in [
            c.context_channels,
            c.latent_channels,
            c.hyper_channels,
            c.codec_channels,
            c.feature_channels,
            c.mv_channels,
            c.mv_latent_channels,
            c.mv_hyper_channels,
        ] {
            w.write_u16::<LE>(v as u16).unwrap();
        }
        w.write_u8(self.seed.is_some() as u8).unwrap();
        w.write_u64::<LE>(self.seed.unwrap_or(0)).unwrap();
        w.write_u32::<LE>(self.tensors.len() as u32).unwrap();
        for t in &self.tensors {
            w.write_u16::<LE>(t.name.len() as u16).unwrap();
            w.write_all(t.name.as_bytes()).unwrap();
            w.write_u8(t.shape.len() as u8).unwrap();
            for &d in &t.shape {
                w.write_u32::<LE>(d as u32).unwrap();
            }
            for &v in &t.data {
                w.write_f32::<LE>(v).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let fmt = |e: std::io::Error| Error::Format(format!("weight file truncated: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a weight file (bad magic)".into()));
        }
        let version = r.read_u16::<LE>().map_err(fmt)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported weight file version {version}")));
        }
        let model_id = r.read_u8().map_err(fmt)?;
        let mut small = [0usize; 4];
        for v in &mut small {
            *v = r.read_u8().map_err(fmt)? as usize;
        }
        let mut wide = [0usize; 8];
        for v in &mut wide {
            *v = r.read_u16::<LE>().map_err(fmt)? as usize;
        }
        let config = ModelConfig {
            model_id,
            frame_channels: small[0],
            tcm_levels: small[1],
            tcm_contexts: small[2],
            dpb_channels: small[3],
            context_channels: wide[0],
            latent_channels: wide[1],
            hyper_channels: wide[2],
            codec_channels: wide[3],
            feature_channels: wide[4],
            mv_channels: wide[5],
            mv_latent_channels: wide[6],
            mv_hyper_channels: wide[7],
        };
        config.validate().map_err(|e| Error::Format(e.to_string()))?;
        let has_seed = r.read_u8().map_err(fmt)? != 0;
        let seed = r.read_u64::<LE>().map_err(fmt)?;
        let count = r.read_u32::<LE>().map_err(fmt)? as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.read_u16::<LE>().map_err(fmt)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name).map_err(fmt)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let ndim = r.read_u8().map_err(fmt)? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.read_u32::<LE>().map_err(fmt)? as usize);
            }
            let len: usize = shape.iter().product();
            let remaining = bytes.len() - r.position() as usize;
            if len.checked_mul(4).is_none_or(|n| n > remaining) {
                return Err(Error::Format(format!("tensor {name} runs past end of file")));
            }
            let mut data = vec![0f32; len];
            r.read_f32_into::<LE>(&mut data).map_err(fmt)?;
            tensors.push(NamedTensor { name, shape, data });
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Format("trailing bytes after last tensor".into()));
        }
        Ok(Self { config, seed: has_seed.then_some(seed), tensors })
    }

    /// First eight bytes of the SHA-256 of the serialized file.
    pub fn digest(&self) -> [u8; 8] {
        let hash = Sha256::digest(self.to_bytes());
        let mut out = [0u8; 8];
        out.copy_from_slice(&hash[..8]);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn digest_hex(digest: &[u8; 8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
