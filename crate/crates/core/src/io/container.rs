//! Bitstream container: a fixed header followed by one record per frame.
//! All integers are little-endian.

use std::io::{Cursor, Read};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::codec::{FrameRecord, FrameType};
use crate::entropy::SymbolRange;
use crate::error::{config_err, Error, Result};
use crate::hyperprior::StreamPayload;

pub const MAGIC: &[u8; 4] = b"TCMC";
pub const VERSION: u8 = 1;
/// Frames were padded to the coding alignment; decoders crop back.
pub const FLAG_PADDED: u8 = 1;
/// Single-channel (luma) video.
pub const FLAG_SINGLE_CHANNEL: u8 = 2;
pub const HEADER_BYTES: usize = 4 + 2 + 8 + 4 + 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u8,
    pub flags: u8,
    pub width: u16,
    pub height: u16,
    pub frame_count: u16,
    pub intra_period: u16,
    pub model_id: u8,
    pub tcm_levels: u8,
    pub tcm_contexts: u8,
    pub dpb_channels: u8,
    pub weight_digest: [u8; 8],
}

impl ContainerHeader {
    pub fn channels(&self) -> usize {
        if self.flags & FLAG_SINGLE_CHANNEL != 0 {
            1
        } else {
            3
        }
    }
}

/// Converts a size to a `u16` header field.
pub fn header_u16(value: usize, what: &str) -> Result<u16> {
    u16::try_from(value).map_err(|_| config_err!("{what} {value} does not fit the 16-bit header field"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitstreamContainer {
    pub header: ContainerHeader,
    pub records: Vec<FrameRecord>,
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("bitstream truncated: {e}"))
}

impl BitstreamContainer {
    /// Sum of payload bits over all frames (headers excluded).
    pub fn payload_bits(&self) -> u64 {
        self.records.iter().map(FrameRecord::bits).sum()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        if self.records.len() != h.frame_count as usize {
            return Err(config_err!("header announces {} frames, {} records given", h.frame_count, self.records.len()));
        }
        let mut w = Vec::with_capacity(HEADER_BYTES + (self.payload_bits() / 8) as usize + 16 * self.records.len());
        w.extend_from_slice(MAGIC);
        // Writes into a Vec cannot fail.
        w.write_u8(h.version).unwrap();
        w.write_u8(h.flags).unwrap();
        for v in [h.width, h.height, h.frame_count, h.intra_period] {
            w.write_u16::<LE>(v).unwrap();
        }
        for v in [h.model_id, h.tcm_levels, h.tcm_contexts, h.dpb_channels] {
            w.write_u8(v).unwrap();
        }
        w.extend_from_slice(&h.weight_digest);
        for r in &self.records {
            if r.payloads.len() != r.frame_type.payload_count() {
                return Err(config_err!("{:?} record with {} payloads", r.frame_type, r.payloads.len()));
            }
            w.write_u8(r.frame_type.code()).unwrap();
            w.write_u8(r.payloads.len() as u8).unwrap();
            for p in &r.payloads {
                let lo = i16::try_from(p.range.min).map_err(|_| config_err!("symbol range exceeds 16 bits"))?;
                let hi = i16::try_from(p.range.max).map_err(|_| config_err!("symbol range exceeds 16 bits"))?;
                let len = u32::try_from(p.bytes.len()).map_err(|_| config_err!("payload exceeds 4 GiB"))?;
                w.write_i16::<LE>(lo).unwrap();
                w.write_i16::<LE>(hi).unwrap();
                w.write_u32::<LE>(len).unwrap();
                w.extend_from_slice(&p.bytes);
            }
            w.write_u32::<LE>(r.recon_crc).unwrap();
        }
        Ok(w)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a bitstream (bad magic)".into()));
        }
        let version = r.read_u8().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported bitstream version {version}")));
        }
        let flags = r.read_u8().map_err(truncated)?;
        let mut dims = [0u16; 4];
        for d in &mut dims {
            *d = r.read_u16::<LE>().map_err(truncated)?;
        }
        let mut small = [0u8; 4];
        r.read_exact(&mut small).map_err(truncated)?;
        let mut weight_digest = [0u8; 8];
        r.read_exact(&mut weight_digest).map_err(truncated)?;
        let header = ContainerHeader {
            version,
            flags,
            width: dims[0],
            height: dims[1],
            frame_count: dims[2],
            intra_period: dims[3],
            model_id: small[0],
            tcm_levels: small[1],
            tcm_contexts: small[2],
            dpb_channels: small[3],
            weight_digest,
        };

        let mut records = Vec::with_capacity(header.frame_count as usize);
        for i in 0..header.frame_count {
            let code = r.read_u8().map_err(truncated)?;
            let frame_type = FrameType::from_code(code)
                .ok_or_else(|| Error::Format(format!("frame {i} has unknown type {code}")))?;
            let count = r.read_u8().map_err(truncated)? as usize;
            if count != frame_type.payload_count() {
                return Err(Error::Format(format!("frame {i}: {frame_type:?} record with {count} payloads")));
            }
            let mut payloads = Vec::with_capacity(count);
            for _ in 0..count {
                let min = r.read_i16::<LE>().map_err(truncated)? as i32;
                let max = r.read_i16::<LE>().map_err(truncated)? as i32;
                let len = r.read_u32::<LE>().map_err(truncated)? as usize;
                let start = r.position() as usize;
                let end = start
                    .checked_add(len)
                    .filter(|&e| e <= bytes.len())
                    .ok_or_else(|| Error::Format(format!("frame {i}: payload runs past end of stream")))?;
                r.set_position(end as u64);
                payloads.push(StreamPayload { range: SymbolRange { min, max }, bytes: bytes[start..end].to_vec() });
            }
            let recon_crc = r.read_u32::<LE>().map_err(truncated)?;
            records.push(FrameRecord { frame_type, payloads, recon_crc });
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Format("trailing bytes after last frame record".into()));
        }
        Ok(Self { header, records })
    }
}
