mod common;

use tcmc::codec::CodecModel;
use tcmc::io::report::{read_json, write_json, EncodeReport};
use tcmc::io::{decode_container, encode_video, init_weights, BitstreamContainer, RawVideo};
use tcmc::{Error, ModelConfig};

fn small() -> ModelConfig {
    ModelConfig {
        dpb_channels: 12,
        context_channels: 12,
        latent_channels: 16,
        hyper_channels: 8,
        codec_channels: 12,
        feature_channels: 12,
        mv_channels: 8,
        mv_latent_channels: 8,
        mv_hyper_channels: 8,
        ..ModelConfig::default()
    }
}

fn video(frames: usize) -> RawVideo {
    RawVideo::new(64, 64, 3, common::synthetic_video(0, frames, 64, 64)).unwrap()
}

#[test]
fn sixteen_frames_with_period_eight() {
    let weights = init_weights(1, &small()).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let enc = encode_video(&video(16), &weights, &model, 8, None).unwrap();
    let types: String = enc.report.frames.iter().map(|f| f.frame_type.as_str()).collect();
    assert_eq!(types, "IPPPPPPPIPPPPPPP");

    let bits: u64 = enc.container.records.iter().flat_map(|r| &r.payloads).map(|p| 8 * p.bytes.len() as u64).sum();
    assert_eq!(enc.report.sequence.total_bits, bits);
    assert_eq!(enc.report.sequence.bpp, bits as f64 / (64.0 * 64.0 * 16.0));
    for (f, r) in enc.report.frames.iter().zip(&enc.container.records) {
        assert_eq!(f.total_bits, r.bits());
        assert_eq!(f.mv_bits + f.content_bits, f.total_bits);
    }
    let dec = decode_container(&BitstreamContainer::parse(&enc.bytes).unwrap(), &weights, &model).unwrap();
    assert!(dec.padded_recons.iter().zip(&enc.padded_recons).all(|(a, b)| a.bit_eq(b)));
}

#[test]
fn report_survives_json() {
    let weights = init_weights(2, &small()).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let enc = encode_video(&video(4), &weights, &model, 32, None).unwrap();
    let dir = tempdir();
    let path = dir.join("report.json");
    write_json(&enc.report, &path).unwrap();
    let back: EncodeReport = read_json(&path).unwrap();
    assert_eq!(back, enc.report);
    assert_eq!(back.version, tcmc::io::report::REPORT_VERSION);
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("tcmc-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&p).unwrap();
    p
}

#[test]
fn corruption_is_reported_with_the_frame_index() {
    let weights = init_weights(3, &small()).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let enc = encode_video(&video(3), &weights, &model, 32, None).unwrap();
    for target in 0..3 {
        let mut c = enc.container.clone();
        let payload = c.records[target].payloads.last_mut().unwrap();
        let mid = payload.bytes.len() / 2;
        payload.bytes[mid] ^= 0xa5;
        match decode_container(&c, &weights, &model) {
            Err(Error::Crc { frame }) => assert_eq!(frame, target),
            Err(Error::Decode(m)) => assert!(m.contains(&format!("frame {target}")), "{m}"),
            other => panic!("frame {target}: expected a failure, got {:?}", other.map(|_| ())),
        }
    }
    let mut c = enc.container.clone();
    c.records[1].recon_crc ^= 1;
    assert!(matches!(decode_container(&c, &weights, &model), Err(Error::Crc { frame: 1 })));
}

#[test]
fn malformed_streams_are_format_errors() {
    let weights = init_weights(4, &small()).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let bytes = encode_video(&video(2), &weights, &model, 32, None).unwrap().bytes;
    for cut in [3, 20, bytes.len() - 1] {
        assert!(matches!(BitstreamContainer::parse(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(BitstreamContainer::parse(&extra), Err(Error::Format(_))));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(BitstreamContainer::parse(&magic), Err(Error::Format(_))));
}

#[test]
fn mismatched_architecture_is_rejected() {
    let weights = init_weights(5, &small()).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let mut c = encode_video(&video(1), &weights, &model, 32, None).unwrap().container;
    c.header.tcm_levels = 2;
    assert!(matches!(decode_container(&c, &weights, &model), Err(Error::Format(_))));
}

#[test]
fn luma_video_round_trips() {
    let cfg = ModelConfig { frame_channels: 1, ..small() };
    let weights = init_weights(6, &cfg).unwrap();
    let model = CodecModel::from_weights(&weights).unwrap();
    let frames = common::synthetic_video(1, 3, 48, 80).into_iter().map(|f| f.channel_range(0, 1).unwrap()).collect();
    let v = RawVideo::new(80, 48, 1, frames).unwrap();
    let enc = encode_video(&v, &weights, &model, 32, None).unwrap();
    let dec = decode_container(&BitstreamContainer::parse(&enc.bytes).unwrap(), &weights, &model).unwrap();
    assert_eq!(dec.video.frames[0].shape(), (1, 48, 80));
    assert!(dec.padded_recons.iter().zip(&enc.padded_recons).all(|(a, b)| a.bit_eq(b)));
    let bytes = dec.video.to_bytes();
    assert_eq!(RawVideo::from_bytes(&bytes, 80, 48, 1).unwrap().to_bytes(), bytes);
}
