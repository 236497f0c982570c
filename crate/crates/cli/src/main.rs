use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcmc::io::{self, RawGeometry};
use tcmc::model::ModelConfig;
use tcmc::Error;

#[derive(Parser)]
#[command(name = "tcmc", version, about = "Learned conditional video codec with temporal context mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Geometry {
    /// Frame width in pixels.
    #[arg(long)]
    width: usize,
    /// Frame height in pixels.
    #[arg(long)]
    height: usize,
    /// 3 for planar RGB, 1 for luma.
    #[arg(long, default_value_t = 3)]
    channels: usize,
}

impl Geometry {
    fn raw(&self) -> RawGeometry {
        RawGeometry { width: self.width, height: self.height, channels: self.channels }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a raw planar 8-bit video into a bitstream.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = io::pipeline::DEFAULT_INTRA_PERIOD)]
        intra_period: usize,
        /// Frames to code; fewer are coded if the input is shorter.
        #[arg(long, default_value_t = io::pipeline::DEFAULT_FRAMES)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decode a bitstream back to raw planar 8-bit video.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure PSNR and MS-SSIM of a decoded video against its source.
    Eval {
        #[arg(long)]
        orig: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        #[command(flatten)]
        geometry: Geometry,
        /// Bitstream whose payload size gives the bpp column.
        #[arg(long)]
        bitstream: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// BD-rate of a test rate/quality curve against an anchor curve.
    Compare {
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a seeded random weight file.
    InitWeights {
        #[arg(long)]
        seed: u64,
        /// One of 256, 512, 1024, 2048 (MSE) or 8, 16, 32, 64 (MS-SSIM).
        #[arg(long, default_value_t = 256.0)]
        lambda: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 3)]
        contexts: usize,
        #[arg(long, default_value_t = 64)]
        dpb_channels: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Dimension(_) => 2,
        Error::Format(_) | Error::Digest { .. } => 3,
        Error::Crc { .. } | Error::Decode(_) => 4,
        _ => 1,
    }
}

fn run(command: Command) -> tcmc::Result<()> {
    match command {
        Command::Encode { input, geometry, weights, intra_period, frames, out, report } => {
            let r = io::run_encode(&input, geometry.raw(), &weights, intra_period, Some(frames), &out, report.as_deref())?;
            println!(
                "encoded {} frames: {} payload bits, {:.4} bpp, mean PSNR {:.3} dB",
                r.sequence.frames, r.sequence.total_bits, r.sequence.bpp, r.sequence.mean_psnr
            );
        }
        Command::Decode { input, weights, out, report } => {
            let r = io::run_decode(&input, &weights, &out, report.as_deref())?;
            println!("decoded {} frames of {}x{}, all checksums verified", r.frames.len(), r.width, r.height);
        }
        Command::Eval { orig, recon, geometry, bitstream, report } => {
            let r = io::run_eval(&orig, &recon, geometry.raw(), bitstream.as_deref(), report.as_deref())?;
            if report.is_none() {
                println!("{}", io::report::to_json(&r)?);
            } else {
                println!("mean PSNR {:.3} dB over {} frames", r.mean_psnr, r.frames.len());
            }
        }
        Command::Compare { test, anchor, report } => {
            let r = io::run_compare(&test, &anchor, report.as_deref())?;
            println!("BD-rate {:+.4}%", r.bd_rate_percent);
        }
        Command::InitWeights { seed, lambda, levels, contexts, dpb_channels, channels, out } => {
            let model_id = ModelConfig::model_id_for_lambda(lambda)
                .ok_or_else(|| Error::Config(format!("no model is trained for lambda {lambda}")))?;
            let config = ModelConfig {
                model_id,
                frame_channels: channels,
                tcm_levels: levels,
                tcm_contexts: contexts,
                dpb_channels,
                ..ModelConfig::default()
            };
            let w = io::init_weights(seed, &config)?;
            w.write(&out)?;
            println!("{} tensors, {} parameters, digest {}", w.tensors.len(), w.parameter_count(), io::digest_hex(&w.digest()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
