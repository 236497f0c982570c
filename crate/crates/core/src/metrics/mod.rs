//! Distortion, rate and loss measures, and Bjøntegaard delta rate.

mod bd;
mod quality;
mod rd;

pub use bd::{bd_rate, RdCurve, RdPoint};
pub use quality::{mse, ms_ssim, ms_ssim_scales, psnr, MS_SSIM_WEIGHTS};
pub use rd::{bpp, cascaded_loss, rd_loss};
