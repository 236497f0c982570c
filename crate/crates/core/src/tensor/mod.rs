//! Forward-only numeric kernels every network in the codec is built from.

mod conv;
mod flow;
mod grid;
mod kernel;
mod resample;
mod residual;

pub use conv::{conv2d, Activation, ConvSpec, LEAKY_SLOPE};
pub use flow::MotionField;
pub use grid::Grid;
pub use resample::{bilinear_downsample, bilinear_warp, pixel_shuffle_up};
pub use residual::{residual_forward, BlockKind, ResidualBlock};
