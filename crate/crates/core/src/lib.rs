pub mod codec;
pub mod entropy;
pub mod error;
pub mod hyperprior;
pub mod io;
pub mod metrics;
pub mod model;
pub mod motion;
pub mod scalar;
pub mod tcm;
pub mod tensor;

pub use codec::{CodecModel, FrameRecord, FrameType};
pub use error::{Error, Result};
pub use model::ModelConfig;
pub use scalar::Scalar;
pub use tensor::{Grid, MotionField};

/// Single-precision grid, the codec's working type.
pub type Grid32 = Grid<f32>;
/// Double-precision grid, used by reference computations.
pub type Grid64 = Grid<f64>;
/// An image, `channels × height × width` with values nominally in `[0, 1]`.
pub type Frame = Grid<f32>;
