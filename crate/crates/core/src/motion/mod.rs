//! Motion estimation between a frame and the previous reconstruction, and
//! lossy coding of the resulting field.

mod estimate;
mod mv_codec;

pub use estimate::{estimate_flow, FlowConfig};
pub use mv_codec::{mv_compress, mv_decompress, MvCoded, MvWeights, MV_STRIDE};
