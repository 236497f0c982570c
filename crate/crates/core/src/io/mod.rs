//! Raw video files, the bitstream container, weight files and JSON reports.

pub mod container;
pub mod pipeline;
pub mod raw;
pub mod report;
pub mod weights;

pub use container::{BitstreamContainer, ContainerHeader};
pub use pipeline::{
    decode_container, encode_video, evaluate, run_compare, run_decode, run_encode, run_eval, DecodeOutput,
    EncodeOutput, RawGeometry,
};
pub use raw::RawVideo;
pub use weights::{digest_hex, init_weights, NamedTensor, WeightFile};
