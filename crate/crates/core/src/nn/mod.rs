//! Forward-only CNN layers, the VGG-19 relu4_1 encoder and its mirrored
//! decoder, and the weight file format that feeds them.

pub mod layers;
pub mod manifest;
pub mod network;
pub mod weights;

pub use layers::{conv2d_reflect, maxpool2x2, relu, upsample_nearest_2x, ConvSpec};
pub use manifest::{LayerDef, Manifest, Section};
pub use network::{build_decoder, build_encoder, build_section, Layer, Network};
pub use weights::{load_weights, save_weights, synthetic_store, WeightStore, WeightTensor};
