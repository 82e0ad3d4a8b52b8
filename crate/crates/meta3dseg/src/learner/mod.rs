//! The segmentation network g: voxel encoder, per-point feature decoder and
//! branched part predictor whose dense weights are the element-wise sum of a
//! meta-predicted component and a fine-tuned component.

pub mod config;
pub mod infer;
pub mod net;
pub mod params;

pub use config::{ArchitectureConfig, LayerSlice, PredictorLayout};
pub use infer::{
    embed_shape, point_feature, predict_point, predict_points, segment_shape, PointPrediction,
};
pub use net::{dense_forward, encode, encoder_leaves, grid_tensor, points_tensor, EncoderNodes};
pub use params::{init_dense_flat, ConvLayer, EncoderParams, LearnerWeights};
