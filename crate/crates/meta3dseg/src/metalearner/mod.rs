//! Meta-learner: estimates a per-shape task distribution from point features
//! and predicts segmentation-network weights from a latent draw.

pub mod ops;
pub mod params;

pub use ops::{
    estimate_on_graph, estimate_task_distribution, mean_head_on_graph, predict_learner_weights,
    predict_weights_on_graph, reparam_on_graph, sample_latent, SamplingMode, TaskLatent,
    F2_OUTPUT_GAIN,
};
pub use params::{f1_dims, f1_layout, f2_dims, f2_layout, MetaParams};
