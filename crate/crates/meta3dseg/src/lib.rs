//! Meta-learned 3D shape segmentation.
//!
//! A self-contained pipeline that learns to segment 3D shapes without part
//! labels: a meta-learner maps a voxelized shape to a distribution over
//! segmentation tasks and predicts the weights of a per-shape segmentation
//! network, which is trained end-to-end against a self-supervised occupancy
//! reconstruction loss. The crate bundles the numerics (a small reverse-mode
//! autodiff engine), a procedural shape generator with exact analytic
//! occupancy, the learner/meta-learner networks, training and ablation
//! harnesses, and mIoU evaluation tooling.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod learner;
pub mod metalearner;
pub mod numerics;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
