//! Segmentation quality measurement.
//!
//! Branch predictions are anonymous, so evaluation fits a co-occurrence
//! assignment from branches to parts per category, then reports IoU and
//! accuracy per shape, per category, and across surface-density sweeps.

mod harness;
mod metrics;

pub use harness::{
    ablation_csv, category_csv, evaluate_category, point_count_sweep, sweep_spread, AblationRow,
    CategoryEvaluation, ShapeScore, SweepRow,
};
pub use metrics::{
    category_miou, compute_iou, fit_branch_assignment, BranchAssignment, SegmentationScore,
};
