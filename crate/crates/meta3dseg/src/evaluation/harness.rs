//! Category-level evaluation runs, the point-count sweep, and report
//! emitters.
//!
//! The branch assignment is fit on the evaluated shapes themselves, which
//! every report states; with eight anonymous branches against two to five
//! parts there is no held-out vocabulary to borrow it from.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evaluation::{
    category_miou, compute_iou, fit_branch_assignment, BranchAssignment, SegmentationScore,
};
use crate::geometry::{generate_shape_sampled, sample_surface_points, Category, DatasetEntry};
use crate::learner::{segment_shape, ArchitectureConfig, EncoderParams, LearnerWeights};
use crate::numerics::Scalar;
use crate::rng::stream;
use crate::training::WeightSetting;
use crate::{Error, Result};

/// One shape's scores inside a category run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeScore {
    pub id: String,
    #[serde(flatten)]
    pub score: SegmentationScore,
}

/// Scores for one category of shapes under a single fitted assignment.
/// `mean_iou` and `accuracy` average the per-shape values unweighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryEvaluation {
    pub category: Category,
    pub n_shapes: usize,
    pub assignment: BranchAssignment,
    pub assignment_fit_on_eval_set: bool,
    pub shapes: Vec<ShapeScore>,
    pub mean_iou: f64,
    pub accuracy: f64,
}

/// Segment every entry, fit one branch assignment over the pooled
/// category stream, and score each shape under it.
pub fn evaluate_category<T, W>(
    entries: &[DatasetEntry],
    encoder: &EncoderParams<T>,
    weights_for: W,
    arch: &ArchitectureConfig,
) -> Result<CategoryEvaluation>
where
    T: Scalar,
    W: Fn(&str) -> Option<LearnerWeights<T>>,
{
    let category = same_category(entries)?;
    let n_parts = category.n_parts();

    let mut per_shape: Vec<(String, Vec<usize>, Vec<usize>)> = Vec::with_capacity(entries.len());
    for entry in entries {
        let labels = entry.cloud.labels.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("shape {} has an unlabeled cloud", entry.id))
        })?;
        let weights = weights_for(&entry.id).ok_or_else(|| {
            Error::InvalidArgument(format!("no predictor weights for shape {}", entry.id))
        })?;
        let preds = segment_shape(&entry.grid, &entry.cloud.points, encoder, &weights, arch)?;
        let branches: Vec<usize> = preds.iter().map(|p| p.part_label).collect();
        let gt: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        per_shape.push((entry.id.clone(), branches, gt));
    }

    let pooled_branches: Vec<usize> = per_shape.iter().flat_map(|s| s.1.clone()).collect();
    let pooled_gt: Vec<usize> = per_shape.iter().flat_map(|s| s.2.clone()).collect();
    let assignment =
        fit_branch_assignment(&pooled_branches, &pooled_gt, arch.n_branches(), n_parts)?;

    let mut shapes = Vec::with_capacity(per_shape.len());
    for (id, branches, gt) in per_shape {
        let mapped = assignment.apply(&branches)?;
        let score = compute_iou(&mapped, &gt, n_parts, category.as_str())?;
        shapes.push(ShapeScore { id, score });
    }
    let scores: Vec<SegmentationScore> = shapes.iter().map(|s| s.score.clone()).collect();
    let mean_iou = category_miou(&scores)?;
    let accuracy = scores.iter().map(|s| s.accuracy).sum::<f64>() / scores.len() as f64;
    Ok(CategoryEvaluation {
        category,
        n_shapes: shapes.len(),
        assignment,
        assignment_fit_on_eval_set: true,
        shapes,
        mean_iou,
        accuracy,
    })
}

/// One row of the point-count sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub count: usize,
    pub mean_iou: f64,
}

/// Re-run one category's evaluation at several surface sample counts.
/// Each count redraws every shape's evaluation points from its analytic
/// surface, so the rows expose sensitivity to cloud density alone.
pub fn point_count_sweep<T, W>(
    entries: &[DatasetEntry],
    encoder: &EncoderParams<T>,
    weights_for: W,
    arch: &ArchitectureConfig,
    counts: &[usize],
    seed: u64,
) -> Result<Vec<SweepRow>>
where
    T: Scalar,
    W: Fn(&str) -> Option<LearnerWeights<T>>,
{
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::InvalidArgument(
            "sweep counts must be positive and non-empty".into(),
        ));
    }
    same_category(entries)?;
    let mut rows = Vec::with_capacity(counts.len());
    for &count in counts {
        let resampled: Vec<DatasetEntry> = entries
            .iter()
            .map(|entry| {
                let shape = generate_shape_sampled(entry.category, entry.seed)?;
                let draw: u64 =
                    rand::Rng::random(&mut stream(seed, &format!("sweep/{count}/{}", entry.id)));
                let cloud = sample_surface_points(&shape, count, draw)?;
                Ok(DatasetEntry {
                    cloud,
                    ..entry.clone()
                })
            })
            .collect::<Result<_>>()?;
        let eval = evaluate_category(&resampled, encoder, &weights_for, arch)?;
        rows.push(SweepRow {
            count,
            mean_iou: eval.mean_iou,
        });
    }
    Ok(rows)
}

/// Max minus min mean IoU across the sweep rows.
pub fn sweep_spread(rows: &[SweepRow]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in rows {
        lo = lo.min(row.mean_iou);
        hi = hi.max(row.mean_iou);
    }
    if rows.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// `category,n_shapes,mean_iou,accuracy` rows, one per evaluation.
pub fn category_csv(reports: &[CategoryEvaluation]) -> String {
    let mut out = String::from("category,n_shapes,mean_iou,accuracy\n");
    for r in reports {
        writeln!(
            out,
            "{},{},{:.4},{:.4}",
            r.category, r.n_shapes, r.mean_iou, r.accuracy
        )
        .expect("string writes are infallible");
    }
    out
}

/// One weight-sharing arm's aggregate scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: WeightSetting,
    pub iou: f64,
    pub acc: f64,
}

/// `setting,iou,acc` rows, one per weight-sharing arm.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("setting,iou,acc\n");
    for r in rows {
        writeln!(out, "{},{:.4},{:.4}", r.setting, r.iou, r.acc)
            .expect("string writes are infallible");
    }
    out
}

fn same_category(entries: &[DatasetEntry]) -> Result<Category> {
    let first = entries
        .first()
        .ok_or_else(|| Error::InvalidArgument("no shapes to evaluate".into()))?
        .category;
    for entry in entries {
        if entry.category != first {
            return Err(Error::InvalidArgument(format!(
                "shape {} is {} inside a {} evaluation",
                entry.id, entry.category, first
            )));
        }
    }
    Ok(first)
}
