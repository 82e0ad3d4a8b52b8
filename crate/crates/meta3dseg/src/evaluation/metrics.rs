//! Branch-to-part assignment and segmentation scoring.
//!
//! Training is unsupervised, so predictor branch indices carry no fixed
//! meaning; scoring first fits a many-to-one mapping from branches to
//! ground-truth parts by co-occurrence, then measures IoU and accuracy
//! under that mapping.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A total mapping from predictor branches to part indices for one
/// category. Many branches may share a part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchAssignment {
    pub mapping: Vec<usize>,
}

impl BranchAssignment {
    pub fn n_branches(&self) -> usize {
        self.mapping.len()
    }

    /// Translate one branch stream into part labels.
    pub fn apply(&self, branches: &[usize]) -> Result<Vec<usize>> {
        branches
            .iter()
            .map(|&b| {
                self.mapping.get(b).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "branch {b} outside the {}-branch assignment",
                        self.mapping.len()
                    ))
                })
            })
            .collect()
    }
}

/// Fit the co-occurrence-argmax assignment over pooled category streams.
/// Each branch maps to the part it most often coincides with; ties and
/// empty branches resolve to the lowest part index.
pub fn fit_branch_assignment(
    branches: &[usize],
    parts: &[usize],
    n_branches: usize,
    n_parts: usize,
) -> Result<BranchAssignment> {
    if branches.len() != parts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} branch labels against {} part labels",
            branches.len(),
            parts.len()
        )));
    }
    if n_branches == 0 || n_parts == 0 {
        return Err(Error::InvalidArgument(
            "assignment needs at least one branch and one part".into(),
        ));
    }
    let mut counts = vec![vec![0u64; n_parts]; n_branches];
    for (&b, &p) in branches.iter().zip(parts) {
        if b >= n_branches {
            return Err(Error::InvalidArgument(format!(
                "branch label {b} out of range 0..{n_branches}"
            )));
        }
        if p >= n_parts {
            return Err(Error::InvalidArgument(format!(
                "part label {p} out of range 0..{n_parts}"
            )));
        }
        counts[b][p] += 1;
    }
    let mapping = counts
        .iter()
        .map(|row| {
            let mut best = 0;
            for (p, &count) in row.iter().enumerate() {
                if count > row[best] {
                    best = p;
                }
            }
            best
        })
        .collect();
    Ok(BranchAssignment { mapping })
}

/// Scores of one shape (or one pooled stream) under a fixed assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    pub category: String,
    pub n_points: usize,
    pub per_part_iou: Vec<f64>,
    pub mean_iou: f64,
    pub accuracy: f64,
}

/// Per-part IoU between mapped predictions and ground truth; parts absent
/// from both streams score 1.0. Accuracy is the fraction of matching
/// points.
pub fn compute_iou(
    mapped_pred: &[usize],
    gt: &[usize],
    n_parts: usize,
    category: &str,
) -> Result<SegmentationScore> {
    if mapped_pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions against {} labels",
            mapped_pred.len(),
            gt.len()
        )));
    }
    if mapped_pred.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    if n_parts == 0 {
        return Err(Error::InvalidArgument("n_parts must be positive".into()));
    }
    let mut intersection = vec![0u64; n_parts];
    let mut pred_count = vec![0u64; n_parts];
    let mut gt_count = vec![0u64; n_parts];
    let mut correct = 0u64;
    for (&p, &g) in mapped_pred.iter().zip(gt) {
        if p >= n_parts || g >= n_parts {
            return Err(Error::InvalidArgument(format!(
                "label ({p}, {g}) out of range 0..{n_parts}"
            )));
        }
        pred_count[p] += 1;
        gt_count[g] += 1;
        if p == g {
            intersection[p] += 1;
            correct += 1;
        }
    }
    let per_part_iou: Vec<f64> = (0..n_parts)
        .map(|p| {
            let union = pred_count[p] + gt_count[p] - intersection[p];
            if union == 0 {
                1.0
            } else {
                intersection[p] as f64 / union as f64
            }
        })
        .collect();
    let mean_iou = per_part_iou.iter().sum::<f64>() / n_parts as f64;
    Ok(SegmentationScore {
        category: category.to_string(),
        n_points: mapped_pred.len(),
        per_part_iou,
        mean_iou,
        accuracy: correct as f64 / mapped_pred.len() as f64,
    })
}

/// Unweighted mean of per-shape mean IoU.
pub fn category_miou(scores: &[SegmentationScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no shape scores".into()));
    }
    Ok(scores.iter().map(|s| s.mean_iou).sum::<f64>() / scores.len() as f64)
}
