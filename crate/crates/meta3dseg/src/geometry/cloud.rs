//! Labeled surface point clouds.
//!
//! Points are drawn uniformly by area over the exposed boundary of the part
//! union: a candidate is proposed on one solid's surface (solids picked
//! proportionally to area) and rejected while it falls strictly inside any
//! other solid. Coordinates are stored as f32, the persisted precision, and
//! labels are computed from the stored values so relabeling a saved cloud
//! reproduces them exactly.

use crate::geometry::shape::{LabeledShape, CUBE_HALF};
use crate::rng::stream;
use crate::{Error, Result};

/// Retries per accepted sample before the shape is declared degenerate.
const MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f32; 3]>,
    pub labels: Option<Vec<u16>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f32; 3]>, labels: Option<Vec<u16>>) -> Result<Self> {
        let cloud = PointCloud { points, labels };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if p.iter().any(|&v| !v.is_finite() || v.abs() > CUBE_HALF as f32) {
                return Err(Error::InvalidArgument(format!(
                    "point {p:?} outside the normalized cube"
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.points.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} labels for {} points",
                    labels.len(),
                    self.points.len()
                )));
            }
        }
        Ok(())
    }
}

/// Label stored points against a shape: lowest containing part, or the
/// nearest part for points that containment misses by rounding.
pub fn label_points(shape: &LabeledShape, points: &[[f32; 3]]) -> Vec<u16> {
    points
        .iter()
        .map(|p| {
            let q = [p[0] as f64, p[1] as f64, p[2] as f64];
            shape.label_point(q) as u16
        })
        .collect()
}

/// Draw `n` labeled points on the shape's exposed surface, deterministically
/// in `seed`.
pub fn sample_surface_points(shape: &LabeledShape, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample_surface_points: n = 0".into()));
    }
    let solids: Vec<_> = shape
        .parts
        .iter()
        .flat_map(|part| part.solids.iter())
        .collect();
    let areas: Vec<f64> = solids.iter().map(|s| s.surface_area()).collect();
    let total_area: f64 = areas.iter().sum();
    if !(total_area > 0.0) {
        return Err(Error::InvalidArgument(
            "sample_surface_points: shape has no surface".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a;
        cumulative.push(acc);
    }

    let rng = &mut stream(seed, "surface-points");
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let pick = crate::rng::uniform(rng, 0.0, total_area);
            let idx = cumulative.partition_point(|&c| c <= pick);
            let idx = idx.min(solids.len() - 1);
            let p = solids[idx].sample_surface(rng);
            let buried = solids
                .iter()
                .enumerate()
                .any(|(j, s)| j != idx && s.strictly_contains(p));
            if !buried {
                accepted = Some(p);
                break;
            }
        }
        let p = accepted.ok_or_else(|| {
            Error::InvalidArgument("sample_surface_points: rejection sampling stalled".into())
        })?;
        points.push([p[0] as f32, p[1] as f32, p[2] as f32]);
    }
    let labels = label_points(shape, &points);
    PointCloud::new(points, Some(labels))
}
