//! Occupancy grids over the normalized cube.
//!
//! Cell (i, j, k) covers the axis-aligned box with center
//! ((i+0.5)/R - 0.5, (j+0.5)/R - 0.5, (k+0.5)/R - 0.5); its value is the
//! analytic occupancy at that center, with no anti-aliasing. Values flatten
//! in (x, y, z) row-major order.

use crate::geometry::shape::LabeledShape;
use crate::geometry::solid::Point;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    resolution: usize,
    values: Vec<u8>,
}

impl OccupancyGrid {
    pub fn from_values(resolution: usize, values: Vec<u8>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution {resolution} below 2"
            )));
        }
        if values.len() != resolution.pow(3) {
            return Err(Error::ShapeMismatch(format!(
                "grid wants {} values, got {}",
                resolution.pow(3),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::Format(format!("grid value {bad} is not 0 or 1")));
        }
        Ok(OccupancyGrid { resolution, values })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        let r = self.resolution;
        self.values[(i * r + j) * r + k]
    }

    pub fn inside_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// Center of cell (i, j, k) at a given resolution.
    pub fn cell_center(resolution: usize, i: usize, j: usize, k: usize) -> Point {
        let f = |n: usize| (n as f64 + 0.5) / resolution as f64 - 0.5;
        [f(i), f(j), f(k)]
    }
}

/// Evaluate the shape's analytic occupancy at every cell center.
pub fn voxelize(shape: &LabeledShape, resolution: usize) -> Result<OccupancyGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "voxelize: resolution {resolution} below 2"
        )));
    }
    let mut values = Vec::with_capacity(resolution.pow(3));
    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                let c = OccupancyGrid::cell_center(resolution, i, j, k);
                values.push(shape.occupied(c) as u8);
            }
        }
    }
    OccupancyGrid::from_values(resolution, values)
}

/// One reconstruction training sample: a query point with its ground-truth
/// inside/outside status.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupancySample {
    pub point: Point,
    pub label: u8,
}

/// One sample per grid cell center, labeled by the grid alone. Inside cells
/// and outside cells together partition the full cell set.
pub fn cell_occupancy_samples(grid: &OccupancyGrid) -> Vec<OccupancySample> {
    let r = grid.resolution();
    let mut samples = Vec::with_capacity(r.pow(3));
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                samples.push(OccupancySample {
                    point: OccupancyGrid::cell_center(r, i, j, k),
                    label: grid.get(i, j, k),
                });
            }
        }
    }
    samples
}

/// [`cell_occupancy_samples`] cross-checked against the analytic shape.
pub fn sample_occupancy_pairs(shape: &LabeledShape, grid: &OccupancyGrid) -> Vec<OccupancySample> {
    let samples = cell_occupancy_samples(grid);
    if cfg!(debug_assertions) {
        for s in &samples {
            debug_assert_eq!(
                shape.occupied(s.point) as u8,
                s.label,
                "grid inconsistent with shape at {:?}",
                s.point
            );
        }
    }
    samples
}
