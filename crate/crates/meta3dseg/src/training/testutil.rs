//! Small fixtures shared by the training-side unit tests.

use crate::geometry::{
    sample_surface_points, voxelize, Axis, Category, DatasetEntry, LabeledShape, Part, Solid,
    Split,
};
use crate::learner::ArchitectureConfig;

/// 4^3 grids and a 76-parameter predictor; everything stays in the
/// hundreds of parameters so loops run in milliseconds.
pub(crate) fn tiny_arch() -> ArchitectureConfig {
    ArchitectureConfig {
        resolution: 4,
        conv_channels: vec![2, 4],
        decoder_dims: vec![6],
        predictor_dims: vec![4],
        latent_dim: 3,
        f1_hidden_dims: vec![],
        f2_hidden_dims: vec![],
    }
}

fn tiny_shape(i: usize) -> LabeledShape {
    let parts = match i % 3 {
        0 => vec![
            Part::new(
                "slab",
                vec![Solid::Box {
                    center: [0.0, -0.15, 0.0],
                    half: [0.4, 0.25, 0.35],
                }],
            ),
            Part::new(
                "knob",
                vec![Solid::Sphere {
                    center: [0.0, 0.25, 0.0],
                    radius: 0.2,
                }],
            ),
        ],
        1 => vec![
            Part::new(
                "core",
                vec![Solid::Sphere {
                    center: [0.0; 3],
                    radius: 0.42,
                }],
            ),
            Part::new(
                "spike",
                vec![Solid::Box {
                    center: [0.3, 0.0, 0.0],
                    half: [0.18, 0.1, 0.1],
                }],
            ),
        ],
        _ => vec![
            Part::new(
                "post",
                vec![Solid::Cylinder {
                    axis: Axis::Y,
                    center: [0.0; 3],
                    half_len: 0.45,
                    radius: 0.2,
                }],
            ),
            Part::new(
                "base",
                vec![Solid::Box {
                    center: [0.0, -0.4, 0.0],
                    half: [0.45, 0.08, 0.45],
                }],
            ),
        ],
    };
    LabeledShape::from_parts(Category::Table, 7 + i as u64, parts).unwrap()
}

/// Hand-built two-part shapes voxelized at 4^3 with 24-point clouds.
pub(crate) fn tiny_dataset(n: usize) -> Vec<DatasetEntry> {
    (0..n)
        .map(|i| {
            let shape = tiny_shape(i);
            let grid = voxelize(&shape, 4).unwrap();
            assert!(grid.inside_count() > 0, "tiny shape {i} voxelizes empty");
            let cloud = sample_surface_points(&shape, 24, 1000 + i as u64).unwrap();
            DatasetEntry {
                id: format!("tiny-{i}"),
                category: Category::Table,
                seed: i as u64,
                split: Split::Train,
                grid,
                cloud,
            }
        })
        .collect()
}
