//! Synthetic labeled 3D shapes: analytic solids, procedural generators,
//! voxelization, surface sampling and dataset persistence.

pub mod cloud;
pub mod dataset;
pub mod shape;
pub mod solid;
pub mod voxel;

pub use cloud::{label_points, sample_surface_points, PointCloud};
pub use dataset::{
    load_dataset, parse_text_points, save_dataset, sha256_hex, DatasetEntry, DatasetManifest,
    ShapeRecord, Split,
};
pub use shape::{
    generate_shape, generate_shape_sampled, Category, LabeledShape, Part, ShapeParams, CUBE_HALF,
};
pub use solid::{Axis, Point, Solid};
pub use voxel::{
    cell_occupancy_samples, sample_occupancy_pairs, voxelize, OccupancyGrid, OccupancySample,
};
