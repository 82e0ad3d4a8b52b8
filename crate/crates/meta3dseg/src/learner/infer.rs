//! Pure inference entry points: shape embedding, per-point prediction and
//! whole-cloud segmentation.

use crate::geometry::{OccupancyGrid, CUBE_HALF};
use crate::learner::config::{ArchitectureConfig, PredictorLayout};
use crate::learner::net::{dense_forward, encode, encoder_leaves, grid_tensor, points_tensor};
use crate::learner::params::{EncoderParams, LearnerWeights};
use crate::numerics::{Graph, Scalar, Tensor};
use crate::{Error, Result};

/// Branch activations for one query point with the derived occupancy and
/// part label.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPrediction {
    pub branch_activations: Vec<f64>,
    pub occupancy: f64,
    pub part_label: usize,
}

impl PointPrediction {
    fn from_activations(row: &[f64]) -> Self {
        let mut part_label = 0;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[part_label] {
                part_label = j;
            }
        }
        PointPrediction {
            branch_activations: row.to_vec(),
            occupancy: row[part_label],
            part_label,
        }
    }
}

/// Run the encoder over a voxel grid, producing the shape embedding f_v.
pub fn embed_shape<T: Scalar>(
    grid: &OccupancyGrid,
    encoder: &EncoderParams<T>,
    config: &ArchitectureConfig,
) -> Result<Vec<T>> {
    encoder.validate_against(config)?;
    let mut g: Graph<T> = Graph::new();
    let grid_node = g.constant(grid_tensor(grid));
    let enc = encoder_leaves(&mut g, encoder, false);
    let emb = encode(&mut g, grid_node, &enc, config)?;
    Ok(g.value(emb).data().to_vec())
}

/// Concatenate [embedding ; coordinates], embedding first.
pub fn point_feature<T: Scalar>(f_v: &[T], x: [f64; 3]) -> Result<Vec<T>> {
    if x.iter().any(|&v| !v.is_finite() || v.abs() > CUBE_HALF) {
        return Err(Error::InvalidArgument(format!(
            "point {x:?} outside the normalized cube"
        )));
    }
    let mut out = Vec::with_capacity(f_v.len() + 3);
    out.extend_from_slice(f_v);
    out.extend(x.iter().map(|&v| T::from_f64(v)));
    Ok(out)
}

/// Segment a batch of points given a precomputed embedding.
pub fn predict_points<T: Scalar>(
    f_v: &[T],
    points: &[[f64; 3]],
    weights: &LearnerWeights<T>,
    config: &ArchitectureConfig,
) -> Result<Vec<PointPrediction>> {
    let layout = PredictorLayout::from_config(config);
    weights.validate_against(&layout)?;
    if f_v.len() != config.embedding_dim() {
        return Err(Error::ShapeMismatch(format!(
            "embedding has {} entries, config wants {}",
            f_v.len(),
            config.embedding_dim()
        )));
    }
    let mut g: Graph<T> = Graph::new();
    let f_node = g.constant(Tensor::from_vec(&[f_v.len()], f_v.to_vec())?);
    let p_node = g.constant(points_tensor(points)?);
    let feats = g.point_features(f_node, p_node)?;
    let flat = g.constant(Tensor::from_vec(&[layout.total], weights.effective())?);
    let logits = dense_forward(&mut g, feats, flat, &layout)?;
    let acts = g.sigmoid(logits)?;
    let data = g.value(acts).data();
    let c = config.n_branches();
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let row: Vec<f64> = data[i * c..(i + 1) * c]
                .iter()
                .map(|&v| v.to_f64())
                .collect();
            PointPrediction::from_activations(&row)
        })
        .collect())
}

/// Predict branch activations, occupancy and part label for one point.
pub fn predict_point<T: Scalar>(
    f_v: &[T],
    x: [f64; 3],
    weights: &LearnerWeights<T>,
    config: &ArchitectureConfig,
) -> Result<PointPrediction> {
    Ok(predict_points(f_v, &[x], weights, config)?.remove(0))
}

/// Embed the grid once, then segment every point of the cloud.
pub fn segment_shape<T: Scalar>(
    grid: &OccupancyGrid,
    points: &[[f32; 3]],
    encoder: &EncoderParams<T>,
    weights: &LearnerWeights<T>,
    config: &ArchitectureConfig,
) -> Result<Vec<PointPrediction>> {
    let f_v = embed_shape(grid, encoder, config)?;
    let pts: Vec<[f64; 3]> = points
        .iter()
        .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
        .collect();
    predict_points(&f_v, &pts, weights, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape_sampled, sample_surface_points, voxelize, Category};
    use crate::learner::params::init_dense_flat;
    use crate::rng::stream;

    fn desk_setup() -> (ArchitectureConfig, PredictorLayout) {
        let config = ArchitectureConfig::desk();
        let layout = PredictorLayout::from_config(&config);
        (config, layout)
    }

    #[test]
    fn point_feature_concatenates_in_order() {
        let f_v = [1.0f64, 2.0, 3.0, 4.0];
        let feat = point_feature(&f_v, [0.1, -0.2, 0.3]).unwrap();
        assert_eq!(feat, vec![1.0, 2.0, 3.0, 4.0, 0.1, -0.2, 0.3]);
        assert_eq!(feat.len(), f_v.len() + 3);
        assert!(point_feature(&f_v, [0.1, 0.9, 0.0]).is_err());
    }

    #[test]
    fn zero_weights_predict_half_everywhere() {
        let (config, layout) = desk_setup();
        let weights = LearnerWeights::from_meta(vec![0.0f32; layout.total]);
        let f_v = vec![0.25f32; config.embedding_dim()];
        let pred = predict_point(&f_v, [0.1, 0.2, -0.3], &weights, &config).unwrap();
        assert_eq!(pred.branch_activations, vec![0.5; 8]);
        assert_eq!(pred.occupancy, 0.5);
        assert_eq!(pred.part_label, 0);
    }

    #[test]
    fn hand_built_branch_wins() {
        // One hidden unit per dense layer with all weights zero, so only the
        // final bias matters: branch 2 gets +10, the rest -10.
        let config = ArchitectureConfig {
            decoder_dims: vec![1],
            ..ArchitectureConfig::desk()
        };
        let layout = PredictorLayout::from_config(&config);
        let mut theta_m = vec![0.0f64; layout.total];
        let out = layout.layers.last().unwrap();
        for j in 0..out.b_len() {
            theta_m[out.b_start + j] = if j == 2 { 10.0 } else { -10.0 };
        }
        let weights = LearnerWeights::from_meta(theta_m);
        let f_v = vec![0.0f64; config.embedding_dim()];
        let pred = predict_point(&f_v, [0.0, 0.0, 0.0], &weights, &config).unwrap();
        assert_eq!(pred.part_label, 2);
        assert!((pred.occupancy - 0.9999546021312976).abs() < 1e-12);
        assert_eq!(pred.occupancy, pred.branch_activations[2]);
    }

    #[test]
    fn additive_composition_is_exact() {
        let (config, layout) = desk_setup();
        let rng = &mut stream(5, "weights");
        let theta_m: Vec<f32> = init_dense_flat(&layout, rng);
        let theta_l: Vec<f32> = init_dense_flat(&layout, rng);
        let combined: Vec<f32> = theta_m
            .iter()
            .zip(&theta_l)
            .map(|(&m, &l)| m + l)
            .collect();
        let split = LearnerWeights::new(theta_m, theta_l).unwrap();
        let merged = LearnerWeights::from_meta(combined);
        let f_v: Vec<f32> = (0..config.embedding_dim())
            .map(|i| (i as f32 * 0.01).sin())
            .collect();
        for &x in &[[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [-0.5, 0.5, -0.5]] {
            let a = predict_point(&f_v, x, &split, &config).unwrap();
            let b = predict_point(&f_v, x, &merged, &config).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn theta_l_zero_matches_theta_m_alone() {
        let (_, layout) = desk_setup();
        let theta_m: Vec<f32> = init_dense_flat(&layout, &mut stream(6, "weights"));
        let w = LearnerWeights::from_meta(theta_m.clone());
        assert_eq!(w.effective(), theta_m);
    }

    #[test]
    fn segmentation_is_deterministic_and_order_equivariant() {
        let (config, layout) = desk_setup();
        let shape = generate_shape_sampled(Category::Table, 8).unwrap();
        let grid = voxelize(&shape, config.resolution).unwrap();
        let cloud = sample_surface_points(&shape, 32, 3).unwrap();
        let encoder: EncoderParams<f32> = EncoderParams::init(&config, &mut stream(9, "enc"));
        let weights =
            LearnerWeights::from_meta(init_dense_flat(&layout, &mut stream(10, "weights")));

        let a = segment_shape(&grid, &cloud.points, &encoder, &weights, &config).unwrap();
        let b = segment_shape(&grid, &cloud.points, &encoder, &weights, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), cloud.points.len());
        for p in &a {
            assert!(p.occupancy > 0.0 && p.occupancy < 1.0);
            assert_eq!(p.occupancy, p.branch_activations[p.part_label]);
        }

        let mut reversed = cloud.points.clone();
        reversed.reverse();
        let c = segment_shape(&grid, &reversed, &encoder, &weights, &config).unwrap();
        for (i, pred) in c.iter().enumerate() {
            assert_eq!(*pred, a[a.len() - 1 - i]);
        }
    }
}
