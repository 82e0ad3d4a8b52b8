//! Graph builders for the segmentation network, shared by inference and
//! training so both run the exact same forward computation.

use crate::geometry::{OccupancyGrid, CUBE_HALF};
use crate::learner::config::{
    ArchitectureConfig, PredictorLayout, CONV_PADDING, CONV_STRIDE,
};
use crate::learner::params::EncoderParams;
use crate::numerics::{Graph, NodeId, Scalar, Tensor};
use crate::{Error, Result};

/// Occupancy grid as a `[1, R, R, R]` tensor of 0/1 values.
pub fn grid_tensor<T: Scalar>(grid: &OccupancyGrid) -> Tensor<T> {
    let r = grid.resolution();
    let data = grid
        .values()
        .iter()
        .map(|&v| T::from_f64(v as f64))
        .collect();
    Tensor::from_vec(&[1, r, r, r], data).expect("grid length checked at construction")
}

/// Query points as a `[n, 3]` tensor, rejecting out-of-cube coordinates.
pub fn points_tensor<T: Scalar>(points: &[[f64; 3]]) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(points.len() * 3);
    for p in points {
        if p.iter().any(|&v| !v.is_finite() || v.abs() > CUBE_HALF) {
            return Err(Error::InvalidArgument(format!(
                "query point {p:?} outside the normalized cube"
            )));
        }
        data.extend(p.iter().map(|&v| T::from_f64(v)));
    }
    Tensor::from_vec(&[points.len(), 3], data)
}

/// Encoder weights lifted onto a graph as (kernel, bias) leaf pairs.
pub struct EncoderNodes {
    pub layers: Vec<(NodeId, NodeId)>,
}

pub fn encoder_leaves<T: Scalar>(
    g: &mut Graph<T>,
    params: &EncoderParams<T>,
    needs_grad: bool,
) -> EncoderNodes {
    let layers = params
        .layers
        .iter()
        .map(|layer| {
            (
                g.leaf(layer.weight.clone(), needs_grad),
                g.leaf(layer.bias.clone(), needs_grad),
            )
        })
        .collect();
    EncoderNodes { layers }
}

/// Run the conv stack on a `[1, R, R, R]` grid node down to the flat
/// embedding `[m]`. ReLU follows every layer except the last.
pub fn encode<T: Scalar>(
    g: &mut Graph<T>,
    grid: NodeId,
    encoder: &EncoderNodes,
    config: &ArchitectureConfig,
) -> Result<NodeId> {
    if g.value(grid).shape() != [1, config.resolution, config.resolution, config.resolution] {
        return Err(Error::ShapeMismatch(format!(
            "grid tensor {:?} does not match configured resolution {}",
            g.value(grid).shape(),
            config.resolution
        )));
    }
    let mut x = grid;
    let last = encoder.layers.len() - 1;
    for (i, &(w, b)) in encoder.layers.iter().enumerate() {
        x = g.conv3d(x, w, b, CONV_STRIDE, CONV_PADDING)?;
        if i != last {
            x = g.relu(x)?;
        }
    }
    g.reshape(x, &[config.embedding_dim()])
}

/// Apply the dense stack stored in one flat parameter vector to `x`
/// (`[n]` or `[B, n]`), returning raw branch logits. ReLU joins hidden
/// layers; the caller applies the output nonlinearity.
pub fn dense_forward<T: Scalar>(
    g: &mut Graph<T>,
    x: NodeId,
    flat: NodeId,
    layout: &PredictorLayout,
) -> Result<NodeId> {
    if g.value(flat).shape() != [layout.total] {
        return Err(Error::ShapeMismatch(format!(
            "flat parameter vector {:?}, layout wants [{}]",
            g.value(flat).shape(),
            layout.total
        )));
    }
    let mut x = x;
    let last = layout.layers.len() - 1;
    for (i, layer) in layout.layers.iter().enumerate() {
        let w_flat = g.slice(flat, layer.w_start, layer.w_len())?;
        let w = g.reshape(w_flat, &[layer.out_dim, layer.in_dim])?;
        let b = g.slice(flat, layer.b_start, layer.b_len())?;
        x = g.linear(x, w, b)?;
        if i != last {
            x = g.relu(x)?;
        }
    }
    Ok(x)
}
