//! Architecture configuration and the flat-parameter layout of the dense
//! predictor stack.

use serde::{Deserialize, Serialize};

use crate::geometry::Category;
use crate::{Error, Result};

pub const CONV_KERNEL: usize = 4;
pub const CONV_STRIDE: usize = 2;
pub const CONV_PADDING: usize = 1;

/// Sizes of every stage of the network.
///
/// The voxel encoder applies one stride-2 convolution per entry of
/// `conv_channels`, halving the grid each time, so the resolution must equal
/// 2^(number of conv layers). `decoder_dims` are the per-point feature
/// layers applied to the [embedding ; coordinates] vector; `predictor_dims`
/// end in the branch count c.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub resolution: usize,
    pub conv_channels: Vec<usize>,
    pub decoder_dims: Vec<usize>,
    pub predictor_dims: Vec<usize>,
    pub latent_dim: usize,
    /// Hidden widths of the two task-distribution stacks (per-point feature
    /// to latent); the output width is `latent_dim`.
    pub f1_hidden_dims: Vec<usize>,
    /// Hidden widths of the weight-prediction stack (latent to flat
    /// predictor parameters); empty means a single linear map.
    pub f2_hidden_dims: Vec<usize>,
}

impl ArchitectureConfig {
    /// Desk-scale preset: 16^3 grids, 4888 predicted parameters.
    pub fn desk() -> Self {
        ArchitectureConfig {
            resolution: 16,
            conv_channels: vec![16, 32, 64, 128],
            decoder_dims: vec![32, 16],
            predictor_dims: vec![8],
            latent_dim: 16,
            f1_hidden_dims: vec![32],
            f2_hidden_dims: vec![],
        }
    }

    /// Full-scale preset: 32^3 grids and wide stacks sized for real scans.
    pub fn full() -> Self {
        ArchitectureConfig {
            resolution: 32,
            conv_channels: vec![32, 64, 128, 512, 1024],
            decoder_dims: vec![1024, 256],
            predictor_dims: vec![8],
            latent_dim: 256,
            f1_hidden_dims: vec![1024],
            f2_hidden_dims: vec![],
        }
    }

    /// Look up a named preset ("desk" or "full").
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::InvalidConfig(format!(
                "unknown architecture preset {other:?} (expected \"desk\" or \"full\")"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.is_empty() {
            return Err(Error::InvalidConfig("no conv layers".into()));
        }
        let expected = 1usize << self.conv_channels.len();
        if self.resolution != expected {
            return Err(Error::InvalidConfig(format!(
                "resolution {} with {} conv layers; the stack collapses to 1^3 \
                 only when resolution = 2^layers = {expected}",
                self.resolution,
                self.conv_channels.len()
            )));
        }
        if self.predictor_dims.is_empty() {
            return Err(Error::InvalidConfig("no predictor layers".into()));
        }
        let all_dims = self
            .conv_channels
            .iter()
            .chain(&self.decoder_dims)
            .chain(&self.predictor_dims)
            .chain(&self.f1_hidden_dims)
            .chain(&self.f2_hidden_dims)
            .chain(std::iter::once(&self.latent_dim));
        if all_dims.clone().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("zero-width layer".into()));
        }
        let max_parts = Category::all()
            .into_iter()
            .map(Category::n_parts)
            .max()
            .unwrap();
        if self.n_branches() < max_parts {
            return Err(Error::InvalidConfig(format!(
                "{} branches cannot cover categories with up to {max_parts} parts",
                self.n_branches()
            )));
        }
        Ok(())
    }

    /// Length m of the shape embedding.
    pub fn embedding_dim(&self) -> usize {
        *self.conv_channels.last().unwrap()
    }

    /// Branch count c of the final predictor layer.
    pub fn n_branches(&self) -> usize {
        *self.predictor_dims.last().unwrap()
    }

    /// Layer widths of the dense stack, input first:
    /// [m + 3, decoder_dims..., predictor_dims...].
    pub fn dense_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(1 + self.decoder_dims.len() + self.predictor_dims.len());
        dims.push(self.embedding_dim() + 3);
        dims.extend(&self.decoder_dims);
        dims.extend(&self.predictor_dims);
        dims
    }

    /// Total parameter count w of the dense stack (the meta-predicted part).
    pub fn predictor_param_count(&self) -> usize {
        PredictorLayout::from_config(self).total
    }
}

/// Where layer k's weight matrix and bias live inside a flat parameter
/// vector: weights then bias per layer, layers in forward order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSlice {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w_start: usize,
    pub b_start: usize,
}

impl LayerSlice {
    pub fn w_len(&self) -> usize {
        self.in_dim * self.out_dim
    }

    pub fn b_len(&self) -> usize {
        self.out_dim
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictorLayout {
    pub layers: Vec<LayerSlice>,
    pub total: usize,
}

impl PredictorLayout {
    /// Layout of a dense stack with the given layer widths, input first.
    pub fn from_dims(dims: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(dims.len().saturating_sub(1));
        let mut offset = 0;
        for pair in dims.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            layers.push(LayerSlice {
                in_dim,
                out_dim,
                w_start: offset,
                b_start: offset + in_dim * out_dim,
            });
            offset += in_dim * out_dim + out_dim;
        }
        PredictorLayout {
            layers,
            total: offset,
        }
    }

    pub fn from_config(config: &ArchitectureConfig) -> Self {
        Self::from_dims(&config.dense_dims())
    }
}
