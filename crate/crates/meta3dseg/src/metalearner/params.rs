//! Meta-learner parameters: the shared voxel encoder, the two
//! task-distribution stacks (mean and log-variance) and the
//! weight-prediction stack.

use rand_chacha::ChaCha8Rng;

use crate::learner::{init_dense_flat, ArchitectureConfig, EncoderParams, PredictorLayout};
use crate::numerics::Scalar;
use crate::{Error, Result};

/// Layer widths of each f1 stack: per-point feature in, latent out.
pub fn f1_dims(config: &ArchitectureConfig) -> Vec<usize> {
    let mut dims = Vec::with_capacity(2 + config.f1_hidden_dims.len());
    dims.push(config.embedding_dim() + 3);
    dims.extend(&config.f1_hidden_dims);
    dims.push(config.latent_dim);
    dims
}

/// Layer widths of the f2 stack: latent in, flat predictor parameters out.
pub fn f2_dims(config: &ArchitectureConfig) -> Vec<usize> {
    let mut dims = Vec::with_capacity(2 + config.f2_hidden_dims.len());
    dims.push(config.latent_dim);
    dims.extend(&config.f2_hidden_dims);
    dims.push(config.predictor_param_count());
    dims
}

pub fn f1_layout(config: &ArchitectureConfig) -> PredictorLayout {
    PredictorLayout::from_dims(&f1_dims(config))
}

pub fn f2_layout(config: &ArchitectureConfig) -> PredictorLayout {
    PredictorLayout::from_dims(&f2_dims(config))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaParams<T> {
    pub encoder: EncoderParams<T>,
    pub f1_mean: Vec<T>,
    pub f1_logvar: Vec<T>,
    pub f2: Vec<T>,
}

impl<T: Scalar> MetaParams<T> {
    pub fn init(config: &ArchitectureConfig, rng: &mut ChaCha8Rng) -> Self {
        MetaParams {
            encoder: EncoderParams::init(config, rng),
            f1_mean: init_dense_flat(&f1_layout(config), rng),
            f1_logvar: init_dense_flat(&f1_layout(config), rng),
            f2: init_dense_flat(&f2_layout(config), rng),
        }
    }

    pub fn validate_against(&self, config: &ArchitectureConfig) -> Result<()> {
        self.encoder.validate_against(config)?;
        let f1 = f1_layout(config).total;
        let f2 = f2_layout(config).total;
        for (name, have, want) in [
            ("f1_mean", self.f1_mean.len(), f1),
            ("f1_logvar", self.f1_logvar.len(), f1),
            ("f2", self.f2.len(), f2),
        ] {
            if have != want {
                return Err(Error::ShapeMismatch(format!(
                    "{name} has {have} parameters, config wants {want}"
                )));
            }
        }
        Ok(())
    }

    /// Every parameter block as (name, values), in a fixed order shared by
    /// checkpointing and digesting.
    pub fn flat_parts(&self) -> Vec<(String, &[T])> {
        let mut parts: Vec<(String, &[T])> = self
            .encoder
            .named_tensors()
            .into_iter()
            .map(|(name, t)| (name, t.data()))
            .collect();
        parts.push(("f1_mean".into(), self.f1_mean.as_slice()));
        parts.push(("f1_logvar".into(), self.f1_logvar.as_slice()));
        parts.push(("f2".into(), self.f2.as_slice()));
        parts
    }
}
