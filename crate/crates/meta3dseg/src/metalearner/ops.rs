//! Task-distribution estimation, latent sampling and weight prediction,
//! in both pure and graph-building forms.

use rand_chacha::ChaCha8Rng;

use crate::learner::{dense_forward, ArchitectureConfig};
use crate::metalearner::params::{f1_layout, f2_layout, MetaParams};
use crate::numerics::{Graph, NodeId, Scalar, Tensor};
use crate::rng::normal;
use crate::{Error, Result};

/// Uniform scale on the raw f2 output; untamed dense outputs produce weight
/// magnitudes that saturate the predictor's sigmoids.
pub const F2_OUTPUT_GAIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    Stochastic,
    Deterministic,
}

/// A shape's estimated task distribution together with one latent draw.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskLatent<T> {
    pub mu: Vec<T>,
    pub log_variance: Vec<T>,
    pub sample: Vec<T>,
    pub mode: SamplingMode,
}

impl<T: Scalar> TaskLatent<T> {
    pub fn new(
        mu: Vec<T>,
        log_variance: Vec<T>,
        mode: SamplingMode,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let sample = sample_latent(&mu, &log_variance, mode, rng)?;
        Ok(TaskLatent {
            mu,
            log_variance,
            sample,
            mode,
        })
    }

    /// Per-coordinate standard deviations exp(log_variance / 2).
    pub fn sigma(&self) -> Vec<T> {
        self.log_variance
            .iter()
            .map(|&lv| (lv / T::from_f64(2.0)).exp())
            .collect()
    }
}

/// Apply both f1 stacks to every feature row and mean-pool into one
/// shape-level (mu, log variance) pair.
pub fn estimate_task_distribution<T: Scalar>(
    features: &Tensor<T>,
    params: &MetaParams<T>,
    config: &ArchitectureConfig,
) -> Result<(Vec<T>, Vec<T>)> {
    params.validate_against(config)?;
    let mut g: Graph<T> = Graph::new();
    let feats = g.constant(features.clone());
    let f1_mean = g.constant(Tensor::from_vec(
        &[params.f1_mean.len()],
        params.f1_mean.clone(),
    )?);
    let f1_logvar = g.constant(Tensor::from_vec(
        &[params.f1_logvar.len()],
        params.f1_logvar.clone(),
    )?);
    let (mu, logvar) = estimate_on_graph(&mut g, feats, f1_mean, f1_logvar, config)?;
    Ok((g.value(mu).data().to_vec(), g.value(logvar).data().to_vec()))
}

/// Apply one f1 stack to a `[n, m + 3]` feature matrix and mean-pool the
/// rows into a single latent-sized vector.
pub fn mean_head_on_graph<T: Scalar>(
    g: &mut Graph<T>,
    features: NodeId,
    stack: NodeId,
    config: &ArchitectureConfig,
) -> Result<NodeId> {
    let width = config.embedding_dim() + 3;
    match *g.value(features).shape() {
        [_, w] if w == width => {}
        ref s => {
            return Err(Error::ShapeMismatch(format!(
                "feature matrix {s:?}, config wants [n, {width}]"
            )))
        }
    }
    let rows = dense_forward(g, features, stack, &f1_layout(config))?;
    g.mean_rows(rows)
}

/// Graph form of [`estimate_task_distribution`]; `features` is `[n, m + 3]`.
pub fn estimate_on_graph<T: Scalar>(
    g: &mut Graph<T>,
    features: NodeId,
    f1_mean: NodeId,
    f1_logvar: NodeId,
    config: &ArchitectureConfig,
) -> Result<(NodeId, NodeId)> {
    let mu = mean_head_on_graph(g, features, f1_mean, config)?;
    let logvar = mean_head_on_graph(g, features, f1_logvar, config)?;
    Ok((mu, logvar))
}

/// Draw I = mu + sigma * eps (stochastic) or I = mu (deterministic).
pub fn sample_latent<T: Scalar>(
    mu: &[T],
    log_variance: &[T],
    mode: SamplingMode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<T>> {
    if mu.len() != log_variance.len() {
        return Err(Error::ShapeMismatch(format!(
            "mu has {} entries, log_variance {}",
            mu.len(),
            log_variance.len()
        )));
    }
    let half = T::from_f64(0.5);
    mu.iter()
        .zip(log_variance)
        .map(|(&m, &lv)| {
            if !(m.is_finite() && lv.is_finite()) {
                return Err(Error::NonFinite("latent parameters".into()));
            }
            let sigma = (lv * half).exp();
            if !sigma.is_finite() {
                return Err(Error::NonFinite(format!(
                    "sigma overflowed from log variance {lv:?}"
                )));
            }
            Ok(match mode {
                SamplingMode::Deterministic => m,
                SamplingMode::Stochastic => m + sigma * T::from_f64(normal(rng)),
            })
        })
        .collect()
}

/// Graph form of the reparameterized draw; `eps` holds the fixed standard
/// normal values (None for deterministic mode).
pub fn reparam_on_graph<T: Scalar>(
    g: &mut Graph<T>,
    mu: NodeId,
    log_variance: NodeId,
    eps: Option<&[f64]>,
) -> Result<NodeId> {
    let Some(eps) = eps else {
        return Ok(mu);
    };
    if g.value(mu).shape() != [eps.len()] {
        return Err(Error::ShapeMismatch(format!(
            "mu {:?} with {} noise values",
            g.value(mu).shape(),
            eps.len()
        )));
    }
    let half = g.scale(log_variance, 0.5)?;
    let sigma = g.exp(half)?;
    let eps_node = g.constant(Tensor::from_f64(&[eps.len()], eps)?);
    let noise = g.mul(sigma, eps_node)?;
    g.add(mu, noise)
}

/// Run f2 on a latent draw and scale by the output gain, yielding theta_m.
pub fn predict_learner_weights<T: Scalar>(
    latent: &[T],
    params: &MetaParams<T>,
    config: &ArchitectureConfig,
) -> Result<Vec<T>> {
    params.validate_against(config)?;
    let mut g: Graph<T> = Graph::new();
    let latent = g.constant(Tensor::from_vec(&[latent.len()], latent.to_vec())?);
    let f2 = g.constant(Tensor::from_vec(&[params.f2.len()], params.f2.clone())?);
    let theta = predict_weights_on_graph(&mut g, latent, f2, config)?;
    Ok(g.value(theta).data().to_vec())
}

/// Graph form of [`predict_learner_weights`].
pub fn predict_weights_on_graph<T: Scalar>(
    g: &mut Graph<T>,
    latent: NodeId,
    f2: NodeId,
    config: &ArchitectureConfig,
) -> Result<NodeId> {
    if g.value(latent).shape() != [config.latent_dim] {
        return Err(Error::ShapeMismatch(format!(
            "latent {:?}, config wants [{}]",
            g.value(latent).shape(),
            config.latent_dim
        )));
    }
    let raw = dense_forward(g, latent, f2, &f2_layout(config))?;
    g.scale(raw, F2_OUTPUT_GAIN)
}
