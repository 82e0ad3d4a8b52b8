//! Fine-tuning: per-shape meta-predicted weights and the encoder are frozen,
//! and only the learner's own weights theta_l receive updates.

use std::time::Instant;

use crate::geometry::DatasetEntry;
use crate::learner::{
    embed_shape, encode, encoder_leaves, grid_tensor, points_tensor, predict_points,
    ArchitectureConfig, EncoderParams, LearnerWeights, PredictorLayout,
};
use crate::metalearner::{mean_head_on_graph, predict_weights_on_graph, MetaParams};
use crate::numerics::{Adam, AdamParams, Graph, Scalar};
use crate::rng::stream;
use crate::training::config::{
    params_digest, DivergenceGuard, EpochStat, TrainConfig, TrainReport,
};
use crate::training::loss::reconstruction_loss;
use crate::training::meta::{
    as_divergence, draw_occupancy_subset, grad_vec, prepare_items, shape_recon_loss, vec_tensor,
    ShapeItem,
};
use crate::{Error, Result};

/// Frozen meta-predicted weights for one target shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeThetaM<T> {
    pub id: String,
    pub theta_m: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FineTuneOutcome<T> {
    pub theta_l: Vec<T>,
    pub shapes: Vec<ShapeThetaM<T>>,
    pub report: TrainReport,
}

impl<T: Scalar> FineTuneOutcome<T> {
    /// Effective weights for one fine-tuned shape.
    pub fn weights_for(&self, id: &str) -> Option<LearnerWeights<T>> {
        self.shapes.iter().find(|s| s.id == id).map(|s| {
            LearnerWeights::new(s.theta_m.clone(), self.theta_l.clone())
                .expect("aligned weight lengths")
        })
    }
}

/// Predict a shape's weights from the task distribution mean: embed, pool
/// per-point features through the f1 mean stack, run f2. This is the
/// deterministic path shared by inference and every fine-tune setting that
/// has a meta-learner.
pub fn derive_theta_m<T: Scalar>(
    meta: &MetaParams<T>,
    entry: &DatasetEntry,
    arch: &ArchitectureConfig,
) -> Result<Vec<T>> {
    meta.validate_against(arch)?;
    if entry.grid.resolution() != arch.resolution {
        return Err(Error::ShapeMismatch(format!(
            "shape {}: grid resolution {} against architecture resolution {}",
            entry.id,
            entry.grid.resolution(),
            arch.resolution
        )));
    }
    let cloud: Vec<[f64; 3]> = entry
        .cloud
        .points
        .iter()
        .map(|p| [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])])
        .collect();
    let mut g: Graph<T> = Graph::new();
    let grid_node = g.constant(grid_tensor(&entry.grid));
    let enc = encoder_leaves(&mut g, &meta.encoder, false);
    let emb = encode(&mut g, grid_node, &enc, arch)?;
    let pts = g.constant(points_tensor(&cloud)?);
    let feats = g.point_features(emb, pts)?;
    let f1m = g.constant(vec_tensor(&meta.f1_mean));
    let mu = mean_head_on_graph(&mut g, feats, f1m, arch)?;
    let f2n = g.constant(vec_tensor(&meta.f2));
    let theta = predict_weights_on_graph(&mut g, mu, f2n, arch)?;
    Ok(g.value(theta).data().to_vec())
}

/// Fine-tune against a trained meta-learner: theta_m per target comes from
/// [`derive_theta_m`] and theta_l starts at zero. The meta parameters are
/// read-only throughout.
pub fn fine_tune<T, F>(
    meta: &MetaParams<T>,
    targets: &[DatasetEntry],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    on_epoch: F,
) -> Result<FineTuneOutcome<T>>
where
    T: Scalar,
    F: FnMut(&EpochStat),
{
    let shapes = targets
        .iter()
        .map(|entry| {
            Ok(ShapeThetaM {
                id: entry.id.clone(),
                theta_m: derive_theta_m(meta, entry, arch)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = PredictorLayout::from_config(arch).total;
    fine_tune_with(
        &meta.encoder,
        shapes,
        vec![T::zero(); total],
        targets,
        arch,
        config,
        on_epoch,
    )
}

/// Fine-tune from explicit frozen inputs: an encoder, per-target theta_m
/// and a starting theta_l. Each step averages the reconstruction loss over
/// every target shape and applies one Adam update to theta_l alone; the
/// encoder enters the graphs only as constants, so its gradient is zero by
/// construction.
pub fn fine_tune_with<T, F>(
    encoder: &EncoderParams<T>,
    shapes: Vec<ShapeThetaM<T>>,
    mut theta_l: Vec<T>,
    targets: &[DatasetEntry],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<FineTuneOutcome<T>>
where
    T: Scalar,
    F: FnMut(&EpochStat),
{
    config.validate()?;
    arch.validate()?;
    encoder.validate_against(arch)?;
    let layout = PredictorLayout::from_config(arch);
    if theta_l.len() != layout.total {
        return Err(Error::ShapeMismatch(format!(
            "theta_l has {} parameters, layout wants {}",
            theta_l.len(),
            layout.total
        )));
    }
    let items = prepare_items(targets, arch)?;
    if shapes.len() != targets.len()
        || shapes.iter().zip(targets).any(|(s, t)| s.id != t.id)
    {
        return Err(Error::InvalidArgument(
            "theta_m list does not line up with the target shapes".into(),
        ));
    }
    for s in &shapes {
        if s.theta_m.len() != layout.total {
            return Err(Error::ShapeMismatch(format!(
                "shape {}: theta_m has {} parameters, layout wants {}",
                s.id,
                s.theta_m.len(),
                layout.total
            )));
        }
    }
    let embeddings: Vec<Vec<T>> = targets
        .iter()
        .map(|e| embed_shape(&e.grid, encoder, arch))
        .collect::<Result<_>>()?;

    let mut opt: Adam<T> = Adam::new(AdamParams::with_lr(config.learning_rate))?;
    let slot = opt.register(theta_l.len());
    let mut guard = DivergenceGuard::new();
    let mut epochs = Vec::with_capacity(config.finetune_steps);
    for step in 0..config.finetune_steps {
        let started = Instant::now();
        let mut rng = stream(config.seed, &format!("fine-tune/step/{step}"));
        let mut g: Graph<T> = Graph::new();
        let theta_leaf = g.leaf(vec_tensor(&theta_l), true);
        let loss = (|| {
            let mut total = None;
            for (i, item) in items.iter().enumerate() {
                let emb = g.constant(vec_tensor(&embeddings[i]));
                let theta_m = g.constant(vec_tensor(&shapes[i].theta_m));
                let eff = g.add(theta_m, theta_leaf)?;
                let (pts, lbls) = draw_occupancy_subset(item, config.occupancy_samples, &mut rng);
                let recon = shape_recon_loss(&mut g, emb, eff, &pts, &lbls, &layout)?;
                total = Some(match total {
                    Some(t) => g.add(t, recon)?,
                    None => recon,
                });
            }
            g.scale(total.expect("non-empty targets"), 1.0 / items.len() as f64)
        })()
        .map_err(|e| as_divergence(step as u64, e))?;

        let loss_value = g.value(loss).item().expect("scalar loss").to_f64();
        guard.observe(step as u64, loss_value)?;
        let grads = g.backward(loss).map_err(|e| as_divergence(step as u64, e))?;
        opt.begin_step();
        let grad = grad_vec(&grads, theta_leaf, theta_l.len());
        opt.update(slot, &mut theta_l, &grad)?;

        let stat = EpochStat {
            epoch: step,
            loss: loss_value,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&stat);
        epochs.push(stat);
    }

    let final_loss = match epochs.last() {
        Some(stat) => stat.loss,
        None => full_grid_loss(&items, &embeddings, &shapes, &theta_l, arch)?,
    };
    let mut parts: Vec<(String, &[T])> = vec![("theta_l".into(), theta_l.as_slice())];
    for s in &shapes {
        parts.push((format!("theta_m.{}", s.id), s.theta_m.as_slice()));
    }
    let report = TrainReport {
        final_loss,
        checkpoint_digest: params_digest(&parts),
        epochs,
    };
    report.validate()?;
    Ok(FineTuneOutcome {
        theta_l,
        shapes,
        report,
    })
}

/// Mean reconstruction loss over every grid cell of every target.
fn full_grid_loss<T: Scalar>(
    items: &[ShapeItem<'_>],
    embeddings: &[Vec<T>],
    shapes: &[ShapeThetaM<T>],
    theta_l: &[T],
    arch: &ArchitectureConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, item) in items.iter().enumerate() {
        let weights = LearnerWeights::new(shapes[i].theta_m.clone(), theta_l.to_vec())?;
        let cells = crate::geometry::cell_occupancy_samples(&item.entry.grid);
        let points: Vec<[f64; 3]> = cells.iter().map(|c| c.point).collect();
        let preds = predict_points(&embeddings[i], &points, &weights, arch)?;
        let occ: Vec<f64> = preds.iter().map(|p| p.occupancy).collect();
        total += reconstruction_loss(&occ, &cells)?;
    }
    Ok(total / items.len() as f64)
}
