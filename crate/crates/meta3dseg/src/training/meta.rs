//! The meta-training loop: each shape is one task, and the encoder plus
//! both meta stacks are optimized so that hypernetwork-predicted weights
//! reconstruct occupancy with the learner's own weights pinned at zero.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{cell_occupancy_samples, DatasetEntry, OccupancySample};
use crate::learner::{
    dense_forward, encode, encoder_leaves, grid_tensor, points_tensor, ArchitectureConfig,
    PredictorLayout,
};
use crate::metalearner::{
    estimate_on_graph, mean_head_on_graph, predict_weights_on_graph, reparam_on_graph, MetaParams,
};
use crate::numerics::{Adam, AdamParams, Gradients, Graph, NodeId, Scalar, Tensor};
use crate::rng::{normal, stream};
use crate::training::config::{
    params_digest, DivergenceGuard, EpochStat, TrainConfig, TrainReport, WeightSetting,
};
use crate::training::loss::{kl_on_graph, loss_on_graph};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct MetaTrainOutcome<T> {
    pub params: MetaParams<T>,
    pub report: TrainReport,
}

/// One dataset entry with its precomputed training views.
pub(crate) struct ShapeItem<'a> {
    pub entry: &'a DatasetEntry,
    cells: Vec<OccupancySample>,
    inside: Vec<usize>,
    outside: Vec<usize>,
    pub cloud: Vec<[f64; 3]>,
}

pub(crate) fn prepare_items<'a>(
    dataset: &'a [DatasetEntry],
    arch: &ArchitectureConfig,
) -> Result<Vec<ShapeItem<'a>>> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    dataset
        .iter()
        .map(|entry| {
            if entry.grid.resolution() != arch.resolution {
                return Err(Error::ShapeMismatch(format!(
                    "shape {}: grid resolution {} against architecture resolution {}",
                    entry.id,
                    entry.grid.resolution(),
                    arch.resolution
                )));
            }
            if entry.cloud.points.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "shape {}: empty point cloud",
                    entry.id
                )));
            }
            let cells = cell_occupancy_samples(&entry.grid);
            let inside: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].label == 1).collect();
            let outside: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].label == 0).collect();
            let cloud = entry
                .cloud
                .points
                .iter()
                .map(|p| [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])])
                .collect();
            Ok(ShapeItem {
                entry,
                cells,
                inside,
                outside,
                cloud,
            })
        })
        .collect()
}

/// Draw `k` occupancy pairs, half from inside cells and half from outside,
/// with replacement; a shape missing one side draws all from the other.
pub(crate) fn draw_occupancy_subset(
    item: &ShapeItem<'_>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<[f64; 3]>, Vec<u8>) {
    let mut points = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    for n in 0..k {
        let pool = if item.inside.is_empty() {
            &item.outside
        } else if item.outside.is_empty() || n < k / 2 {
            &item.inside
        } else {
            &item.outside
        };
        let cell = &item.cells[pool[rng.random_range(0..pool.len())]];
        points.push(cell.point);
        labels.push(cell.label);
    }
    (points, labels)
}

/// Predictor branch maximum over sampled points against their labels.
pub(crate) fn shape_recon_loss<T: Scalar>(
    g: &mut Graph<T>,
    emb: NodeId,
    flat: NodeId,
    points: &[[f64; 3]],
    labels: &[u8],
    layout: &PredictorLayout,
) -> Result<NodeId> {
    let pts = g.constant(points_tensor(points)?);
    let feats = g.point_features(emb, pts)?;
    let logits = dense_forward(g, feats, flat, layout)?;
    let acts = g.sigmoid(logits)?;
    let occ = g.row_max(acts)?;
    loss_on_graph(g, occ, labels)
}

pub(crate) fn grad_vec<T: Scalar>(grads: &Gradients<T>, node: NodeId, len: usize) -> Vec<T> {
    match grads.get(node) {
        Some(t) => t.data().to_vec(),
        None => vec![T::zero(); len],
    }
}

pub(crate) fn vec_tensor<T: Scalar>(values: &[T]) -> Tensor<T> {
    Tensor::from_vec(&[values.len()], values.to_vec()).expect("flat parameter vector")
}

/// A mid-training numeric fault is a divergence, not a usage error.
pub(crate) fn as_divergence(step: u64, err: Error) -> Error {
    match err {
        Error::NonFinite(msg) => Error::Diverged(format!("step {step}: {msg}")),
        other => other,
    }
}

/// Optimize the meta parameters over the training shapes. Settings B and C
/// differ only in the latent path: B maps pooled features straight to the
/// latent, C draws from the estimated task distribution.
pub fn meta_train<T, F>(
    dataset: &[DatasetEntry],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<MetaTrainOutcome<T>>
where
    T: Scalar,
    F: FnMut(&EpochStat),
{
    config.validate()?;
    arch.validate()?;
    if config.setting == WeightSetting::A {
        return Err(Error::InvalidConfig(
            "setting A trains no meta parameters; use pretrain_conventional".into(),
        ));
    }
    let items = prepare_items(dataset, arch)?;
    let layout = PredictorLayout::from_config(arch);
    let stochastic = config.setting == WeightSetting::C;

    let mut params: MetaParams<T> = MetaParams::init(arch, &mut stream(config.seed, "init/meta"));
    let mut opt: Adam<T> = Adam::new(AdamParams::with_lr(config.learning_rate))?;
    let enc_slots: Vec<(usize, usize)> = params
        .encoder
        .layers
        .iter()
        .map(|l| (opt.register(l.weight.numel()), opt.register(l.bias.numel())))
        .collect();
    let f1m_slot = opt.register(params.f1_mean.len());
    let f1v_slot = stochastic.then(|| opt.register(params.f1_logvar.len()));
    let f2_slot = opt.register(params.f2.len());

    let mut guard = DivergenceGuard::new();
    let mut step: u64 = 0;
    let mut epochs = Vec::with_capacity(config.meta_epochs);
    for epoch in 0..config.meta_epochs {
        let started = Instant::now();
        let mut rng = stream(config.seed, &format!("meta-train/epoch/{epoch}"));
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut steps_in_epoch = 0;
        for chunk in order.chunks(config.batch) {
            let mut g: Graph<T> = Graph::new();
            let enc_nodes = encoder_leaves(&mut g, &params.encoder, true);
            let f1m = g.leaf(vec_tensor(&params.f1_mean), true);
            let f1v = stochastic.then(|| g.leaf(vec_tensor(&params.f1_logvar), true));
            let f2n = g.leaf(vec_tensor(&params.f2), true);

            let loss = (|| -> Result<NodeId> {
                let mut total: Option<NodeId> = None;
                for &idx in chunk {
                    let item = &items[idx];
                    let grid_node = g.constant(grid_tensor(&item.entry.grid));
                    let emb = encode(&mut g, grid_node, &enc_nodes, arch)?;
                    let cloud_node = g.constant(points_tensor(&item.cloud)?);
                    let feats = g.point_features(emb, cloud_node)?;

                    let (pts, lbls) =
                        draw_occupancy_subset(item, config.occupancy_samples, &mut rng);
                    let (recon, kl) = if let Some(f1v) = f1v {
                        let (mu, logvar) = estimate_on_graph(&mut g, feats, f1m, f1v, arch)?;
                        let eps: Vec<f64> =
                            (0..arch.latent_dim).map(|_| normal(&mut rng)).collect();
                        let z = reparam_on_graph(&mut g, mu, logvar, Some(&eps))?;
                        let kl = (config.kl_weight > 0.0)
                            .then(|| kl_on_graph(&mut g, mu, logvar))
                            .transpose()?;
                        let theta_m = predict_weights_on_graph(&mut g, z, f2n, arch)?;
                        (
                            shape_recon_loss(&mut g, emb, theta_m, &pts, &lbls, &layout)?,
                            kl,
                        )
                    } else {
                        let latent = mean_head_on_graph(&mut g, feats, f1m, arch)?;
                        let theta_m = predict_weights_on_graph(&mut g, latent, f2n, arch)?;
                        (
                            shape_recon_loss(&mut g, emb, theta_m, &pts, &lbls, &layout)?,
                            None,
                        )
                    };
                    let mut shape_loss = recon;
                    if let Some(kl) = kl {
                        let weighted = g.scale(kl, config.kl_weight)?;
                        shape_loss = g.add(shape_loss, weighted)?;
                    }
                    total = Some(match total {
                        Some(t) => g.add(t, shape_loss)?,
                        None => shape_loss,
                    });
                }
                g.scale(total.expect("non-empty chunk"), 1.0 / chunk.len() as f64)
            })()
            .map_err(|e| as_divergence(step, e))?;

            let loss_value = g.value(loss).item().expect("scalar loss").to_f64();
            guard.observe(step, loss_value)?;
            let grads = g.backward(loss).map_err(|e| as_divergence(step, e))?;

            opt.begin_step();
            for (i, &(ws, bs)) in enc_slots.iter().enumerate() {
                let (wn, bn) = enc_nodes.layers[i];
                let layer = &mut params.encoder.layers[i];
                let gw = grad_vec(&grads, wn, layer.weight.numel());
                opt.update(ws, layer.weight.data_mut(), &gw)?;
                let gb = grad_vec(&grads, bn, layer.bias.numel());
                opt.update(bs, layer.bias.data_mut(), &gb)?;
            }
            let gm = grad_vec(&grads, f1m, params.f1_mean.len());
            opt.update(f1m_slot, &mut params.f1_mean, &gm)?;
            if let (Some(slot), Some(node)) = (f1v_slot, f1v) {
                let gv = grad_vec(&grads, node, params.f1_logvar.len());
                opt.update(slot, &mut params.f1_logvar, &gv)?;
            }
            let g2 = grad_vec(&grads, f2n, params.f2.len());
            opt.update(f2_slot, &mut params.f2, &g2)?;

            epoch_loss += loss_value;
            steps_in_epoch += 1;
            step += 1;
        }

        let stat = EpochStat {
            epoch,
            loss: epoch_loss / steps_in_epoch as f64,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&stat);
        epochs.push(stat);
    }

    let report = TrainReport {
        final_loss: epochs.last().expect("at least one epoch").loss,
        checkpoint_digest: params_digest(&params.flat_parts()),
        epochs,
    };
    report.validate()?;
    Ok(MetaTrainOutcome { params, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::testutil::{tiny_arch, tiny_dataset};

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            meta_epochs: 3,
            batch: 2,
            seed: 11,
            occupancy_samples: 64,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn identical_runs_produce_identical_checkpoints() {
        let arch = tiny_arch();
        let data = tiny_dataset(3);
        let run = || {
            meta_train::<f32, _>(&data, &arch, &tiny_config(), |_| {})
                .unwrap()
                .report
        };
        let (a, b) = (run(), run());
        assert_eq!(a.checkpoint_digest, b.checkpoint_digest);
        assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
        assert_eq!(a.epochs.len(), 3);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let arch = tiny_arch();
        let err = meta_train::<f32, _>(&[], &arch, &tiny_config(), |_| {}).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn setting_a_is_rejected() {
        let arch = tiny_arch();
        let data = tiny_dataset(2);
        let config = TrainConfig {
            setting: WeightSetting::A,
            ..tiny_config()
        };
        assert!(meta_train::<f32, _>(&data, &arch, &config, |_| {}).is_err());
    }

    #[test]
    fn loss_decreases_on_a_tiny_dataset() {
        let arch = tiny_arch();
        let data = tiny_dataset(3);
        let config = TrainConfig {
            meta_epochs: 40,
            ..tiny_config()
        };
        let outcome = meta_train::<f32, _>(&data, &arch, &config, |_| {}).unwrap();
        let first = outcome.report.epochs[0].loss;
        assert!(
            outcome.report.final_loss < first,
            "final {} against first {first}",
            outcome.report.final_loss
        );
    }

    #[test]
    fn one_step_reaches_the_hypernetwork() {
        let arch = tiny_arch();
        let data = tiny_dataset(2);
        let config = TrainConfig {
            meta_epochs: 1,
            ..tiny_config()
        };
        let outcome = meta_train::<f32, _>(&data, &arch, &config, |_| {}).unwrap();
        let init: MetaParams<f32> = MetaParams::init(&arch, &mut stream(config.seed, "init/meta"));
        assert_ne!(outcome.params.f2, init.f2);
        assert_ne!(outcome.params.f1_mean, init.f1_mean);
    }

    #[test]
    fn setting_b_never_touches_the_variance_stack() {
        let arch = tiny_arch();
        let data = tiny_dataset(2);
        let config = TrainConfig {
            setting: WeightSetting::B,
            meta_epochs: 4,
            ..tiny_config()
        };
        let outcome = meta_train::<f32, _>(&data, &arch, &config, |_| {}).unwrap();
        let init: MetaParams<f32> = MetaParams::init(&arch, &mut stream(config.seed, "init/meta"));
        assert_eq!(outcome.params.f1_logvar, init.f1_logvar);
        assert_ne!(outcome.params.f1_mean, init.f1_mean);
    }

    #[test]
    fn runaway_learning_rate_diverges() {
        let arch = tiny_arch();
        let data = tiny_dataset(3);
        let config = TrainConfig {
            learning_rate: 1e3,
            kl_weight: 1.0,
            meta_epochs: 80,
            batch: 1,
            ..tiny_config()
        };
        let err = meta_train::<f64, _>(&data, &arch, &config, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Diverged(_)), "got {err:?}");
    }

    #[test]
    fn epoch_callback_sees_every_epoch_in_order() {
        let arch = tiny_arch();
        let data = tiny_dataset(2);
        let mut seen = Vec::new();
        meta_train::<f32, _>(&data, &arch, &tiny_config(), |s| seen.push(s.epoch)).unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
    }
}
