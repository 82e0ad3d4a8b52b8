//! The weight-setting ablation harness: A trains the learner conventionally,
//! B meta-learns a deterministic latent map, C meta-learns the full task
//! distribution. All arms share architecture, budgets and seeds, then
//! fine-tune on the target shapes.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::geometry::DatasetEntry;
use crate::learner::{
    encode, encoder_leaves, grid_tensor, init_dense_flat, ArchitectureConfig, EncoderParams,
    LearnerWeights, PredictorLayout,
};
use crate::metalearner::{f1_layout, MetaParams};
use crate::numerics::{Adam, AdamParams, Graph, Scalar};
use crate::rng::stream;
use crate::training::config::{
    params_digest, DivergenceGuard, EpochStat, TrainConfig, TrainReport, WeightSetting,
};
use crate::training::finetune::{fine_tune, fine_tune_with, FineTuneOutcome, ShapeThetaM};
use crate::training::meta::{
    as_divergence, draw_occupancy_subset, grad_vec, meta_train, prepare_items, shape_recon_loss,
    vec_tensor,
};
use crate::Result;

#[derive(Clone, Debug)]
pub struct PretrainOutcome<T> {
    pub encoder: EncoderParams<T>,
    pub theta_l: Vec<T>,
    pub report: TrainReport,
}

/// Everything a single ablation arm produces: the encoder that embeds
/// shapes, the meta-learner when the arm has one, and the fine-tuned
/// per-shape weights.
#[derive(Clone, Debug)]
pub struct SettingArtifacts<T> {
    pub setting: WeightSetting,
    pub encoder: EncoderParams<T>,
    pub meta: Option<MetaParams<T>>,
    pub finetune: FineTuneOutcome<T>,
    pub train_report: TrainReport,
}

impl<T: Scalar> SettingArtifacts<T> {
    pub fn weights_for(&self, id: &str) -> Option<LearnerWeights<T>> {
        self.finetune.weights_for(id)
    }
}

/// Parameters receiving gradient updates during the training phase of one
/// arm.
pub fn trainable_parameter_count(setting: WeightSetting, arch: &ArchitectureConfig) -> usize {
    let encoder: usize = arch
        .conv_channels
        .iter()
        .scan(1usize, |c_in, &c_out| {
            let weights = c_out * *c_in * 64 + c_out;
            *c_in = c_out;
            Some(weights)
        })
        .sum();
    let f1 = f1_layout(arch).total;
    let f2 = crate::metalearner::f2_layout(arch).total;
    let w = PredictorLayout::from_config(arch).total;
    match setting {
        WeightSetting::A => encoder + w,
        WeightSetting::B => encoder + f1 + f2,
        WeightSetting::C => encoder + 2 * f1 + f2,
    }
}

/// Conventional training for setting A: the encoder and one shared theta_l
/// learn occupancy reconstruction directly, with theta_m pinned at zero.
/// The encoder starts from the same draw as the meta arms.
pub fn pretrain_conventional<T, F>(
    dataset: &[DatasetEntry],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<PretrainOutcome<T>>
where
    T: Scalar,
    F: FnMut(&EpochStat),
{
    config.validate()?;
    arch.validate()?;
    let items = prepare_items(dataset, arch)?;
    let layout = PredictorLayout::from_config(arch);

    let mut encoder =
        MetaParams::<T>::init(arch, &mut stream(config.seed, "init/meta")).encoder;
    let mut theta_l: Vec<T> = init_dense_flat(&layout, &mut stream(config.seed, "init/theta-l"));

    let mut opt: Adam<T> = Adam::new(AdamParams::with_lr(config.learning_rate))?;
    let enc_slots: Vec<(usize, usize)> = encoder
        .layers
        .iter()
        .map(|l| (opt.register(l.weight.numel()), opt.register(l.bias.numel())))
        .collect();
    let theta_slot = opt.register(theta_l.len());

    let mut guard = DivergenceGuard::new();
    let mut step: u64 = 0;
    let mut epochs = Vec::with_capacity(config.meta_epochs);
    for epoch in 0..config.meta_epochs {
        let started = Instant::now();
        let mut rng = stream(config.seed, &format!("pretrain/epoch/{epoch}"));
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut steps_in_epoch = 0;
        for chunk in order.chunks(config.batch) {
            let mut g: Graph<T> = Graph::new();
            let enc_nodes = encoder_leaves(&mut g, &encoder, true);
            let theta_leaf = g.leaf(vec_tensor(&theta_l), true);
            let loss = (|| {
                let mut total = None;
                for &idx in chunk {
                    let item = &items[idx];
                    let grid_node = g.constant(grid_tensor(&item.entry.grid));
                    let emb = encode(&mut g, grid_node, &enc_nodes, arch)?;
                    let (pts, lbls) =
                        draw_occupancy_subset(item, config.occupancy_samples, &mut rng);
                    let recon = shape_recon_loss(&mut g, emb, theta_leaf, &pts, &lbls, &layout)?;
                    total = Some(match total {
                        Some(t) => g.add(t, recon)?,
                        None => recon,
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
                let layer = &mut encoder.layers[i];
                let gw = grad_vec(&grads, wn, layer.weight.numel());
                opt.update(ws, layer.weight.data_mut(), &gw)?;
                let gb = grad_vec(&grads, bn, layer.bias.numel());
                opt.update(bs, layer.bias.data_mut(), &gb)?;
            }
            let gt = grad_vec(&grads, theta_leaf, theta_l.len());
            opt.update(theta_slot, &mut theta_l, &gt)?;

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

    let mut parts: Vec<(String, &[T])> = encoder
        .named_tensors()
        .into_iter()
        .map(|(name, t)| (name, t.data()))
        .collect();
    parts.push(("theta_l".into(), theta_l.as_slice()));
    let report = TrainReport {
        final_loss: epochs.last().expect("at least one epoch").loss,
        checkpoint_digest: params_digest(&parts),
        epochs,
    };
    report.validate()?;
    Ok(PretrainOutcome {
        encoder,
        theta_l,
        report,
    })
}

/// Run one full ablation arm: train on `train_set`, fine-tune on `targets`.
pub fn run_weight_setting<T, F>(
    setting: WeightSetting,
    train_set: &[DatasetEntry],
    targets: &[DatasetEntry],
    arch: &ArchitectureConfig,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<SettingArtifacts<T>>
where
    T: Scalar,
    F: FnMut(&EpochStat),
{
    let config = TrainConfig {
        setting,
        ..config.clone()
    };
    match setting {
        WeightSetting::A => {
            let pre = pretrain_conventional::<T, _>(train_set, arch, &config, &mut on_epoch)?;
            let total = PredictorLayout::from_config(arch).total;
            let shapes = targets
                .iter()
                .map(|e| ShapeThetaM {
                    id: e.id.clone(),
                    theta_m: vec![T::zero(); total],
                })
                .collect();
            let finetune = fine_tune_with(
                &pre.encoder,
                shapes,
                pre.theta_l.clone(),
                targets,
                arch,
                &config,
                &mut on_epoch,
            )?;
            Ok(SettingArtifacts {
                setting,
                encoder: pre.encoder,
                meta: None,
                finetune,
                train_report: pre.report,
            })
        }
        WeightSetting::B | WeightSetting::C => {
            let trained = meta_train::<T, _>(train_set, arch, &config, &mut on_epoch)?;
            let finetune = fine_tune(&trained.params, targets, arch, &config, &mut on_epoch)?;
            Ok(SettingArtifacts {
                setting,
                encoder: trained.params.encoder.clone(),
                meta: Some(trained.params),
                finetune,
                train_report: trained.report,
            })
        }
    }
}
