//! Training: the meta-objective over shape tasks, conventional pretraining,
//! fine-tuning of the learner's own weights, losses, and the weight-setting
//! ablation harness.

pub mod ablation;
pub mod config;
pub mod finetune;
pub mod loss;
pub mod meta;
#[cfg(test)]
pub(crate) mod testutil;

pub use ablation::{
    pretrain_conventional, run_weight_setting, trainable_parameter_count, PretrainOutcome,
    SettingArtifacts,
};
pub use config::{
    params_digest, DivergenceGuard, EpochStat, TrainConfig, TrainReport, WeightSetting,
    GUARD_FACTOR, GUARD_PATIENCE,
};
pub use finetune::{derive_theta_m, fine_tune, fine_tune_with, FineTuneOutcome, ShapeThetaM};
pub use loss::{kl_on_graph, kl_term, loss_on_graph, reconstruction_loss};
pub use meta::{meta_train, MetaTrainOutcome};
