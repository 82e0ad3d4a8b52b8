//! Training run configuration, progress reports and the divergence guard.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::sha256_hex;
use crate::learner::ArchitectureConfig;
use crate::numerics::Scalar;
use crate::{Error, Result};

/// Loss blow-up factor tolerated before the guard starts counting.
pub const GUARD_FACTOR: f64 = 10.0;
/// Consecutive over-threshold steps that count as divergence.
pub const GUARD_PATIENCE: u32 = 50;

/// The three weight-production arms of the ablation.
///
/// A trains the learner conventionally (no meta path, theta_m stays zero),
/// B meta-learns a deterministic feature-to-latent map with no variance
/// head, and C meta-learns the full stochastic task distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WeightSetting {
    A,
    B,
    C,
}

impl WeightSetting {
    pub fn all() -> [WeightSetting; 3] {
        [WeightSetting::A, WeightSetting::B, WeightSetting::C]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeightSetting::A => "A",
            WeightSetting::B => "B",
            WeightSetting::C => "C",
        }
    }
}

impl fmt::Display for WeightSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(WeightSetting::A),
            "B" | "b" => Ok(WeightSetting::B),
            "C" | "c" => Ok(WeightSetting::C),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight setting {other:?} (expected A, B or C)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub meta_epochs: usize,
    /// Adam steps of the fine-tune phase; zero leaves theta_l untouched.
    pub finetune_steps: usize,
    /// Shapes per meta-step.
    pub batch: usize,
    pub seed: u64,
    pub kl_weight: f64,
    pub setting: WeightSetting,
    /// Architecture preset name resolved by [`TrainConfig::architecture`].
    pub preset: String,
    /// Occupancy pairs drawn per shape per step, half inside, half outside.
    pub occupancy_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            meta_epochs: 200,
            finetune_steps: 200,
            batch: 4,
            seed: 0,
            kl_weight: 0.0,
            setting: WeightSetting::C,
            preset: "desk".into(),
            occupancy_samples: 512,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate {} out of range",
                self.learning_rate
            )));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kl_weight {} out of range",
                self.kl_weight
            )));
        }
        for (name, value) in [
            ("meta_epochs", self.meta_epochs),
            ("batch", self.batch),
            ("occupancy_samples", self.occupancy_samples),
        ] {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        ArchitectureConfig::preset(&self.preset)?;
        Ok(())
    }

    pub fn architecture(&self) -> Result<ArchitectureConfig> {
        ArchitectureConfig::preset(&self.preset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    /// Mean loss over the epoch's steps.
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStat>,
    pub final_loss: f64,
    /// Content digest of the trained parameters.
    pub checkpoint_digest: String,
}

impl TrainReport {
    pub fn validate(&self) -> Result<()> {
        for stat in &self.epochs {
            if !(stat.loss.is_finite() && stat.loss >= 0.0) {
                return Err(Error::NonFinite(format!(
                    "epoch {} loss {}",
                    stat.epoch, stat.loss
                )));
            }
        }
        if !(self.final_loss.is_finite() && self.final_loss >= 0.0) {
            return Err(Error::NonFinite(format!("final loss {}", self.final_loss)));
        }
        Ok(())
    }
}

/// Digest a list of named parameter blocks; any value or name change, or a
/// reordering, changes the digest.
pub fn params_digest<T: Scalar>(parts: &[(String, &[T])]) -> String {
    let mut bytes = Vec::new();
    for (name, data) in parts {
        bytes.extend_from_slice(name.as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for &v in *data {
            bytes.extend_from_slice(&v.to_f64().to_bits().to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

/// Aborts a run whose loss goes non-finite, or stays above
/// [`GUARD_FACTOR`] times its initial value for [`GUARD_PATIENCE`]
/// consecutive steps.
pub struct DivergenceGuard {
    initial: Option<f64>,
    consecutive: u32,
}

impl DivergenceGuard {
    pub fn new() -> Self {
        DivergenceGuard {
            initial: None,
            consecutive: 0,
        }
    }

    pub fn observe(&mut self, step: u64, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("step {step}: loss {loss}")));
        }
        let initial = *self.initial.get_or_insert(loss);
        if initial > 0.0 && loss > GUARD_FACTOR * initial {
            self.consecutive += 1;
        } else {
            self.consecutive = 0;
        }
        if self.consecutive >= GUARD_PATIENCE {
            return Err(Error::Diverged(format!(
                "step {step}: loss {loss} above {GUARD_FACTOR}x the initial {initial} \
                 for {GUARD_PATIENCE} consecutive steps"
            )));
        }
        Ok(())
    }
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self::new()
    }
}
