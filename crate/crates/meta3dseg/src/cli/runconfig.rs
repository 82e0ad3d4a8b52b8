//! The JSON run configuration consumed by the training commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::learner::ArchitectureConfig;
use crate::training::TrainConfig;
use crate::{Error, Result};

/// Training hyperparameters plus an optional explicit architecture that
/// overrides the preset and an optional default dataset directory.
/// Unknown keys anywhere in the document are rejected before any work
/// starts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub architecture: Option<ArchitectureConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if let Some(arch) = &self.architecture {
            arch.validate()?;
        }
        Ok(())
    }

    /// The explicit architecture when given, the preset's otherwise.
    pub fn architecture(&self) -> Result<ArchitectureConfig> {
        match &self.architecture {
            Some(arch) => Ok(arch.clone()),
            None => self.train.architecture(),
        }
    }

    /// Resolve the dataset directory; a command-line flag wins.
    pub fn data_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.data.clone())
            .ok_or_else(|| {
                Error::InvalidConfig("no dataset directory (pass --data or set \"data\")".into())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_keys_are_rejected_at_both_levels() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"frobnicate": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"warmup": 5}}"#).is_err());
    }

    #[test]
    fn negative_learning_rate_fails_validation() {
        let config: RunConfig =
            serde_json::from_str(r#"{"train": {"learning_rate": -0.1}}"#).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn explicit_architecture_wins_over_the_preset() {
        let json = r#"{
            "train": {"preset": "desk"},
            "architecture": {
                "resolution": 4,
                "conv_channels": [2, 4],
                "decoder_dims": [6],
                "predictor_dims": [4],
                "latent_dim": 3,
                "f1_hidden_dims": [],
                "f2_hidden_dims": []
            }
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.architecture().unwrap().resolution, 4);

        let preset_only: RunConfig = serde_json::from_str(r#"{}"#).unwrap();
        assert_eq!(preset_only.architecture().unwrap().resolution, 16);
    }

    #[test]
    fn data_dir_prefers_the_flag() {
        let mut config = RunConfig::default();
        assert!(config.data_dir(None).is_err());
        config.data = Some(PathBuf::from("from-config"));
        assert_eq!(config.data_dir(None).unwrap(), PathBuf::from("from-config"));
        assert_eq!(
            config.data_dir(Some(Path::new("from-flag"))).unwrap(),
            PathBuf::from("from-flag")
        );
    }
}
