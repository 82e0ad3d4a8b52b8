//! Binary checkpoint persistence.
//!
//! Layout: magic `M3DS`, format version (u32 LE), header length (u32 LE),
//! a JSON header, then the payload of concatenated little-endian f32
//! tensors. The header's tensor table must tile the payload exactly, and
//! a load/save round trip reproduces the input bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::learner::{ArchitectureConfig, ConvLayer, EncoderParams, PredictorLayout};
use crate::metalearner::MetaParams;
use crate::numerics::Tensor;
use crate::training::{
    params_digest, FineTuneOutcome, ShapeThetaM, TrainConfig, TrainReport,
};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"M3DS";
pub const CHECKPOINT_VERSION: u32 = 1;

/// What a checkpoint's payload holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    /// Encoder, both f1 stacks and the weight predictor f2.
    Meta,
    /// One shared theta_l plus per-shape theta_m vectors.
    Learner,
}

/// One payload tensor: byte `offset` into the payload, element `shape`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

impl TensorRecord {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Provenance and the tensor table; serialized as the JSON header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub kind: CheckpointKind,
    pub preset: String,
    pub architecture: ArchitectureConfig,
    pub config: TrainConfig,
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
    pub dataset_digest: String,
    /// Digest of the stored parameters, recomputed and checked on decode.
    pub params_digest: String,
    /// For learner checkpoints: digest of the frozen meta parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta_digest: Option<String>,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub payload: Vec<u8>,
}

impl Checkpoint {
    /// Tensor table must cover the payload exactly, in offset order.
    pub fn validate(&self) -> Result<()> {
        let mut cursor = 0u64;
        for record in &self.header.tensors {
            if record.offset != cursor {
                return Err(Error::Format(format!(
                    "tensor {} at offset {} leaves a gap or overlap at {cursor}",
                    record.name, record.offset
                )));
            }
            cursor += 4 * record.len() as u64;
        }
        if cursor != self.payload.len() as u64 {
            return Err(Error::Format(format!(
                "tensor table covers {cursor} bytes of a {}-byte payload",
                self.payload.len()
            )));
        }
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Result<Vec<f32>> {
        let record = self
            .header
            .tensors
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint has no tensor {name:?}")))?;
        let start = record.offset as usize;
        let bytes = &self.payload[start..start + 4 * record.len()];
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(12 + header.len() + self.payload.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("sized slice"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("sized slice")) as usize;
        if bytes.len() < 12 + header_len {
            return Err(Error::Format("truncated checkpoint header".into()));
        }
        let header: CheckpointHeader = serde_json::from_slice(&bytes[12..12 + header_len])?;
        let ckpt = Checkpoint {
            header,
            payload: bytes[12 + header_len..].to_vec(),
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }
}

fn push_tensor(
    tensors: &mut Vec<TensorRecord>,
    payload: &mut Vec<u8>,
    name: &str,
    shape: Vec<usize>,
    data: &[f32],
) {
    assert_eq!(shape.iter().product::<usize>(), data.len());
    tensors.push(TensorRecord {
        name: name.to_string(),
        shape,
        offset: payload.len() as u64,
    });
    for v in data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
}

/// Package trained meta parameters with their run provenance.
pub fn meta_checkpoint(
    params: &MetaParams<f32>,
    architecture: &ArchitectureConfig,
    config: &TrainConfig,
    report: &TrainReport,
    dataset_digest: &str,
) -> Result<Checkpoint> {
    params.validate_against(architecture)?;
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    for (name, tensor) in params.encoder.named_tensors() {
        push_tensor(
            &mut tensors,
            &mut payload,
            &name,
            tensor.shape().to_vec(),
            tensor.data(),
        );
    }
    for (name, flat) in [
        ("f1_mean", &params.f1_mean),
        ("f1_logvar", &params.f1_logvar),
        ("f2", &params.f2),
    ] {
        push_tensor(&mut tensors, &mut payload, name, vec![flat.len()], flat);
    }
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            kind: CheckpointKind::Meta,
            preset: config.preset.clone(),
            architecture: architecture.clone(),
            config: config.clone(),
            seed: config.seed,
            epochs: report.epochs.len(),
            final_loss: report.final_loss,
            dataset_digest: dataset_digest.to_string(),
            params_digest: params_digest(&params.flat_parts()),
            meta_digest: None,
            tensors,
        },
        payload,
    };
    ckpt.validate()?;
    Ok(ckpt)
}

/// Rebuild meta parameters from a checkpoint, verifying the stored digest.
pub fn meta_from_checkpoint(ckpt: &Checkpoint) -> Result<MetaParams<f32>> {
    if ckpt.header.kind != CheckpointKind::Meta {
        return Err(Error::Format(format!(
            "expected a meta checkpoint, found {:?}",
            ckpt.header.kind
        )));
    }
    let arch = &ckpt.header.architecture;
    arch.validate()?;
    let mut layers = Vec::with_capacity(arch.conv_channels.len());
    for i in 0..arch.conv_channels.len() {
        let weight = ckpt.tensor(&format!("encoder.{i}.weight"))?;
        let bias = ckpt.tensor(&format!("encoder.{i}.bias"))?;
        let record = |name: &str| {
            ckpt.header
                .tensors
                .iter()
                .find(|r| r.name == name)
                .expect("tensor() already found it")
                .shape
                .clone()
        };
        layers.push(ConvLayer {
            weight: Tensor::from_vec(&record(&format!("encoder.{i}.weight")), weight)?,
            bias: Tensor::from_vec(&record(&format!("encoder.{i}.bias")), bias)?,
        });
    }
    let params = MetaParams {
        encoder: EncoderParams { layers },
        f1_mean: ckpt.tensor("f1_mean")?,
        f1_logvar: ckpt.tensor("f1_logvar")?,
        f2: ckpt.tensor("f2")?,
    };
    params.validate_against(arch)?;
    let digest = params_digest(&params.flat_parts());
    if digest != ckpt.header.params_digest {
        return Err(Error::Format(format!(
            "meta parameter digest {digest} does not match the header's {}",
            ckpt.header.params_digest
        )));
    }
    Ok(params)
}

fn learner_parts<'a>(
    theta_l: &'a [f32],
    shapes: &'a [ShapeThetaM<f32>],
) -> Vec<(String, &'a [f32])> {
    let mut parts: Vec<(String, &[f32])> = vec![("theta_l".into(), theta_l)];
    for s in shapes {
        parts.push((format!("theta_m.{}", s.id), s.theta_m.as_slice()));
    }
    parts
}

/// Package a fine-tune outcome; theta_m and theta_l stay separate tensors.
pub fn learner_checkpoint(
    outcome: &FineTuneOutcome<f32>,
    architecture: &ArchitectureConfig,
    config: &TrainConfig,
    meta_digest: &str,
    dataset_digest: &str,
) -> Result<Checkpoint> {
    let layout = PredictorLayout::from_config(architecture);
    if outcome.theta_l.len() != layout.total {
        return Err(Error::ShapeMismatch(format!(
            "theta_l has {} parameters, preset {} wants {}",
            outcome.theta_l.len(),
            config.preset,
            layout.total
        )));
    }
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    push_tensor(
        &mut tensors,
        &mut payload,
        "theta_l",
        vec![outcome.theta_l.len()],
        &outcome.theta_l,
    );
    for s in &outcome.shapes {
        push_tensor(
            &mut tensors,
            &mut payload,
            &format!("theta_m.{}", s.id),
            vec![s.theta_m.len()],
            &s.theta_m,
        );
    }
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            kind: CheckpointKind::Learner,
            preset: config.preset.clone(),
            architecture: architecture.clone(),
            config: config.clone(),
            seed: config.seed,
            epochs: outcome.report.epochs.len(),
            final_loss: outcome.report.final_loss,
            dataset_digest: dataset_digest.to_string(),
            params_digest: params_digest(&learner_parts(&outcome.theta_l, &outcome.shapes)),
            meta_digest: Some(meta_digest.to_string()),
            tensors,
        },
        payload,
    };
    ckpt.validate()?;
    Ok(ckpt)
}

/// Rebuild a fine-tune outcome (epoch stats are not persisted).
pub fn learner_from_checkpoint(ckpt: &Checkpoint) -> Result<FineTuneOutcome<f32>> {
    if ckpt.header.kind != CheckpointKind::Learner {
        return Err(Error::Format(format!(
            "expected a learner checkpoint, found {:?}",
            ckpt.header.kind
        )));
    }
    let theta_l = ckpt.tensor("theta_l")?;
    let mut shapes = Vec::new();
    for record in &ckpt.header.tensors {
        if let Some(id) = record.name.strip_prefix("theta_m.") {
            let theta_m = ckpt.tensor(&record.name)?;
            if theta_m.len() != theta_l.len() {
                return Err(Error::Format(format!(
                    "theta_m for {id} has {} parameters, theta_l has {}",
                    theta_m.len(),
                    theta_l.len()
                )));
            }
            shapes.push(ShapeThetaM {
                id: id.to_string(),
                theta_m,
            });
        }
    }
    let digest = params_digest(&learner_parts(&theta_l, &shapes));
    if digest != ckpt.header.params_digest {
        return Err(Error::Format(format!(
            "learner parameter digest {digest} does not match the header's {}",
            ckpt.header.params_digest
        )));
    }
    Ok(FineTuneOutcome {
        theta_l,
        shapes,
        report: TrainReport {
            epochs: Vec::new(),
            final_loss: ckpt.header.final_loss,
            checkpoint_digest: digest,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            preset: "desk".into(),
            ..TrainConfig::default()
        }
    }

    fn desk_meta(seed: u64) -> (MetaParams<f32>, ArchitectureConfig, TrainConfig) {
        let config = tiny_config();
        let arch = config.architecture().unwrap();
        let params = MetaParams::init(&arch, &mut stream(seed, "init/meta"));
        (params, arch, config)
    }

    fn report_for<T: crate::numerics::Scalar>(params: &MetaParams<T>) -> TrainReport {
        TrainReport {
            epochs: vec![],
            final_loss: 0.125,
            checkpoint_digest: params_digest(&params.flat_parts()),
        }
    }

    #[test]
    fn meta_round_trip_preserves_bytes_and_parameters() {
        let (params, arch, config) = desk_meta(11);
        let ckpt =
            meta_checkpoint(&params, &arch, &config, &report_for(&params), "digest").unwrap();
        let bytes = ckpt.to_bytes().unwrap();
        let reloaded = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(reloaded.to_bytes().unwrap(), bytes);

        let restored = meta_from_checkpoint(&reloaded).unwrap();
        assert_eq!(restored, params);
    }

    #[test]
    fn tensor_table_tiles_the_payload() {
        let (params, arch, config) = desk_meta(3);
        let ckpt = meta_checkpoint(&params, &arch, &config, &report_for(&params), "d").unwrap();
        let mut cursor = 0u64;
        for record in &ckpt.header.tensors {
            assert_eq!(record.offset, cursor);
            cursor += 4 * record.len() as u64;
        }
        assert_eq!(cursor, ckpt.payload.len() as u64);

        let mut gapped = ckpt.clone();
        gapped.header.tensors[1].offset += 4;
        assert!(gapped.validate().is_err());
    }

    #[test]
    fn corrupted_payloads_fail_the_digest_check() {
        let (params, arch, config) = desk_meta(5);
        let ckpt = meta_checkpoint(&params, &arch, &config, &report_for(&params), "d").unwrap();
        let mut bytes = ckpt.to_bytes().unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        let tampered = Checkpoint::from_bytes(&bytes).unwrap();
        assert!(meta_from_checkpoint(&tampered).is_err());
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        assert!(Checkpoint::from_bytes(b"nope").is_err());
        let (params, arch, config) = desk_meta(7);
        let ckpt = meta_checkpoint(&params, &arch, &config, &report_for(&params), "d").unwrap();
        let mut bytes = ckpt.to_bytes().unwrap();
        bytes[4] = 9;
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    #[test]
    fn learner_round_trip_keeps_thetas_separate() {
        let config = tiny_config();
        let layout = PredictorLayout::from_config(&config.architecture().unwrap());
        let outcome = FineTuneOutcome {
            theta_l: vec![0.5f32; layout.total],
            shapes: vec![
                ShapeThetaM {
                    id: "mug-000".into(),
                    theta_m: vec![1.0f32; layout.total],
                },
                ShapeThetaM {
                    id: "mug-001".into(),
                    theta_m: vec![-1.0f32; layout.total],
                },
            ],
            report: TrainReport {
                epochs: vec![],
                final_loss: 0.25,
                checkpoint_digest: String::new(),
            },
        };
        let arch = config.architecture().unwrap();
        let ckpt =
            learner_checkpoint(&outcome, &arch, &config, "meta-digest", "data-digest").unwrap();
        assert_eq!(ckpt.header.meta_digest.as_deref(), Some("meta-digest"));

        let restored = learner_from_checkpoint(&ckpt).unwrap();
        assert_eq!(restored.theta_l, outcome.theta_l);
        assert_eq!(restored.shapes, outcome.shapes);
        assert!(restored
            .shapes
            .iter()
            .all(|s| s.theta_m.len() == restored.theta_l.len()));

        let bytes = ckpt.to_bytes().unwrap();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap().to_bytes().unwrap(), bytes);
    }

    #[test]
    fn kind_mixups_are_rejected() {
        let (params, arch, config) = desk_meta(9);
        let ckpt = meta_checkpoint(&params, &arch, &config, &report_for(&params), "d").unwrap();
        assert!(learner_from_checkpoint(&ckpt).is_err());
    }
}
