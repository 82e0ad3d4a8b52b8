//! Inference facade over a meta/learner checkpoint pair, shared by the
//! command layer and the C bindings.

use std::collections::HashMap;
use std::path::Path;

use crate::cli::{learner_from_checkpoint, meta_from_checkpoint, Checkpoint};
use crate::evaluation::{evaluate_category, point_count_sweep, CategoryEvaluation, SweepRow};
use crate::geometry::DatasetEntry;
use crate::learner::{segment_shape, ArchitectureConfig, LearnerWeights};
use crate::metalearner::MetaParams;
use crate::training::{derive_theta_m, FineTuneOutcome};
use crate::{Error, Result};

/// Frozen meta parameters plus the learner fine-tuned against them.
pub struct Model {
    meta: MetaParams<f32>,
    finetune: FineTuneOutcome<f32>,
    architecture: ArchitectureConfig,
}

impl Model {
    /// Load a checkpoint pair, rejecting mismatched architectures and a
    /// learner that was tuned against different meta weights.
    pub fn load(meta_path: &Path, learner_path: &Path) -> Result<Model> {
        let meta_ckpt = Checkpoint::load(meta_path)?;
        let learner_ckpt = Checkpoint::load(learner_path)?;
        if learner_ckpt.header.architecture != meta_ckpt.header.architecture {
            return Err(Error::InvalidConfig(format!(
                "learner checkpoint architecture (preset {}) does not match the meta checkpoint's (preset {})",
                learner_ckpt.header.preset, meta_ckpt.header.preset
            )));
        }
        if learner_ckpt.header.meta_digest.as_deref()
            != Some(meta_ckpt.header.params_digest.as_str())
        {
            return Err(Error::InvalidConfig(
                "learner checkpoint was fine-tuned against a different meta checkpoint".into(),
            ));
        }
        Ok(Model {
            meta: meta_from_checkpoint(&meta_ckpt)?,
            finetune: learner_from_checkpoint(&learner_ckpt)?,
            architecture: meta_ckpt.header.architecture,
        })
    }

    pub fn architecture(&self) -> &ArchitectureConfig {
        &self.architecture
    }

    pub fn meta(&self) -> &MetaParams<f32> {
        &self.meta
    }

    /// Effective weights for one shape: fine-tuned theta_m when the
    /// checkpoint has it, otherwise theta_m derived from the frozen meta
    /// parameters, plus the shared theta_l either way.
    pub fn weights_for(&self, entry: &DatasetEntry) -> Result<LearnerWeights<f32>> {
        match self.finetune.weights_for(&entry.id) {
            Some(w) => Ok(w),
            None => LearnerWeights::new(
                derive_theta_m(&self.meta, entry, &self.architecture)?,
                self.finetune.theta_l.clone(),
            ),
        }
    }

    pub fn weights_table(
        &self,
        entries: &[DatasetEntry],
    ) -> Result<HashMap<String, LearnerWeights<f32>>> {
        let mut table = HashMap::with_capacity(entries.len());
        for entry in entries {
            table.insert(entry.id.clone(), self.weights_for(entry)?);
        }
        Ok(table)
    }

    /// Winning branch index per stored cloud point.
    pub fn segment(&self, entry: &DatasetEntry) -> Result<Vec<usize>> {
        let weights = self.weights_for(entry)?;
        let preds = segment_shape(
            &entry.grid,
            &entry.cloud.points,
            &self.meta.encoder,
            &weights,
            &self.architecture,
        )?;
        Ok(preds.into_iter().map(|p| p.part_label).collect())
    }

    /// Segment and score one single-category batch.
    pub fn evaluate(&self, entries: &[DatasetEntry]) -> Result<CategoryEvaluation> {
        let table = self.weights_table(entries)?;
        evaluate_category(
            entries,
            &self.meta.encoder,
            |id| table.get(id).cloned(),
            &self.architecture,
        )
    }

    /// Re-evaluate at several evaluation point counts.
    pub fn sweep(
        &self,
        entries: &[DatasetEntry],
        counts: &[usize],
        seed: u64,
    ) -> Result<Vec<SweepRow>> {
        let table = self.weights_table(entries)?;
        point_count_sweep(
            entries,
            &self.meta.encoder,
            |id| table.get(id).cloned(),
            &self.architecture,
            counts,
            seed,
        )
    }
}
