//! Command-line surface: argument parsing, run configuration, checkpoint
//! persistence and colored exports.

mod checkpoint;
mod commands;
mod model;
mod ply;
mod runconfig;

pub use checkpoint::{
    learner_checkpoint, learner_from_checkpoint, meta_checkpoint, meta_from_checkpoint,
    Checkpoint, CheckpointHeader, CheckpointKind, TensorRecord, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use commands::{execute, run, Cli, Command};
pub use model::Model;
pub use ply::{parse_ply, write_ply, PALETTE};
pub use runconfig::RunConfig;
