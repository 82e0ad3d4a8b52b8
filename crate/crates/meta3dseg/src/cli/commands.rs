//! Command definitions and orchestration.
//!
//! Exit codes: 0 success, 2 validation error, 3 divergence abort, 4 I/O
//! error. Inputs are loaded and validated in full before any output file
//! is created, and identical inputs with identical seeds reproduce
//! identical outputs byte for byte.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::Rng;

use crate::cli::checkpoint::{
    learner_checkpoint, meta_checkpoint, meta_from_checkpoint, Checkpoint, CheckpointHeader,
};
use crate::cli::model::Model;
use crate::cli::ply::write_ply;
use crate::cli::runconfig::RunConfig;
use crate::evaluation::{
    ablation_csv, category_csv, evaluate_category, sweep_spread, AblationRow,
};
use crate::geometry::{
    generate_shape_sampled, load_dataset, sample_surface_points, save_dataset, sha256_hex,
    voxelize, Category, DatasetEntry, DatasetManifest, Split,
};
use crate::learner::ArchitectureConfig;
use crate::rng::stream;
use crate::training::{
    fine_tune, meta_train, params_digest, run_weight_setting, EpochStat, WeightSetting,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "meta3dseg",
    version,
    about = "Self-supervised 3D part segmentation via meta-learned weight prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled shape dataset.
    GenData(GenDataArgs),
    /// Meta-train the task-distribution and weight-prediction networks.
    MetaTrain(MetaTrainArgs),
    /// Fine-tune the shared weights on a target category, or run one
    /// weight-setting arm from scratch.
    FineTune(FineTuneArgs),
    /// Write per-shape predicted branch label files.
    Segment(SegmentArgs),
    /// Score predictions against ground-truth part labels.
    Eval(EvalArgs),
    /// Export one shape's labeled cloud as a colored ASCII PLY file.
    ExportPly(ExportPlyArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated category names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub categories: Vec<Category>,
    /// Shapes per category.
    #[arg(long)]
    pub per_category: usize,
    #[arg(long)]
    pub seed: u64,
    /// Occupancy grid resolution.
    #[arg(long)]
    pub resolution: usize,
    /// Surface points sampled per shape.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct MetaTrainArgs {
    /// Dataset directory (falls back to the config's "data").
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Run configuration JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch report path (default: <out>.report.jsonl).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = ArgGroup::new("source").required(true).args(["meta", "setting"]))]
pub struct FineTuneArgs {
    /// Meta checkpoint to fine-tune from.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Run one full weight-setting arm from scratch instead.
    #[arg(long)]
    pub setting: Option<WeightSetting>,
    /// Training dataset for --setting arms.
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    /// Target dataset directory (falls back to the config's "data").
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target category to fine-tune on.
    #[arg(long)]
    pub category: Category,
    /// Run configuration JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output learner checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Where --setting arms also write the trained meta checkpoint.
    #[arg(long)]
    pub out_meta: Option<PathBuf>,
    /// Where --setting arms write the setting,iou,acc CSV (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Meta checkpoint (encoder and weight predictor).
    #[arg(long)]
    pub meta: PathBuf,
    /// Learner checkpoint (theta_m and theta_l).
    #[arg(long)]
    pub learner: PathBuf,
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Category to segment.
    #[arg(long)]
    pub category: Category,
    /// Output directory for <id>.labels files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Meta checkpoint (encoder and weight predictor).
    #[arg(long)]
    pub meta: PathBuf,
    /// Learner checkpoint (theta_m and theta_l).
    #[arg(long)]
    pub learner: PathBuf,
    /// Dataset directory with ground-truth labels.
    #[arg(long)]
    pub data: PathBuf,
    /// Category to score.
    #[arg(long)]
    pub category: Category,
    /// Score CSV output path (default: CSV to stdout).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Full score report JSON output path.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Comma-separated point counts for a density sweep.
    #[arg(long, value_delimiter = ',')]
    pub sweep_counts: Option<Vec<usize>>,
    /// Sweep JSON output path (default: stdout).
    #[arg(long)]
    pub sweep_out: Option<PathBuf>,
    /// Seed for sweep resampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExportPlyArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Shape id to export.
    #[arg(long)]
    pub shape: String,
    /// Label file (one integer per line); defaults to stored labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output PLY path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse the process arguments, run the command, and return the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenData(args) => gen_data(args),
        Command::MetaTrain(args) => meta_train_cmd(args),
        Command::FineTune(args) => fine_tune_cmd(args),
        Command::Segment(args) => segment_cmd(args),
        Command::Eval(args) => eval_cmd(args),
        Command::ExportPly(args) => export_ply_cmd(args),
    }
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    for (name, value) in [
        ("--per-category", args.per_category),
        ("--resolution", args.resolution),
        ("--points", args.points),
    ] {
        if value == 0 {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
    }
    let mut seen = HashSet::new();
    for category in &args.categories {
        if !seen.insert(category) {
            return Err(Error::InvalidArgument(format!(
                "category {category} listed twice"
            )));
        }
    }
    let mut entries = Vec::with_capacity(args.categories.len() * args.per_category);
    for &category in &args.categories {
        for i in 0..args.per_category {
            let mut rng = stream(args.seed, &format!("gen/{category}/{i}"));
            let shape_seed: u64 = rng.random();
            let cloud_seed: u64 = rng.random();
            let shape = generate_shape_sampled(category, shape_seed)?;
            let grid = voxelize(&shape, args.resolution)?;
            let cloud = sample_surface_points(&shape, args.points, cloud_seed)?;
            entries.push(DatasetEntry {
                id: format!("{category}-{i:03}"),
                category,
                seed: shape_seed,
                split: Split::Train,
                grid,
                cloud,
            });
        }
    }
    let manifest = save_dataset(&entries, &args.out)?;
    println!(
        "wrote {} shapes to {}",
        manifest.records.len(),
        args.out.display()
    );
    Ok(())
}

fn meta_train_cmd(args: MetaTrainArgs) -> Result<()> {
    let run = RunConfig::load(&args.config)?;
    let arch = run.architecture()?;
    let data_dir = run.data_dir(args.data.as_deref())?;
    let (manifest, entries) = load_dataset(&data_dir)?;
    let digest = manifest_digest(&manifest)?;

    let outcome = meta_train::<f32, _>(&entries, &arch, &run.train, print_progress)?;
    meta_checkpoint(&outcome.params, &arch, &run.train, &outcome.report, &digest)?
        .save(&args.out)?;
    let report_path = args
        .report
        .unwrap_or_else(|| default_report_path(&args.out));
    write_jsonl(&report_path, &outcome.report.epochs)?;
    println!(
        "meta-trained {} epochs on {} shapes: final loss {:.6}",
        outcome.report.epochs.len(),
        entries.len(),
        outcome.report.final_loss
    );
    Ok(())
}

fn fine_tune_cmd(args: FineTuneArgs) -> Result<()> {
    let run = RunConfig::load(&args.config)?;
    let arch = run.architecture()?;
    let data_dir = run.data_dir(args.data.as_deref())?;
    let (manifest, entries) = load_dataset(&data_dir)?;
    let targets = category_entries(entries, args.category, &data_dir)?;
    let target_digest = manifest_digest(&manifest)?;

    if let Some(setting) = args.setting {
        let train_dir = args.train_data.ok_or_else(|| {
            Error::InvalidConfig("--setting runs train from scratch and need --train-data".into())
        })?;
        if args.out_meta.is_some() && setting == WeightSetting::A {
            return Err(Error::InvalidArgument(
                "setting A trains no meta parameters; drop --out-meta".into(),
            ));
        }
        let (train_manifest, train_entries) = load_dataset(&train_dir)?;
        let mut config = run.train.clone();
        config.setting = setting;

        let artifacts =
            run_weight_setting::<f32, _>(setting, &train_entries, &targets, &arch, &config, print_progress)?;
        let eval = evaluate_category(&targets, &artifacts.encoder, |id| artifacts.weights_for(id), &arch)?;

        let meta_digest = match &artifacts.meta {
            Some(meta) => params_digest(&meta.flat_parts()),
            None => {
                let parts: Vec<(String, &[f32])> = artifacts
                    .encoder
                    .named_tensors()
                    .into_iter()
                    .map(|(name, t)| (name, t.data()))
                    .collect();
                params_digest(&parts)
            }
        };
        if let (Some(path), Some(meta)) = (&args.out_meta, &artifacts.meta) {
            let train_digest = manifest_digest(&train_manifest)?;
            meta_checkpoint(meta, &arch, &config, &artifacts.train_report, &train_digest)?
                .save(path)?;
        }
        learner_checkpoint(&artifacts.finetune, &arch, &config, &meta_digest, &target_digest)?
            .save(&args.out)?;
        write_jsonl(
            &default_report_path(&args.out),
            &artifacts.finetune.report.epochs,
        )?;

        let csv = ablation_csv(&[AblationRow {
            setting,
            iou: eval.mean_iou,
            acc: eval.accuracy,
        }]);
        match &args.report {
            Some(path) => fs::write(path, &csv)?,
            None => print!("{csv}"),
        }
        println!(
            "setting {setting} on {}: mIoU {:.4} acc {:.4}",
            eval.category, eval.mean_iou, eval.accuracy
        );
    } else {
        let meta_path = args.meta.expect("clap guarantees one weight source");
        let ckpt = Checkpoint::load(&meta_path)?;
        check_run_architecture(&ckpt.header, &run.train.preset, &arch)?;
        let meta = meta_from_checkpoint(&ckpt)?;

        let outcome = fine_tune::<f32, _>(&meta, &targets, &arch, &run.train, print_progress)?;
        learner_checkpoint(
            &outcome,
            &arch,
            &run.train,
            &ckpt.header.params_digest,
            &target_digest,
        )?
        .save(&args.out)?;
        write_jsonl(&default_report_path(&args.out), &outcome.report.epochs)?;
        println!(
            "fine-tuned {} {} shapes: final loss {:.6}",
            outcome.shapes.len(),
            args.category,
            outcome.report.final_loss
        );
    }
    Ok(())
}

fn segment_cmd(args: SegmentArgs) -> Result<()> {
    let model = Model::load(&args.meta, &args.learner)?;
    let (_, entries) = load_dataset(&args.data)?;
    let targets = category_entries(entries, args.category, &args.data)?;

    let mut files = Vec::with_capacity(targets.len());
    for entry in &targets {
        let branches = model.segment(entry)?;
        let mut text = String::new();
        for b in branches {
            writeln!(text, "{b}").expect("string writes are infallible");
        }
        files.push((format!("{}.labels", entry.id), text));
    }
    fs::create_dir_all(&args.out)?;
    for (name, text) in files {
        fs::write(args.out.join(name), text)?;
    }
    println!(
        "segmented {} shapes into {}",
        targets.len(),
        args.out.display()
    );
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    let model = Model::load(&args.meta, &args.learner)?;
    let (_, entries) = load_dataset(&args.data)?;
    let targets = category_entries(entries, args.category, &args.data)?;

    let eval = model.evaluate(&targets)?;
    let csv = category_csv(std::slice::from_ref(&eval));
    if let Some(path) = &args.out_csv {
        fs::write(path, &csv)?;
    }
    if let Some(path) = &args.out_json {
        fs::write(path, format!("{}\n", serde_json::to_string_pretty(&eval)?))?;
    }
    if args.out_csv.is_none() && args.out_json.is_none() {
        print!("{csv}");
    } else {
        println!(
            "{}: mIoU {:.4} acc {:.4} over {} shapes",
            eval.category, eval.mean_iou, eval.accuracy, eval.n_shapes
        );
    }

    if let Some(counts) = &args.sweep_counts {
        let rows = model.sweep(&targets, counts, args.seed)?;
        let doc = serde_json::json!({ "rows": rows, "spread": sweep_spread(&rows) });
        let text = serde_json::to_string_pretty(&doc)?;
        match &args.sweep_out {
            Some(path) => fs::write(path, format!("{text}\n"))?,
            None => println!("{text}"),
        }
    }
    Ok(())
}

fn export_ply_cmd(args: ExportPlyArgs) -> Result<()> {
    let (_, entries) = load_dataset(&args.data)?;
    let entry = entries
        .into_iter()
        .find(|e| e.id == args.shape)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no shape {:?} in {}",
                args.shape,
                args.data.display()
            ))
        })?;
    let labels: Vec<usize> = match &args.labels {
        Some(path) => parse_label_file(&fs::read_to_string(path)?)?,
        None => entry
            .cloud
            .labels
            .as_ref()
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "shape {} has no stored labels; pass --labels",
                    entry.id
                ))
            })?
            .iter()
            .map(|&l| l as usize)
            .collect(),
    };
    let text = write_ply(&entry.cloud.points, &labels)?;
    fs::write(&args.out, text)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn print_progress(stat: &EpochStat) {
    eprintln!(
        "epoch {}: loss {:.6} ({:.2}s)",
        stat.epoch, stat.loss, stat.seconds
    );
}

fn manifest_digest(manifest: &DatasetManifest) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(manifest)?.as_bytes()))
}

fn default_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.jsonl")
}

fn write_jsonl(path: &Path, stats: &[EpochStat]) -> Result<()> {
    let mut text = String::new();
    for stat in stats {
        text.push_str(&serde_json::to_string(stat)?);
        text.push('\n');
    }
    Ok(fs::write(path, text)?)
}

fn category_entries(
    entries: Vec<DatasetEntry>,
    category: Category,
    dir: &Path,
) -> Result<Vec<DatasetEntry>> {
    let filtered: Vec<DatasetEntry> = entries
        .into_iter()
        .filter(|e| e.category == category)
        .collect();
    if filtered.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no {category} shapes in {}",
            dir.display()
        )));
    }
    Ok(filtered)
}

fn check_run_architecture(
    header: &CheckpointHeader,
    preset: &str,
    arch: &ArchitectureConfig,
) -> Result<()> {
    if &header.architecture != arch {
        return Err(Error::InvalidConfig(format!(
            "checkpoint architecture (preset {}) does not match the run architecture (preset {preset})",
            header.preset
        )));
    }
    Ok(())
}

fn parse_label_file(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|_| Error::Format(format!("bad label line {l:?}")))
        })
        .collect()
}
