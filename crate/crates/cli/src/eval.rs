use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use posergcn::checkpoint;
use posergcn::evaldata::Metrics;
use posergcn::evaluation::{embed_tracks, evaluate_branch};
use posergcn::training::TrainConfig;
use posergcn::{Branch, ReidModel};

use crate::train::load_dataset;

pub const METRICS_HEADER: &str = "run_id,config_hash,mAP,rank1,rank5,rank20";

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset JSONL; defaults to the one recorded in the checkpoint.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "fused")]
    pub branch: Branch,
    /// Metrics CSV to append to; created with a header when missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub run_id: String,
    pub config_hash: String,
    pub metrics: Metrics,
}

impl EvalOutcome {
    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{}",
            self.run_id, self.config_hash, m.map, m.rank1, m.rank5, m.rank20
        )
    }
}

/// Loads a checkpoint, overriding its dataset when one is given.
pub fn open_checkpoint(path: &Path, dataset: Option<&PathBuf>) -> Result<(TrainConfig, ReidModel)> {
    let (mut config, model) =
        checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if let Some(ds) = dataset {
        config.dataset = Some(ds.clone());
    }
    Ok((config, model))
}

pub fn eval(args: &EvalArgs) -> Result<EvalOutcome> {
    let (config, model) = open_checkpoint(&args.checkpoint, args.dataset.as_ref())?;
    let config_hash = config.hash();
    let dataset = load_dataset(&config)?;
    let split = dataset.split(config.train_tracks);
    let embeddings = embed_tracks(&model, &split.test, config.t)?;
    let metrics = evaluate_branch(&split.test, &embeddings, args.branch, config.normalize)?;
    let stem = args
        .checkpoint
        .file_stem()
        .map_or_else(|| "checkpoint".into(), |s| s.to_string_lossy().into_owned());
    let outcome = EvalOutcome {
        run_id: format!("{stem}-{}", args.branch),
        config_hash,
        metrics,
    };
    if let Some(out) = &args.out {
        append_row(out, &outcome.csv_row())?;
    }
    Ok(outcome)
}

fn append_row(path: &Path, row: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(f, "{METRICS_HEADER}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}
