use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use posergcn::checkpoint;
use posergcn::evaldata::{Dataset, Metrics};
use posergcn::evaluation::{embed_tracks, evaluate_branch};
use posergcn::training::{EpochLog, TrainConfig, Trainer};
use posergcn::{Branch, Error, ReidModel};

use crate::manifest::{unix_time, RunManifest};

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "POSERGCN_SEED";

pub const CHECKPOINT_FILE: &str = "checkpoint.prgc";
pub const LOG_FILE: &str = "train_log.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset JSONL; overrides the config's `dataset` key.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Directory receiving the checkpoint, training log and manifest.
    #[arg(long, default_value = "run")]
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub config: TrainConfig,
    pub model: ReidModel,
    pub logs: Vec<EpochLog>,
    /// Fused-branch metrics of the in-memory model on the held-out tracks.
    pub metrics: Metrics,
    pub out_dir: PathBuf,
}

impl TrainOutcome {
    pub fn checkpoint(&self) -> PathBuf {
        self.out_dir.join(CHECKPOINT_FILE)
    }
}

/// Reads a config file and applies the seed override from the environment.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut config = TrainConfig::parse(&text)?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        config.set("seed", seed.trim())?;
    }
    // relative dataset paths are taken relative to the config file
    if let Some(ds) = &config.dataset {
        if ds.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            config.dataset = Some(base.join(ds));
        }
    }
    Ok(config)
}

/// Loads the dataset named by `config` and checks it against the configured appearance size.
pub fn load_dataset(config: &TrainConfig) -> Result<Dataset> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset given: set key `dataset` or pass --dataset".into()))?;
    let ds = Dataset::load(path)?;
    let d = ds.appearance_dim()?;
    if d != config.d {
        return Err(Error::Argument(format!(
            "appearance dimension mismatch: config expects d={}, dataset {} has d={d}",
            config.d,
            path.display()
        ))
        .into());
    }
    Ok(ds)
}

pub fn write_log(path: &Path, logs: &[EpochLog]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "epoch,lr,l_id,l_tri_a,l_tri_p,lambda,total")?;
    for l in logs {
        let r = &l.report;
        writeln!(w, "{},{},{},{},{},{},{}", l.epoch, l.lr, r.l_id, r.l_tri_a, r.l_tri_p, r.lambda, r.total)?;
    }
    w.flush()?;
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<TrainOutcome> {
    let mut config = load_config(&args.config)?;
    if let Some(ds) = &args.dataset {
        config.dataset = Some(ds.clone());
    }
    train_with(config, &args.out_dir)
}

pub fn train_with(config: TrainConfig, out_dir: &Path) -> Result<TrainOutcome> {
    let dataset = load_dataset(&config)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);
    let log_path = out_dir.join(LOG_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);

    let mut manifest = RunManifest::start(&config, &checkpoint_path, &log_path);
    manifest.write(&manifest_path)?;
    log::info!(
        "training {} / {} / {} with margin {} and lambda {} (config {})",
        config.cell,
        config.pooling,
        config.aggregator,
        config.margin,
        config.lambda_mode,
        config.hash()
    );

    let identities = dataset.identities();
    let split = dataset.split(config.train_tracks);
    let mut trainer = Trainer::new(&config, &split.train, &identities)?;
    let logs = trainer.run(|l| {
        if l.epoch % 50 == 0 || l.epoch + 1 == config.epochs {
            let r = &l.report;
            log::info!(
                "epoch {:>4} lr {:.1e} total {:.4} id {:.4} tri_a {:.4} tri_p {:.4} lambda {:.3}",
                l.epoch,
                l.lr,
                r.total,
                r.l_id,
                r.l_tri_a,
                r.l_tri_p,
                r.lambda
            );
        }
    })?;
    let model = trainer.into_model();
    checkpoint::save(&checkpoint_path, &config, &model)?;
    write_log(&log_path, &logs)?;

    let embeddings = embed_tracks(&model, &split.test, config.t)?;
    let metrics = evaluate_branch(&split.test, &embeddings, Branch::Fused, config.normalize)?;

    manifest.finished_at = Some(unix_time());
    manifest.write(&manifest_path)?;
    Ok(TrainOutcome {
        config,
        model,
        logs,
        metrics,
        out_dir: out_dir.to_path_buf(),
    })
}
