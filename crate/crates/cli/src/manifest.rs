use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use posergcn::training::TrainConfig;

/// Written before training starts and again, with `finished_at`, once it ends.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub config_hash: String,
    pub seed: u64,
    pub git_describe: String,
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub checkpoint: PathBuf,
    pub train_log: PathBuf,
}

pub fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

impl RunManifest {
    pub fn start(config: &TrainConfig, checkpoint: &Path, train_log: &Path) -> Self {
        RunManifest {
            config: config.to_text(),
            config_hash: config.hash(),
            seed: config.seed,
            git_describe: git_describe(),
            started_at: unix_time(),
            finished_at: None,
            checkpoint: checkpoint.to_path_buf(),
            train_log: train_log.to_path_buf(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_records_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = TrainConfig {
            seed: 9,
            ..TrainConfig::default()
        };
        let manifest = RunManifest::start(&config, Path::new("c.prgc"), Path::new("log.csv"));
        let path = dir.path().join("manifest.json");
        manifest.write(&path).unwrap();
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(json["seed"], 9);
        assert_eq!(json["config_hash"], config.hash());
        assert!(json["finished_at"].is_null());
        assert_eq!(TrainConfig::parse(json["config"].as_str().unwrap()).unwrap(), config);
    }
}
