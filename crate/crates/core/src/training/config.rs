//! `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::loss::LambdaMode;
use super::optim::{DEFAULT_DECAY_EVERY, DEFAULT_LR};
use crate::appearance::AggregatorKind;
use crate::attention::Pooling;
use crate::cells::CellKind;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub layers: usize,
    pub cell: CellKind,
    pub pooling: Pooling,
    pub aggregator: AggregatorKind,
    pub margin: f64,
    pub lambda_mode: LambdaMode,
    pub epochs: usize,
    pub p: usize,
    pub k: usize,
    pub t: usize,
    pub lr: f64,
    pub lr_decay_every: usize,
    /// Leading tracks of each identity used for training; the rest are held out.
    pub train_tracks: usize,
    /// L2-normalise embeddings before retrieval.
    pub normalize: bool,
    pub dataset: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            n: 32,
            d: 64,
            layers: 1,
            cell: CellKind::Rgcn,
            pooling: Pooling::Dam,
            aggregator: AggregatorKind::Ap,
            margin: 0.3,
            lambda_mode: LambdaMode::Adaptive,
            epochs: 800,
            p: 8,
            k: 4,
            t: 10,
            lr: DEFAULT_LR,
            lr_decay_every: DEFAULT_DECAY_EVERY,
            train_tracks: 4,
            normalize: false,
            dataset: None,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid value `{raw}` for key `{key}`")))
}

impl TrainConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), raw.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "seed" => self.seed = value(key, raw)?,
            "n" => self.n = value(key, raw)?,
            "d" => self.d = value(key, raw)?,
            "layers" => self.layers = value(key, raw)?,
            "cell" => self.cell = value(key, raw)?,
            "pooling" => self.pooling = value(key, raw)?,
            "aggregator" => self.aggregator = value(key, raw)?,
            "margin" => self.margin = value(key, raw)?,
            "lambda_mode" => self.lambda_mode = value(key, raw)?,
            "epochs" => self.epochs = value(key, raw)?,
            "P" => self.p = value(key, raw)?,
            "K" => self.k = value(key, raw)?,
            "T" => self.t = value(key, raw)?,
            "lr" => self.lr = value(key, raw)?,
            "lr_decay_every" => self.lr_decay_every = value(key, raw)?,
            "train_tracks" => self.train_tracks = value(key, raw)?,
            "normalize" => self.normalize = value(key, raw)?,
            "dataset" => self.dataset = Some(PathBuf::from(raw)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("d", self.d),
            ("layers", self.layers),
            ("epochs", self.epochs),
            ("K", self.k),
            ("T", self.t),
            ("lr_decay_every", self.lr_decay_every),
            ("train_tracks", self.train_tracks),
        ];
        if let Some((key, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("key `{key}` must be positive")));
        }
        if self.p < 2 {
            return Err(Error::Config("key `P` must be at least 2".into()));
        }
        if self.layers > 1 && self.cell != CellKind::Rgcn {
            return Err(Error::Config(format!("key `layers` > 1 is only supported by rgcn, not {}", self.cell)));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::Config("key `margin` must be a finite nonnegative number".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("key `lr` must be a finite positive number".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, num_classes: usize) -> ModelConfig {
        ModelConfig {
            n: self.n,
            d: self.d,
            layers: self.layers,
            cell: self.cell,
            pooling: self.pooling,
            aggregator: self.aggregator,
            num_classes,
        }
    }

    /// Canonical text form: every key in a fixed order. Parsing it yields `self` again.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        };
        kv("seed", &self.seed);
        kv("n", &self.n);
        kv("d", &self.d);
        kv("layers", &self.layers);
        kv("cell", &self.cell);
        kv("pooling", &self.pooling);
        kv("aggregator", &self.aggregator);
        kv("margin", &self.margin);
        kv("lambda_mode", &self.lambda_mode);
        kv("epochs", &self.epochs);
        kv("P", &self.p);
        kv("K", &self.k);
        kv("T", &self.t);
        kv("lr", &self.lr);
        kv("lr_decay_every", &self.lr_decay_every);
        kv("train_tracks", &self.train_tracks);
        kv("normalize", &self.normalize);
        if let Some(path) = &self.dataset {
            kv("dataset", &path.display());
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`to_text`](Self::to_text).
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .take(8)
            .fold(String::new(), |mut acc, b| {
                write!(acc, "{b:02x}").expect("writing to a String");
                acc
            })
    }
}
