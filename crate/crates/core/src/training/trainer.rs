use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::loss::{total_loss, LossReport};
use super::optim::{lr_schedule, Adam};
use super::sampler::pk_sample;
use crate::diffmath::{Parameterized, Tape};
use crate::error::{Error, Result};
use crate::evaldata::{class_labels, group_by_class, Track};
use crate::model::ReidModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub report: LossReport,
}

/// Owns the model, the optimizer state and the batch sampler. One epoch is one P×K batch.
#[derive(Debug)]
pub struct Trainer {
    config: TrainConfig,
    model: ReidModel,
    optimizer: Adam,
    sampler: ChaCha8Rng,
    tracks: Vec<Track>,
    groups: Vec<Vec<usize>>,
    labels: Vec<usize>,
    epoch: usize,
}

impl Trainer {
    /// `identities` fixes the class index of every identity (see [`Dataset::identities`](crate::evaldata::Dataset::identities)).
    pub fn new(config: &TrainConfig, train: &[Track], identities: &[u32]) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::argument("no training tracks"));
        }
        if let Some(t) = train.iter().find(|t| t.appearance.dim() != config.d) {
            return Err(Error::argument(format!(
                "appearance dimension mismatch: config d={}, track {} has d={}",
                config.d,
                t.id,
                t.appearance.dim()
            )));
        }
        let tracks: Vec<Track> = train.iter().map(|t| t.truncated(config.t)).collect();
        let labels = class_labels(&tracks, identities)?;
        let groups = group_by_class(&labels, identities.len());
        let mut init = ChaCha8Rng::seed_from_u64(config.seed);
        let model = ReidModel::new(config.model_config(identities.len()), &mut init)?;
        let mut sampler = ChaCha8Rng::seed_from_u64(config.seed);
        sampler.set_stream(1);
        Ok(Trainer {
            config: config.clone(),
            model,
            optimizer: Adam::new(),
            sampler,
            tracks,
            groups,
            labels,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &ReidModel {
        &self.model
    }

    pub fn into_model(self) -> ReidModel {
        self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// One sampled batch, one backward pass and one optimizer update.
    pub fn step(&mut self) -> Result<EpochLog> {
        let batch = pk_sample(&self.groups, self.config.p, self.config.k, &mut self.sampler)?;
        let mut tape = Tape::new();
        let bound = self.model.bind(&mut tape);
        let refs: Vec<_> = batch
            .indices
            .iter()
            .map(|&i| (&self.tracks[i].graph, &self.tracks[i].appearance))
            .collect();
        let (total, report) = total_loss(
            &mut tape,
            &bound,
            &refs,
            &batch.labels,
            self.config.margin,
            self.config.lambda_mode,
        )?;
        if !report.total.is_finite() {
            return Err(Error::Evaluation(format!("loss became non-finite at epoch {}", self.epoch)));
        }
        let grads = tape.backward(total)?;
        self.model.accumulate(&grads);
        let lr = lr_schedule(self.epoch, self.config.lr, self.config.lr_decay_every);
        self.optimizer
            .step(self.model.params_mut().into_iter().map(|(_, p)| p), lr);
        let log = EpochLog {
            epoch: self.epoch,
            lr,
            report,
        };
        self.epoch += 1;
        Ok(log)
    }

    /// Runs the remaining configured epochs, reporting each one.
    pub fn run(&mut self, mut on_epoch: impl FnMut(&EpochLog)) -> Result<Vec<EpochLog>> {
        let mut logs = Vec::with_capacity(self.config.epochs.saturating_sub(self.epoch));
        while self.epoch < self.config.epochs {
            let log = self.step()?;
            on_epoch(&log);
            logs.push(log);
        }
        Ok(logs)
    }
}
