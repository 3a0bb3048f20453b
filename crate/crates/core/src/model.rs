//! Two-branch re-identification model: appearance aggregator plus pose cell and pooler.

use rand::Rng;

use crate::appearance::{AggregatorKind, AppearanceParams, AppearanceSequence, AppearanceVars};
use crate::attention::{attention_scores, pool, AttentionParams, AttentionScores, AttentionVars, Pooling};
use crate::cells::{unroll, BoundCell, CellKind, CellParams};
use crate::diffmath::{init_uniform, prefixed, prefixed_mut, Param, Parameterized, Tape, Var};
use crate::error::{Error, Result};
use crate::posegraph::TemporalPoseGraph;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub n: usize,
    pub d: usize,
    pub layers: usize,
    pub cell: CellKind,
    pub pooling: Pooling,
    pub aggregator: AggregatorKind,
    pub num_classes: usize,
}

impl ModelConfig {
    pub fn pose_dim(&self) -> usize {
        2 * self.n
    }

    pub fn fused_dim(&self) -> usize {
        self.d + self.pose_dim()
    }
}

/// Linear classifier over the fused feature.
#[derive(Clone, Debug)]
pub struct ClassifierHead {
    pub weight: Param,
    pub bias: Param,
}

#[derive(Clone, Copy, Debug)]
pub struct HeadVars {
    pub weight: Var,
    pub bias: Var,
}

impl ClassifierHead {
    pub fn new<R: Rng + ?Sized>(input: usize, classes: usize, rng: &mut R) -> Result<Self> {
        if classes < 2 {
            return Err(Error::argument(format!("classifier needs at least 2 classes, got {classes}")));
        }
        Ok(ClassifierHead {
            weight: init_uniform(input, classes, input, rng),
            bias: Param::zeros(1, classes),
        })
    }

    pub fn classes(&self) -> usize {
        self.bias.shape().1
    }

    pub fn bind(&self, tape: &mut Tape) -> HeadVars {
        HeadVars {
            weight: tape.param(&self.weight),
            bias: tape.param(&self.bias),
        }
    }
}

impl HeadVars {
    /// N×C logits for N fused features.
    pub fn logits(&self, tape: &mut Tape, fused: Var) -> Result<Var> {
        let z = tape.matmul(fused, self.weight)?;
        tape.add_row(z, self.bias)
    }
}

impl Parameterized for ClassifierHead {
    fn params(&self) -> Vec<(String, &Param)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        vec![("weight".into(), &mut self.weight), ("bias".into(), &mut self.bias)]
    }
}

#[derive(Clone, Debug)]
pub struct ReidModel {
    config: ModelConfig,
    pub cell: CellParams,
    pub attention: AttentionParams,
    pub appearance: AppearanceParams,
    pub head: ClassifierHead,
}

impl ReidModel {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        if config.d == 0 {
            return Err(Error::argument("appearance dimension d must be positive"));
        }
        let cell = CellParams::new(config.cell, config.n, config.layers, rng)?;
        let attention = AttentionParams::new(config.n, rng);
        let appearance = AppearanceParams::new(config.aggregator, config.d, rng);
        let head = ClassifierHead::new(config.fused_dim(), config.num_classes, rng)?;
        Ok(ReidModel {
            config,
            cell,
            attention,
            appearance,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundModel {
        BoundModel {
            config: self.config,
            cell: self.cell.bind(tape),
            attention: self.attention.bind(tape),
            appearance: self.appearance.bind(tape),
            head: self.head.bind(tape),
        }
    }

    /// Forward-only features of one track on a scratch tape.
    pub fn embed(&self, graph: &TemporalPoseGraph, seq: &AppearanceSequence) -> Result<Embedding> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let fa = bound.appearance_feature(&mut tape, seq)?;
        let fp = bound.pose_feature(&mut tape, graph)?;
        Ok(Embedding {
            appearance: tape.value(fa).data().to_vec(),
            pose: tape.value(fp).data().to_vec(),
        })
    }

    /// Node and frame attention weights of one track.
    pub fn attention_scores(&self, graph: &TemporalPoseGraph) -> Result<AttentionScores> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let states = bound.states(&mut tape, graph)?;
        attention_scores(&mut tape, &states, &bound.attention)
    }
}

impl Parameterized for ReidModel {
    fn params(&self) -> Vec<(String, &Param)> {
        let mut v = prefixed("pose", self.cell.params());
        v.extend(prefixed("attention", self.attention.params()));
        v.extend(prefixed("appearance", self.appearance.params()));
        v.extend(prefixed("head", self.head.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut v = prefixed_mut("pose", self.cell.params_mut());
        v.extend(prefixed_mut("attention", self.attention.params_mut()));
        v.extend(prefixed_mut("appearance", self.appearance.params_mut()));
        v.extend(prefixed_mut("head", self.head.params_mut()));
        v
    }
}

/// Per-track features as plain vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub appearance: Vec<f64>,
    pub pose: Vec<f64>,
}

impl Embedding {
    pub fn fused(&self) -> Vec<f64> {
        let mut f = self.appearance.clone();
        f.extend_from_slice(&self.pose);
        f
    }
}

/// Row-stacked features of a batch: `N×d`, `N×2n` and `N×(d+2n)`.
#[derive(Clone, Copy, Debug)]
pub struct BatchFeatures {
    pub appearance: Var,
    pub pose: Var,
    pub fused: Var,
}

/// A model whose parameters live on one tape.
#[derive(Clone, Debug)]
pub struct BoundModel {
    config: ModelConfig,
    cell: BoundCell,
    attention: AttentionVars,
    appearance: AppearanceVars,
    head: HeadVars,
}

impl BoundModel {
    fn states(&self, tape: &mut Tape, graph: &TemporalPoseGraph) -> Result<Vec<Var>> {
        Ok(unroll(tape, &self.cell, self.config.n, graph)?
            .into_iter()
            .map(|s| s.h)
            .collect())
    }

    pub fn pose_feature(&self, tape: &mut Tape, graph: &TemporalPoseGraph) -> Result<Var> {
        let states = self.states(tape, graph)?;
        pool(tape, self.config.pooling, &states, &self.attention)
    }

    pub fn appearance_feature(&self, tape: &mut Tape, seq: &AppearanceSequence) -> Result<Var> {
        if seq.dim() != self.config.d {
            return Err(Error::argument(format!(
                "appearance dimension mismatch: model expects d={}, track has d={}",
                self.config.d,
                seq.dim()
            )));
        }
        self.appearance.aggregate(tape, seq)
    }

    pub fn forward_batch(&self, tape: &mut Tape, tracks: &[(&TemporalPoseGraph, &AppearanceSequence)]) -> Result<BatchFeatures> {
        let mut fa = Vec::with_capacity(tracks.len());
        let mut fp = Vec::with_capacity(tracks.len());
        for (graph, seq) in tracks {
            fa.push(self.appearance_feature(tape, seq)?);
            fp.push(self.pose_feature(tape, graph)?);
        }
        let appearance = tape.stack_rows(&fa)?;
        let pose = tape.stack_rows(&fp)?;
        let fused = tape.concat_cols(&[appearance, pose])?;
        Ok(BatchFeatures { appearance, pose, fused })
    }

    pub fn logits(&self, tape: &mut Tape, fused: Var) -> Result<Var> {
        self.head.logits(tape, fused)
    }
}
