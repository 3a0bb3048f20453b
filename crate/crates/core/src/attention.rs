//! Pooling of the per-frame graph states into a single pose feature.
//!
//! Node attention averages the states over time, scores each of the 14
//! node rows against `w_node` and takes the softmax-weighted sum of rows.
//! Time attention averages each state over its nodes, scores each frame
//! against `w_time` and takes the softmax-weighted sum of frames. The dual
//! pooler concatenates `[node ; time]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::diffmath::{init_uniform, Param, Parameterized, Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pooling {
    Dam,
    Tam,
    Nam,
    Mean,
}

impl Pooling {
    pub const ALL: [Pooling; 4] = [Pooling::Dam, Pooling::Tam, Pooling::Nam, Pooling::Mean];

    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Dam => "dam",
            Pooling::Tam => "tam",
            Pooling::Nam => "nam",
            Pooling::Mean => "mean",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pooling::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown pooling `{s}` (expected dam|tam|nam|mean)")))
    }
}

#[derive(Clone, Debug)]
pub struct AttentionParams {
    /// n×1 node scoring vector.
    pub w_node: Param,
    /// n×1 frame scoring vector.
    pub w_time: Param,
}

impl AttentionParams {
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        AttentionParams {
            w_node: init_uniform(n, 1, n, rng),
            w_time: init_uniform(n, 1, n, rng),
        }
    }

    pub fn zeros(n: usize) -> Self {
        AttentionParams {
            w_node: Param::zeros(n, 1),
            w_time: Param::zeros(n, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_node.shape().0
    }

    pub fn bind(&self, tape: &mut Tape) -> AttentionVars {
        AttentionVars {
            w_node: tape.param(&self.w_node),
            w_time: tape.param(&self.w_time),
        }
    }
}

impl Parameterized for AttentionParams {
    fn params(&self) -> Vec<(String, &Param)> {
        vec![("w_node".into(), &self.w_node), ("w_time".into(), &self.w_time)]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        vec![("w_node".into(), &mut self.w_node), ("w_time".into(), &mut self.w_time)]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AttentionVars {
    pub w_node: Var,
    pub w_time: Var,
}

/// Attention weights (k×1) and the pooled 1×n vector.
#[derive(Clone, Copy, Debug)]
pub struct Attended {
    pub weights: Var,
    pub pooled: Var,
}

fn attend(tape: &mut Tape, rows: Var, w: Var) -> Result<Attended> {
    let scores = tape.matmul(rows, w)?;
    let weights = tape.softmax(scores)?;
    let wt = tape.transpose(weights);
    let pooled = tape.matmul(wt, rows)?;
    Ok(Attended { weights, pooled })
}

fn nonempty(states: &[Var]) -> Result<()> {
    if states.is_empty() {
        return Err(Error::argument("attention over an empty state sequence"));
    }
    Ok(())
}

/// Weights over the 14 nodes of the time-averaged state.
pub fn node_attention(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<Attended> {
    nonempty(states)?;
    let h_bar = tape.mean(states)?;
    attend(tape, h_bar, p.w_node)
}

/// Weights over the `T` node-averaged frames.
pub fn time_attention(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<Attended> {
    nonempty(states)?;
    let frame_means: Vec<Var> = states.iter().map(|&s| tape.mean_rows(s)).collect();
    let stacked = tape.stack_rows(&frame_means)?;
    attend(tape, stacked, p.w_time)
}

/// `[h_node ; h_time]`, a 1×2n pose feature.
pub fn dam(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<Var> {
    let node = node_attention(tape, states, p)?;
    let time = time_attention(tape, states, p)?;
    tape.concat_cols(&[node.pooled, time.pooled])
}

fn duplicated(tape: &mut Tape, v: Var) -> Result<Var> {
    tape.concat_cols(&[v, v])
}

/// Global mean over nodes and frames, duplicated to 2n.
pub fn mean_pool(tape: &mut Tape, states: &[Var]) -> Result<Var> {
    nonempty(states)?;
    let h_bar = tape.mean(states)?;
    let m = tape.mean_rows(h_bar);
    duplicated(tape, m)
}

/// Time attention only, duplicated to 2n.
pub fn tam_only(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<Var> {
    let t = time_attention(tape, states, p)?;
    duplicated(tape, t.pooled)
}

/// Node attention only, duplicated to 2n.
pub fn nam_only(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<Var> {
    let n = node_attention(tape, states, p)?;
    duplicated(tape, n.pooled)
}

pub fn pool(tape: &mut Tape, kind: Pooling, states: &[Var], p: &AttentionVars) -> Result<Var> {
    match kind {
        Pooling::Dam => dam(tape, states, p),
        Pooling::Tam => tam_only(tape, states, p),
        Pooling::Nam => nam_only(tape, states, p),
        Pooling::Mean => mean_pool(tape, states),
    }
}

/// Attention weights of one track, read off the tape.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionScores {
    pub node: Vec<f64>,
    pub time: Vec<f64>,
}

pub fn attention_scores(tape: &mut Tape, states: &[Var], p: &AttentionVars) -> Result<AttentionScores> {
    let node = node_attention(tape, states, p)?;
    let time = time_attention(tape, states, p)?;
    Ok(AttentionScores {
        node: tape.value(node.weights).data().to_vec(),
        time: tape.value(time.weights).data().to_vec(),
    })
}
