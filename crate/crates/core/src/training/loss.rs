use std::fmt;
use std::str::FromStr;

use crate::diffmath::{euclidean, Tape, Var};
use crate::error::{Error, Result};
use crate::model::BoundModel;
use crate::posegraph::TemporalPoseGraph;
use crate::appearance::AppearanceSequence;

/// Batch-hard triplet loss and the number of anchors that had no positive.
#[derive(Clone, Copy, Debug)]
pub struct TripletOutcome {
    pub loss: Var,
    pub skipped_anchors: usize,
}

/// Hardest positive and negative of each anchor, picked on raw Euclidean distance.
/// `None` for anchors without a positive.
pub fn hardest_pairs(features: &[&[f64]], labels: &[usize]) -> Result<Vec<Option<(usize, usize)>>> {
    if features.len() != labels.len() {
        return Err(Error::argument(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::argument("triplet loss needs at least two identities in the batch"));
    }
    let mut out = Vec::with_capacity(labels.len());
    for i in 0..labels.len() {
        let mut pos: Option<(f64, usize)> = None;
        let mut neg: Option<(f64, usize)> = None;
        for j in 0..labels.len() {
            if j == i {
                continue;
            }
            let d = euclidean(features[i], features[j]);
            if labels[j] == labels[i] {
                if pos.is_none_or(|(best, _)| d > best) {
                    pos = Some((d, j));
                }
            } else if neg.is_none_or(|(best, _)| d < best) {
                neg = Some((d, j));
            }
        }
        out.push(pos.zip(neg).map(|((_, p), (_, n))| (p, n)));
    }
    Ok(out)
}

/// `Σ_i max(0, margin + d(i, hardest positive) − d(i, hardest negative))` over anchors with a positive.
pub fn triplet_batch_hard(tape: &mut Tape, features: Var, labels: &[usize], margin: f64) -> Result<TripletOutcome> {
    let value = tape.value(features);
    let rows: Vec<&[f64]> = (0..value.rows()).map(|r| value.row(r)).collect();
    let pairs = hardest_pairs(&rows, labels)?;
    let skipped_anchors = pairs.iter().filter(|p| p.is_none()).count();
    if skipped_anchors > 0 {
        log::warn!("{skipped_anchors} anchors have no positive in the batch and were skipped");
    }
    let mut hinges = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.into_iter().enumerate() {
        let Some((p, n)) = pair else { continue };
        let d_ap = tape.row_distance(features, i, p)?;
        let d_an = tape.row_distance(features, i, n)?;
        let gap = tape.sub(d_ap, d_an)?;
        let shifted = tape.add_scalar(gap, margin);
        hinges.push(tape.relu(shifted));
    }
    let loss = if hinges.is_empty() {
        tape.scalar_constant(0.0)
    } else {
        let stacked = tape.stack_rows(&hinges)?;
        tape.sum(stacked)
    };
    Ok(TripletOutcome { loss, skipped_anchors })
}

/// Mean cross-entropy of `logits` (N×C) at the true classes.
pub fn identity_loss(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    let classes = tape.value(logits).cols();
    if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::argument(format!("label {bad} out of range for {classes} classes")));
    }
    tape.cross_entropy(logits, labels)
}

/// Share of the appearance triplet loss in the total triplet loss; 0.5 when both vanish.
pub fn adaptive_lambda(l_a: f64, l_p: f64) -> Result<f64> {
    if !(l_a >= 0.0 && l_p >= 0.0) {
        return Err(Error::argument(format!("triplet losses must be nonnegative, got {l_a} and {l_p}")));
    }
    let sum = l_a + l_p;
    if sum == 0.0 {
        return Ok(0.5);
    }
    Ok(l_a / sum)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaMode {
    Adaptive,
    Fixed(f64),
}

impl LambdaMode {
    pub fn lambda(self, l_a: f64, l_p: f64) -> Result<f64> {
        match self {
            LambdaMode::Adaptive => adaptive_lambda(l_a, l_p),
            LambdaMode::Fixed(v) => Ok(v),
        }
    }
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMode::Adaptive => f.write_str("adaptive"),
            LambdaMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "adaptive" {
            return Ok(LambdaMode::Adaptive);
        }
        let v = s
            .strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::argument(format!("lambda mode `{s}` is not adaptive or fixed:<value>")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::argument(format!("fixed lambda {v} is outside [0, 1]")));
        }
        Ok(LambdaMode::Fixed(v))
    }
}

/// Scalar values of one loss evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    pub l_tri_a: f64,
    pub l_tri_p: f64,
    pub l_id: f64,
    pub lambda: f64,
    pub total: f64,
    pub skipped_anchors: usize,
}

/// Combines already-computed losses as `l_id + λ·l_a + (1−λ)·l_p`, with λ held constant.
pub fn combine(tape: &mut Tape, l_id: Var, l_a: Var, l_p: Var, mode: LambdaMode) -> Result<(Var, f64)> {
    let lambda = mode.lambda(tape.scalar(l_a), tape.scalar(l_p))?;
    let weighted_a = tape.scale(l_a, lambda);
    let weighted_p = tape.scale(l_p, 1.0 - lambda);
    let partial = tape.add(l_id, weighted_a)?;
    Ok((tape.add(partial, weighted_p)?, lambda))
}

/// Runs both branches over a batch and assembles the full training objective.
pub fn total_loss(
    tape: &mut Tape,
    model: &BoundModel,
    tracks: &[(&TemporalPoseGraph, &AppearanceSequence)],
    labels: &[usize],
    margin: f64,
    mode: LambdaMode,
) -> Result<(Var, LossReport)> {
    let feats = model.forward_batch(tape, tracks)?;
    let tri_a = triplet_batch_hard(tape, feats.appearance, labels, margin)?;
    let tri_p = triplet_batch_hard(tape, feats.pose, labels, margin)?;
    let logits = model.logits(tape, feats.fused)?;
    let l_id = identity_loss(tape, logits, labels)?;
    let (total, lambda) = combine(tape, l_id, tri_a.loss, tri_p.loss, mode)?;
    Ok((
        total,
        LossReport {
            l_tri_a: tape.scalar(tri_a.loss),
            l_tri_p: tape.scalar(tri_p.loss),
            l_id: tape.scalar(l_id),
            lambda,
            total: tape.scalar(total),
            skipped_anchors: tri_a.skipped_anchors,
        },
    ))
}
