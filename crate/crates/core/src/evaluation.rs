//! Embeds held-out tracks and scores retrieval per feature branch.

use std::fmt;
use std::str::FromStr;
use std::thread;

use crate::error::{Error, Result};
use crate::evaldata::{evaluate, Metrics, RetrievalSet, Track};
use crate::model::{Embedding, ReidModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Appearance,
    Pose,
    Fused,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Appearance, Branch::Pose, Branch::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Appearance => "appearance",
            Branch::Pose => "pose",
            Branch::Fused => "fused",
        }
    }

    pub fn select(self, e: &Embedding) -> Vec<f64> {
        match self {
            Branch::Appearance => e.appearance.clone(),
            Branch::Pose => e.pose.clone(),
            Branch::Fused => e.fused(),
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Branch::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown branch `{s}` (expected appearance|pose|fused)")))
    }
}

/// Embeds the first `t` frames of every track, spreading tracks over the available cores.
pub fn embed_tracks(model: &ReidModel, tracks: &[Track], t: usize) -> Result<Vec<Embedding>> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(tracks.len().max(1));
    let chunk = tracks.len().div_ceil(workers).max(1);
    let parts: Vec<Result<Vec<Embedding>>> = thread::scope(|s| {
        let handles: Vec<_> = tracks
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|tr| {
                            let tr = tr.truncated(t);
                            model.embed(&tr.graph, &tr.appearance)
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("embedding worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(tracks.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Tracks seen by the lowest-numbered camera are queries; all others form the gallery.
pub fn retrieval_set(tracks: &[Track], embeddings: &[Embedding], branch: Branch, normalize: bool) -> Result<RetrievalSet> {
    if tracks.len() != embeddings.len() {
        return Err(Error::argument("one embedding per track is required"));
    }
    let query_cam = tracks
        .iter()
        .map(|t| t.camera)
        .min()
        .ok_or_else(|| Error::argument("no tracks to evaluate"))?;
    let mut set = RetrievalSet::default();
    for (t, e) in tracks.iter().zip(embeddings) {
        let side = if t.camera == query_cam { &mut set.query } else { &mut set.gallery };
        side.push(branch.select(e), t.identity, t.camera);
    }
    if normalize {
        set.query = set.query.l2_normalized();
        set.gallery = set.gallery.l2_normalized();
    }
    Ok(set)
}

pub fn evaluate_branch(tracks: &[Track], embeddings: &[Embedding], branch: Branch, normalize: bool) -> Result<Metrics> {
    let set = retrieval_set(tracks, embeddings, branch, normalize)?;
    if set.gallery.is_empty() {
        return Err(Error::argument("every test track is on the query camera; the gallery is empty"));
    }
    evaluate(&set)
}
