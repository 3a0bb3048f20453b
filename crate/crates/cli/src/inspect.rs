use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args;

use posergcn::attention::AttentionScores;
use posergcn::posegraph::NUM_KEYPOINTS;

use crate::eval::open_checkpoint;
use crate::train::load_dataset;

#[derive(Args, Debug, Clone)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Track id as written in the dataset.
    #[arg(long)]
    pub track: String,
}

/// Attention weights of one track next to its occlusion pattern.
#[derive(Debug, Clone)]
pub struct Inspection {
    pub track: String,
    pub scores: AttentionScores,
    /// Visible keypoints per frame.
    pub visible_per_frame: Vec<usize>,
    /// Frames in which each node is hidden.
    pub hidden_per_node: Vec<usize>,
}

impl Inspection {
    pub fn occluded_frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.visible_per_frame
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < NUM_KEYPOINTS)
            .map(|(t, _)| t)
    }
}

impl fmt::Display for Inspection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "track {}", self.track)?;
        writeln!(f, "{:>5} {:>10}  visible", "frame", "a_t")?;
        for (t, (a, vis)) in self.scores.time.iter().zip(&self.visible_per_frame).enumerate() {
            let flag = if *vis < NUM_KEYPOINTS { "  occluded" } else { "" };
            writeln!(f, "{t:>5} {a:>10.6}  {vis:>2}/{NUM_KEYPOINTS}{flag}")?;
        }
        writeln!(f, "{:>5} {:>10.6}", "sum", self.scores.time.iter().sum::<f64>())?;
        writeln!(f, "{:>5} {:>10}  hidden in", "node", "a_j")?;
        for (j, (a, hidden)) in self.scores.node.iter().zip(&self.hidden_per_node).enumerate() {
            let flag = if *hidden > 0 { "  occluded" } else { "" };
            writeln!(f, "{:>5} {a:>10.6}  {hidden:>2} frames{flag}", j + 1)?;
        }
        write!(f, "{:>5} {:>10.6}", "sum", self.scores.node.iter().sum::<f64>())
    }
}

pub fn inspect(args: &InspectArgs) -> Result<Inspection> {
    let (config, model) = open_checkpoint(&args.checkpoint, args.dataset.as_ref())?;
    let dataset = load_dataset(&config)?;
    let track = dataset
        .tracks()
        .iter()
        .find(|t| t.id == args.track)
        .ok_or_else(|| anyhow!("track `{}` is not in the dataset", args.track))?
        .truncated(config.t);
    let scores = model.attention_scores(&track.graph)?;
    let frames = track.graph.frames();
    Ok(Inspection {
        track: track.id.clone(),
        scores,
        visible_per_frame: frames.iter().map(|f| f.visible_count()).collect(),
        hidden_per_node: (0..NUM_KEYPOINTS)
            .map(|j| frames.iter().filter(|f| !f.visible()[j]).count())
            .collect(),
    })
}
