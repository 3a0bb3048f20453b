use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use posergcn::appearance::{write_apft, AppearanceSequence};
use posergcn::evaldata::{appearance_dir, synth_tracks, SynthConfig};
use posergcn::posegraph::format::write_jsonl;

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub ids: usize,
    /// Tracks per identity.
    #[arg(long, default_value_t = 8)]
    pub tracks: usize,
    /// Frames per track.
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    /// Probability that a keypoint is hidden, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub occlusion: f64,
    /// 0 gives every identity its own appearance centroid, 1 makes them all share one.
    #[arg(long, default_value_t = 0.0)]
    pub ambiguity: f64,
    /// Appearance feature dimension.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL file.
    #[arg(long)]
    pub out: PathBuf,
    /// Write appearance as per-track `.apft` files under `appearance/` instead of embedding it.
    #[arg(long)]
    pub apft: bool,
}

impl SynthArgs {
    pub fn new(out: PathBuf) -> Self {
        let d = SynthConfig::default();
        SynthArgs {
            ids: d.ids,
            tracks: d.tracks_per_id,
            frames: d.frames,
            occlusion: d.occlusion,
            ambiguity: d.ambiguity,
            dim: d.d,
            seed: d.seed,
            out,
            apft: false,
        }
    }
}

#[derive(Debug)]
pub struct SynthSummary {
    pub tracks: usize,
    pub path: PathBuf,
}

pub fn synth(args: &SynthArgs) -> Result<SynthSummary> {
    let config = SynthConfig {
        ids: args.ids,
        tracks_per_id: args.tracks,
        frames: args.frames,
        occlusion: args.occlusion,
        ambiguity: args.ambiguity,
        d: args.dim,
        seed: args.seed,
    };
    let mut out = synth_tracks(&config)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    if args.apft {
        let dir = appearance_dir(&args.out);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for track in &mut out.tracks {
            let frames: Vec<Vec<f64>> = track.frames.iter_mut().filter_map(|f| f.appearance.take()).collect();
            let seq = AppearanceSequence::from_frames(&frames)?;
            write_apft(&dir.join(format!("{}.apft", track.track_id)), &seq)?;
        }
    }
    write_jsonl(&args.out, &out.tracks)?;
    Ok(SynthSummary {
        tracks: out.tracks.len(),
        path: args.out.clone(),
    })
}
