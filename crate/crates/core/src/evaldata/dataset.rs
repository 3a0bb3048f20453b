use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::appearance::{read_apft, AppearanceSequence};
use crate::error::{Error, Result};
use crate::posegraph::format::{read_jsonl, TrackRecord};
use crate::posegraph::{build_temporal_graph, TemporalPoseGraph};

/// One tracklet: its pose graph and appearance features share the same frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: String,
    pub identity: u32,
    pub camera: u32,
    pub graph: TemporalPoseGraph,
    pub appearance: AppearanceSequence,
}

impl Track {
    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Keeps the first `t` frames of both branches.
    pub fn truncated(&self, t: usize) -> Track {
        Track {
            graph: self.graph.truncated(t),
            appearance: self.appearance.truncated(t),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    tracks: Vec<Track>,
    clamped_keypoints: usize,
}

/// Directory holding per-track `.apft` files for a dataset at `path`.
pub fn appearance_dir(path: &Path) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join("appearance")
}

impl Dataset {
    pub fn new(tracks: Vec<Track>) -> Self {
        Dataset {
            tracks,
            clamped_keypoints: 0,
        }
    }

    /// Reads a JSONL dataset. Appearance comes from the embedded per-frame vectors or,
    /// when absent, from `appearance/<track_id>.apft` next to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let records = read_jsonl(path)?;
        let dir = appearance_dir(path);
        Self::from_records(&records, Some(&dir))
    }

    pub fn from_records(records: &[TrackRecord], apft_dir: Option<&Path>) -> Result<Self> {
        let mut tracks = Vec::with_capacity(records.len());
        let mut clamped_keypoints = 0;
        for rec in records {
            let mut frames = Vec::with_capacity(rec.frames.len());
            for f in &rec.frames {
                let (frame, clamped) = f.to_pose_frame()?;
                clamped_keypoints += clamped;
                frames.push(frame);
            }
            let appearance = record_appearance(rec, apft_dir)?;
            if appearance.len() != frames.len() {
                return Err(Error::argument(format!(
                    "track {}: {} pose frames but {} appearance frames",
                    rec.track_id,
                    frames.len(),
                    appearance.len()
                )));
            }
            tracks.push(Track {
                id: rec.track_id.clone(),
                identity: rec.identity,
                camera: rec.camera,
                graph: build_temporal_graph(frames)?,
                appearance,
            });
        }
        if clamped_keypoints > 0 {
            log::warn!("{clamped_keypoints} keypoints fell outside their boxes and were clamped");
        }
        Ok(Dataset {
            tracks,
            clamped_keypoints,
        })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn clamped_keypoints(&self) -> usize {
        self.clamped_keypoints
    }

    /// Appearance dimension shared by every track.
    pub fn appearance_dim(&self) -> Result<usize> {
        let first = self
            .tracks
            .first()
            .ok_or_else(|| Error::argument("dataset is empty"))?
            .appearance
            .dim();
        if let Some(t) = self.tracks.iter().find(|t| t.appearance.dim() != first) {
            return Err(Error::argument(format!(
                "track {} has appearance dimension {} but the first track has {first}",
                t.id,
                t.appearance.dim()
            )));
        }
        Ok(first)
    }

    /// Sorted distinct identities; a track's class index is its position here.
    pub fn identities(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.tracks.iter().map(|t| t.identity).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// First `train_per_id` tracks of each identity (file order) for training, the rest for testing.
    pub fn split(&self, train_per_id: usize) -> Split {
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for t in &self.tracks {
            let count = seen.entry(t.identity).or_default();
            if *count < train_per_id {
                train.push(t.clone());
            } else {
                test.push(t.clone());
            }
            *count += 1;
        }
        Split { train, test }
    }
}

fn record_appearance(rec: &TrackRecord, apft_dir: Option<&Path>) -> Result<AppearanceSequence> {
    let embedded: Vec<Vec<f64>> = rec.frames.iter().filter_map(|f| f.appearance.clone()).collect();
    if !embedded.is_empty() {
        if embedded.len() != rec.frames.len() {
            return Err(Error::argument(format!(
                "track {}: only {} of {} frames carry appearance vectors",
                rec.track_id,
                embedded.len(),
                rec.frames.len()
            )));
        }
        return AppearanceSequence::from_frames(&embedded);
    }
    let Some(dir) = apft_dir else {
        return Err(Error::argument(format!("track {} has no appearance features", rec.track_id)));
    };
    let path = dir.join(format!("{}.apft", rec.track_id));
    if !path.exists() {
        return Err(Error::argument(format!(
            "track {} has no embedded appearance and {} does not exist",
            rec.track_id,
            path.display()
        )));
    }
    read_apft(&path)
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: Vec<Track>,
    pub test: Vec<Track>,
}

/// Maps identities to contiguous class indices.
pub fn class_labels(tracks: &[Track], identities: &[u32]) -> Result<Vec<usize>> {
    tracks
        .iter()
        .map(|t| {
            identities
                .binary_search(&t.identity)
                .map_err(|_| Error::argument(format!("track {} has unknown identity {}", t.id, t.identity)))
        })
        .collect()
}

/// Track indices grouped by class label.
pub fn group_by_class(labels: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}
