//! JSON-lines pose-sequence records, one track per line.
//!
//! ```text
//! {"track_id":"id003_t01","identity":3,"camera":1,
//!  "frames":[{"keypoints":[[x,y],null,...],"bbox":[x,y,w,h],"appearance":[...]}]}
//! ```

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{frame_from_detection, BBox, PoseFrame, NUM_KEYPOINTS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub keypoints: Vec<Option<[f64; 2]>>,
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appearance: Option<Vec<f64>>,
}

impl FrameRecord {
    pub fn to_pose_frame(&self) -> Result<(PoseFrame, usize)> {
        let [x, y, w, h] = self.bbox;
        let conv = frame_from_detection(&self.keypoints, BBox::new(x, y, w, h)?)?;
        Ok((conv.frame, conv.clamped))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: String,
    pub identity: u32,
    pub camera: u32,
    pub frames: Vec<FrameRecord>,
}

impl TrackRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.frames.is_empty() {
            return Err(format!("track {} has no frames", self.track_id));
        }
        for (t, f) in self.frames.iter().enumerate() {
            if f.keypoints.len() != NUM_KEYPOINTS {
                return Err(format!(
                    "track {} frame {t}: expected {NUM_KEYPOINTS} keypoints, got {}",
                    self.track_id,
                    f.keypoints.len()
                ));
            }
        }
        Ok(())
    }
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TrackRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: TrackRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rec.validate().map_err(parse_err)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, records: &[TrackRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).expect("track records always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
