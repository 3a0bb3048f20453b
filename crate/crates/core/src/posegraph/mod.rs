//! The 14-keypoint skeleton graph and temporal pose graphs.
//!
//! Keypoints are numbered 1..=14 in the documentation and 0..=13 in code:
//!
//! | # | part           | # | part        |
//! |---|----------------|---|-------------|
//! | 1 | head           | 8 | left wrist  |
//! | 2 | neck           | 9 | right hip   |
//! | 3 | right shoulder | 10| right knee  |
//! | 4 | right elbow    | 11| right ankle |
//! | 5 | right wrist    | 12| left hip    |
//! | 6 | left shoulder  | 13| left knee   |
//! | 7 | left elbow     | 14| left ankle  |

pub mod format;

use std::sync::{Arc, OnceLock};

use crate::diffmath::Matrix;
use crate::error::{Error, Result};

pub const NUM_KEYPOINTS: usize = 14;

/// Skeleton edges, 1-based: a 13-edge tree rooted at the neck.
pub const SKELETON_EDGES: [(usize, usize); 13] = [
    (1, 2),
    (2, 3),
    (2, 6),
    (3, 4),
    (6, 7),
    (4, 5),
    (7, 8),
    (2, 9),
    (2, 12),
    (9, 10),
    (12, 13),
    (10, 11),
    (13, 14),
];

/// Binary skeleton adjacency and its symmetric normalization with self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    a: Matrix,
    a_hat: Matrix,
}

impl AdjacencyMatrix {
    pub fn from_binary(a: Matrix) -> Result<Self> {
        let a_hat = normalize_adjacency(&a)?;
        Ok(AdjacencyMatrix { a, a_hat })
    }

    pub fn binary(&self) -> &Matrix {
        &self.a
    }

    pub fn normalized(&self) -> &Matrix {
        &self.a_hat
    }

    pub fn node_count(&self) -> usize {
        self.a.rows()
    }

    pub fn edge_count(&self) -> usize {
        (self.a.sum() / 2.0) as usize
    }
}

/// The fixed 14-node skeleton, shared process-wide.
pub fn canonical_adjacency() -> Arc<AdjacencyMatrix> {
    static CANONICAL: OnceLock<Arc<AdjacencyMatrix>> = OnceLock::new();
    CANONICAL
        .get_or_init(|| {
            let mut a = Matrix::zeros(NUM_KEYPOINTS, NUM_KEYPOINTS);
            for &(i, j) in &SKELETON_EDGES {
                a.set(i - 1, j - 1, 1.0);
                a.set(j - 1, i - 1, 1.0);
            }
            Arc::new(AdjacencyMatrix::from_binary(a).expect("canonical skeleton is valid"))
        })
        .clone()
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the degree matrix of `A + I`.
pub fn normalize_adjacency(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::argument(format!(
            "adjacency must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    for i in 0..n {
        if a.get(i, i) != 0.0 {
            return Err(Error::argument(format!("adjacency has a self-loop at node {i}")));
        }
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 && v != 1.0 {
                return Err(Error::argument(format!("adjacency entry ({i}, {j}) = {v} is not binary")));
            }
            if v != a.get(j, i) {
                return Err(Error::argument(format!("adjacency is asymmetric at ({i}, {j})")));
            }
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| 1.0 + a.row(i).iter().sum::<f64>()).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let tilde = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
            if tilde != 0.0 {
                out.set(i, j, tilde / (deg[i] * deg[j]).sqrt());
            }
        }
    }
    Ok(out)
}

/// Axis-aligned detection box in image pixels: top-left corner plus size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) || !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::argument(format!("bbox needs positive size, got {w}x{h}")));
        }
        Ok(BBox { x, y, w, h })
    }
}

/// Keypoints of one frame in bbox-normalized coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseFrame {
    coords: Matrix,
    visible: [bool; NUM_KEYPOINTS],
}

impl PoseFrame {
    pub fn new(coords: Matrix, visible: [bool; NUM_KEYPOINTS]) -> Result<Self> {
        if coords.shape() != (NUM_KEYPOINTS, 2) {
            return Err(Error::dimension("pose frame", (NUM_KEYPOINTS, 2), coords.shape()));
        }
        for (i, &vis) in visible.iter().enumerate() {
            let row = coords.row(i);
            if vis {
                if row.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                    return Err(Error::argument(format!("keypoint {i} outside [-1, 1]^2: {row:?}")));
                }
            } else if row != [0.0, 0.0] {
                return Err(Error::argument(format!("occluded keypoint {i} must be zero-padded")));
            }
        }
        Ok(PoseFrame { coords, visible })
    }

    pub fn occluded() -> Self {
        PoseFrame {
            coords: Matrix::zeros(NUM_KEYPOINTS, 2),
            visible: [false; NUM_KEYPOINTS],
        }
    }

    /// Node features: a 14×2 matrix, zero rows for occluded keypoints.
    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn visible(&self) -> &[bool; NUM_KEYPOINTS] {
        &self.visible
    }

    pub fn visible_count(&self) -> usize {
        self.visible.iter().filter(|&&v| v).count()
    }
}

/// A converted frame plus how many keypoints had to be clamped into the box.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameConversion {
    pub frame: PoseFrame,
    pub clamped: usize,
}

/// Maps detected pixel keypoints into the bbox frame: bbox center → origin,
/// corners → (±1, ±1). Missing keypoints are zero-padded and marked occluded;
/// keypoints outside the box are clamped and counted.
pub fn frame_from_detection(keypoints: &[Option<[f64; 2]>], bbox: BBox) -> Result<FrameConversion> {
    if keypoints.len() != NUM_KEYPOINTS {
        return Err(Error::argument(format!(
            "expected {NUM_KEYPOINTS} keypoints, got {}",
            keypoints.len()
        )));
    }
    let mut coords = Matrix::zeros(NUM_KEYPOINTS, 2);
    let mut visible = [false; NUM_KEYPOINTS];
    let mut clamped = 0;
    for (i, kp) in keypoints.iter().enumerate() {
        let Some([px, py]) = *kp else { continue };
        if !(px.is_finite() && py.is_finite()) {
            return Err(Error::argument(format!("keypoint {i} is not finite")));
        }
        let x = 2.0 * (px - bbox.x) / bbox.w - 1.0;
        let y = 2.0 * (py - bbox.y) / bbox.h - 1.0;
        let (cx, cy) = (x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0));
        if cx != x || cy != y {
            clamped += 1;
        }
        coords.set(i, 0, cx);
        coords.set(i, 1, cy);
        visible[i] = true;
    }
    if clamped > 0 {
        log::warn!("{clamped} keypoint(s) outside the bbox were clamped");
    }
    Ok(FrameConversion {
        frame: PoseFrame { coords, visible },
        clamped,
    })
}

/// `T` pose frames sharing one skeleton adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalPoseGraph {
    frames: Vec<PoseFrame>,
    adjacency: Arc<AdjacencyMatrix>,
}

impl TemporalPoseGraph {
    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn adjacency(&self) -> &Arc<AdjacencyMatrix> {
        &self.adjacency
    }

    /// The first `t` frames (or all of them when shorter).
    pub fn truncated(&self, t: usize) -> TemporalPoseGraph {
        TemporalPoseGraph {
            frames: self.frames[..t.clamp(1, self.frames.len())].to_vec(),
            adjacency: self.adjacency.clone(),
        }
    }
}

pub fn build_temporal_graph(frames: Vec<PoseFrame>) -> Result<TemporalPoseGraph> {
    build_temporal_graph_with(frames, canonical_adjacency())
}

pub fn build_temporal_graph_with(
    frames: Vec<PoseFrame>,
    adjacency: Arc<AdjacencyMatrix>,
) -> Result<TemporalPoseGraph> {
    if frames.is_empty() {
        return Err(Error::argument("temporal pose graph needs at least one frame"));
    }
    Ok(TemporalPoseGraph { frames, adjacency })
}
