//! Pose-sequence re-identification with recurrent graph convolution.
//!
//! Tracks carry two signals: per-frame appearance vectors and 14-keypoint
//! poses. The appearance branch aggregates the former over time; the pose
//! branch runs a recurrent graph-convolutional cell over the skeleton graph
//! and pools the node states with attention. Both are trained jointly with
//! batch-hard triplet losses and an identity classifier, then concatenated
//! for retrieval.

pub mod appearance;
pub mod attention;
pub mod cells;
pub mod checkpoint;
pub mod diffmath;
mod error;
pub mod evaldata;
pub mod evaluation;
pub mod model;
pub mod posegraph;
pub mod training;

pub use error::{Error, Result};
pub use evaluation::Branch;
pub use model::{ModelConfig, ReidModel};
pub use training::{TrainConfig, Trainer};
