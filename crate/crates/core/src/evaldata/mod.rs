//! Synthetic gait data, dataset loading and retrieval metrics.

mod dataset;
pub mod metrics;
pub mod synth;

pub use dataset::{appearance_dir, class_labels, group_by_class, Dataset, Split, Track};
pub use metrics::{average_precision, cmc, evaluate, first_hit, retrieve, EmbeddingSet, Metrics, Ranking, RetrievalSet};
pub use synth::{synth_tracks, SynthConfig, SynthOutput, SyntheticIdentity};
