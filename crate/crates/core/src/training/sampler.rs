use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Track indices and class labels of one P×K batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
    /// Identities drawn with replacement because they had fewer than K tracks.
    pub resampled: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Draws `p` distinct classes, then `k` tracks of each. `groups[c]` lists the tracks of class `c`.
pub fn pk_sample<R: Rng + ?Sized>(groups: &[Vec<usize>], p: usize, k: usize, rng: &mut R) -> Result<Batch> {
    if p == 0 || k == 0 {
        return Err(Error::argument("P and K must be positive"));
    }
    let eligible: Vec<usize> = (0..groups.len()).filter(|&c| !groups[c].is_empty()).collect();
    if eligible.len() < p {
        return Err(Error::argument(format!(
            "PK sampling needs {p} identities but only {} have tracks",
            eligible.len()
        )));
    }
    let mut batch = Batch {
        indices: Vec::with_capacity(p * k),
        labels: Vec::with_capacity(p * k),
        resampled: 0,
    };
    for pick in sample(rng, eligible.len(), p) {
        let class = eligible[pick];
        let tracks = &groups[class];
        if tracks.len() >= k {
            batch.indices.extend(sample(rng, tracks.len(), k).into_iter().map(|i| tracks[i]));
        } else {
            batch.resampled += 1;
            batch
                .indices
                .extend((0..k).map(|_| tracks[rng.random_range(0..tracks.len())]));
        }
        batch.labels.extend(std::iter::repeat_n(class, k));
    }
    if batch.resampled > 0 {
        log::info!("{} identities had fewer than {k} tracks and were sampled with replacement", batch.resampled);
    }
    Ok(batch)
}
