//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posergcn::cells::{CellKind, CellParams};
use posergcn::diffmath::Matrix;
use posergcn::posegraph::{build_temporal_graph, PoseFrame, TemporalPoseGraph, NUM_KEYPOINTS};
use posergcn::Result;

/// A fully visible track of `frames` random poses in [-1, 1].
pub fn random_track(frames: usize, rng: &mut impl Rng) -> Result<TemporalPoseGraph> {
    let frames = (0..frames)
        .map(|_| {
            let coords = (0..NUM_KEYPOINTS * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
            PoseFrame::new(Matrix::from_vec(NUM_KEYPOINTS, 2, coords)?, [true; NUM_KEYPOINTS])
        })
        .collect::<Result<Vec<_>>>()?;
    build_temporal_graph(frames)
}

/// One single-layer cell of every kind, all with hidden size `n`, plus a track.
pub fn fixture(n: usize, frames: usize, seed: u64) -> Result<(Vec<CellParams>, TemporalPoseGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_track(frames, &mut rng)?;
    let cells = CellKind::ALL
        .iter()
        .map(|&kind| CellParams::new(kind, n, 1, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((cells, graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_covers_every_cell() {
        let (cells, graph) = fixture(8, 5, 0).unwrap();
        assert_eq!(cells.len(), CellKind::ALL.len());
        assert!(cells.iter().all(|c| c.hidden() == 8));
        assert_eq!(graph.frames().len(), 5);
    }
}
