use std::fmt;
use std::time::{Duration, Instant};

use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posergcn::cells::{unroll, CellKind, CellParams};
use posergcn::diffmath::{Matrix, Parameterized, Tape};
use posergcn::posegraph::{build_temporal_graph, PoseFrame, TemporalPoseGraph, NUM_KEYPOINTS};

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            n: 64,
            frames: 10,
            reps: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub cell: CellKind,
    pub params: usize,
    pub median: Duration,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub n: usize,
    pub frames: usize,
    pub reps: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, cell: CellKind) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.cell == cell)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "unroll, n={}, T={}, {} reps", self.n, self.frames, self.reps)?;
        writeln!(f, "{:<10} {:>10} {:>14}", "cell", "params", "median (us)")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:>10} {:>14.1}",
                r.cell.as_str(),
                r.params,
                r.median.as_secs_f64() * 1e6
            )?;
        }
        Ok(())
    }
}

pub fn random_graph(frames: usize, rng: &mut impl Rng) -> Result<TemporalPoseGraph> {
    let frames = (0..frames)
        .map(|_| {
            let coords = (0..NUM_KEYPOINTS * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
            PoseFrame::new(Matrix::from_vec(NUM_KEYPOINTS, 2, coords)?, [true; NUM_KEYPOINTS])
        })
        .collect::<posergcn::Result<Vec<_>>>()?;
    Ok(build_temporal_graph(frames)?)
}

/// Median wall-clock of one forward unroll per cell, each recorded on a fresh
/// tape. Cells take turns rep by rep so background load hits all of them alike.
pub fn time_unrolls(cells: &[CellParams], graph: &TemporalPoseGraph, reps: usize) -> Result<Vec<Duration>> {
    let reps = reps.max(1);
    let mut samples = vec![Vec::with_capacity(reps); cells.len()];
    for _ in 0..reps {
        for (params, out) in cells.iter().zip(&mut samples) {
            let start = Instant::now();
            let mut tape = Tape::new();
            let cell = params.bind(&mut tape);
            let states = unroll(&mut tape, &cell, params.hidden(), graph)?;
            std::hint::black_box(&states);
            drop(tape);
            out.push(start.elapsed());
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            s[s.len() / 2]
        })
        .collect())
}

pub fn bench(args: &BenchArgs) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let graph = random_graph(args.frames, &mut rng)?;
    let cells = CellKind::ALL
        .iter()
        .map(|&cell| CellParams::new(cell, args.n, 1, &mut rng))
        .collect::<posergcn::Result<Vec<_>>>()?;
    let medians = time_unrolls(&cells, &graph, args.reps)?;
    let rows = cells
        .iter()
        .zip(medians)
        .map(|(params, median)| BenchRow {
            cell: params.kind(),
            params: params.param_count(),
            median,
        })
        .collect();
    Ok(BenchReport {
        n: args.n,
        frames: args.frames,
        reps: args.reps,
        rows,
    })
}
