use std::fmt;
use std::time::{Duration, Instant};

use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posergcn::appearance::{AggregatorKind, AppearanceSequence};
use posergcn::attention::Pooling;
use posergcn::cells::CellKind;
use posergcn::diffmath::{finite_diff_report, Parameterized, set_tanh_backward_fault, Matrix, Tape, Var};
use posergcn::model::{ModelConfig, ReidModel};
use posergcn::posegraph::{build_temporal_graph, PoseFrame, TemporalPoseGraph, NUM_KEYPOINTS};
use posergcn::training::{combine, identity_loss, triplet_batch_hard, LambdaMode};

/// Worst relative error a pipeline may show.
pub const TOLERANCE: f64 = 1e-4;

/// Central-difference step; roundoff on an O(1) loss is about 1e-16 / step.
pub const STEP: f64 = 3e-5;

#[derive(Args, Debug, Clone)]
pub struct GradcheckArgs {
    /// Hidden size of every cell.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Frames per toy track.
    #[arg(long = "frames", default_value_t = 3)]
    pub t: usize,
    #[arg(long, default_value_t = STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt the tanh backward rule to prove the harness catches it.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

impl Default for GradcheckArgs {
    fn default() -> Self {
        GradcheckArgs {
            n: 3,
            t: 3,
            step: STEP,
            seed: 0,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Triplet,
    Identity,
    Combined,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Triplet, LossKind::Identity, LossKind::Combined];

    fn as_str(self) -> &'static str {
        match self {
            LossKind::Triplet => "triplet",
            LossKind::Identity => "identity",
            LossKind::Combined => "combined",
        }
    }
}

/// Every cell variant under test, with the RGCN depth.
pub const CELLS: [(CellKind, usize); 6] = [
    (CellKind::Rgcn, 1),
    (CellKind::Rgcn, 2),
    (CellKind::Rgcn, 3),
    (CellKind::Lgcn, 1),
    (CellKind::GcnRnn, 1),
    (CellKind::GcnLstm, 1),
];

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub cell: CellKind,
    pub layers: usize,
    pub pooling: Pooling,
    pub loss: LossKind,
    pub max_rel_error: f64,
    pub worst_entry: String,
    pub analytic: f64,
    pub numeric: f64,
    pub entries: usize,
}

impl PipelineResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= TOLERANCE
    }

    fn label(&self) -> String {
        if self.cell == CellKind::Rgcn {
            format!("rgcn(L={})", self.layers)
        } else {
            self.cell.to_string()
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub results: Vec<PipelineResult>,
    pub elapsed: Duration,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(PipelineResult::passed)
    }

    pub fn worst(&self) -> f64 {
        self.results.iter().map(|r| r.max_rel_error).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:<6} {:<9} {:>12} {:>7}  worst entry", "cell", "pool", "loss", "max rel err", "entries")?;
        for r in &self.results {
            writeln!(
                f,
                "{:<12} {:<6} {:<9} {:>12.3e} {:>7}  {} ({:.3e} vs {:.3e}) {}",
                r.label(),
                r.pooling.as_str(),
                r.loss.as_str(),
                r.max_rel_error,
                r.entries,
                r.worst_entry,
                r.analytic,
                r.numeric,
                if r.passed() { "ok" } else { "FAIL" }
            )?;
        }
        let failed = self.results.iter().filter(|r| !r.passed()).count();
        write!(
            f,
            "{} pipelines, {failed} failed, worst {:.3e} (tolerance {TOLERANCE:e}), {:.1}s",
            self.results.len(),
            self.worst(),
            self.elapsed.as_secs_f64()
        )
    }
}

struct Toy {
    tracks: Vec<(TemporalPoseGraph, AppearanceSequence)>,
    labels: Vec<usize>,
}

const TOY_D: usize = 4;
const TOY_MARGIN: f64 = 1.0;
/// Initial weights are stretched by this factor.
const TOY_SCALE: f64 = 3.0;

fn toy_batch(t: usize, rng: &mut ChaCha8Rng) -> Result<Toy> {
    let labels = vec![0, 0, 1, 1];
    let mut tracks = Vec::with_capacity(labels.len());
    for _ in &labels {
        let mut frames = Vec::with_capacity(t);
        for _ in 0..t {
            let coords: Vec<f64> = (0..NUM_KEYPOINTS * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
            frames.push(PoseFrame::new(Matrix::from_vec(NUM_KEYPOINTS, 2, coords)?, [true; NUM_KEYPOINTS])?);
        }
        let app: Vec<f64> = (0..t * TOY_D).map(|_| rng.random_range(-1.0..1.0)).collect();
        tracks.push((
            build_temporal_graph(frames)?,
            AppearanceSequence::new(Matrix::from_vec(t, TOY_D, app)?)?,
        ));
    }
    Ok(Toy { tracks, labels })
}

fn pipeline_loss(model: &ReidModel, tape: &mut Tape, toy: &Toy, loss: LossKind, mode: LambdaMode) -> posergcn::Result<Var> {
    let bound = model.bind(tape);
    let refs: Vec<_> = toy.tracks.iter().map(|(g, s)| (g, s)).collect();
    let feats = bound.forward_batch(tape, &refs)?;
    match loss {
        LossKind::Triplet => Ok(triplet_batch_hard(tape, feats.pose, &toy.labels, TOY_MARGIN)?.loss),
        LossKind::Identity => {
            let z = bound.logits(tape, feats.fused)?;
            identity_loss(tape, z, &toy.labels)
        }
        LossKind::Combined => {
            let l_a = triplet_batch_hard(tape, feats.appearance, &toy.labels, TOY_MARGIN)?.loss;
            let l_p = triplet_batch_hard(tape, feats.pose, &toy.labels, TOY_MARGIN)?.loss;
            let z = bound.logits(tape, feats.fused)?;
            let l_id = identity_loss(tape, z, &toy.labels)?;
            Ok(combine(tape, l_id, l_a, l_p, mode)?.0)
        }
    }
}

fn check_one(
    args: &GradcheckArgs,
    (cell, layers): (CellKind, usize),
    pooling: Pooling,
    loss: LossKind,
) -> Result<PipelineResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let toy = toy_batch(args.t, &mut rng)?;
    let config = ModelConfig {
        n: args.n,
        d: TOY_D,
        layers,
        cell,
        pooling,
        aggregator: AggregatorKind::Aa,
        num_classes: 2,
    };
    let mut model = ReidModel::new(config, &mut rng)?;
    for (_, p) in model.params_mut() {
        p.value_mut().iter_mut().for_each(|v| *v *= TOY_SCALE);
    }
    // λ is a per-step constant, so it is frozen at its value at the base point.
    let mode = {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let refs: Vec<_> = toy.tracks.iter().map(|(g, s)| (g, s)).collect();
        let feats = bound.forward_batch(&mut tape, &refs)?;
        let l_a = triplet_batch_hard(&mut tape, feats.appearance, &toy.labels, TOY_MARGIN)?.loss;
        let l_p = triplet_batch_hard(&mut tape, feats.pose, &toy.labels, TOY_MARGIN)?.loss;
        LambdaMode::Fixed(LambdaMode::Adaptive.lambda(tape.scalar(l_a), tape.scalar(l_p))?)
    };
    let report = finite_diff_report(&mut model, |m, tape| pipeline_loss(m, tape, &toy, loss, mode), args.step)?;
    Ok(PipelineResult {
        cell,
        layers,
        pooling,
        loss,
        max_rel_error: report.max_rel_error,
        worst_entry: report.worst_entry,
        analytic: report.worst_analytic,
        numeric: report.worst_numeric,
        entries: report.entries_checked,
    })
}

/// Checks every cell × pooler × loss pipeline on a tiny batch.
pub fn gradcheck(args: &GradcheckArgs) -> Result<GradcheckReport> {
    let start = Instant::now();
    let mut jobs = Vec::new();
    for cell in CELLS {
        for pooling in Pooling::ALL {
            for loss in LossKind::ALL {
                jobs.push((cell, pooling, loss));
            }
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    let results: Vec<Result<Vec<PipelineResult>>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(jobs.len().div_ceil(workers))
            .map(|part| {
                s.spawn(move || {
                    // the fault switch is per thread
                    set_tanh_backward_fault(args.inject_fault);
                    let out = part.iter().map(|&(c, p, l)| check_one(args, c, p, l)).collect();
                    set_tanh_backward_fault(false);
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("gradcheck worker panicked")).collect()
    });
    let mut flat = Vec::with_capacity(jobs.len());
    for r in results {
        flat.extend(r?);
    }
    Ok(GradcheckReport {
        results: flat,
        elapsed: start.elapsed(),
    })
}
