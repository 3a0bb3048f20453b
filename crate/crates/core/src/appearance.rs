//! Appearance-branch aggregators over precomputed per-frame features.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::diffmath::{init_uniform, prefixed, prefixed_mut, Matrix, Param, Parameterized, Tape, Var};
use crate::error::{Error, Result};

/// Per-frame appearance features, `T×d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AppearanceSequence {
    feats: Matrix,
}

impl AppearanceSequence {
    pub fn new(feats: Matrix) -> Result<Self> {
        if !feats.is_finite() {
            return Err(Error::argument("appearance features must be finite"));
        }
        Ok(AppearanceSequence { feats })
    }

    pub fn from_frames(frames: &[Vec<f64>]) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::argument("appearance sequence needs at least one frame"));
        }
        Self::new(Matrix::from_rows(frames)?)
    }

    pub fn feats(&self) -> &Matrix {
        &self.feats
    }

    pub fn len(&self) -> usize {
        self.feats.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.feats.cols()
    }

    pub fn truncated(&self, t: usize) -> AppearanceSequence {
        let t = t.clamp(1, self.len());
        let d = self.dim();
        AppearanceSequence {
            feats: Matrix::from_parts(t, d, self.feats.data()[..t * d].to_vec()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggregatorKind {
    Ap,
    Aa,
    Ra,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 3] = [AggregatorKind::Ap, AggregatorKind::Aa, AggregatorKind::Ra];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregatorKind::Ap => "ap",
            AggregatorKind::Aa => "aa",
            AggregatorKind::Ra => "ra",
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AggregatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown aggregator `{s}` (expected ap|aa|ra)")))
    }
}

/// Score vector of the attention aggregator.
#[derive(Clone, Debug)]
pub struct AaParams {
    pub score: Param,
}

/// Standard LSTM over `d`-dimensional frames with hidden size `d`; gates in `f, i, o, g` order.
#[derive(Clone, Debug)]
pub struct RaParams {
    pub w: [Param; 4],
    pub u: [Param; 4],
    pub b: [Param; 4],
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum AppearanceParams {
    Ap,
    Aa(AaParams),
    Ra(RaParams),
}

impl AppearanceParams {
    pub fn new<R: Rng + ?Sized>(kind: AggregatorKind, d: usize, rng: &mut R) -> Self {
        match kind {
            AggregatorKind::Ap => AppearanceParams::Ap,
            AggregatorKind::Aa => AppearanceParams::Aa(AaParams {
                score: init_uniform(d, 1, d, rng),
            }),
            AggregatorKind::Ra => AppearanceParams::Ra(RaParams {
                w: std::array::from_fn(|_| init_uniform(d, d, d, rng)),
                u: std::array::from_fn(|_| init_uniform(d, d, d, rng)),
                b: std::array::from_fn(|_| init_uniform(1, d, d, rng)),
            }),
        }
    }

    pub fn kind(&self) -> AggregatorKind {
        match self {
            AppearanceParams::Ap => AggregatorKind::Ap,
            AppearanceParams::Aa(_) => AggregatorKind::Aa,
            AppearanceParams::Ra(_) => AggregatorKind::Ra,
        }
    }

    pub fn bind(&self, tape: &mut Tape) -> AppearanceVars {
        match self {
            AppearanceParams::Ap => AppearanceVars::Ap,
            AppearanceParams::Aa(p) => AppearanceVars::Aa { score: tape.param(&p.score) },
            AppearanceParams::Ra(p) => AppearanceVars::Ra {
                w: std::array::from_fn(|k| tape.param(&p.w[k])),
                u: std::array::from_fn(|k| tape.param(&p.u[k])),
                b: std::array::from_fn(|k| tape.param(&p.b[k])),
            },
        }
    }

    /// Binds and aggregates in one go; prefer [`AppearanceVars`] when aggregating many tracks.
    pub fn aggregate(&self, tape: &mut Tape, seq: &AppearanceSequence) -> Result<Var> {
        self.bind(tape).aggregate(tape, seq)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum AppearanceVars {
    Ap,
    Aa { score: Var },
    Ra { w: [Var; 4], u: [Var; 4], b: [Var; 4] },
}

impl AppearanceVars {
    /// Aggregates a sequence into a 1×d feature.
    pub fn aggregate(&self, tape: &mut Tape, seq: &AppearanceSequence) -> Result<Var> {
        let feats = tape.constant(seq.feats().clone());
        match self {
            AppearanceVars::Ap => Ok(ap(tape, feats)),
            AppearanceVars::Aa { score } => aa(tape, feats, *score),
            AppearanceVars::Ra { w, u, b } => ra(tape, feats, w, u, b),
        }
    }
}

impl Parameterized for AppearanceParams {
    fn params(&self) -> Vec<(String, &Param)> {
        match self {
            AppearanceParams::Ap => vec![],
            AppearanceParams::Aa(p) => vec![("aa/score".into(), &p.score)],
            AppearanceParams::Ra(p) => {
                let mut v = Vec::new();
                for (k, gate) in ["f", "i", "o", "g"].iter().enumerate() {
                    v.push((format!("w_{gate}"), &p.w[k]));
                    v.push((format!("u_{gate}"), &p.u[k]));
                    v.push((format!("b_{gate}"), &p.b[k]));
                }
                prefixed("ra", v)
            }
        }
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        match self {
            AppearanceParams::Ap => vec![],
            AppearanceParams::Aa(p) => vec![("aa/score".into(), &mut p.score)],
            AppearanceParams::Ra(p) => {
                let mut v = Vec::new();
                for (((gate, w), u), b) in ["f", "i", "o", "g"]
                    .iter()
                    .zip(p.w.iter_mut())
                    .zip(p.u.iter_mut())
                    .zip(p.b.iter_mut())
                {
                    v.push((format!("w_{gate}"), w));
                    v.push((format!("u_{gate}"), u));
                    v.push((format!("b_{gate}"), b));
                }
                prefixed_mut("ra", v)
            }
        }
    }
}

/// Mean over frames.
pub fn ap(tape: &mut Tape, feats: Var) -> Var {
    tape.mean_rows(feats)
}

/// Softmax-weighted frame average with scores `f_t · score`.
pub fn aa(tape: &mut Tape, feats: Var, score: Var) -> Result<Var> {
    let s = tape.matmul(feats, score)?;
    let a = tape.softmax(s)?;
    let at = tape.transpose(a);
    tape.matmul(at, feats)
}

/// Mean of the per-frame LSTM outputs, zero initial state.
pub fn ra(tape: &mut Tape, feats: Var, w: &[Var; 4], u: &[Var; 4], b: &[Var; 4]) -> Result<Var> {
    let (t_len, _) = tape.value(feats).shape();
    let hidden = tape.value(u[0]).rows();
    let mut h = tape.constant(Matrix::zeros(1, hidden));
    let mut c = tape.constant(Matrix::zeros(1, hidden));
    let mut outputs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x = tape.row(feats, t)?;
        let mut gates = [x; 4];
        for k in 0..4 {
            let xi = tape.matmul(x, w[k])?;
            let hu = tape.matmul(h, u[k])?;
            let pre = tape.add(xi, hu)?;
            let pre = tape.add(pre, b[k])?;
            gates[k] = if k == 3 { tape.tanh(pre) } else { tape.sigmoid(pre) };
        }
        let [f, i, o, g] = gates;
        let keep = tape.hadamard(f, c)?;
        let write = tape.hadamard(i, g)?;
        c = tape.add(keep, write)?;
        let squashed = tape.tanh(c);
        h = tape.hadamard(o, squashed)?;
        outputs.push(h);
    }
    tape.mean(&outputs)
}

const APFT_MAGIC: &[u8; 4] = b"APFT";
const APFT_VERSION: u32 = 1;

/// Writes `APFT | version | d | T` (little-endian u32) followed by `T·d` f32 values.
pub fn write_apft(path: &Path, seq: &AppearanceSequence) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + seq.feats().len() * 4);
    buf.extend_from_slice(APFT_MAGIC);
    buf.extend_from_slice(&APFT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    for v in seq.feats().data() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_apft(path: &Path) -> Result<AppearanceSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_apft(&bytes).map_err(|m| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: m,
    })
}

fn parse_apft(bytes: &[u8]) -> std::result::Result<AppearanceSequence, String> {
    if bytes.len() < 16 || &bytes[..4] != APFT_MAGIC {
        return Err("missing APFT header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != APFT_VERSION {
        return Err(format!("unsupported APFT version {version}"));
    }
    let (d, t) = (word(8) as usize, word(12) as usize);
    if bytes.len() != 16 + d * t * 4 {
        return Err(format!("expected {} bytes of features, found {}", d * t * 4, bytes.len() - 16));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let m = Matrix::from_vec(t, d, data).map_err(|e| e.to_string())?;
    AppearanceSequence::new(m).map_err(|e| e.to_string())
}
