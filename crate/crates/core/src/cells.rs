//! Recurrent graph-convolutional cells over temporal pose graphs.
//!
//! All cells consume per-frame node features `X` (14×2) and the normalized
//! adjacency `Â`, and carry a 14×n hidden state:
//!
//! * RGCN: `H_t = tanh(H_{t-1} W_h + relu(Â X W_x) + b)`; with `L` graph
//!   layers the graph term is `relu(Â^L X W_x^(1) ... W_x^(L))`.
//! * LGCN: an LSTM whose four gates each take `relu(Â X W_*) + H_{t-1} U_* + b_*`.
//! * GCN&RNN / GCN&LSTM: one GCN layer `relu(Â X W_g)` followed by a
//!   per-node recurrent cell applied to each of the 14 nodes in turn.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::diffmath::{init_uniform, prefixed, prefixed_mut, Matrix, Param, Parameterized, Tape, Var};
use crate::error::{Error, Result};
use crate::posegraph::{TemporalPoseGraph, NUM_KEYPOINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Rgcn,
    Lgcn,
    GcnRnn,
    GcnLstm,
}

impl CellKind {
    pub const ALL: [CellKind; 4] = [CellKind::Rgcn, CellKind::Lgcn, CellKind::GcnRnn, CellKind::GcnLstm];

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Rgcn => "rgcn",
            CellKind::Lgcn => "lgcn",
            CellKind::GcnRnn => "gcn_rnn",
            CellKind::GcnLstm => "gcn_lstm",
        }
    }

    pub fn has_cell_memory(self) -> bool {
        matches!(self, CellKind::Lgcn | CellKind::GcnLstm)
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CellKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown cell `{s}` (expected rgcn|lgcn|gcn_rnn|gcn_lstm)")))
    }
}

const GATES: [&str; 4] = ["f", "i", "o", "g"];

/// Hidden state of the whole graph after one frame.
#[derive(Clone, Copy, Debug)]
pub struct GraphState {
    /// 14×n hidden state.
    pub h: Var,
    /// 14×n cell memory, present for the LSTM-style cells.
    pub c: Option<Var>,
}

impl GraphState {
    pub fn zero(tape: &mut Tape, hidden: usize, with_memory: bool) -> Self {
        let h = tape.constant(Matrix::zeros(NUM_KEYPOINTS, hidden));
        let c = with_memory.then(|| tape.constant(Matrix::zeros(NUM_KEYPOINTS, hidden)));
        GraphState { h, c }
    }
}

#[derive(Clone, Debug)]
pub struct RgcnParams {
    pub w_h: Param,
    /// `2×n` first layer, then `n×n` per additional graph layer.
    pub w_x: Vec<Param>,
    pub b: Param,
}

impl RgcnParams {
    pub fn new<R: Rng + ?Sized>(n: usize, layers: usize, rng: &mut R) -> Result<Self> {
        check_hidden(n)?;
        if layers == 0 {
            return Err(Error::argument("RGCN needs at least one graph layer"));
        }
        let w_h = init_uniform(n, n, n, rng);
        let mut w_x = vec![init_uniform(2, n, 2, rng)];
        for _ in 1..layers {
            w_x.push(init_uniform(n, n, n, rng));
        }
        let b = init_uniform(1, n, n, rng);
        Ok(RgcnParams { w_h, w_x, b })
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape().0
    }

    pub fn layers(&self) -> usize {
        self.w_x.len()
    }

    pub fn bind(&self, tape: &mut Tape) -> RgcnVars {
        RgcnVars {
            w_h: tape.param(&self.w_h),
            w_x: self.w_x.iter().map(|p| tape.param(p)).collect(),
            b: tape.param(&self.b),
        }
    }
}

impl Parameterized for RgcnParams {
    fn params(&self) -> Vec<(String, &Param)> {
        let mut v = vec![("w_h".to_string(), &self.w_h)];
        v.extend(self.w_x.iter().enumerate().map(|(l, p)| (format!("w_x{}", l + 1), p)));
        v.push(("b".to_string(), &self.b));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut v = vec![("w_h".to_string(), &mut self.w_h)];
        v.extend(self.w_x.iter_mut().enumerate().map(|(l, p)| (format!("w_x{}", l + 1), p)));
        v.push(("b".to_string(), &mut self.b));
        v
    }
}

#[derive(Clone, Debug)]
pub struct RgcnVars {
    pub w_h: Var,
    pub w_x: Vec<Var>,
    pub b: Var,
}

/// Gate parameters in `f, i, o, g` order.
#[derive(Clone, Debug)]
pub struct LgcnParams {
    pub w: [Param; 4],
    pub u: [Param; 4],
    pub b: [Param; 4],
}

impl LgcnParams {
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_hidden(n)?;
        Ok(LgcnParams {
            w: std::array::from_fn(|_| init_uniform(2, n, 2, rng)),
            u: std::array::from_fn(|_| init_uniform(n, n, n, rng)),
            b: std::array::from_fn(|_| init_uniform(1, n, n, rng)),
        })
    }

    pub fn hidden(&self) -> usize {
        self.u[0].shape().0
    }

    pub fn bind(&self, tape: &mut Tape) -> GateVars {
        bind_gates(tape, &self.w, &self.u, &self.b)
    }
}

impl Parameterized for LgcnParams {
    fn params(&self) -> Vec<(String, &Param)> {
        gate_params(&self.w, &self.u, &self.b)
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        gate_params_mut(&mut self.w, &mut self.u, &mut self.b)
    }
}

/// Bound LSTM-style gate weights, `f, i, o, g` order.
#[derive(Clone, Debug)]
pub struct GateVars {
    pub w: [Var; 4],
    pub u: [Var; 4],
    pub b: [Var; 4],
}

#[derive(Clone, Debug)]
pub struct GcnRnnParams {
    pub w_g: Param,
    pub w_h: Param,
    pub w_x: Param,
    pub b: Param,
}

impl GcnRnnParams {
    /// GCN width `m` is taken equal to the hidden size `n`.
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_hidden(n)?;
        Ok(GcnRnnParams {
            w_g: init_uniform(2, n, 2, rng),
            w_h: init_uniform(n, n, n, rng),
            w_x: init_uniform(n, n, n, rng),
            b: init_uniform(1, n, n, rng),
        })
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape().0
    }

    pub fn bind(&self, tape: &mut Tape) -> GcnRnnVars {
        GcnRnnVars {
            w_g: tape.param(&self.w_g),
            w_h: tape.param(&self.w_h),
            w_x: tape.param(&self.w_x),
            b: tape.param(&self.b),
        }
    }
}

impl Parameterized for GcnRnnParams {
    fn params(&self) -> Vec<(String, &Param)> {
        vec![
            ("w_gcn".into(), &self.w_g),
            ("w_h".into(), &self.w_h),
            ("w_x".into(), &self.w_x),
            ("b".into(), &self.b),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        vec![
            ("w_gcn".into(), &mut self.w_g),
            ("w_h".into(), &mut self.w_h),
            ("w_x".into(), &mut self.w_x),
            ("b".into(), &mut self.b),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct GcnRnnVars {
    pub w_g: Var,
    pub w_h: Var,
    pub w_x: Var,
    pub b: Var,
}

#[derive(Clone, Debug)]
pub struct GcnLstmParams {
    pub w_g: Param,
    pub w: [Param; 4],
    pub u: [Param; 4],
    pub b: [Param; 4],
}

impl GcnLstmParams {
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_hidden(n)?;
        Ok(GcnLstmParams {
            w_g: init_uniform(2, n, 2, rng),
            w: std::array::from_fn(|_| init_uniform(n, n, n, rng)),
            u: std::array::from_fn(|_| init_uniform(n, n, n, rng)),
            b: std::array::from_fn(|_| init_uniform(1, n, n, rng)),
        })
    }

    pub fn hidden(&self) -> usize {
        self.w_g.shape().1
    }

    pub fn bind(&self, tape: &mut Tape) -> GcnLstmVars {
        GcnLstmVars {
            w_g: tape.param(&self.w_g),
            gates: bind_gates(tape, &self.w, &self.u, &self.b),
        }
    }
}

impl Parameterized for GcnLstmParams {
    fn params(&self) -> Vec<(String, &Param)> {
        let mut v = vec![("w_gcn".to_string(), &self.w_g)];
        v.extend(gate_params(&self.w, &self.u, &self.b));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut v = vec![("w_gcn".to_string(), &mut self.w_g)];
        v.extend(gate_params_mut(&mut self.w, &mut self.u, &mut self.b));
        v
    }
}

#[derive(Clone, Debug)]
pub struct GcnLstmVars {
    pub w_g: Var,
    pub gates: GateVars,
}

fn check_hidden(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::argument("hidden size must be at least 1"));
    }
    Ok(())
}

fn bind_gates(tape: &mut Tape, w: &[Param; 4], u: &[Param; 4], b: &[Param; 4]) -> GateVars {
    GateVars {
        w: std::array::from_fn(|k| tape.param(&w[k])),
        u: std::array::from_fn(|k| tape.param(&u[k])),
        b: std::array::from_fn(|k| tape.param(&b[k])),
    }
}

fn gate_params<'a>(w: &'a [Param; 4], u: &'a [Param; 4], b: &'a [Param; 4]) -> Vec<(String, &'a Param)> {
    let mut v = Vec::with_capacity(12);
    for (k, gate) in GATES.iter().enumerate() {
        v.push((format!("w_{gate}"), &w[k]));
        v.push((format!("u_{gate}"), &u[k]));
        v.push((format!("b_{gate}"), &b[k]));
    }
    v
}

fn gate_params_mut<'a>(
    w: &'a mut [Param; 4],
    u: &'a mut [Param; 4],
    b: &'a mut [Param; 4],
) -> Vec<(String, &'a mut Param)> {
    let mut v = Vec::with_capacity(12);
    for (((gate, w), u), b) in GATES.iter().zip(w.iter_mut()).zip(u.iter_mut()).zip(b.iter_mut()) {
        v.push((format!("w_{gate}"), w));
        v.push((format!("u_{gate}"), u));
        v.push((format!("b_{gate}"), b));
    }
    v
}

fn graph_term(tape: &mut Tape, propagated: Var, w_x: &[Var]) -> Result<Var> {
    let mut acc = propagated;
    for &w in w_x {
        acc = tape.matmul(acc, w)?;
    }
    Ok(tape.relu(acc))
}

fn rgcn_update(tape: &mut Tape, state: GraphState, propagated: Var, p: &RgcnVars) -> Result<GraphState> {
    let recurrent = tape.matmul(state.h, p.w_h)?;
    let graph = graph_term(tape, propagated, &p.w_x)?;
    let sum = tape.add(recurrent, graph)?;
    let sum = tape.add_row(sum, p.b)?;
    Ok(GraphState {
        h: tape.tanh(sum),
        c: None,
    })
}

/// Single-graph-layer RGCN step.
pub fn rgcn_step(tape: &mut Tape, state: GraphState, x0: Var, a_hat: Var, p: &RgcnVars) -> Result<GraphState> {
    if p.w_x.len() != 1 {
        return Err(Error::argument(format!(
            "rgcn_step takes one graph layer, params have {}",
            p.w_x.len()
        )));
    }
    let propagated = tape.matmul(a_hat, x0)?;
    rgcn_update(tape, state, propagated, p)
}

/// RGCN step with `L ≥ 2` stacked graph layers under a single relu.
pub fn rgcn_multilayer_step(
    tape: &mut Tape,
    state: GraphState,
    x0: Var,
    a_hat: Var,
    p: &RgcnVars,
) -> Result<GraphState> {
    if p.w_x.len() < 2 {
        return Err(Error::argument("rgcn_multilayer_step needs at least two graph layers"));
    }
    let mut propagated = x0;
    for _ in 0..p.w_x.len() {
        propagated = tape.matmul(a_hat, propagated)?;
    }
    rgcn_update(tape, state, propagated, p)
}

fn lstm_gates(tape: &mut Tape, inputs: [Var; 4], h_prev: Var, g: &GateVars) -> Result<[Var; 4]> {
    let mut out = [inputs[0]; 4];
    for k in 0..4 {
        let rec = tape.matmul(h_prev, g.u[k])?;
        let pre = tape.add(inputs[k], rec)?;
        let pre = tape.add_row(pre, g.b[k])?;
        out[k] = if k == 3 { tape.tanh(pre) } else { tape.sigmoid(pre) };
    }
    Ok(out)
}

fn lstm_update(tape: &mut Tape, gates: [Var; 4], c_prev: Var) -> Result<GraphState> {
    let [f, i, o, g] = gates;
    let keep = tape.hadamard(f, c_prev)?;
    let write = tape.hadamard(i, g)?;
    let c = tape.add(keep, write)?;
    let squashed = tape.tanh(c);
    let h = tape.hadamard(o, squashed)?;
    Ok(GraphState { h, c: Some(c) })
}

fn lgcn_step_with_gates(
    tape: &mut Tape,
    state: GraphState,
    x0: Var,
    a_hat: Var,
    p: &GateVars,
) -> Result<(GraphState, [Var; 4])> {
    let c_prev = state
        .c
        .ok_or_else(|| Error::argument("LGCN state is missing its cell memory"))?;
    let propagated = tape.matmul(a_hat, x0)?;
    let mut inputs = [propagated; 4];
    for (k, input) in inputs.iter_mut().enumerate() {
        let z = tape.matmul(propagated, p.w[k])?;
        *input = tape.relu(z);
    }
    let gates = lstm_gates(tape, inputs, state.h, p)?;
    Ok((lstm_update(tape, gates, c_prev)?, gates))
}

pub fn lgcn_step(tape: &mut Tape, state: GraphState, x0: Var, a_hat: Var, p: &GateVars) -> Result<GraphState> {
    lgcn_step_with_gates(tape, state, x0, a_hat, p).map(|(s, _)| s)
}

fn gcn_layer(tape: &mut Tape, x0: Var, a_hat: Var, w_g: Var) -> Result<Var> {
    let propagated = tape.matmul(a_hat, x0)?;
    let z = tape.matmul(propagated, w_g)?;
    Ok(tape.relu(z))
}

/// GCN over the frame, then a plain RNN cell applied node by node.
pub fn gcn_rnn_step(tape: &mut Tape, state: GraphState, x0: Var, a_hat: Var, p: &GcnRnnVars) -> Result<GraphState> {
    let x = gcn_layer(tape, x0, a_hat, p.w_g)?;
    let nodes = tape.value(x).rows();
    let mut rows = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let h_prev = tape.row(state.h, i)?;
        let x_i = tape.row(x, i)?;
        let rec = tape.matmul(h_prev, p.w_h)?;
        let inp = tape.matmul(x_i, p.w_x)?;
        let sum = tape.add(rec, inp)?;
        let sum = tape.add(sum, p.b)?;
        rows.push(tape.tanh(sum));
    }
    Ok(GraphState {
        h: tape.stack_rows(&rows)?,
        c: None,
    })
}

/// GCN over the frame, then a standard LSTM cell applied node by node.
pub fn gcn_lstm_step(tape: &mut Tape, state: GraphState, x0: Var, a_hat: Var, p: &GcnLstmVars) -> Result<GraphState> {
    let c_all = state
        .c
        .ok_or_else(|| Error::argument("GCN&LSTM state is missing its cell memory"))?;
    let x = gcn_layer(tape, x0, a_hat, p.w_g)?;
    let nodes = tape.value(x).rows();
    let mut hs = Vec::with_capacity(nodes);
    let mut cs = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let h_prev = tape.row(state.h, i)?;
        let c_prev = tape.row(c_all, i)?;
        let x_i = tape.row(x, i)?;
        let mut inputs = [x_i; 4];
        for (k, input) in inputs.iter_mut().enumerate() {
            *input = tape.matmul(x_i, p.gates.w[k])?;
        }
        let gates = lstm_gates(tape, inputs, h_prev, &p.gates)?;
        let next = lstm_update(tape, gates, c_prev)?;
        hs.push(next.h);
        cs.push(next.c.expect("lstm_update sets memory"));
    }
    Ok(GraphState {
        h: tape.stack_rows(&hs)?,
        c: Some(tape.stack_rows(&cs)?),
    })
}

/// Parameters of any of the four cells.
#[derive(Clone, Debug)]
pub enum CellParams {
    Rgcn(RgcnParams),
    Lgcn(LgcnParams),
    GcnRnn(GcnRnnParams),
    GcnLstm(GcnLstmParams),
}

impl CellParams {
    /// `layers` only applies to RGCN; the other cells use one graph layer.
    pub fn new<R: Rng + ?Sized>(kind: CellKind, n: usize, layers: usize, rng: &mut R) -> Result<Self> {
        Ok(match kind {
            CellKind::Rgcn => CellParams::Rgcn(RgcnParams::new(n, layers, rng)?),
            CellKind::Lgcn => CellParams::Lgcn(LgcnParams::new(n, rng)?),
            CellKind::GcnRnn => CellParams::GcnRnn(GcnRnnParams::new(n, rng)?),
            CellKind::GcnLstm => CellParams::GcnLstm(GcnLstmParams::new(n, rng)?),
        })
    }

    pub fn kind(&self) -> CellKind {
        match self {
            CellParams::Rgcn(_) => CellKind::Rgcn,
            CellParams::Lgcn(_) => CellKind::Lgcn,
            CellParams::GcnRnn(_) => CellKind::GcnRnn,
            CellParams::GcnLstm(_) => CellKind::GcnLstm,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            CellParams::Rgcn(p) => p.hidden(),
            CellParams::Lgcn(p) => p.hidden(),
            CellParams::GcnRnn(p) => p.hidden(),
            CellParams::GcnLstm(p) => p.hidden(),
        }
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundCell {
        match self {
            CellParams::Rgcn(p) => BoundCell::Rgcn(p.bind(tape)),
            CellParams::Lgcn(p) => BoundCell::Lgcn(p.bind(tape)),
            CellParams::GcnRnn(p) => BoundCell::GcnRnn(p.bind(tape)),
            CellParams::GcnLstm(p) => BoundCell::GcnLstm(p.bind(tape)),
        }
    }

    fn inner(&self) -> &dyn Parameterized {
        match self {
            CellParams::Rgcn(p) => p,
            CellParams::Lgcn(p) => p,
            CellParams::GcnRnn(p) => p,
            CellParams::GcnLstm(p) => p,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Parameterized {
        match self {
            CellParams::Rgcn(p) => p,
            CellParams::Lgcn(p) => p,
            CellParams::GcnRnn(p) => p,
            CellParams::GcnLstm(p) => p,
        }
    }
}

impl Parameterized for CellParams {
    fn params(&self) -> Vec<(String, &Param)> {
        prefixed(self.kind().as_str(), self.inner().params())
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let kind = self.kind();
        prefixed_mut(kind.as_str(), self.inner_mut().params_mut())
    }
}

/// Cell weights placed on a tape for one forward pass.
#[derive(Clone, Debug)]
pub enum BoundCell {
    Rgcn(RgcnVars),
    Lgcn(GateVars),
    GcnRnn(GcnRnnVars),
    GcnLstm(GcnLstmVars),
}

impl BoundCell {
    pub fn kind(&self) -> CellKind {
        match self {
            BoundCell::Rgcn(_) => CellKind::Rgcn,
            BoundCell::Lgcn(_) => CellKind::Lgcn,
            BoundCell::GcnRnn(_) => CellKind::GcnRnn,
            BoundCell::GcnLstm(_) => CellKind::GcnLstm,
        }
    }

    pub fn step(&self, tape: &mut Tape, state: GraphState, x0: Var, a_hat: Var) -> Result<GraphState> {
        match self {
            BoundCell::Rgcn(p) if p.w_x.len() == 1 => rgcn_step(tape, state, x0, a_hat, p),
            BoundCell::Rgcn(p) => rgcn_multilayer_step(tape, state, x0, a_hat, p),
            BoundCell::Lgcn(p) => lgcn_step(tape, state, x0, a_hat, p),
            BoundCell::GcnRnn(p) => gcn_rnn_step(tape, state, x0, a_hat, p),
            BoundCell::GcnLstm(p) => gcn_lstm_step(tape, state, x0, a_hat, p),
        }
    }
}

/// Runs `cell` over every frame from a zero state and returns all `T` states.
pub fn unroll(tape: &mut Tape, cell: &BoundCell, hidden: usize, graph: &TemporalPoseGraph) -> Result<Vec<GraphState>> {
    let a_hat = tape.constant(graph.adjacency().normalized().clone());
    let mut state = GraphState::zero(tape, hidden, cell.kind().has_cell_memory());
    let mut out = Vec::with_capacity(graph.len());
    for frame in graph.frames() {
        let x0 = tape.constant(frame.coords().clone());
        state = cell.step(tape, state, x0, a_hat)?;
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posegraph::{build_temporal_graph, canonical_adjacency, PoseFrame};
    use rand::{rngs::StdRng, SeedableRng};

    // Straight-line reference calculator, deliberately independent of Matrix::matmul.
    type M = Vec<Vec<f64>>;

    fn to_m(m: &Matrix) -> M {
        (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
    }

    fn mm(a: &M, b: &M) -> M {
        let (n, k, p) = (a.len(), b.len(), b[0].len());
        assert_eq!(a[0].len(), k);
        let mut out = vec![vec![0.0; p]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for q in 0..k {
                    s += a[i][q] * b[q][j];
                }
                *cell = s;
            }
        }
        out
    }

    fn zip(a: &M, b: &M, f: impl Fn(f64, f64) -> f64) -> M {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| f(u, v)).collect())
            .collect()
    }

    fn map(a: &M, f: impl Fn(f64) -> f64) -> M {
        a.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect()
    }

    fn add_bias(a: &M, b: &M) -> M {
        a.iter().map(|r| r.iter().zip(&b[0]).map(|(x, y)| x + y).collect()).collect()
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn max_diff(a: &M, b: &Matrix) -> f64 {
        let mut d: f64 = 0.0;
        for (r, row) in a.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                d = d.max((v - b.get(r, c)).abs());
            }
        }
        d
    }

    fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut StdRng) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn random_frame(rng: &mut StdRng) -> PoseFrame {
        let coords = random_matrix(NUM_KEYPOINTS, 2, 1.0, rng);
        PoseFrame::new(coords, [true; NUM_KEYPOINTS]).unwrap()
    }

    fn a_hat() -> Matrix {
        canonical_adjacency().normalized().clone()
    }

    fn one_step(p: &CellParams, h: &Matrix, c: Option<&Matrix>, x0: &Matrix, a: &Matrix) -> (Matrix, Option<Matrix>) {
        let mut t = Tape::new();
        let cell = p.bind(&mut t);
        let state = GraphState {
            h: t.constant(h.clone()),
            c: c.map(|c| t.constant(c.clone())),
        };
        let x = t.constant(x0.clone());
        let a = t.constant(a.clone());
        let next = cell.step(&mut t, state, x, a).unwrap();
        (t.value(next.h).clone(), next.c.map(|c| t.value(c).clone()))
    }

    #[test]
    fn rgcn_zero_fixed_point() {
        let mut rng = StdRng::seed_from_u64(1);
        let mut p = RgcnParams::new(5, 1, &mut rng).unwrap();
        p.b = Param::zeros(1, 5);
        let p = CellParams::Rgcn(p);
        let (h, _) = one_step(&p, &Matrix::zeros(14, 5), None, &Matrix::zeros(14, 2), &a_hat());
        assert_eq!(h, Matrix::zeros(14, 5));
    }

    #[test]
    fn rgcn_without_recurrence_is_tanh_of_gcn() {
        let mut rng = StdRng::seed_from_u64(2);
        let mut p = RgcnParams::new(4, 1, &mut rng).unwrap();
        p.w_h = Param::zeros(4, 4);
        p.b = Param::zeros(1, 4);
        let h_prev = random_matrix(14, 4, 0.9, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let expected = a_hat()
            .matmul(&x0)
            .unwrap()
            .matmul(p.w_x[0].value())
            .unwrap()
            .map(|v| v.max(0.0).tanh());
        let (h, _) = one_step(&CellParams::Rgcn(p), &h_prev, None, &x0, &a_hat());
        assert!(h.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    fn rgcn_oracle(p: &RgcnParams, h: &M, x0: &M, a: &M) -> M {
        let mut prop = x0.clone();
        for _ in 0..p.layers() {
            prop = mm(a, &prop);
        }
        for w in &p.w_x {
            prop = mm(&prop, &to_m(w.value()));
        }
        let graph = map(&prop, |v| v.max(0.0));
        let rec = mm(h, &to_m(p.w_h.value()));
        let sum = add_bias(&zip(&rec, &graph, |a, b| a + b), &to_m(p.b.value()));
        map(&sum, f64::tanh)
    }

    #[test]
    fn rgcn_matches_straight_line_oracle() {
        let mut rng = StdRng::seed_from_u64(3);
        for layers in 1..=3 {
            let p = RgcnParams::new(6, layers, &mut rng).unwrap();
            let h = random_matrix(14, 6, 0.9, &mut rng);
            let x0 = random_frame(&mut rng).coords().clone();
            let expected = rgcn_oracle(&p, &to_m(&h), &to_m(&x0), &to_m(&a_hat()));
            let (got, _) = one_step(&CellParams::Rgcn(p), &h, None, &x0, &a_hat());
            assert!(max_diff(&expected, &got) < 1e-10, "layers={layers}");
        }
    }

    #[test]
    fn two_layer_rgcn_with_identity_second_layer_collapses() {
        let mut rng = StdRng::seed_from_u64(4);
        let n = 5;
        let mut p2 = RgcnParams::new(n, 2, &mut rng).unwrap();
        p2.w_x[1] = Param::new(Matrix::identity(n));
        let p1 = RgcnParams {
            w_h: p2.w_h.clone(),
            w_x: vec![p2.w_x[0].clone()],
            b: p2.b.clone(),
        };
        let h = random_matrix(14, n, 0.9, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let a = a_hat();
        let a2 = a.matmul(&a).unwrap();
        let (multi, _) = one_step(&CellParams::Rgcn(p2), &h, None, &x0, &a);
        let (single, _) = one_step(&CellParams::Rgcn(p1), &h, None, &x0, &a2);
        assert!(multi.max_abs_diff(&single).unwrap() < 1e-12);
    }

    #[test]
    fn two_layer_rgcn_with_zero_weights_has_no_graph_term() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 3;
        let mut p = RgcnParams::new(n, 2, &mut rng).unwrap();
        p.w_x = vec![Param::zeros(2, n), Param::zeros(n, n)];
        let h = random_matrix(14, n, 0.9, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let expected = h.matmul(p.w_h.value()).unwrap();
        let mut expected_b = expected.clone();
        for r in 0..14 {
            for c in 0..n {
                expected_b.set(r, c, (expected.get(r, c) + p.b.value().get(0, c)).tanh());
            }
        }
        let (got, _) = one_step(&CellParams::Rgcn(p), &h, None, &x0, &a_hat());
        assert!(got.max_abs_diff(&expected_b).unwrap() < 1e-15);
    }

    #[test]
    fn rgcn_step_rejects_wrong_layer_counts() {
        let mut rng = StdRng::seed_from_u64(6);
        let mut t = Tape::new();
        let p1 = RgcnParams::new(3, 1, &mut rng).unwrap().bind(&mut t);
        let p2 = RgcnParams::new(3, 2, &mut rng).unwrap().bind(&mut t);
        let s = GraphState::zero(&mut t, 3, false);
        let x = t.constant(Matrix::zeros(14, 2));
        let a = t.constant(a_hat());
        assert!(rgcn_step(&mut t, s, x, a, &p2).is_err());
        assert!(rgcn_multilayer_step(&mut t, s, x, a, &p1).is_err());
        let bad_x = t.constant(Matrix::zeros(14, 3));
        assert!(matches!(rgcn_step(&mut t, s, bad_x, a, &p1), Err(Error::Dimension { .. })));
    }

    fn lstm_oracle(inputs: [M; 4], h: &M, c: &M, u: &[Param; 4], b: &[Param; 4]) -> (M, M) {
        let pre: Vec<M> = (0..4)
            .map(|k| add_bias(&zip(&inputs[k], &mm(h, &to_m(u[k].value())), |a, b| a + b), &to_m(b[k].value())))
            .collect();
        let f = map(&pre[0], sig);
        let i = map(&pre[1], sig);
        let o = map(&pre[2], sig);
        let g = map(&pre[3], f64::tanh);
        let c_next = zip(&zip(&f, c, |a, b| a * b), &zip(&i, &g, |a, b| a * b), |a, b| a + b);
        let h_next = zip(&o, &map(&c_next, f64::tanh), |a, b| a * b);
        (h_next, c_next)
    }

    #[test]
    fn lgcn_zero_inputs_give_half_gates_and_zero_state() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut p = LgcnParams::new(4, &mut rng).unwrap();
        p.b = std::array::from_fn(|_| Param::zeros(1, 4));
        let mut t = Tape::new();
        let vars = p.bind(&mut t);
        let s = GraphState::zero(&mut t, 4, true);
        let x = t.constant(Matrix::zeros(14, 2));
        let a = t.constant(a_hat());
        let (next, gates) = lgcn_step_with_gates(&mut t, s, x, a, &vars).unwrap();
        for g in &gates[..3] {
            assert_eq!(t.value(*g), &Matrix::filled(14, 4, 0.5));
        }
        assert_eq!(t.value(gates[3]), &Matrix::zeros(14, 4));
        assert_eq!(t.value(next.h), &Matrix::zeros(14, 4));
        assert_eq!(t.value(next.c.unwrap()), &Matrix::zeros(14, 4));
    }

    #[test]
    fn lgcn_saturated_forget_gate_keeps_memory() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut p = LgcnParams::new(4, &mut rng).unwrap();
        p.b[0] = Param::new(Matrix::filled(1, 4, 60.0));
        let h = random_matrix(14, 4, 0.5, &mut rng);
        let c = random_matrix(14, 4, 2.0, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let a = a_hat();
        let (_, c_next) = one_step(&CellParams::Lgcn(p.clone()), &h, Some(&c), &x0, &a);
        // c_next - c_prev should equal I ⊙ G
        let prop = to_m(&a.matmul(&x0).unwrap());
        let inputs: [M; 4] = std::array::from_fn(|k| map(&mm(&prop, &to_m(p.w[k].value())), |v| v.max(0.0)));
        let (_, oracle_c) = lstm_oracle(inputs, &to_m(&h), &to_m(&Matrix::zeros(14, 4)), &p.u, &p.b);
        let diff = c_next.unwrap().sub(&c).unwrap();
        assert!(max_diff(&oracle_c, &diff) < 1e-12);
    }

    #[test]
    fn lgcn_matches_straight_line_oracle() {
        let mut rng = StdRng::seed_from_u64(9);
        let p = LgcnParams::new(5, &mut rng).unwrap();
        let h = random_matrix(14, 5, 0.9, &mut rng);
        let c = random_matrix(14, 5, 1.5, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let a = a_hat();
        let prop = mm(&to_m(&a), &to_m(&x0));
        let inputs: [M; 4] = std::array::from_fn(|k| map(&mm(&prop, &to_m(p.w[k].value())), |v| v.max(0.0)));
        let (eh, ec) = lstm_oracle(inputs, &to_m(&h), &to_m(&c), &p.u, &p.b);
        let (gh, gc) = one_step(&CellParams::Lgcn(p), &h, Some(&c), &x0, &a);
        assert!(max_diff(&eh, &gh) < 1e-10);
        assert!(max_diff(&ec, &gc.unwrap()) < 1e-10);
    }

    #[test]
    fn lgcn_without_memory_is_an_argument_error() {
        let mut rng = StdRng::seed_from_u64(10);
        let mut t = Tape::new();
        let p = LgcnParams::new(3, &mut rng).unwrap().bind(&mut t);
        let s = GraphState::zero(&mut t, 3, false);
        let x = t.constant(Matrix::zeros(14, 2));
        let a = t.constant(a_hat());
        assert!(matches!(lgcn_step(&mut t, s, x, a, &p), Err(Error::Argument(_))));
    }

    fn gcn_oracle(a: &M, x0: &M, w_g: &Param) -> M {
        map(&mm(&mm(a, x0), &to_m(w_g.value())), |v| v.max(0.0))
    }

    #[test]
    fn gcn_rnn_matches_per_node_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let p = GcnRnnParams::new(4, &mut rng).unwrap();
        let h = random_matrix(14, 4, 0.9, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let a = a_hat();
        let x = gcn_oracle(&to_m(&a), &to_m(&x0), &p.w_g);
        let hm = to_m(&h);
        let expected: M = (0..14)
            .map(|i| {
                let rec = mm(&vec![hm[i].clone()], &to_m(p.w_h.value()));
                let inp = mm(&vec![x[i].clone()], &to_m(p.w_x.value()));
                let s = add_bias(&zip(&rec, &inp, |a, b| a + b), &to_m(p.b.value()));
                map(&s, f64::tanh).remove(0)
            })
            .collect();
        let (got, _) = one_step(&CellParams::GcnRnn(p), &h, None, &x0, &a);
        assert!(max_diff(&expected, &got) < 1e-10);
    }

    #[test]
    fn gcn_rnn_trivial_cases() {
        let mut rng = StdRng::seed_from_u64(12);
        let mut p = GcnRnnParams::new(3, &mut rng).unwrap();
        p.b = Param::zeros(1, 3);
        let (h, _) = one_step(&CellParams::GcnRnn(p.clone()), &Matrix::zeros(14, 3), None, &Matrix::zeros(14, 2), &a_hat());
        assert_eq!(h, Matrix::zeros(14, 3));

        // single-node graph: Â = [1], so the step is a plain RNN cell on relu(x W_g)
        let mut t = Tape::new();
        let vars = p.bind(&mut t);
        let h_prev = Matrix::from_rows(&[[0.2, -0.4, 0.1]]).unwrap();
        let x0 = Matrix::from_rows(&[[0.5, -0.3]]).unwrap();
        let s = GraphState {
            h: t.constant(h_prev.clone()),
            c: None,
        };
        let x = t.constant(x0.clone());
        let one = t.constant(Matrix::ones(1, 1));
        let next = gcn_rnn_step(&mut t, s, x, one, &vars).unwrap();
        let xg = x0.matmul(p.w_g.value()).unwrap().map(|v| v.max(0.0));
        let expected = h_prev
            .matmul(p.w_h.value())
            .unwrap()
            .add(&xg.matmul(p.w_x.value()).unwrap())
            .unwrap()
            .map(f64::tanh);
        assert!(t.value(next.h).max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn gcn_lstm_matches_per_node_oracle() {
        let mut rng = StdRng::seed_from_u64(13);
        let p = GcnLstmParams::new(3, &mut rng).unwrap();
        let h = random_matrix(14, 3, 0.9, &mut rng);
        let c = random_matrix(14, 3, 1.0, &mut rng);
        let x0 = random_frame(&mut rng).coords().clone();
        let a = a_hat();
        let x = gcn_oracle(&to_m(&a), &to_m(&x0), &p.w_g);
        let (hm, cm) = (to_m(&h), to_m(&c));
        let mut eh = Vec::new();
        let mut ec = Vec::new();
        for i in 0..14 {
            let xi = vec![x[i].clone()];
            let inputs: [M; 4] = std::array::from_fn(|k| mm(&xi, &to_m(p.w[k].value())));
            let (nh, nc) = lstm_oracle(inputs, &vec![hm[i].clone()], &vec![cm[i].clone()], &p.u, &p.b);
            eh.push(nh[0].clone());
            ec.push(nc[0].clone());
        }
        let (gh, gc) = one_step(&CellParams::GcnLstm(p), &h, Some(&c), &x0, &a);
        assert!(max_diff(&eh, &gh) < 1e-10);
        assert!(max_diff(&ec, &gc.unwrap()) < 1e-10);
    }

    #[test]
    fn gcn_lstm_trivial_cases() {
        let mut rng = StdRng::seed_from_u64(14);
        let mut p = GcnLstmParams::new(3, &mut rng).unwrap();
        p.b = std::array::from_fn(|_| Param::zeros(1, 3));
        let (h, c) = one_step(
            &CellParams::GcnLstm(p.clone()),
            &Matrix::zeros(14, 3),
            Some(&Matrix::zeros(14, 3)),
            &Matrix::zeros(14, 2),
            &a_hat(),
        );
        assert_eq!(h, Matrix::zeros(14, 3));
        assert_eq!(c.unwrap(), Matrix::zeros(14, 3));

        // single node: matches a plain LSTM on relu(x W_g)
        let h_prev = Matrix::from_rows(&[[0.2, -0.4, 0.1]]).unwrap();
        let c_prev = Matrix::from_rows(&[[1.0, 0.0, -0.5]]).unwrap();
        let x0 = Matrix::from_rows(&[[0.5, 0.3]]).unwrap();
        let (gh, gc) = one_step(&CellParams::GcnLstm(p.clone()), &h_prev, Some(&c_prev), &x0, &Matrix::ones(1, 1));
        let xg = to_m(&x0.matmul(p.w_g.value()).unwrap().map(|v| v.max(0.0)));
        let inputs: [M; 4] = std::array::from_fn(|k| mm(&xg, &to_m(p.w[k].value())));
        let (eh, ec) = lstm_oracle(inputs, &to_m(&h_prev), &to_m(&c_prev), &p.u, &p.b);
        assert!(max_diff(&eh, &gh) < 1e-15);
        assert!(max_diff(&ec, &gc.unwrap()) < 1e-15);
    }

    #[test]
    fn param_counts_match_shape_arithmetic() {
        let mut rng = StdRng::seed_from_u64(15);
        assert_eq!(RgcnParams::new(4, 1, &mut rng).unwrap().param_count(), 28);
        assert_eq!(LgcnParams::new(4, &mut rng).unwrap().param_count(), 112);
        for n in 1..=20 {
            let rgcn = RgcnParams::new(n, 1, &mut rng).unwrap().param_count();
            let gcn_rnn = GcnRnnParams::new(n, &mut rng).unwrap().param_count();
            assert_eq!(rgcn, n * n + 3 * n);
            assert_eq!(gcn_rnn, 2 * n * n + 3 * n);
            assert!(rgcn < gcn_rnn);
            assert_eq!(GcnLstmParams::new(n, &mut rng).unwrap().param_count(), 8 * n * n + 6 * n);
            assert_eq!(RgcnParams::new(n, 3, &mut rng).unwrap().param_count(), 3 * n * n + 3 * n);
        }
    }

    fn random_graph(t: usize, rng: &mut StdRng) -> TemporalPoseGraph {
        build_temporal_graph((0..t).map(|_| random_frame(rng)).collect()).unwrap()
    }

    fn unroll_values(p: &CellParams, g: &TemporalPoseGraph) -> Vec<Matrix> {
        let mut t = Tape::new();
        let cell = p.bind(&mut t);
        let states = unroll(&mut t, &cell, p.hidden(), g).unwrap();
        states.iter().map(|s| t.value(s.h).clone()).collect()
    }

    #[test]
    fn unroll_single_frame_is_one_step_from_zero() {
        let mut rng = StdRng::seed_from_u64(16);
        for kind in CellKind::ALL {
            let p = CellParams::new(kind, 4, 1, &mut rng).unwrap();
            let g = random_graph(1, &mut rng);
            let states = unroll_values(&p, &g);
            assert_eq!(states.len(), 1);
            let c0 = kind.has_cell_memory().then(|| Matrix::zeros(14, 4));
            let (h, _) = one_step(&p, &Matrix::zeros(14, 4), c0.as_ref(), g.frames()[0].coords(), &a_hat());
            assert_eq!(states[0], h);
        }
    }

    #[test]
    fn unroll_constant_frames_without_recurrence_repeat() {
        let mut rng = StdRng::seed_from_u64(17);
        let mut p = RgcnParams::new(4, 1, &mut rng).unwrap();
        p.w_h = Param::zeros(4, 4);
        let frame = random_frame(&mut rng);
        let g = build_temporal_graph(vec![frame; 6]).unwrap();
        let states = unroll_values(&CellParams::Rgcn(p), &g);
        assert!(states.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn unroll_matches_loop_free_recomputation() {
        let mut rng = StdRng::seed_from_u64(18);
        let p = RgcnParams::new(5, 1, &mut rng).unwrap();
        let g = random_graph(10, &mut rng);
        let a = to_m(&a_hat());
        let xs: Vec<M> = g.frames().iter().map(|f| to_m(f.coords())).collect();
        let h0 = vec![vec![0.0; 5]; 14];
        let h1 = rgcn_oracle(&p, &h0, &xs[0], &a);
        let h2 = rgcn_oracle(&p, &h1, &xs[1], &a);
        let h3 = rgcn_oracle(&p, &h2, &xs[2], &a);
        let h4 = rgcn_oracle(&p, &h3, &xs[3], &a);
        let h5 = rgcn_oracle(&p, &h4, &xs[4], &a);
        let h6 = rgcn_oracle(&p, &h5, &xs[5], &a);
        let h7 = rgcn_oracle(&p, &h6, &xs[6], &a);
        let h8 = rgcn_oracle(&p, &h7, &xs[7], &a);
        let h9 = rgcn_oracle(&p, &h8, &xs[8], &a);
        let h10 = rgcn_oracle(&p, &h9, &xs[9], &a);
        let expected = [h1, h2, h3, h4, h5, h6, h7, h8, h9, h10];
        let got = unroll_values(&CellParams::Rgcn(p), &g);
        for (e, g) in expected.iter().zip(&got) {
            assert!(max_diff(e, g) < 1e-10);
        }
    }

    fn permutation(seed: u64) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut p: Vec<usize> = (0..14).collect();
        p.shuffle(&mut StdRng::seed_from_u64(seed));
        p
    }

    fn permute_rows(m: &Matrix, perm: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (new, &old) in perm.iter().enumerate() {
            out.row_mut(new).copy_from_slice(m.row(old));
        }
        out
    }

    fn permute_sym(m: &Matrix, perm: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out.set(i, j, m.get(pi, pj));
            }
        }
        out
    }

    #[test]
    fn cells_are_permutation_equivariant() {
        let mut rng = StdRng::seed_from_u64(19);
        for kind in CellKind::ALL {
            for layers in [1, 2] {
                if layers == 2 && kind != CellKind::Rgcn {
                    continue;
                }
                let p = CellParams::new(kind, 4, layers, &mut rng).unwrap();
                let h = random_matrix(14, 4, 0.9, &mut rng);
                let c = kind.has_cell_memory().then(|| random_matrix(14, 4, 1.0, &mut rng));
                let x0 = random_frame(&mut rng).coords().clone();
                let a = a_hat();
                let (h1, c1) = one_step(&p, &h, c.as_ref(), &x0, &a);
                for seed in 0..3 {
                    let perm = permutation(seed);
                    let pc = c.as_ref().map(|c| permute_rows(c, &perm));
                    let (h2, c2) = one_step(
                        &p,
                        &permute_rows(&h, &perm),
                        pc.as_ref(),
                        &permute_rows(&x0, &perm),
                        &permute_sym(&a, &perm),
                    );
                    assert!(h2.max_abs_diff(&permute_rows(&h1, &perm)).unwrap() < 1e-12, "{kind}");
                    if let (Some(c1), Some(c2)) = (&c1, &c2) {
                        assert!(c2.max_abs_diff(&permute_rows(c1, &perm)).unwrap() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn hidden_states_and_gates_stay_bounded() {
        let mut rng = StdRng::seed_from_u64(20);
        for kind in CellKind::ALL {
            let p = CellParams::new(kind, 6, 1, &mut rng).unwrap();
            let g = random_graph(8, &mut rng);
            for h in unroll_values(&p, &g) {
                assert!(h.data().iter().all(|v| v.abs() < 1.0), "{kind}");
            }
        }
        let p = LgcnParams::new(6, &mut rng).unwrap();
        let mut t = Tape::new();
        let vars = p.bind(&mut t);
        let mut s = GraphState::zero(&mut t, 6, true);
        let a = t.constant(a_hat());
        for _ in 0..5 {
            let x = t.constant(random_frame(&mut rng).coords().clone());
            let (next, gates) = lgcn_step_with_gates(&mut t, s, x, a, &vars).unwrap();
            for g in &gates[..3] {
                assert!(t.value(*g).data().iter().all(|v| *v > 0.0 && *v < 1.0));
            }
            s = next;
        }
    }

    #[test]
    fn occluding_one_keypoint_perturbs_less_than_blanking_the_frame() {
        let mut rng = StdRng::seed_from_u64(21);
        for trial in 0..20 {
            let kind = CellKind::ALL[trial % 4];
            let p = CellParams::new(kind, 5, 1, &mut rng).unwrap();
            let h = random_matrix(14, 5, 0.5, &mut rng);
            let c = kind.has_cell_memory().then(|| random_matrix(14, 5, 0.5, &mut rng));
            let x0 = random_frame(&mut rng).coords().clone();
            let mut occluded = x0.clone();
            let k = rng.random_range(0..14);
            occluded.row_mut(k).fill(0.0);
            let a = a_hat();
            let (base, _) = one_step(&p, &h, c.as_ref(), &x0, &a);
            let (one, _) = one_step(&p, &h, c.as_ref(), &occluded, &a);
            let (blank, _) = one_step(&p, &h, c.as_ref(), &Matrix::zeros(14, 2), &a);
            let d_one = one.sub(&base).unwrap().frobenius_norm();
            let d_all = blank.sub(&base).unwrap().frobenius_norm();
            assert!(d_one.is_finite());
            assert!(d_one < d_all, "{kind}: {d_one} vs {d_all}");
        }
    }

    #[test]
    fn cell_kind_parses() {
        for k in CellKind::ALL {
            assert_eq!(k.as_str().parse::<CellKind>().unwrap(), k);
        }
        assert!("gru".parse::<CellKind>().is_err());
    }
}
