//! Reverse-mode gradient tape over dense matrices.
//!
//! Every operation appends a node holding its forward value and the inputs
//! its backward rule needs. Inputs always precede their consumers, so the
//! node order is a topological order and [`Tape::backward`] is a single
//! reverse sweep.

use std::cell::Cell;
use std::collections::HashMap;

use super::matrix::{matmul_into, Matrix};
use super::param::{Param, ParamId};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

thread_local! {
    static CORRUPT_TANH_BACKWARD: Cell<bool> = const { Cell::new(false) };
}

/// Test hook: replaces the tanh backward rule on the current thread with a
/// wrong one so gradient checks can be shown to catch it.
#[doc(hidden)]
pub fn set_tanh_backward_fault(enabled: bool) {
    CORRUPT_TANH_BACKWARD.with(|f| f.set(enabled));
}

fn tanh_fault_enabled() -> bool {
    CORRUPT_TANH_BACKWARD.with(Cell::get)
}

/// Numerically stable softmax over a slice.
pub fn softmax_vector(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::argument("softmax of an empty vector"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::argument("softmax of non-finite scores"));
    }
    Ok(softmax_unchecked(scores))
}

fn softmax_unchecked(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Activation(Activation, Var),
    Transpose(Var),
    Sum(Var),
    MeanRows(Var),
    Mean(Vec<Var>),
    Row(Var, usize),
    StackRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    Softmax(Var),
    RowDistance(Var, usize, usize),
    CrossEntropy { logits: Var, labels: Vec<usize>, probs: Matrix },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Result of a backward sweep.
#[derive(Debug, Default)]
pub struct Gradients {
    params: HashMap<ParamId, Matrix>,
    nodes: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&Matrix> {
        self.params.get(&id)
    }

    /// Adjoint of an intermediate node, if it was reached.
    pub fn wrt(&self, var: Var) -> Option<&Matrix> {
        self.nodes.get(var.0).and_then(Option::as_ref)
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.shape(), (1, 1));
        m.data()[0]
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn scalar_constant(&mut self, value: f64) -> Var {
        self.constant(Matrix::filled(1, 1, value))
    }

    /// Leaf tracking `param`; gradients flow back to its id.
    pub fn param(&mut self, param: &Param) -> Var {
        self.push(param.value().clone(), Op::Param(param.id()), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.grad(a) || self.grad(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.grad(a) || self.grad(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        let rg = self.grad(a) || self.grad(b);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).hadamard(self.value(b))?;
        let rg = self.grad(a) || self.grad(b);
        Ok(self.push(value, Op::Hadamard(a, b), rg))
    }

    /// Adds a 1×n row to every row of an m×n matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ar, ac) = self.shape(a);
        let rs = self.shape(row);
        if rs != (1, ac) {
            return Err(Error::dimension("add_row", (ar, ac), rs));
        }
        let mut value = self.value(a).clone();
        let rv = self.value(row).data().to_vec();
        for r in 0..ar {
            for (x, b) in value.row_mut(r).iter_mut().zip(&rv) {
                *x += b;
            }
        }
        let rg = self.grad(a) || self.grad(row);
        Ok(self.push(value, Op::AddRow(a, row), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scale(c);
        let rg = self.grad(a);
        self.push(value, Op::Scale(a, c), rg)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|v| v + c);
        let rg = self.grad(a);
        self.push(value, Op::AddScalar(a), rg)
    }

    pub fn activation(&mut self, act: Activation, a: Var) -> Var {
        let value = self.value(a).map(|v| act.apply(v));
        let rg = self.grad(a);
        self.push(value, Op::Activation(act, a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(Activation::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(Activation::Sigmoid, a)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(Activation::Relu, a)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let rg = self.grad(a);
        self.push(value, Op::Transpose(a), rg)
    }

    /// Sum of all entries, as a 1×1 node.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::filled(1, 1, self.value(a).sum());
        let rg = self.grad(a);
        self.push(value, Op::Sum(a), rg)
    }

    /// Column-wise mean of an m×n matrix, giving 1×n.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let (rows, cols) = m.shape();
        let mut out = vec![0.0; cols];
        for r in 0..rows {
            for (o, v) in out.iter_mut().zip(m.row(r)) {
                *o += v;
            }
        }
        let inv = 1.0 / rows as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let rg = self.grad(a);
        self.push(Matrix::from_parts(1, cols, out), Op::MeanRows(a), rg)
    }

    /// Entrywise mean of same-shaped nodes.
    pub fn mean(&mut self, items: &[Var]) -> Result<Var> {
        let first = *items
            .first()
            .ok_or_else(|| Error::argument("mean of an empty list"))?;
        let shape = self.shape(first);
        let mut acc = Matrix::zeros(shape.0, shape.1);
        for &v in items {
            if self.shape(v) != shape {
                return Err(Error::dimension("mean", shape, self.shape(v)));
            }
            acc.add_assign(self.value(v));
        }
        let value = acc.scale(1.0 / items.len() as f64);
        let rg = items.iter().any(|&v| self.grad(v));
        Ok(self.push(value, Op::Mean(items.to_vec()), rg))
    }

    /// Row `i` of `a` as a 1×n node.
    pub fn row(&mut self, a: Var, i: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if i >= r {
            return Err(Error::argument(format!("row {i} out of range for {r}x{c}")));
        }
        let value = Matrix::from_parts(1, c, self.value(a).row(i).to_vec());
        let rg = self.grad(a);
        Ok(self.push(value, Op::Row(a, i), rg))
    }

    /// Vertical concatenation of nodes sharing a column count.
    pub fn stack_rows(&mut self, items: &[Var]) -> Result<Var> {
        let first = *items
            .first()
            .ok_or_else(|| Error::argument("stack of an empty list"))?;
        let cols = self.shape(first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &v in items {
            let s = self.shape(v);
            if s.1 != cols {
                return Err(Error::dimension("stack_rows", self.shape(first), s));
            }
            rows += s.0;
            data.extend_from_slice(self.value(v).data());
        }
        let rg = items.iter().any(|&v| self.grad(v));
        Ok(self.push(Matrix::from_parts(rows, cols, data), Op::StackRows(items.to_vec()), rg))
    }

    /// Horizontal concatenation of nodes sharing a row count.
    pub fn concat_cols(&mut self, items: &[Var]) -> Result<Var> {
        let first = *items
            .first()
            .ok_or_else(|| Error::argument("concat of an empty list"))?;
        let rows = self.shape(first).0;
        let mut cols = 0;
        for &v in items {
            let s = self.shape(v);
            if s.0 != rows {
                return Err(Error::dimension("concat_cols", self.shape(first), s));
            }
            cols += s.1;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &v in items {
                data.extend_from_slice(self.value(v).row(r));
            }
        }
        let rg = items.iter().any(|&v| self.grad(v));
        Ok(self.push(Matrix::from_parts(rows, cols, data), Op::ConcatCols(items.to_vec()), rg))
    }

    /// Softmax over all entries of `a`; the shape is preserved.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let m = self.value(a);
        let probs = softmax_vector(m.data())?;
        let value = Matrix::from_parts(m.rows(), m.cols(), probs);
        let rg = self.grad(a);
        Ok(self.push(value, Op::Softmax(a), rg))
    }

    /// Euclidean distance between rows `i` and `j` of `a`, as a 1×1 node.
    pub fn row_distance(&mut self, a: Var, i: usize, j: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if i >= r || j >= r {
            return Err(Error::argument(format!(
                "rows ({i}, {j}) out of range for {r}x{c}"
            )));
        }
        let m = self.value(a);
        let d = euclidean(m.row(i), m.row(j));
        let rg = self.grad(a);
        Ok(self.push(Matrix::filled(1, 1, d), Op::RowDistance(a, i, j), rg))
    }

    /// Mean softmax cross-entropy of N×C logits against class labels.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (n, c) = self.shape(logits);
        if labels.len() != n {
            return Err(Error::argument(format!(
                "{} labels for {n} logit rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::argument(format!("label {bad} outside [0, {c})")));
        }
        let m = self.value(logits);
        let mut probs = Vec::with_capacity(n * c);
        let mut loss = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            let row = m.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += lse - row[label];
            probs.extend(row.iter().map(|z| (z - lse).exp()));
        }
        let value = Matrix::filled(1, 1, loss / n as f64);
        let rg = self.grad(logits);
        Ok(self.push(
            value,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs: Matrix::from_parts(n, c, probs),
            },
            rg,
        ))
    }

    /// Propagates d(root)/d(node) to every node reachable from `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let shape = self.shape(root);
        if shape != (1, 1) {
            return Err(Error::argument(format!(
                "backward needs a scalar root, got {}x{}",
                shape.0, shape.1
            )));
        }
        let mut adj: Vec<Option<Matrix>> = Vec::with_capacity(root.0 + 1);
        adj.resize_with(root.0 + 1, || None);
        adj[root.0] = Some(Matrix::ones(1, 1));
        let mut params: HashMap<ParamId, Matrix> = HashMap::new();

        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad {
                self.propagate(node, &g, &mut adj, &mut params);
            }
            adj[idx] = Some(g);
        }
        Ok(Gradients { params, nodes: adj })
    }

    fn propagate(
        &self,
        node: &Node,
        g: &Matrix,
        adj: &mut [Option<Matrix>],
        params: &mut HashMap<ParamId, Matrix>,
    ) {
        let mut send = |v: Var, contrib: Matrix| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut adj[v.0] {
                Some(acc) => acc.add_assign(&contrib),
                slot @ None => *slot = Some(contrib),
            }
        };
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => match params.get_mut(id) {
                Some(acc) => acc.add_assign(g),
                None => {
                    params.insert(*id, g.clone());
                }
            },
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.grad(*a) {
                    // dA = G · Bᵀ
                    let bt = bv.transpose();
                    let mut out = vec![0.0; av.len()];
                    matmul_into(g.data(), bt.data(), &mut out, g.rows(), g.cols(), bt.cols());
                    send(*a, Matrix::from_parts(av.rows(), av.cols(), out));
                }
                if self.grad(*b) {
                    // dB = Aᵀ · G
                    let at = av.transpose();
                    let mut out = vec![0.0; bv.len()];
                    matmul_into(at.data(), g.data(), &mut out, at.rows(), at.cols(), g.cols());
                    send(*b, Matrix::from_parts(bv.rows(), bv.cols(), out));
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.scale(-1.0));
            }
            Op::Hadamard(a, b) => {
                if self.grad(*a) {
                    send(*a, g.hadamard(self.value(*b)).expect("shape checked"));
                }
                if self.grad(*b) {
                    send(*b, g.hadamard(self.value(*a)).expect("shape checked"));
                }
            }
            Op::AddRow(a, row) => {
                send(*a, g.clone());
                if self.grad(*row) {
                    let mut sums = vec![0.0; g.cols()];
                    for r in 0..g.rows() {
                        for (s, v) in sums.iter_mut().zip(g.row(r)) {
                            *s += v;
                        }
                    }
                    send(*row, Matrix::from_parts(1, g.cols(), sums));
                }
            }
            Op::Scale(a, c) => send(*a, g.scale(*c)),
            Op::AddScalar(a) => send(*a, g.clone()),
            Op::Activation(act, a) => {
                let y = &node.value;
                let local: Vec<f64> = match act {
                    Activation::Tanh if tanh_fault_enabled() => {
                        y.data().iter().map(|y| 1.0 - y).collect()
                    }
                    Activation::Tanh => y.data().iter().map(|y| 1.0 - y * y).collect(),
                    Activation::Sigmoid => y.data().iter().map(|y| y * (1.0 - y)).collect(),
                    Activation::Relu => y
                        .data()
                        .iter()
                        .map(|&y| if y > 0.0 { 1.0 } else { 0.0 })
                        .collect(),
                };
                let data = g.data().iter().zip(&local).map(|(g, l)| g * l).collect();
                send(*a, Matrix::from_parts(g.rows(), g.cols(), data));
            }
            Op::Transpose(a) => send(*a, g.transpose()),
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                send(*a, Matrix::filled(r, c, g.data()[0]));
            }
            Op::MeanRows(a) => {
                let (r, c) = self.shape(*a);
                let inv = 1.0 / r as f64;
                let row: Vec<f64> = g.data().iter().map(|v| v * inv).collect();
                let data = row.iter().copied().cycle().take(r * c).collect();
                send(*a, Matrix::from_parts(r, c, data));
            }
            Op::Mean(items) => {
                let share = g.scale(1.0 / items.len() as f64);
                for &v in items {
                    send(v, share.clone());
                }
            }
            Op::Row(a, i) => {
                let (r, c) = self.shape(*a);
                let mut m = Matrix::zeros(r, c);
                m.row_mut(*i).copy_from_slice(g.data());
                send(*a, m);
            }
            Op::StackRows(items) => {
                let cols = g.cols();
                let mut start = 0;
                for &v in items {
                    let rows = self.shape(v).0;
                    let data = g.data()[start * cols..(start + rows) * cols].to_vec();
                    start += rows;
                    send(v, Matrix::from_parts(rows, cols, data));
                }
            }
            Op::ConcatCols(items) => {
                let mut offset = 0;
                for &v in items {
                    let (rows, cols) = self.shape(v);
                    let mut data = Vec::with_capacity(rows * cols);
                    for r in 0..rows {
                        data.extend_from_slice(&g.row(r)[offset..offset + cols]);
                    }
                    offset += cols;
                    send(v, Matrix::from_parts(rows, cols, data));
                }
            }
            Op::Softmax(a) => {
                let y = node.value.data();
                let dot: f64 = g.data().iter().zip(y).map(|(g, y)| g * y).sum();
                let data = g.data().iter().zip(y).map(|(g, y)| y * (g - dot)).collect();
                send(*a, Matrix::from_parts(g.rows(), g.cols(), data));
            }
            Op::RowDistance(a, i, j) => {
                let d = node.value.data()[0];
                let (r, c) = self.shape(*a);
                let mut m = Matrix::zeros(r, c);
                if d > 0.0 && i != j {
                    let av = self.value(*a);
                    let scale = g.data()[0] / d;
                    for k in 0..c {
                        let diff = (av.get(*i, k) - av.get(*j, k)) * scale;
                        m.set(*i, k, diff);
                        m.set(*j, k, -diff);
                    }
                }
                send(*a, m);
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let n = labels.len() as f64;
                let scale = g.data()[0] / n;
                let mut d = probs.clone();
                for (r, &label) in labels.iter().enumerate() {
                    let row = d.row_mut(r);
                    row[label] -= 1.0;
                    row.iter_mut().for_each(|v| *v *= scale);
                }
                send(*logits, d);
            }
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
