use std::sync::atomic::{AtomicU64, Ordering};

use super::matrix::Matrix;
use super::tape::Gradients;
use crate::error::{Error, Result};

static NEXT_PARAM_ID: AtomicU64 = AtomicU64::new(1);

/// Process-unique handle that links a [`Param`] to the tape leaves it spawns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(u64);

/// A learnable matrix plus its gradient accumulator.
///
/// Cloning keeps the id, so a clone receives the same gradients as the
/// original when accumulated from a shared [`Gradients`].
#[derive(Clone, Debug)]
pub struct Param {
    id: ParamId,
    value: Matrix,
    grad: Matrix,
}

impl Param {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Param {
            id: ParamId(NEXT_PARAM_ID.fetch_add(1, Ordering::Relaxed)),
            value,
            grad: Matrix::zeros(r, c),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Matrix::zeros(rows, cols))
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn value(&self) -> &Matrix {
        &self.value
    }

    /// Mutable access to the entries; the shape is fixed for the lifetime of the param.
    pub fn value_mut(&mut self) -> &mut [f64] {
        self.value.data_mut()
    }

    pub fn set_value(&mut self, value: Matrix) -> Result<()> {
        if value.shape() != self.value.shape() {
            return Err(Error::dimension("set_value", self.value.shape(), value.shape()));
        }
        self.value = value;
        Ok(())
    }

    pub fn grad(&self) -> &Matrix {
        &self.grad
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }

    /// Adds this param's share of `grads`; a no-op if the param was not on the tape.
    pub fn accumulate(&mut self, grads: &Gradients) {
        if let Some(g) = grads.param(self.id) {
            self.grad.add_assign(g);
        }
    }

    pub(crate) fn value_and_grad_mut(&mut self) -> (&mut Matrix, &mut Matrix) {
        (&mut self.value, &mut self.grad)
    }
}

/// Anything that owns learnable parameters.
///
/// Names are stable `module/name` paths and are used as checkpoint keys.
pub trait Parameterized {
    fn params(&self) -> Vec<(String, &Param)>;

    fn params_mut(&mut self) -> Vec<(String, &mut Param)>;

    /// Exact number of scalar learnables.
    fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }

    fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }

    fn accumulate(&mut self, grads: &Gradients) {
        for (_, p) in self.params_mut() {
            p.accumulate(grads);
        }
    }
}

pub(crate) fn prefixed<'a>(prefix: &str, items: Vec<(String, &'a Param)>) -> Vec<(String, &'a Param)> {
    items
        .into_iter()
        .map(|(n, p)| (format!("{prefix}/{n}"), p))
        .collect()
}

pub(crate) fn prefixed_mut<'a>(
    prefix: &str,
    items: Vec<(String, &'a mut Param)>,
) -> Vec<(String, &'a mut Param)> {
    items
        .into_iter()
        .map(|(n, p)| (format!("{prefix}/{n}"), p))
        .collect()
}
