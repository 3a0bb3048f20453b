use std::collections::HashMap;

use crate::diffmath::{Matrix, Param, ParamId};

pub const DEFAULT_LR: f64 = 3e-4;
pub const DEFAULT_DECAY_EVERY: usize = 200;

/// Step decay: `base · 0.1^⌊epoch / every⌋`.
pub fn lr_schedule(epoch: usize, base: f64, every: usize) -> f64 {
    let drops = (epoch / every.max(1)) as i32;
    base * 0.1f64.powi(drops)
}

#[derive(Clone, Debug)]
struct Moments {
    m: Matrix,
    v: Matrix,
}

/// Adam with bias correction; one moment pair per parameter id.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    state: HashMap<ParamId, Moments>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            state: HashMap::new(),
        }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Applies the accumulated gradients of `params`, then clears them.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for p in params {
            let (rows, cols) = p.shape();
            let st = self.state.entry(p.id()).or_insert_with(|| Moments {
                m: Matrix::zeros(rows, cols),
                v: Matrix::zeros(rows, cols),
            });
            let (value, grad) = p.value_and_grad_mut();
            let moments = st.m.data_mut().iter_mut().zip(st.v.data_mut());
            for ((w, g), (m, v)) in value.data_mut().iter_mut().zip(grad.data()).zip(moments) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            grad.data_mut().fill(0.0);
        }
    }
}
