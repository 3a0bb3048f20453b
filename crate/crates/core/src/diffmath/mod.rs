//! Dense matrices, learnable parameters and a reverse-mode gradient tape.

mod gradcheck;
mod matrix;
mod param;
mod tape;

pub use gradcheck::{finite_diff_check, finite_diff_report, GradCheckReport, DEFAULT_STEP};
pub use matrix::Matrix;
pub use param::{Param, ParamId, Parameterized};
pub(crate) use param::{prefixed, prefixed_mut};
pub use tape::{set_tanh_backward_fault, sigmoid, softmax_vector, Activation, Gradients, Tape, Var};
pub(crate) use tape::euclidean;

use rand::Rng;

/// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn init_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Param {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Param::new(Matrix::from_parts(rows, cols, data))
}
