use super::param::Parameterized;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Floor on the relative-error denominator.
const DENOMINATOR_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `name[index]` of the worst entry, empty when nothing was checked.
    pub worst_entry: String,
    /// Tape and central-difference gradients at the worst entry.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub entries_checked: usize,
}

/// Compares the tape gradient of `loss_fn` against central differences for
/// every entry of every parameter of `model` and returns the worst relative
/// error.
pub fn finite_diff_check<M, F>(model: &mut M, loss_fn: F, step: f64) -> Result<f64>
where
    M: Parameterized,
    F: FnMut(&M, &mut Tape) -> Result<Var>,
{
    finite_diff_report(model, loss_fn, step).map(|r| r.max_rel_error)
}

pub fn finite_diff_report<M, F>(model: &mut M, mut loss_fn: F, step: f64) -> Result<GradCheckReport>
where
    M: Parameterized,
    F: FnMut(&M, &mut Tape) -> Result<Var>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::argument(format!("finite-difference step must be > 0, got {step}")));
    }
    let mut tape = Tape::new();
    let root = loss_fn(model, &mut tape)?;
    let grads = tape.backward(root)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .params()
        .into_iter()
        .map(|(name, p)| {
            let g = grads
                .param(p.id())
                .map(|g| g.data().to_vec())
                .unwrap_or_else(|| vec![0.0; p.len()]);
            (name, g)
        })
        .collect();
    drop(tape);

    let mut eval = |model: &M| -> Result<f64> {
        let mut tape = Tape::new();
        let root = loss_fn(model, &mut tape)?;
        let v = tape.scalar(root);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("non-finite loss {v} at perturbed point")));
        }
        Ok(v)
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_entry: String::new(),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        entries_checked: 0,
    };
    for (pi, (name, grad)) in analytic.iter().enumerate() {
        for (k, &a) in grad.iter().enumerate() {
            let orig = set_entry(model, pi, k, None);
            set_entry(model, pi, k, Some(orig + step));
            let plus = eval(model);
            set_entry(model, pi, k, Some(orig - step));
            let minus = eval(model);
            set_entry(model, pi, k, Some(orig));
            let numeric = (plus? - minus?) / (2.0 * step);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
            report.entries_checked += 1;
            if rel > report.max_rel_error || report.worst_entry.is_empty() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst_entry = format!("{name}[{k}]");
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Reads entry `k` of param `pi`, optionally overwriting it; returns the old value.
fn set_entry<M: Parameterized>(model: &mut M, pi: usize, k: usize, value: Option<f64>) -> f64 {
    let mut params = model.params_mut();
    let slot = &mut params[pi].1.value_mut()[k];
    let old = *slot;
    if let Some(v) = value {
        *slot = v;
    }
    old
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::{set_tanh_backward_fault, Matrix, Param};

    struct Vector(Param);

    impl Parameterized for Vector {
        fn params(&self) -> Vec<(String, &Param)> {
            vec![("w".into(), &self.0)]
        }
        fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
            vec![("w".into(), &mut self.0)]
        }
    }

    #[test]
    fn linear_loss_is_exact() {
        let x = Matrix::column_vector(vec![0.5, -1.25, 2.0]).unwrap();
        let mut m = Vector(Param::new(Matrix::row_vector(vec![0.1, 0.2, -0.3]).unwrap()));
        let err = finite_diff_check(
            &mut m,
            |m, t| {
                let w = t.param(&m.0);
                let x = t.constant(x.clone());
                t.matmul(w, x)
            },
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    fn tanh_composite(m: &Vector, t: &mut Tape) -> Result<Var> {
        let w = t.param(&m.0);
        let h = t.tanh(w);
        let x = t.constant(Matrix::column_vector(vec![1.5, -0.5, 0.75]).unwrap());
        t.matmul(h, x)
    }

    #[test]
    fn tanh_composite_matches_central_differences() {
        let mut m = Vector(Param::new(Matrix::row_vector(vec![0.4, -0.9, 1.1]).unwrap()));
        let err = finite_diff_check(&mut m, tanh_composite, DEFAULT_STEP).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn corrupted_backward_is_detected() {
        let mut m = Vector(Param::new(Matrix::row_vector(vec![0.4, -0.9, 1.1]).unwrap()));
        set_tanh_backward_fault(true);
        let err = finite_diff_check(&mut m, tanh_composite, DEFAULT_STEP);
        set_tanh_backward_fault(false);
        assert!(err.unwrap() > 1e-2);
    }

    #[test]
    fn non_finite_loss_is_an_evaluation_error() {
        let mut m = Vector(Param::new(Matrix::row_vector(vec![0.0]).unwrap()));
        let res = finite_diff_check(
            &mut m,
            |m, t| {
                let w = t.param(&m.0);
                // finite at the base point, infinite once perturbed
                let s = t.sum(w);
                let v = t.scalar(s);
                Ok(if v != 0.0 { t.scalar_constant(f64::INFINITY) } else { s })
            },
            DEFAULT_STEP,
        );
        assert!(matches!(res, Err(Error::Evaluation(_))));
    }
}
