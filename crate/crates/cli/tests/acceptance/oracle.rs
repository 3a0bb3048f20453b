//! Straight-line reference implementations, written against plain nested
//! vectors so they share no code with the library's matrix kernels.

use posergcn::cells::CellParams;
use posergcn::diffmath::{Matrix, Param};

pub type M = Vec<Vec<f64>>;

pub fn from(m: &Matrix) -> M {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn p(param: &Param) -> M {
    from(param.value())
}

pub fn zeros(rows: usize, cols: usize) -> M {
    vec![vec![0.0; cols]; rows]
}

pub fn mm(a: &M, b: &M) -> M {
    let (n, k, c) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k, "oracle matmul shape");
    let mut out = zeros(n, c);
    for i in 0..n {
        for j in 0..c {
            let mut s = 0.0;
            for q in 0..k {
                s += a[i][q] * b[q][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn zip(a: &M, b: &M, f: impl Fn(f64, f64) -> f64) -> M {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| f(x, y)).collect())
        .collect()
}

pub fn map(a: &M, f: impl Fn(f64) -> f64) -> M {
    a.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
}

fn bias(a: &M, b: &M) -> M {
    a.iter().map(|r| r.iter().zip(&b[0]).map(|(x, y)| x + y).collect()).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn max_diff(a: &M, b: &Matrix) -> f64 {
    assert_eq!((a.len(), a[0].len()), b.shape(), "oracle comparison shape");
    let mut worst: f64 = 0.0;
    for (r, row) in a.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            worst = worst.max((v - b.get(r, c)).abs());
        }
    }
    worst
}

/// One LSTM update from precomputed input terms, `f, i, o, g` order.
fn lstm(inputs: [M; 4], h: &M, c: &M, u: &[Param; 4], b: &[Param; 4]) -> (M, M) {
    let gate = |k: usize, act: fn(f64) -> f64| {
        let pre = bias(&zip(&inputs[k], &mm(h, &p(&u[k])), |x, y| x + y), &p(&b[k]));
        map(&pre, act)
    };
    let (f, i, o, g) = (gate(0, sigmoid), gate(1, sigmoid), gate(2, sigmoid), gate(3, f64::tanh));
    let c_next = zip(&zip(&f, c, |x, y| x * y), &zip(&i, &g, |x, y| x * y), |x, y| x + y);
    let h_next = zip(&o, &map(&c_next, f64::tanh), |x, y| x * y);
    (h_next, c_next)
}

/// Next `(h, c)` of any cell from the current state, one frame and Â.
pub fn step(cell: &CellParams, h: &M, c: &M, x0: &M, a: &M) -> (M, M) {
    match cell {
        CellParams::Rgcn(q) => {
            let mut prop = x0.clone();
            for _ in 0..q.w_x.len() {
                prop = mm(a, &prop);
            }
            for w in &q.w_x {
                prop = mm(&prop, &p(w));
            }
            let pre = bias(&zip(&mm(h, &p(&q.w_h)), &map(&prop, relu), |x, y| x + y), &p(&q.b));
            (map(&pre, f64::tanh), c.clone())
        }
        CellParams::Lgcn(q) => {
            let prop = mm(a, x0);
            let inputs = std::array::from_fn(|k| map(&mm(&prop, &p(&q.w[k])), relu));
            lstm(inputs, h, c, &q.u, &q.b)
        }
        CellParams::GcnRnn(q) => {
            let x = map(&mm(&mm(a, x0), &p(&q.w_g)), relu);
            let rows = (0..x.len())
                .map(|i| {
                    let hi = vec![h[i].clone()];
                    let xi = vec![x[i].clone()];
                    let pre = bias(&zip(&mm(&hi, &p(&q.w_h)), &mm(&xi, &p(&q.w_x)), |s, t| s + t), &p(&q.b));
                    map(&pre, f64::tanh).remove(0)
                })
                .collect();
            (rows, c.clone())
        }
        CellParams::GcnLstm(q) => {
            let x = map(&mm(&mm(a, x0), &p(&q.w_g)), relu);
            let (mut hs, mut cs) = (Vec::new(), Vec::new());
            for i in 0..x.len() {
                let xi = vec![x[i].clone()];
                let inputs = std::array::from_fn(|k| mm(&xi, &p(&q.w[k])));
                let (hn, cn) = lstm(inputs, &vec![h[i].clone()], &vec![c[i].clone()], &q.u, &q.b);
                hs.push(hn[0].clone());
                cs.push(cn[0].clone());
            }
            (hs, cs)
        }
    }
}

/// Hidden states of every frame, starting from zero.
pub fn unroll(cell: &CellParams, frames: &[M], a: &M) -> Vec<M> {
    let n = cell.hidden();
    let (mut h, mut c) = (zeros(a.len(), n), zeros(a.len(), n));
    frames
        .iter()
        .map(|x0| {
            (h, c) = step(cell, &h, &c, x0, a);
            h.clone()
        })
        .collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Triplet loss by enumerating every (anchor, positive, negative) triple:
/// each anchor contributes its worst hinge. Returns the loss and the number
/// of anchors without a positive.
pub fn triplet_all_triples(features: &M, labels: &[usize], margin: f64) -> (f64, usize) {
    let n = labels.len();
    let (mut total, mut skipped) = (0.0, 0);
    for a in 0..n {
        let mut worst: Option<f64> = None;
        for pos in (0..n).filter(|&j| j != a && labels[j] == labels[a]) {
            for neg in (0..n).filter(|&j| labels[j] != labels[a]) {
                let hinge = relu(distance(&features[a], &features[pos]) - distance(&features[a], &features[neg]) + margin);
                worst = Some(worst.map_or(hinge, |w| w.max(hinge)));
            }
        }
        match worst {
            Some(w) => total += w,
            None => skipped += 1,
        }
    }
    (total, skipped)
}

/// Mean cross-entropy of `fused · weight + bias` at the true classes.
pub fn cross_entropy(fused: &M, weight: &M, b: &M, labels: &[usize]) -> f64 {
    let logits = bias(&mm(fused, weight), b);
    let mut acc = 0.0;
    for (z, &y) in logits.iter().zip(labels) {
        let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        acc += lse - z[y];
    }
    acc / labels.len() as f64
}
