//! Sequential minimal optimization for the epsilon-SVR dual.
//!
//! The dual is posed over `2n` variables `a = (alpha, alpha*)`:
//!
//! ```text
//! min  1/2 a^T Q a + p^T a
//! s.t. sum_t s_t a_t = 0,  0 <= a_t <= C
//! ```
//!
//! with signs `s_t = +1` for `t < n` and `-1` otherwise,
//! `Q_ts = s_t s_s K(x_t mod n, x_s mod n)`, and
//! `p_t = eps - y_t` / `eps + y_t` for the two halves.
//! Each iteration pairs the maximal KKT violator with the partner giving
//! the largest second-order decrease of the objective, then updates the
//! pair analytically.

use std::collections::VecDeque;

use super::{Kernel, SvrParams};

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

/// Raw output of the dual solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveInfo {
    /// `2n` dual variables: `alpha` then `alpha*`.
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective `1/2 a^T Q a + p^T a` at the solution.
    pub objective: f64,
    /// Maximal KKT violation at the solution.
    pub violation: f64,
    pub iterations: usize,
}

/// Kernel rows computed on demand with FIFO eviction.
struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel) -> Self {
        let n = x.len();
        let capacity = (CACHE_BYTES / (8 * n.max(1))).clamp(2, n.max(2));
        KernelRows {
            x,
            kernel,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            if self.order.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows[old] = None;
                }
            }
            let xi = &self.x[i];
            let row = self.x.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
            self.rows[i] = Some(row);
            self.order.push_back(i);
        }
        self.rows[i].as_deref().unwrap()
    }
}

fn sign(t: usize, n: usize) -> f64 {
    if t < n {
        1.0
    } else {
        -1.0
    }
}

fn in_up(a: f64, s: f64, c: f64) -> bool {
    (s > 0.0 && a < c) || (s < 0.0 && a > 0.0)
}

fn in_low(a: f64, s: f64, c: f64) -> bool {
    (s > 0.0 && a > 0.0) || (s < 0.0 && a < c)
}

/// Maximal violation `max_{I_up} -s G - min_{I_low} -s G` together with
/// the arg-max in `I_up` (lowest index on ties). `None` when either set is
/// empty.
fn max_violation(alpha: &[f64], grad: &[f64], n: usize, c: f64) -> Option<(usize, f64)> {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let mut best_i = None;
    for t in 0..2 * n {
        let s = sign(t, n);
        let v = -s * grad[t];
        if in_up(alpha[t], s, c) && v > gmax {
            gmax = v;
            best_i = Some(t);
        }
        if in_low(alpha[t], s, c) && v < gmin {
            gmin = v;
        }
    }
    if gmin == f64::INFINITY {
        return None;
    }
    Some((best_i?, gmax - gmin))
}

pub(crate) fn kkt_violation(alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let n = alpha.len() / 2;
    max_violation(alpha, grad, n, c).map_or(0.0, |(_, v)| v.max(0.0))
}

fn bias_from(alpha: &[f64], grad: &[f64], n: usize, c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..2 * n {
        let s = sign(t, n);
        let yg = s * grad[t];
        if alpha[t] >= c {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    -rho
}

pub(crate) fn solve(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> SolveInfo {
    let n = x.len();
    let c = params.c;
    let p: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();
    let mut alpha = vec![0.0; 2 * n];
    let mut grad = p.clone();
    let mut kernel = KernelRows::new(x, params.kernel);
    let diag: Vec<f64> = x.iter().map(|xi| params.kernel.eval(xi, xi)).collect();

    let mut iterations = 0;
    while iterations < params.max_iter {
        let Some((i, violation)) = max_violation(&alpha, &grad, n, c) else {
            break;
        };
        if violation < params.tol {
            break;
        }
        iterations += 1;
        let si = sign(i, n);
        let bi = i % n;
        let gmax = -si * grad[i];
        let ki: Vec<f64> = kernel.row(bi).to_vec();

        let mut j = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for t in 0..2 * n {
            let st = sign(t, n);
            if !in_low(alpha[t], st, c) {
                continue;
            }
            let b = gmax + st * grad[t];
            if b <= 0.0 {
                continue;
            }
            let bt = t % n;
            let mut a = diag[bi] + diag[bt] - 2.0 * ki[bt];
            if a <= 0.0 {
                a = TAU;
            }
            let gain = b * b / a;
            if gain > best_gain {
                best_gain = gain;
                j = t;
            }
        }
        let sj = sign(j, n);
        let bj = j % n;
        let qii = diag[bi];
        let qjj = diag[bj];
        let qij = si * sj * ki[bj];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if si != sj {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let di = ai - old_i;
        let dj = aj - old_j;
        let kj = kernel.row(bj);
        for t in 0..2 * n {
            let st = sign(t, n);
            let b = t % n;
            grad[t] += st * (si * ki[b] * di + sj * kj[b] * dj);
        }
    }

    let objective = alpha
        .iter()
        .zip(&grad)
        .zip(&p)
        .map(|((a, g), p)| a * (g + p))
        .sum::<f64>()
        / 2.0;
    SolveInfo {
        bias: bias_from(&alpha, &grad, n, c),
        violation: kkt_violation(&alpha, &grad, c),
        objective,
        alpha,
        iterations,
    }
}
