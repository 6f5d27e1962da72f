//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use eyegaze::geometry::Point2;
use nalgebra::{DMatrix, DVector};

/// Dense epsilon-SVR dual solved by a log-barrier interior-point method.
///
/// Variables `z = (alpha, alpha*)`, objective
/// `1/2 (alpha - alpha*)^T K (alpha - alpha*) + eps sum(z) - y^T (alpha - alpha*)`,
/// constraints `sum(alpha - alpha*) = 0` and `0 <= z <= C`.
pub struct QpSolution {
    pub beta: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn qp_objective(k: &DMatrix<f64>, y: &[f64], eps: f64, z: &[f64]) -> f64 {
    let n = y.len();
    let beta = DVector::from_iterator(n, (0..n).map(|i| z[i] - z[i + n]));
    let quad = 0.5 * beta.dot(&(k * &beta));
    let lin: f64 = (0..n).map(|i| eps * (z[i] + z[i + n]) - y[i] * beta[i]).sum();
    quad + lin
}

pub fn solve_svr_qp(k: &DMatrix<f64>, y: &[f64], c: f64, eps: f64) -> QpSolution {
    let n = y.len();
    let m = 2 * n;
    let q = DMatrix::from_fn(m, m, |a, b| {
        let s = if (a < n) == (b < n) { 1.0 } else { -1.0 };
        s * k[(a % n, b % n)]
    });
    let p = DVector::from_iterator(m, (0..m).map(|t| if t < n { eps - y[t] } else { eps + y[t - n] }));
    let a = DVector::from_iterator(m, (0..m).map(|t| if t < n { 1.0 } else { -1.0 }));
    let mut z = DVector::from_element(m, c / 2.0);

    let barrier = |z: &DVector<f64>, t: f64| -> f64 {
        let f = 0.5 * z.dot(&(&q * z)) + p.dot(z);
        t * f - z.iter().map(|&v| v.ln() + (c - v).ln()).sum::<f64>()
    };

    let mut t = 1.0;
    while (m as f64) / t > 1e-13 {
        for _ in 0..200 {
            let grad = (&q * &z + &p) * t
                - DVector::from_iterator(m, z.iter().map(|&v| 1.0 / v - 1.0 / (c - v)));
            let mut h = &q * t;
            for r in 0..m {
                h[(r, r)] += 1.0 / (z[r] * z[r]) + 1.0 / ((c - z[r]) * (c - z[r]));
            }
            // Schur complement on the single equality; Cholesky copes with the
            // wildly different diagonal scales far better than LU on the full system
            let chol = h.cholesky().expect("barrier Hessian not positive definite");
            let hg = chol.solve(&grad);
            let ha = chol.solve(&a);
            let aha = a.dot(&ha);
            let project = |v: DVector<f64>, target: f64| {
                let nu = (a.dot(&v) - target) / aha;
                v - &ha * nu
            };
            let mut dz = project(-&hg, -a.dot(&z));
            // one refinement pass on the equality residual
            let resid = a.dot(&(&z + &dz));
            dz -= &ha * (resid / aha);
            let decrement = -grad.dot(&dz);
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let mut step = 1.0f64;
            for (&zi, &di) in z.iter().zip(dz.iter()) {
                if di < 0.0 {
                    step = step.min(-0.99 * zi / di);
                } else if di > 0.0 {
                    step = step.min(0.99 * (c - zi) / di);
                }
            }
            let f0 = barrier(&z, t);
            while barrier(&(&z + &dz * step), t) > f0 - 0.25 * step * decrement && step > 1e-16 {
                step *= 0.5;
            }
            z += &dz * step;
        }
        t *= 8.0;
    }

    let zs: Vec<f64> = z.iter().copied().collect();
    let beta: Vec<f64> = (0..n).map(|i| zs[i] - zs[i + n]).collect();
    let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * beta[j]).sum()).collect();
    // bias from variables well inside the box; otherwise the midpoint of the feasible interval
    let margin = 1e-6 * c;
    let mut free = Vec::new();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let (al, au) = (zs[i], zs[i + n]);
        if al > margin && al < c - margin {
            free.push(y[i] - eps - kb[i]);
        }
        if au > margin && au < c - margin {
            free.push(y[i] + eps - kb[i]);
        }
        // with f = kb + b: alpha = 0 needs y - f <= eps, alpha = C needs y - f >= eps,
        // and mirrored for alpha*
        if al <= margin {
            lo = lo.max(y[i] - eps - kb[i]);
        } else if al >= c - margin {
            hi = hi.min(y[i] - eps - kb[i]);
        }
        if au <= margin {
            hi = hi.min(y[i] + eps - kb[i]);
        } else if au >= c - margin {
            lo = lo.max(y[i] + eps - kb[i]);
        }
    }
    let bias = if free.is_empty() {
        (lo + hi) / 2.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    QpSolution {
        objective: qp_objective(k, y, eps, &zs),
        beta,
        bias,
    }
}

/// Maximal pairwise KKT violation of an epsilon-SVR dual point, computed
/// from scratch: `max_{t in up} -s_t g_t - min_{t in low} -s_t g_t`.
pub fn kkt_violation(k: &DMatrix<f64>, y: &[f64], c: f64, eps: f64, z: &[f64]) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| z[i] - z[i + n]).collect();
    let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * beta[j]).sum()).collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..2 * n {
        let i = t % n;
        let (s, g) = if t < n { (1.0, kb[i] + eps - y[i]) } else { (-1.0, -kb[i] + eps + y[i]) };
        let v = -s * g;
        let in_up = (s > 0.0 && z[t] < c) || (s < 0.0 && z[t] > 0.0);
        let in_low = (s > 0.0 && z[t] > 0.0) || (s < 0.0 && z[t] < c);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

/// Rate of errors at or below `t`, by counting.
pub fn counting_rate(errors: &[f64], t: f64) -> f64 {
    let mut hits = 0usize;
    for &e in errors {
        if e <= t {
            hits += 1;
        }
    }
    hits as f64 / errors.len() as f64
}

/// Mean distance from `pred` to `n` points spread over `poly` by arc length.
pub fn dense_polyline_error(pred: &[Point2], poly: &[Point2], interocular: f64, n: usize) -> f64 {
    let lens: Vec<f64> = poly.windows(2).map(|s| s[0].distance(s[1])).collect();
    let total: f64 = lens.iter().sum();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = total * i as f64 / (n - 1) as f64;
        let mut seg = 0;
        while seg + 1 < lens.len() && s > lens[seg] {
            s -= lens[seg];
            seg += 1;
        }
        let t = if lens[seg] > 0.0 { (s / lens[seg]).min(1.0) } else { 0.0 };
        samples.push(poly[seg] + (poly[seg + 1] - poly[seg]) * t);
    }
    pred.iter()
        .map(|p| samples.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / pred.len() as f64
        / interocular
}

use eyegaze::svr::{Kernel, SvrParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gram(x: &[Vec<f64>], kernel: Kernel) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| kernel_value(&x[i], &x[j], kernel))
}

pub fn kernel_value(a: &[f64], b: &[f64], kernel: Kernel) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
        Kernel::Rbf { gamma } => (-gamma * a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>()).exp(),
    }
}

pub struct SvrInstance {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub params: SvrParams,
}

/// Random small regression problem: 4..=20 points in 1..=5 dimensions,
/// alternating RBF and linear kernels, unstandardized.
pub fn svr_instance(seed: u64) -> SvrInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=20);
    let d = rng.random_range(1..=5);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = x
        .iter()
        .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().sin() + rng.random_range(-0.1..0.1))
        .collect();
    let kernel = if seed.is_multiple_of(2) {
        Kernel::Rbf { gamma: rng.random_range(0.2..2.0) }
    } else {
        Kernel::Linear
    };
    let params = SvrParams {
        c: [0.1, 1.0, 10.0][rng.random_range(0..3)],
        epsilon: rng.random_range(0.0..0.1),
        kernel,
        standardize: false,
        ..SvrParams::default()
    };
    SvrInstance { x, y, params }
}

/// Worst objective and prediction gaps between the library SMO at `tol`
/// and the interior-point reference, plus the worst KKT violation, over
/// instances `seeds`.
pub fn svr_oracle_gaps(seeds: std::ops::Range<u64>, tol: f64) -> (f64, f64, f64) {
    let (mut obj, mut pred, mut kkt) = (0.0f64, 0.0f64, 0.0f64);
    for seed in seeds {
        let inst = svr_instance(seed);
        let params = SvrParams { tol, ..inst.params };
        let k = gram(&inst.x, params.kernel);
        let (model, info) = eyegaze::svr::train_detailed(&inst.x, &inst.y, &params).unwrap();
        let oracle = solve_svr_qp(&k, &inst.y, params.c, params.epsilon);
        obj = obj.max((qp_objective(&k, &inst.y, params.epsilon, &info.alpha) - oracle.objective).abs());
        kkt = kkt.max(kkt_violation(&k, &inst.y, params.c, params.epsilon, &info.alpha));
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = inst.x[0].len();
        for _ in 0..20 {
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.2..1.2)).collect();
            let reference: f64 = inst
                .x
                .iter()
                .zip(&oracle.beta)
                .map(|(xj, b)| b * kernel_value(xj, &q, params.kernel))
                .sum::<f64>()
                + oracle.bias;
            pred = pred.max((model.predict(&q).unwrap() - reference).abs());
        }
    }
    (obj, pred, kkt)
}
