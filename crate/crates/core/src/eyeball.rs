//! Two-sphere eyeball model: forward projection of the iris landmarks,
//! least-squares fitting of gaze, eye roll and angular iris radius, and
//! per-person optical/visual axis calibration.
//!
//! The forward model is orthographic in pixel units. For gaze `(theta, phi)`
//! and eyeball radius `r` the iris center lands at
//! `(u_c - r cos(theta) sin(phi), v_c + r sin(theta))`. Edge landmark `j`
//! (`j = 1..8`) uses the perturbed angles
//! `theta + delta sin(pi j / 4 + gamma)` and `phi + delta cos(pi j / 4 + gamma)`.

use nalgebra::{Matrix4, Vector4};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{invalid, Error, Result};
use crate::geometry::{GazeAngles, Point2};

pub const EDGE_COUNT: usize = 8;
/// Iris center plus 8 edges, two coordinates each.
pub const RESIDUAL_COUNT: usize = 2 * (EDGE_COUNT + 1);

const PITCH_LIMIT: f64 = FRAC_PI_2 - 1e-6;

/// Eyeball center and projected radius, both in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeGeometry {
    pub center: Point2,
    pub radius: f64,
}

/// Detected landmarks that drive a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeballObservation {
    pub eyeball_center: Point2,
    pub radius: f64,
    pub iris_center: Point2,
    /// Ordered by template index `j = 1..8`.
    pub iris_edges: [Point2; EDGE_COUNT],
}

impl EyeballObservation {
    pub fn geometry(&self) -> EyeGeometry {
        EyeGeometry {
            center: self.eyeball_center,
            radius: self.radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("eyeball radius must be positive, got {}", self.radius)));
        }
        let finite = self.eyeball_center.is_finite()
            && self.iris_center.is_finite()
            && self.iris_edges.iter().all(|p| p.is_finite());
        if !finite {
            return Err(Error::NonFinite("eyeball observation"));
        }
        Ok(())
    }

    /// Observed points in fitting order: iris center first, then edges.
    fn points(&self) -> [Point2; EDGE_COUNT + 1] {
        let mut pts = [self.iris_center; EDGE_COUNT + 1];
        pts[1..].copy_from_slice(&self.iris_edges);
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeballState {
    pub gaze: GazeAngles,
    /// Template roll offset `gamma`.
    pub roll: f64,
    /// Angular iris radius `delta`.
    pub iris_radius: f64,
}

impl EyeballState {
    pub fn new(gaze: GazeAngles, roll: f64, iris_radius: f64) -> Result<Self> {
        if !roll.is_finite() {
            return Err(Error::NonFinite("roll"));
        }
        if !(iris_radius > 0.0 && iris_radius < FRAC_PI_2) {
            return Err(invalid(format!("angular iris radius {iris_radius} outside (0, pi/2)")));
        }
        Ok(EyeballState { gaze, roll, iris_radius })
    }

    fn params(&self) -> [f64; 4] {
        [self.gaze.pitch(), self.gaze.yaw(), self.roll, self.iris_radius]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub state: EyeballState,
    /// Sum of squared pixel residuals at `state`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    LevenbergMarquardt,
    ConjugateGradient,
}

impl std::str::FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lm" => Ok(Solver::LevenbergMarquardt),
            "cg" => Ok(Solver::ConjugateGradient),
            other => Err(invalid(format!("unknown solver `{other}` (expected lm or cg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    /// Central differences; kept for testing the analytic path.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub solver: Solver,
    pub max_iters: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub jacobian: JacobianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver: Solver::LevenbergMarquardt,
            max_iters: 200,
            tol_grad: 1e-10,
            tol_step: 1e-12,
            delta_min: 0.01,
            delta_max: 1.2,
            jacobian: JacobianMode::Analytic,
        }
    }
}

impl SolverConfig {
    pub fn with_solver(solver: Solver) -> Self {
        SolverConfig {
            solver,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_min > 0.0 && self.delta_min < self.delta_max && self.delta_max < FRAC_PI_2) {
            return Err(invalid("delta bounds must satisfy 0 < delta_min < delta_max < pi/2"));
        }
        if !(self.tol_grad >= 0.0 && self.tol_step >= 0.0) {
            return Err(invalid("tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// Person-specific offset between the optical and visual axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PersonCalibration {
    pub d_pitch: f64,
    pub d_yaw: f64,
}

fn template_angle(j: usize, roll: f64) -> f64 {
    FRAC_PI_4 * j as f64 + roll
}

/// Offsets from the eyeball center on a unit sphere, iris center first.
fn unit_offsets(p: &[f64; 4]) -> [(f64, f64); EDGE_COUNT + 1] {
    let [theta, phi, gamma, delta] = *p;
    let mut out = [(0.0, 0.0); EDGE_COUNT + 1];
    out[0] = (-theta.cos() * phi.sin(), theta.sin());
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        let (sa, ca) = template_angle(j, gamma).sin_cos();
        let t = theta + delta * sa;
        let f = phi + delta * ca;
        *slot = (-t.cos() * f.sin(), t.sin());
    }
    out
}

/// Jacobian of the unit-sphere offsets with respect to `(theta, phi, gamma, delta)`,
/// rows ordered `u_0, v_0, u_1, v_1, ...`.
fn unit_jacobian(p: &[f64; 4]) -> [[f64; 4]; RESIDUAL_COUNT] {
    let [theta, phi, gamma, delta] = *p;
    let mut jac = [[0.0; 4]; RESIDUAL_COUNT];
    let (st, ct) = theta.sin_cos();
    let (sf, cf) = phi.sin_cos();
    jac[0] = [st * sf, -ct * cf, 0.0, 0.0];
    jac[1] = [ct, 0.0, 0.0, 0.0];
    for j in 1..=EDGE_COUNT {
        let (sa, ca) = template_angle(j, gamma).sin_cos();
        let (st, ct) = (theta + delta * sa).sin_cos();
        let (sf, cf) = (phi + delta * ca).sin_cos();
        // chain through theta' and phi'
        let du_dt = st * sf;
        let du_df = -ct * cf;
        let dv_dt = ct;
        let dt = [1.0, 0.0, delta * ca, sa];
        let df = [0.0, 1.0, -delta * sa, ca];
        for k in 0..4 {
            jac[2 * j][k] = du_dt * dt[k] + du_df * df[k];
            jac[2 * j + 1][k] = dv_dt * dt[k];
        }
    }
    jac
}

pub fn project_iris_center(state: &EyeballState, geom: EyeGeometry) -> Point2 {
    let (du, dv) = unit_offsets(&state.params())[0];
    Point2::new(geom.center.u + geom.radius * du, geom.center.v + geom.radius * dv)
}

pub fn project_iris_edges(state: &EyeballState, geom: EyeGeometry) -> [Point2; EDGE_COUNT] {
    let offs = unit_offsets(&state.params());
    let mut out = [Point2::default(); EDGE_COUNT];
    for (slot, &(du, dv)) in out.iter_mut().zip(&offs[1..]) {
        *slot = Point2::new(geom.center.u + geom.radius * du, geom.center.v + geom.radius * dv);
    }
    out
}

/// Builds the observation the forward model predicts for `state`.
pub fn render_observation(state: &EyeballState, geom: EyeGeometry) -> EyeballObservation {
    EyeballObservation {
        eyeball_center: geom.center,
        radius: geom.radius,
        iris_center: project_iris_center(state, geom),
        iris_edges: project_iris_edges(state, geom),
    }
}

/// Analytic Jacobian of the projected pixel coordinates (rows `u_0, v_0,
/// u_1, v_1, ...`) with respect to `(theta, phi, gamma, delta)`.
pub fn forward_jacobian(state: &EyeballState, geom: EyeGeometry) -> [[f64; 4]; RESIDUAL_COUNT] {
    let mut jac = unit_jacobian(&state.params());
    jac.iter_mut().flatten().for_each(|e| *e *= geom.radius);
    jac
}

/// Central-difference Jacobian of the projected pixel coordinates.
pub fn forward_jacobian_fd(state: &EyeballState, geom: EyeGeometry, step: f64) -> [[f64; 4]; RESIDUAL_COUNT] {
    let mut jac = unit_jacobian_fd(&state.params(), step);
    jac.iter_mut().flatten().for_each(|e| *e *= geom.radius);
    jac
}

fn unit_jacobian_fd(p: &[f64; 4], step: f64) -> [[f64; 4]; RESIDUAL_COUNT] {
    let mut jac = [[0.0; 4]; RESIDUAL_COUNT];
    for k in 0..4 {
        let mut hi = *p;
        let mut lo = *p;
        hi[k] += step;
        lo[k] -= step;
        let (a, b) = (unit_offsets(&hi), unit_offsets(&lo));
        for j in 0..=EDGE_COUNT {
            jac[2 * j][k] = (a[j].0 - b[j].0) / (2.0 * step);
            jac[2 * j + 1][k] = (a[j].1 - b[j].1) / (2.0 * step);
        }
    }
    jac
}

/// Sum of squared pixel distances between observed and projected iris
/// landmarks (iris center and all 8 edges, uniformly weighted).
pub fn residual(state: &EyeballState, obs: &EyeballObservation) -> f64 {
    let geom = obs.geometry();
    let c = project_iris_center(state, geom);
    let edges = project_iris_edges(state, geom);
    std::iter::once((c, obs.iris_center))
        .chain(edges.iter().copied().zip(obs.iris_edges.iter().copied()))
        .map(|(p, o)| {
            let d = p - o;
            d.u * d.u + d.v * d.v
        })
        .sum()
}

/// Least-squares problem in unit-radius coordinates: observed offsets from
/// the eyeball center divided by the radius. This makes the fit invariant to
/// translation and uniform scaling of the observation.
struct Problem {
    targets: [(f64, f64); EDGE_COUNT + 1],
    cfg: SolverConfig,
}

impl Problem {
    fn new(obs: &EyeballObservation, cfg: SolverConfig) -> Self {
        let mut targets = [(0.0, 0.0); EDGE_COUNT + 1];
        for (slot, p) in targets.iter_mut().zip(obs.points()) {
            let d = p - obs.eyeball_center;
            *slot = (d.u / obs.radius, d.v / obs.radius);
        }
        Problem { targets, cfg }
    }

    fn residuals(&self, p: &[f64; 4]) -> [f64; RESIDUAL_COUNT] {
        let offs = unit_offsets(p);
        let mut r = [0.0; RESIDUAL_COUNT];
        for j in 0..=EDGE_COUNT {
            r[2 * j] = offs[j].0 - self.targets[j].0;
            r[2 * j + 1] = offs[j].1 - self.targets[j].1;
        }
        r
    }

    fn cost(&self, p: &[f64; 4]) -> f64 {
        self.residuals(p).iter().map(|r| r * r).sum()
    }

    fn jacobian(&self, p: &[f64; 4]) -> [[f64; 4]; RESIDUAL_COUNT] {
        match self.cfg.jacobian {
            JacobianMode::Analytic => unit_jacobian(p),
            JacobianMode::FiniteDifference => unit_jacobian_fd(p, 1e-6),
        }
    }

    /// Gradient of the sum of squares, `2 J^T r`.
    fn gradient(&self, jac: &[[f64; 4]; RESIDUAL_COUNT], r: &[f64; RESIDUAL_COUNT]) -> [f64; 4] {
        let mut g = [0.0; 4];
        for (row, ri) in jac.iter().zip(r) {
            for k in 0..4 {
                g[k] += 2.0 * row[k] * ri;
            }
        }
        g
    }

    fn project(&self, mut p: [f64; 4]) -> [f64; 4] {
        p[0] = p[0].clamp(-PITCH_LIMIT, PITCH_LIMIT);
        p[3] = p[3].clamp(self.cfg.delta_min, self.cfg.delta_max);
        p
    }

    /// Zeroes gradient components that would push a bound-active parameter
    /// further out of its box.
    fn projected_gradient(&self, p: &[f64; 4], mut g: [f64; 4]) -> [f64; 4] {
        if (p[3] <= self.cfg.delta_min && g[3] > 0.0) || (p[3] >= self.cfg.delta_max && g[3] < 0.0) {
            g[3] = 0.0;
        }
        if (p[0] <= -PITCH_LIMIT && g[0] > 0.0) || (p[0] >= PITCH_LIMIT && g[0] < 0.0) {
            g[0] = 0.0;
        }
        g
    }

    fn at_delta_bound(&self, p: &[f64; 4]) -> bool {
        p[3] <= self.cfg.delta_min || p[3] >= self.cfg.delta_max
    }
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closed-form starting point: invert the iris-center projection and take
/// the mean iris extent for the angular radius. Roll starts at zero.
pub fn initial_state(obs: &EyeballObservation, cfg: &SolverConfig) -> [f64; 4] {
    let r = obs.radius;
    let d = obs.iris_center - obs.eyeball_center;
    let theta = (d.v / r).clamp(-1.0, 1.0).asin().clamp(-PITCH_LIMIT, PITCH_LIMIT);
    let phi = (-d.u / (r * theta.cos())).clamp(-1.0, 1.0).asin();
    let extent = obs
        .iris_edges
        .iter()
        .map(|e| e.distance(obs.iris_center))
        .sum::<f64>()
        / EDGE_COUNT as f64;
    let delta = (extent / r).clamp(0.05, 0.95).asin().clamp(cfg.delta_min, cfg.delta_max);
    [theta, phi, 0.0, delta]
}

struct Outcome {
    params: [f64; 4],
    iterations: usize,
    converged: bool,
}

fn solve_lm(prob: &Problem, x0: [f64; 4]) -> Outcome {
    let cfg = prob.cfg;
    let mut x = prob.project(x0);
    let mut r = prob.residuals(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < cfg.max_iters {
        iterations += 1;
        let jac = prob.jacobian(&x);
        let g = prob.gradient(&jac, &r);
        if norm4(&prob.projected_gradient(&x, g)) < cfg.tol_grad {
            converged = true;
            break;
        }
        let mut jtj = Matrix4::<f64>::zeros();
        for row in &jac {
            for a in 0..4 {
                for b in 0..4 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let rhs = -Vector4::from_column_slice(&g) * 0.5;
        loop {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let delta = match a.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cand = prob.project([x[0] + delta[0], x[1] + delta[1], x[2] + delta[2], x[3] + delta[3]]);
            let step = [cand[0] - x[0], cand[1] - x[1], cand[2] - x[2], cand[3] - x[3]];
            if norm4(&step) < cfg.tol_step {
                converged = true;
                break 'outer;
            }
            let r_new = prob.residuals(&cand);
            let cost_new: f64 = r_new.iter().map(|v| v * v).sum();
            if cost_new < cost {
                x = cand;
                r = r_new;
                cost = cost_new;
                lambda = (lambda * 0.1).max(1e-15);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // no representable descent step left
                converged = true;
                break 'outer;
            }
        }
    }
    Outcome {
        params: x,
        iterations,
        converged,
    }
}

/// Polak-Ribiere (PR+) nonlinear conjugate gradient with a backtracking
/// Armijo line search. The trial step starts at the minimizer of the
/// Gauss-Newton model along the search direction.
fn solve_cg(prob: &Problem, x0: [f64; 4]) -> Outcome {
    let cfg = prob.cfg;
    let mut x = prob.project(x0);
    let mut r = prob.residuals(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut jac = prob.jacobian(&x);
    let mut g = prob.projected_gradient(&x, prob.gradient(&jac, &r));
    let mut d = g.map(|v| -v);
    let mut converged = false;
    let mut iterations = 0;
    let mut since_restart = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        if norm4(&g) < cfg.tol_grad {
            converged = true;
            break;
        }
        let mut slope = dot4(&g, &d);
        if slope >= 0.0 {
            d = g.map(|v| -v);
            slope = dot4(&g, &d);
            since_restart = 0;
        }
        let mut jd_sq = 0.0;
        for row in &jac {
            let v = dot4(row, &d);
            jd_sq += v * v;
        }
        let mut alpha = if jd_sq > 0.0 { -slope / (2.0 * jd_sq) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let cand = prob.project([
                x[0] + alpha * d[0],
                x[1] + alpha * d[1],
                x[2] + alpha * d[2],
                x[3] + alpha * d[3],
            ]);
            let step = [cand[0] - x[0], cand[1] - x[1], cand[2] - x[2], cand[3] - x[3]];
            let c = prob.cost(&cand);
            if c <= cost + 1e-4 * dot4(&g, &step) && c <= cost {
                accepted = Some((cand, step, c));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, step, c)) = accepted else {
            converged = true;
            break;
        };
        let small_step = norm4(&step) < cfg.tol_step;
        x = cand;
        cost = c;
        r = prob.residuals(&x);
        jac = prob.jacobian(&x);
        let g_new = prob.projected_gradient(&x, prob.gradient(&jac, &r));
        if small_step {
            converged = true;
            break;
        }
        since_restart += 1;
        let beta = if since_restart >= 4 {
            since_restart = 0;
            0.0
        } else {
            let num: f64 = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
            (num / dot4(&g, &g)).max(0.0)
        };
        for k in 0..4 {
            d[k] = -g_new[k] + beta * d[k];
        }
        g = g_new;
    }
    Outcome {
        params: x,
        iterations,
        converged,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Fits `(theta, phi, gamma, delta)` to the observed iris landmarks.
///
/// The returned `converged` flag is false when the iteration budget ran out
/// or the angular iris radius ended on one of its bounds. Roll is reported
/// wrapped to `(-pi, pi]`.
pub fn fit(obs: &EyeballObservation, cfg: &SolverConfig) -> Result<FitResult> {
    obs.validate()?;
    cfg.validate()?;
    let prob = Problem::new(obs, *cfg);
    let x0 = prob.project(initial_state(obs, cfg));
    let out = match cfg.solver {
        Solver::LevenbergMarquardt => solve_lm(&prob, x0),
        Solver::ConjugateGradient => solve_cg(&prob, x0),
    };
    let mut p = out.params;
    // both solvers only accept descending steps; keep the start if nothing helped
    if prob.cost(&p) > prob.cost(&x0) {
        p = x0;
    }
    let at_bound = prob.at_delta_bound(&p);
    p[2] = wrap_angle(p[2]);
    let state = EyeballState::new(GazeAngles::new(p[0], p[1])?, p[2], p[3])?;
    Ok(FitResult {
        state,
        residual: residual(&state, obs),
        iterations: out.iterations,
        converged: out.converged && !at_bound,
    })
}

/// Least-squares constant offset between estimated and true gaze angles.
pub fn calibrate_offsets(estimates: &[GazeAngles], truths: &[GazeAngles]) -> Result<PersonCalibration> {
    if estimates.is_empty() {
        return Err(Error::Empty("calibration samples"));
    }
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: estimates.len(),
            found: truths.len(),
        });
    }
    let n = estimates.len() as f64;
    let (sp, sy) = estimates
        .iter()
        .zip(truths)
        .fold((0.0, 0.0), |(sp, sy), (e, t)| (sp + (t.pitch() - e.pitch()), sy + (t.yaw() - e.yaw())));
    Ok(PersonCalibration {
        d_pitch: sp / n,
        d_yaw: sy / n,
    })
}

pub fn calibrate(fits: &[FitResult], truths: &[GazeAngles]) -> Result<PersonCalibration> {
    let estimates: Vec<GazeAngles> = fits.iter().map(|f| f.state.gaze).collect();
    calibrate_offsets(&estimates, truths)
}

pub fn apply_calibration(g: GazeAngles, c: PersonCalibration) -> Result<GazeAngles> {
    GazeAngles::new(g.pitch() + c.d_pitch, g.yaw() + c.d_yaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> EyeGeometry {
        EyeGeometry {
            center: Point2::new(75.0, 45.0),
            radius: 60.0,
        }
    }

    fn state(p: f64, y: f64, roll: f64, delta: f64) -> EyeballState {
        EyeballState::new(GazeAngles::new(p, y).unwrap(), roll, delta).unwrap()
    }

    #[test]
    fn iris_center_projection_cases() {
        let c = project_iris_center(&state(0.0, 0.0, 0.0, 0.5), geom());
        assert_eq!(c, Point2::new(75.0, 45.0));
        let c = project_iris_center(&state(0.0, FRAC_PI_2 - 1e-12, 0.0, 0.5), geom());
        assert!((c.u - 15.0).abs() < 1e-9 && (c.v - 45.0).abs() < 1e-12);
        let c = project_iris_center(&state(PI / 6.0, 0.0, 0.0, 0.5), geom());
        assert!((c.u - 75.0).abs() < 1e-12 && (c.v - 75.0).abs() < 1e-12);
    }

    #[test]
    fn edge_projection_cases() {
        let tiny = state(0.2, -0.1, 0.3, 1e-300);
        let c = project_iris_center(&tiny, geom());
        for e in project_iris_edges(&tiny, geom()) {
            assert!(e.distance(c) < 1e-12);
        }
        let edges = project_iris_edges(&state(0.0, 0.0, 0.0, 0.1), geom());
        let e2 = edges[1];
        assert!((e2.u - 75.0).abs() < 1e-12);
        assert!((e2.v - (45.0 + 60.0 * 0.1f64.sin())).abs() < 1e-12);

        let s = state(0.1, 0.2, 0.3, 0.4);
        let wrapped = state(0.1, 0.2, 0.3 + 2.0 * PI, 0.4);
        for (a, b) in project_iris_edges(&s, geom()).iter().zip(project_iris_edges(&wrapped, geom())) {
            assert!(a.distance(b) < 1e-12);
        }
    }

    #[test]
    fn residual_cases() {
        let s = state(0.2, -0.3, 0.05, 0.5);
        let obs = render_observation(&s, geom());
        assert_eq!(residual(&s, &obs), 0.0);
        let mut shifted = obs.clone();
        shifted.iris_center.u += 1.0;
        shifted.iris_edges.iter_mut().for_each(|e| e.u += 1.0);
        assert!((residual(&s, &shifted) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn residual_matches_per_point_sum() {
        let s = state(0.25, 0.1, -0.2, 0.45);
        let mut obs = render_observation(&state(0.2, 0.15, -0.1, 0.5), geom());
        obs.iris_edges[3].v += 0.7;
        let g = geom();
        let mut oracle = 0.0;
        let (t, f, gm, d) = (0.25f64, 0.1f64, -0.2f64, 0.45f64);
        let cu = g.center.u - g.radius * t.cos() * f.sin();
        let cv = g.center.v + g.radius * t.sin();
        oracle += (cu - obs.iris_center.u).powi(2) + (cv - obs.iris_center.v).powi(2);
        for j in 1..=8 {
            let a = PI / 4.0 * j as f64 + gm;
            let tj = t + d * a.sin();
            let fj = f + d * a.cos();
            let u = g.center.u - g.radius * tj.cos() * fj.sin();
            let v = g.center.v + g.radius * tj.sin();
            oracle += (u - obs.iris_edges[j - 1].u).powi(2) + (v - obs.iris_edges[j - 1].v).powi(2);
        }
        assert!((residual(&s, &obs) - oracle).abs() < 1e-9 * oracle.max(1.0));
    }

    #[test]
    fn fit_recovers_forward_model() {
        for solver in [Solver::LevenbergMarquardt, Solver::ConjugateGradient] {
            let truth = state(0.2, -0.3, 0.05, 0.5);
            let obs = render_observation(&truth, geom());
            let res = fit(&obs, &SolverConfig::with_solver(solver)).unwrap();
            assert!(res.converged, "{solver:?}: {res:?}");
            assert!(res.residual < 1e-8, "{solver:?}: {res:?}");
            let got = res.state;
            assert!((got.gaze.pitch() - 0.2).abs() < 1e-5);
            assert!((got.gaze.yaw() + 0.3).abs() < 1e-5);
            assert!((got.roll - 0.05).abs() < 1e-5);
            assert!((got.iris_radius - 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn coincident_points_drive_delta_to_lower_bound() {
        let c = Point2::new(75.0, 45.0);
        let obs = EyeballObservation {
            eyeball_center: c,
            radius: 60.0,
            iris_center: c,
            iris_edges: [c; 8],
        };
        let cfg = SolverConfig::default();
        let res = fit(&obs, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.state.iris_radius, cfg.delta_min);
    }

    #[test]
    fn fd_jacobian_mode_also_converges() {
        let truth = state(-0.1, 0.4, -0.2, 0.35);
        let obs = render_observation(&truth, geom());
        let cfg = SolverConfig {
            jacobian: JacobianMode::FiniteDifference,
            ..Default::default()
        };
        let res = fit(&obs, &cfg).unwrap();
        assert!((res.state.gaze.yaw() - 0.4).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_iris_center_is_clamped() {
        let mut obs = render_observation(&state(0.5, 0.0, 0.0, 0.5), geom());
        obs.iris_center.v = obs.eyeball_center.v + 2.0 * obs.radius;
        let x0 = initial_state(&obs, &SolverConfig::default());
        assert!(x0.iter().all(|v| v.is_finite()));
        assert!(fit(&obs, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn rejects_invalid_inputs() {
        let mut obs = render_observation(&state(0.0, 0.0, 0.0, 0.5), geom());
        obs.radius = 0.0;
        assert!(fit(&obs, &SolverConfig::default()).is_err());
        assert!(EyeballState::new(GazeAngles::zero(), 0.0, 0.0).is_err());
        let bad = SolverConfig {
            delta_min: 0.5,
            delta_max: 0.4,
            ..Default::default()
        };
        obs.radius = 60.0;
        assert!(fit(&obs, &bad).is_err());
        assert!("xx".parse::<Solver>().is_err());
    }

    #[test]
    fn calibration_cases() {
        let g = |p, y| GazeAngles::new(p, y).unwrap();
        let fits = [g(0.1, 0.2), g(-0.3, 0.05)];
        assert_eq!(calibrate_offsets(&fits, &fits).unwrap(), PersonCalibration::default());
        let truths = [g(0.12, 0.19), g(-0.28, 0.04)];
        let c = calibrate_offsets(&fits, &truths).unwrap();
        assert!((c.d_pitch - 0.02).abs() < 1e-12 && (c.d_yaw + 0.01).abs() < 1e-12);
        assert!(calibrate_offsets(&[], &[]).is_err());
        assert!(calibrate_offsets(&fits, &truths[..1]).is_err());

        let corrected = apply_calibration(g(0.1, 0.2), PersonCalibration { d_pitch: 0.02, d_yaw: -0.01 }).unwrap();
        assert!((corrected.pitch() - 0.12).abs() < 1e-15 && (corrected.yaw() - 0.19).abs() < 1e-15);
        assert_eq!(apply_calibration(g(0.1, 0.2), PersonCalibration::default()).unwrap(), g(0.1, 0.2));
        assert!(apply_calibration(g(1.5, 0.0), PersonCalibration { d_pitch: 0.1, d_yaw: 0.0 }).is_err());
    }

    #[test]
    fn noisy_offsets_calibrate_to_sample_mean() {
        let g = |p, y| GazeAngles::new(p, y).unwrap();
        let fits: Vec<_> = (0..5).map(|i| g(0.05 * i as f64, -0.1)).collect();
        let noise = [0.011, 0.019, 0.023, 0.017, 0.030];
        let truths: Vec<_> = fits.iter().zip(noise).map(|(f, n)| g(f.pitch() + n, f.yaw() - n)).collect();
        let mean = noise.iter().sum::<f64>() / 5.0;
        let c = calibrate_offsets(&fits, &truths).unwrap();
        assert!((c.d_pitch - mean).abs() < 1e-12 && (c.d_yaw + mean).abs() < 1e-12);
        let back = calibrate_offsets(
            &fits,
            &fits.iter().map(|f| apply_calibration(*f, c).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((back.d_pitch - c.d_pitch).abs() < 1e-12 && (back.d_yaw - c.d_yaw).abs() < 1e-12);
    }

    fn valid_state() -> impl Strategy<Value = EyeballState> {
        (-0.6f64..0.6, -0.6f64..0.6, -0.3f64..0.3, 0.3f64..0.6).prop_map(|(p, y, g, d)| state(p, y, g, d))
    }

    proptest! {
        #[test]
        fn fit_never_worse_than_start(s in valid_state(), noise in proptest::collection::vec(-2.0f64..2.0, 18)) {
            let mut obs = render_observation(&s, geom());
            obs.iris_center.u += noise[0];
            obs.iris_center.v += noise[1];
            for (k, e) in obs.iris_edges.iter_mut().enumerate() {
                e.u += noise[2 + 2 * k];
                e.v += noise[3 + 2 * k];
            }
            for solver in [Solver::LevenbergMarquardt, Solver::ConjugateGradient] {
                let cfg = SolverConfig::with_solver(solver);
                let x0 = initial_state(&obs, &cfg);
                let s0 = EyeballState::new(GazeAngles::new(x0[0], x0[1]).unwrap(), x0[2], x0[3]).unwrap();
                let res = fit(&obs, &cfg).unwrap();
                prop_assert!(res.residual <= residual(&s0, &obs) + 1e-9);
            }
        }

        #[test]
        fn fit_is_translation_and_scale_invariant(s in valid_state(), du in -30.0f64..30.0, dv in -30.0f64..30.0, k in 0.3f64..3.0) {
            let obs = render_observation(&s, geom());
            let cfg = SolverConfig::default();
            let base = fit(&obs, &cfg).unwrap().state;
            let shift = Point2::new(du, dv);
            let moved = EyeballObservation {
                eyeball_center: obs.eyeball_center + shift,
                radius: obs.radius,
                iris_center: obs.iris_center + shift,
                iris_edges: obs.iris_edges.map(|e| e + shift),
            };
            let c = obs.eyeball_center;
            let scaled = EyeballObservation {
                eyeball_center: c,
                radius: obs.radius * k,
                iris_center: c + (obs.iris_center - c) * k,
                iris_edges: obs.iris_edges.map(|e| c + (e - c) * k),
            };
            for other in [fit(&moved, &cfg).unwrap().state, fit(&scaled, &cfg).unwrap().state] {
                prop_assert!((other.gaze.pitch() - base.gaze.pitch()).abs() < 1e-8);
                prop_assert!((other.gaze.yaw() - base.gaze.yaw()).abs() < 1e-8);
                prop_assert!((other.roll - base.roll).abs() < 1e-8);
                prop_assert!((other.iris_radius - base.iris_radius).abs() < 1e-8);
            }
        }
    }
}
