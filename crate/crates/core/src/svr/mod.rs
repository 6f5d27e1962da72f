//! Epsilon-insensitive support vector regression trained with SMO,
//! hyperparameter search, and calibration-sample selection.

mod persist;
mod sampling;
mod smo;
mod tune;

use std::fmt;

pub use sampling::select_calibration;
pub use smo::SolveInfo;
pub use tune::{default_grid, grid_scores, tune, GridPoint};

use crate::error::{invalid, Error, Result};
use crate::features::{build_features_with, EyeLandmarks, FeatureConfig};
use crate::geometry::GazeAngles;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Rbf { gamma } => write!(f, "rbf({gamma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.01,
            kernel: Kernel::Rbf { gamma: 1.0 / 36.0 },
            tol: 1e-3,
            max_iter: 100_000,
            standardize: true,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("C must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon must be non-negative"));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid("rbf gamma must be positive"));
            }
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Per-dimension affine map `(x - mean) / std` learned from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// A trained single-output regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub standardizer: Standardizer,
    /// Support vectors in standardized coordinates.
    pub support: Vec<Vec<f64>>,
    /// Dual coefficients `alpha - alpha*`, one per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

fn check_training_set(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() < 2 {
        return Err(invalid(format!("need at least 2 training samples, got {}", x.len())));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let dim = x[0].len();
    if dim == 0 {
        return Err(Error::Empty("feature vector"));
    }
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    Ok(dim)
}

pub fn train(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    train_detailed(x, y, params).map(|(m, _)| m)
}

/// Trains and also returns the raw dual solution and solver statistics.
pub fn train_detailed(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<(SvrModel, SolveInfo)> {
    params.validate()?;
    let dim = check_training_set(x, y)?;
    let standardizer = if params.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(dim)
    };
    let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
    let info = smo::solve(&xs, y, params);
    let n = x.len();
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (i, row) in xs.into_iter().enumerate() {
        let c = info.alpha[i] - info.alpha[i + n];
        if c != 0.0 {
            support.push(row);
            coef.push(c);
        }
    }
    let model = SvrModel {
        kernel: params.kernel,
        c: params.c,
        epsilon: params.epsilon,
        dim,
        standardizer,
        support,
        coef,
        bias: info.bias,
    };
    Ok((model, info))
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let z = self.standardizer.apply(x);
        Ok(self.decision(&z))
    }

    /// Decision value for an already standardized input.
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn to_text(&self) -> String {
        persist::write_model(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        persist::read_model(text)
    }
}

/// Hyperparameters for the pitch and yaw models of a [`GazeRegressor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorParams {
    pub pitch: SvrParams,
    pub yaw: SvrParams,
}

impl RegressorParams {
    pub fn shared(p: SvrParams) -> Self {
        RegressorParams { pitch: p, yaw: p }
    }
}

/// Two independent regressors mapping landmark features to pitch and yaw.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeRegressor {
    pub features: FeatureConfig,
    pub pitch: SvrModel,
    pub yaw: SvrModel,
}

impl GazeRegressor {
    pub fn train(
        landmarks: &[EyeLandmarks],
        targets: &[GazeAngles],
        features: FeatureConfig,
        params: &RegressorParams,
    ) -> Result<Self> {
        let x = landmarks
            .iter()
            .map(|lm| build_features_with(lm, &features).map(|f| f.into_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::train_on_features(&x, targets, features, params)
    }

    pub fn train_on_features(
        x: &[Vec<f64>],
        targets: &[GazeAngles],
        features: FeatureConfig,
        params: &RegressorParams,
    ) -> Result<Self> {
        if let Some(bad) = x.iter().find(|r| r.len() != features.set.dim()) {
            return Err(Error::DimensionMismatch {
                expected: features.set.dim(),
                found: bad.len(),
            });
        }
        let pitch: Vec<f64> = targets.iter().map(|g| g.pitch()).collect();
        let yaw: Vec<f64> = targets.iter().map(|g| g.yaw()).collect();
        let (pm, ym) = rayon::join(|| train(x, &pitch, &params.pitch), || train(x, &yaw, &params.yaw));
        Ok(GazeRegressor {
            features,
            pitch: pm?,
            yaw: ym?,
        })
    }

    pub fn predict_features(&self, x: &[f64]) -> Result<GazeAngles> {
        let pitch = self.pitch.predict(x)?;
        let yaw = self.yaw.predict(x)?;
        // regressors are unconstrained; keep the output inside the gimbal guard
        let limit = std::f64::consts::FRAC_PI_2 - 1e-9;
        GazeAngles::new(pitch.clamp(-limit, limit), yaw)
    }

    pub fn predict(&self, lm: &EyeLandmarks) -> Result<GazeAngles> {
        let f = build_features_with(lm, &self.features)?;
        self.predict_features(f.as_slice())
    }

    pub fn to_text(&self) -> String {
        persist::write_regressor(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        persist::read_regressor(text)
    }
}
