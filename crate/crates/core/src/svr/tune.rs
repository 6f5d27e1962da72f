use rayon::prelude::*;

use super::{train, Kernel, SvrParams};
use crate::error::{invalid, Error, Result};

/// One hyperparameter combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
}

impl GridPoint {
    pub fn apply(&self, base: &SvrParams) -> SvrParams {
        SvrParams {
            c: self.c,
            epsilon: self.epsilon,
            kernel: self.kernel,
            ..*base
        }
    }
}

/// `C` in 2^-2..2^6, `epsilon` in {0.005, 0.01, 0.02}, RBF `gamma` in 2^-6..2^2.
pub fn default_grid() -> Vec<GridPoint> {
    let mut grid = Vec::new();
    for ce in -2..=6 {
        for &epsilon in &[0.005, 0.01, 0.02] {
            for ge in -6..=2 {
                grid.push(GridPoint {
                    c: 2f64.powi(ce),
                    epsilon,
                    kernel: Kernel::Rbf { gamma: 2f64.powi(ge) },
                });
            }
        }
    }
    grid
}

/// Mean absolute validation error of one grid point: leave-one-out for up
/// to 100 samples, otherwise 5 folds assigned by `index mod 5`.
fn cv_error(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<f64> {
    let n = x.len();
    let folds = if n <= 100 { n } else { 5 };
    let mut abs_err = 0.0;
    for fold in 0..folds {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            if i % folds == fold {
                vx.push(x[i].clone());
                vy.push(y[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        let model = train(&tx, &ty, params)?;
        for (xi, yi) in vx.iter().zip(&vy) {
            abs_err += (model.predict(xi)? - yi).abs();
        }
    }
    Ok(abs_err / n as f64)
}

/// Picks the grid point with the lowest cross-validated mean absolute
/// error. Ties resolve to the earliest grid entry.
pub fn tune(x: &[Vec<f64>], y: &[f64], grid: &[GridPoint], base: &SvrParams) -> Result<GridPoint> {
    if grid.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    if x.len() < 3 {
        return Err(invalid(format!("tuning needs at least 3 samples, got {}", x.len())));
    }
    let scores = grid
        .par_iter()
        .map(|g| cv_error(x, y, &g.apply(base)))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

/// Cross-validated error for every grid point, in grid order.
pub fn grid_scores(x: &[Vec<f64>], y: &[f64], grid: &[GridPoint], base: &SvrParams) -> Result<Vec<f64>> {
    grid.par_iter().map(|g| cv_error(x, y, &g.apply(base))).collect()
}
