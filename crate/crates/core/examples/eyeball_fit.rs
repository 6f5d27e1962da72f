//! Fit the two-sphere eyeball model to iris landmarks with both solvers.
//!
//! cargo run --release --example eyeball_fit

use eyegaze::eyeball::{fit, render_observation, EyeGeometry, EyeballState, Solver, SolverConfig};
use eyegaze::geometry::{angular_error_deg, GazeAngles, Point2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> eyegaze::Result<()> {
    let truth = EyeballState::new(GazeAngles::new(0.25, -0.4)?, 0.03, 0.5)?;
    let geom = EyeGeometry {
        center: Point2::new(75.0, 45.0),
        radius: 60.0,
    };
    let clean = render_observation(&truth, geom);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let jitter = Normal::new(0.0, 1.0).unwrap();

    for sigma in [0.0, 0.5, 1.0, 2.0] {
        let mut obs = clean.clone();
        for p in std::iter::once(&mut obs.iris_center).chain(obs.iris_edges.iter_mut()) {
            *p = *p + Point2::new(sigma * jitter.sample(&mut rng), sigma * jitter.sample(&mut rng));
        }
        for solver in [Solver::LevenbergMarquardt, Solver::ConjugateGradient] {
            let r = fit(&obs, &SolverConfig::with_solver(solver))?;
            println!(
                "jitter {sigma:.1} px {:>20}: error {:.3} deg, roll {:+.4}, delta {:.4}, residual {:.3e} px^2, {} iterations{}",
                format!("{solver:?}"),
                angular_error_deg(r.state.gaze, truth.gaze),
                r.state.roll,
                r.state.iris_radius,
                r.residual,
                r.iterations,
                if r.converged { "" } else { " (not converged)" }
            );
        }
    }
    Ok(())
}
