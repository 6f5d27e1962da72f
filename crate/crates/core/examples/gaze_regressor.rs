//! Train the landmark SVR pair, persist it and reload it.
//!
//! cargo run --release --example gaze_regressor

use eyegaze::features::FeatureConfig;
use eyegaze::geometry::angular_error_deg;
use eyegaze::svr::{GazeRegressor, RegressorParams, SvrParams};
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let data = generate_dataset(&DatasetSpec::new(1, 400, NoiseSpec::with_difficulty(0.5, 0), 9))?;
    let (train, test) = data.split_at(300);
    let lms: Vec<_> = train.iter().map(|r| r.landmarks.clone()).collect();
    let ys: Vec<_> = train.iter().map(|r| r.gaze_visual.unwrap()).collect();

    let params = RegressorParams::shared(SvrParams::default());
    let model = GazeRegressor::train(&lms, &ys, FeatureConfig::default(), &params)?;
    println!("support vectors: pitch {}, yaw {}", model.pitch.n_support(), model.yaw.n_support());

    let text = model.to_text();
    let reloaded = GazeRegressor::from_text(&text)?;
    let mut err = 0.0;
    for r in test {
        let a = model.predict(&r.landmarks)?;
        assert_eq!(a, reloaded.predict(&r.landmarks)?);
        err += angular_error_deg(a, r.gaze_visual.unwrap());
    }
    println!("model file {} bytes; held-out error {:.3} deg", text.len(), err / test.len() as f64);
    Ok(())
}
