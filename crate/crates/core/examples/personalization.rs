//! Calibration-size sweep for both methods, printed as the report CSV.
//!
//! cargo run --release --example personalization

use eyegaze::evalkit::{reports_to_csv, run_personalized, ExperimentConfig, Method};
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let data = generate_dataset(&DatasetSpec::new(5, 500, NoiseSpec::with_difficulty(1.0, 0), 11))?;
    let cfg = ExperimentConfig::default();
    let mut reports = run_personalized(&data, Method::ModelFit, &[0, 10, 20, 50, 100], &cfg)?;
    reports.extend(run_personalized(&data, Method::SvrLandmarks, &[10, 20, 50, 100], &cfg)?);
    for r in &reports {
        eprintln!("{:>13} k={:>3}: {:.3} deg", r.method.name(), r.k, r.pooled_mean_deg);
    }
    print!("{}", reports_to_csv(&reports));
    Ok(())
}
