//! Compare landmark feature sets for SVR gaze regression on unseen people.
//!
//! cargo run --release --example feature_ablation

use eyegaze::evalkit::{run_cross_population, ExperimentConfig, Method};
use eyegaze::features::{FeatureConfig, FeatureSet};
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let noise = NoiseSpec::with_difficulty(1.0, 0);
    let train = generate_dataset(&DatasetSpec::new(10, 100, noise, 1))?;
    let test = generate_dataset(&DatasetSpec {
        first_person_id: 100,
        ..DatasetSpec::new(5, 100, noise, 2)
    })?;
    for set in FeatureSet::ALL {
        for rotation_normalize in [false, true] {
            let cfg = ExperimentConfig {
                features: FeatureConfig { set, rotation_normalize },
                ..ExperimentConfig::default()
            };
            let r = run_cross_population(&train, &test, Method::SvrLandmarks, &cfg)?;
            println!(
                "{:>12} ({:>2} dims){}: {:.2} deg",
                set.name(),
                set.dim(),
                if rotation_normalize { " rotated" } else { "        " },
                r.pooled_mean_deg
            );
        }
    }
    let mf = run_cross_population(&train, &test, Method::ModelFit, &ExperimentConfig::default())?;
    println!("   model-fit            : {:.2} deg", mf.pooled_mean_deg);
    Ok(())
}
