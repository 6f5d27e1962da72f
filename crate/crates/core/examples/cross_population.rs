//! Train on one synthetic population and test on a disjoint one, compared
//! with held-out people drawn from the training population itself.
//!
//! cargo run --release --example cross_population

use eyegaze::evalkit::{run_cross_population, ExperimentConfig, Method};
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let noise = NoiseSpec::with_difficulty(1.0, 0);
    let pool = generate_dataset(&DatasetSpec::new(12, 100, noise, 21))?;
    let (train, held_out) = pool.split_at(8 * 100);
    let other = generate_dataset(&DatasetSpec {
        first_person_id: 500,
        ..DatasetSpec::new(4, 100, noise, 22)
    })?;
    let cfg = ExperimentConfig::default();
    for method in [Method::ModelFit, Method::SvrLandmarks] {
        let a = run_cross_population(train, held_out, method, &cfg)?;
        let b = run_cross_population(train, &other, method, &cfg)?;
        println!(
            "{:>13}: held-out people {:.2} deg, other population {:.2} deg",
            method.name(),
            a.pooled_mean_deg,
            b.pooled_mean_deg
        );
    }
    Ok(())
}
