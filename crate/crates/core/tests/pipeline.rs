use eyegaze::dataset::SampleRecord;
use eyegaze::evalkit::{run_cross_population, run_personalized, ExperimentConfig, Method};
use eyegaze::eyeball::{fit, SolverConfig};
use eyegaze::geometry::angular_error_deg;
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};
use proptest::prelude::*;

fn lines(records: &[SampleRecord]) -> Vec<String> {
    records.iter().map(|r| r.to_json_line()).collect()
}

#[test]
fn generation_does_not_depend_on_thread_count() {
    let spec = DatasetSpec::new(3, 40, NoiseSpec::with_difficulty(1.0, 0), 77);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| generate_dataset(&spec).unwrap());
    let b = generate_dataset(&spec).unwrap();
    assert_eq!(lines(&a), lines(&b));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let data = generate_dataset(&DatasetSpec::new(3, 60, NoiseSpec::with_difficulty(1.0, 0), 78)).unwrap();
    let cfg = ExperimentConfig::default();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| run_personalized(&data, Method::SvrLandmarks, &[5, 20], &cfg).unwrap());
    let b = run_personalized(&data, Method::SvrLandmarks, &[5, 20], &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn same_distribution_test_population_is_within_noise() {
    let noise = NoiseSpec::with_difficulty(1.0, 0);
    let cfg = ExperimentConfig::default();
    let mut diffs = Vec::new();
    for s in 0..20 {
        let pool = generate_dataset(&DatasetSpec::new(10, 60, noise, 300 + s)).unwrap();
        let (train, held) = pool.split_at(6 * 60);
        let other = generate_dataset(&DatasetSpec {
            first_person_id: 1000,
            ..DatasetSpec::new(4, 60, noise, 400 + s)
        })
        .unwrap();
        let a = run_cross_population(train, held, Method::SvrLandmarks, &cfg).unwrap();
        let b = run_cross_population(train, &other, Method::SvrLandmarks, &cfg).unwrap();
        diffs.push(b.pooled_mean_deg - a.pooled_mean_deg);
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
    let se = sd / (diffs.len() as f64).sqrt();
    assert!(mean.abs() <= 3.0 * se, "paired difference {mean} deg, se {se}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noiseless_pipeline_is_exact(seed in any::<u64>()) {
        let data = generate_dataset(&DatasetSpec::new(2, 25, NoiseSpec::none(), seed)).unwrap();
        let cfg = SolverConfig::default();
        for r in &data {
            let f = fit(&r.landmarks.observation().unwrap(), &cfg).unwrap();
            prop_assert!(angular_error_deg(f.state.gaze, r.gaze_optical.unwrap()) < 0.01);
        }
    }

    #[test]
    fn datasets_are_pure_functions_of_their_parameters(seed in any::<u64>(), difficulty in 0.0f64..=1.0) {
        let spec = DatasetSpec::new(2, 5, NoiseSpec::with_difficulty(difficulty, 0), seed);
        prop_assert_eq!(lines(&generate_dataset(&spec).unwrap()), lines(&generate_dataset(&spec).unwrap()));
    }

    #[test]
    fn records_survive_serialization(seed in any::<u64>()) {
        for r in generate_dataset(&DatasetSpec::new(1, 5, NoiseSpec::with_difficulty(1.0, 0), seed)).unwrap() {
            let line = r.to_json_line();
            let back = SampleRecord::from_json_line(&line).unwrap();
            prop_assert_eq!(back.to_json_line(), line);
            prop_assert!(back.landmarks.validate().is_ok());
        }
    }
}
