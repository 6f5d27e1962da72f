//! Per-person calibration: pick diverse calibration samples by
//! farthest-point selection and absorb the optical/visual axis offset.
//!
//! cargo run --release --example calibration

use eyegaze::eyeball::{apply_calibration, calibrate_offsets, fit, SolverConfig};
use eyegaze::geometry::angular_error_deg;
use eyegaze::svr::select_calibration;
use eyegaze::synth::{generate_dataset, sample_person, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let seed = 3;
    let data = generate_dataset(&DatasetSpec::new(1, 300, NoiseSpec::jitter(1.0, 0), seed))?;
    let kappa = sample_person(0, seed).kappa;
    println!(
        "true kappa: pitch {:+.3} deg, yaw {:+.3} deg",
        kappa.d_pitch.to_degrees(),
        kappa.d_yaw.to_degrees()
    );

    let cfg = SolverConfig::default();
    let fits = data
        .iter()
        .map(|r| fit(&r.landmarks.observation()?, &cfg).map(|f| f.state.gaze))
        .collect::<eyegaze::Result<Vec<_>>>()?;
    let visual: Vec<_> = data.iter().map(|r| r.gaze_visual.unwrap()).collect();
    let order = select_calibration(&visual, 50)?;

    for k in [1, 5, 20, 50] {
        let calib = &order[..k];
        let est: Vec<_> = calib.iter().map(|&i| fits[i]).collect();
        let tru: Vec<_> = calib.iter().map(|&i| visual[i]).collect();
        let c = calibrate_offsets(&est, &tru)?;
        let mut err = 0.0;
        let mut n = 0;
        for i in (0..data.len()).filter(|i| !calib.contains(i)) {
            err += angular_error_deg(apply_calibration(fits[i], c)?, visual[i]);
            n += 1;
        }
        println!(
            "k = {k:>2}: kappa estimate ({:+.3}, {:+.3}) deg, held-out error {:.3} deg",
            c.d_pitch.to_degrees(),
            c.d_yaw.to_degrees(),
            err / n as f64
        );
    }
    Ok(())
}
