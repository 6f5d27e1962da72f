//! Iris localization success curve and eyelid registration error for
//! noisy landmark "detections" against clean ground truth.
//!
//! cargo run --release --example metric_curves

use eyegaze::evalkit::{default_thresholds, eyelid_registration_error, iris_localization_curve};
use eyegaze::geometry::Point2;
use eyegaze::synth::{generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let truth = generate_dataset(&DatasetSpec::new(4, 250, NoiseSpec::none(), 5))?;
    for jitter in [0.5, 1.0, 2.0, 4.0] {
        let pred = generate_dataset(&DatasetSpec::new(4, 250, NoiseSpec::jitter(jitter, 0), 5))?;
        let p: Vec<Point2> = pred.iter().map(|r| r.landmarks.iris_center).collect();
        let t: Vec<Point2> = truth.iter().map(|r| r.landmarks.iris_center).collect();
        let w: Vec<f64> = truth.iter().map(|r| r.landmarks.eye_width()).collect();
        let curve = iris_localization_curve(&p, &t, &w, &default_thresholds())?;
        let at = |x: f64| curve.points().iter().find(|q| (q.0 - x).abs() < 1e-9).unwrap().1;

        let mut lid = 0.0;
        for (pr, tr) in pred.iter().zip(&truth) {
            let lm = &tr.landmarks;
            let mut outline = vec![lm.inner_corner];
            outline.extend_from_slice(&lm.eyelid[..4]);
            outline.push(lm.outer_corner);
            outline.extend_from_slice(&lm.eyelid[4..]);
            outline.push(lm.inner_corner);
            // a typical interocular distance is about 2.5 eye widths
            lid += eyelid_registration_error(&pr.landmarks.eyelid, &outline, 2.5 * lm.eye_width())?;
        }
        println!(
            "jitter {jitter:.1} px: success at 0.01 {:.3}, at 0.025 {:.3}, at 0.05 {:.3}; eyelid error {:.4}",
            at(0.01),
            at(0.025),
            at(0.05),
            lid / pred.len() as f64
        );
    }
    Ok(())
}
