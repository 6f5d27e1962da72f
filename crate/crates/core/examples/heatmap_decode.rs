//! Encode landmarks as Gaussian heatmaps and decode them with soft-argmax.
//!
//! Shows how the decoding temperature trades bias toward the map centroid
//! against sharpness.
//!
//! cargo run --release --example heatmap_decode

use eyegaze::geometry::Point2;
use eyegaze::heatmap::{encode, heatmap_loss, soft_argmax, GridSpec, HeatmapSet, LANDMARK_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> eyegaze::Result<()> {
    let grid = GridSpec::default();
    let sigma = 2.0;
    let (w, h) = (grid.width as f64 * grid.scale, grid.height as f64 * grid.scale);
    let margin = 3.0 * sigma * grid.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Point2> = (0..500)
        .map(|_| Point2::new(rng.random_range(margin..w - margin), rng.random_range(margin..h - margin)))
        .collect();

    println!("grid {}x{} cells, scale {}, sigma {sigma}", grid.width, grid.height, grid.scale);
    for t in [1.0, 5.0, 10.0, 20.0, 50.0] {
        let mut worst = 0.0f64;
        let mut total = 0.0;
        for &p in &points {
            let e = soft_argmax(&encode(p, grid, sigma)?, t)?.distance(p);
            worst = worst.max(e);
            total += e;
        }
        println!("T = {t:>4}: mean error {:.4} px, max {:.4} px", total / points.len() as f64, worst);
    }

    let set_pts: [Point2; LANDMARK_COUNT] = std::array::from_fn(|i| points[i]);
    let truth = HeatmapSet::encode(&set_pts, grid, sigma)?;
    let shifted: [Point2; LANDMARK_COUNT] = std::array::from_fn(|i| points[i] + Point2::new(1.5, -1.0));
    let pred = HeatmapSet::encode(&shifted, grid, sigma)?;
    println!("loss vs itself {}, vs shifted copy {:.4}", heatmap_loss(&truth, &truth, 1.0)?, heatmap_loss(&pred, &truth, 1.0)?);
    Ok(())
}
