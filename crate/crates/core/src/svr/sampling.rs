use crate::error::{invalid, Result};
use crate::geometry::GazeAngles;

/// Greedy farthest-point selection in (pitch, yaw) space.
///
/// The first pick is the sample farthest from the angle centroid; each
/// following pick maximizes the distance to its nearest already-picked
/// sample. Ties resolve to the lowest index.
pub fn select_calibration(angles: &[GazeAngles], k: usize) -> Result<Vec<usize>> {
    let n = angles.len();
    if k > n {
        return Err(invalid(format!("cannot select {k} calibration samples from {n}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let pts: Vec<(f64, f64)> = angles.iter().map(|g| (g.pitch(), g.yaw())).collect();
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let centroid = pts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n as f64, acc.1 + p.1 / n as f64));

    let argmax = |score: &[f64], taken: &[bool]| {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !taken[i] && best.is_none_or(|b| score[i] > score[b]) {
                best = Some(i);
            }
        }
        best.unwrap()
    };

    let mut taken = vec![false; n];
    let from_centroid: Vec<f64> = pts.iter().map(|&p| dist(p, centroid)).collect();
    let first = argmax(&from_centroid, &taken);
    taken[first] = true;
    let mut picked = vec![first];
    let mut nearest: Vec<f64> = pts.iter().map(|&p| dist(p, pts[first])).collect();
    while picked.len() < k {
        let next = argmax(&nearest, &taken);
        taken[next] = true;
        picked.push(next);
        for (d, &p) in nearest.iter_mut().zip(&pts) {
            *d = d.min(dist(p, pts[next]));
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(p: f64, y: f64) -> GazeAngles {
        GazeAngles::new(p, y).unwrap()
    }

    #[test]
    fn selecting_everything() {
        let pts: Vec<_> = (0..6).map(|i| g(0.1 * i as f64, -0.05 * i as f64)).collect();
        let mut sel = select_calibration(&pts, 6).unwrap();
        sel.sort();
        assert_eq!(sel, vec![0, 1, 2, 3, 4, 5]);
        assert!(select_calibration(&pts, 7).is_err());
        assert!(select_calibration(&pts, 0).unwrap().is_empty());
    }

    #[test]
    fn square_tie_picks_lowest_index() {
        let pts = [g(0.1, 0.1), g(-0.1, 0.1), g(0.1, -0.1), g(-0.1, -0.1)];
        assert_eq!(select_calibration(&pts, 1).unwrap(), vec![0]);
    }

    #[test]
    fn line_picks_endpoints() {
        let pts: Vec<_> = [0.3, -0.2, 0.0, 0.5, 0.1, -0.4, 0.2].iter().map(|&p| g(p, 0.0)).collect();
        let mut sel = select_calibration(&pts, 2).unwrap();
        sel.sort();
        assert_eq!(sel, vec![3, 5]);
    }

    fn min_pairwise(pts: &[GazeAngles], idx: &[usize]) -> f64 {
        let mut m = f64::INFINITY;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                m = m.min((pts[i].pitch() - pts[j].pitch()).hypot(pts[i].yaw() - pts[j].yaw()));
            }
        }
        m
    }

    proptest! {
        #[test]
        fn min_distance_non_increasing(raw in proptest::collection::vec((-0.6f64..0.6, -0.6f64..0.6), 3..40)) {
            let pts: Vec<_> = raw.iter().map(|&(p, y)| g(p, y)).collect();
            let mut prev = f64::INFINITY;
            for k in 2..=pts.len() {
                let sel = select_calibration(&pts, k).unwrap();
                let mut uniq = sel.clone();
                uniq.sort();
                uniq.dedup();
                prop_assert_eq!(uniq.len(), k);
                let m = min_pairwise(&pts, &sel);
                prop_assert!(m <= prev);
                prev = m;
            }
        }
    }
}
