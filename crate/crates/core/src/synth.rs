//! Synthetic ground truth built on the two-sphere forward model.
//!
//! A person fixes the eyeball radius, iris size, template roll, axis offset
//! (kappa) and eye-region shape. Each record renders the iris landmarks for
//! one optical-axis gaze, places eyelid landmarks on two quadratic arcs
//! through the eye corners, and optionally corrupts everything with
//! difficulty-scaled geometric noise.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::dataset::{EyeSide, SampleRecord};
use crate::error::{invalid, Result};
use crate::eyeball::{project_iris_center, project_iris_edges, EyeGeometry, EyeballState, PersonCalibration};
use crate::features::EyeLandmarks;
use crate::geometry::{GazeAngles, Point2};
use crate::rng::{stream_rng, substream, STREAM_GAZE, STREAM_NOISE, STREAM_PERSON};

/// Input frame size in pixels; the eyeball center sits at its middle.
pub const FRAME_WIDTH: f64 = 150.0;
pub const FRAME_HEIGHT: f64 = 90.0;
pub const KAPPA_STD_DEG: f64 = 1.5;
/// Steps over which the curriculum ramps difficulty from 0 to 1.
pub const CURRICULUM_STEPS: u64 = 1_000_000;

pub fn frame_center() -> Point2 {
    Point2::new(FRAME_WIDTH / 2.0, FRAME_HEIGHT / 2.0)
}

/// Eyelid arc parameters, in units of the eyeball radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyelidShape {
    pub upper_apex: f64,
    pub lower_apex: f64,
    /// Relative change of each apex per radian of pitch.
    pub upper_pitch_gain: f64,
    pub lower_pitch_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonSpec {
    pub id: u64,
    pub radius: f64,
    pub iris_radius: f64,
    pub roll: f64,
    pub kappa: PersonCalibration,
    pub inner_corner: Point2,
    pub outer_corner: Point2,
    pub eyelid: EyelidShape,
}

/// Geometric noise. Every magnitude is the standard deviation applied at
/// difficulty 1 and scales linearly with difficulty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub difficulty: f64,
    /// Per-landmark Gaussian jitter, pixels.
    pub jitter_px: f64,
    /// Global translation per axis, pixels.
    pub translation_px: f64,
    /// Global in-plane rotation, radians.
    pub rotation_rad: f64,
    /// Global relative scale change.
    pub scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            difficulty: 0.0,
            ..NoiseSpec::with_difficulty(0.0, 0)
        }
    }

    pub fn with_difficulty(difficulty: f64, seed: u64) -> Self {
        NoiseSpec {
            difficulty,
            jitter_px: 1.0,
            translation_px: 10.0,
            rotation_rad: 0.1,
            scale: 0.1,
            seed,
        }
    }

    /// Jitter only, applied at full strength.
    pub fn jitter(jitter_px: f64, seed: u64) -> Self {
        NoiseSpec {
            difficulty: 1.0,
            jitter_px,
            translation_px: 0.0,
            rotation_rad: 0.0,
            scale: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.difficulty) {
            return Err(invalid(format!("difficulty {} outside [0, 1]", self.difficulty)));
        }
        let ranges = [self.jitter_px, self.translation_px, self.rotation_rad, self.scale];
        if ranges.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(invalid("noise ranges must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Linear curriculum: difficulty 0 at step 0 rising to 1 at `CURRICULUM_STEPS`.
pub fn curriculum_difficulty(step: u64) -> f64 {
    (step as f64 / CURRICULUM_STEPS as f64).min(1.0)
}

pub fn sample_person(id: u64, seed: u64) -> PersonSpec {
    let mut rng = stream_rng(seed, STREAM_PERSON, id);
    let kappa = Normal::new(0.0, KAPPA_STD_DEG.to_radians()).unwrap();
    let radius = rng.random_range(50.0..=70.0);
    let iris_radius = rng.random_range(0.45..=0.55);
    let roll = Normal::new(0.0, 0.05).unwrap().sample(&mut rng);
    let d_pitch = kappa.sample(&mut rng);
    let d_yaw = kappa.sample(&mut rng);
    let c = frame_center();
    let half = Uniform::new(0.8, 0.95).unwrap();
    let drop = Uniform::new(-0.05, 0.1).unwrap();
    let inner_corner = Point2::new(c.u - radius * half.sample(&mut rng), c.v + radius * drop.sample(&mut rng));
    let outer_corner = Point2::new(c.u + radius * half.sample(&mut rng), c.v + radius * drop.sample(&mut rng));
    let eyelid = EyelidShape {
        upper_apex: rng.random_range(0.45..0.6),
        lower_apex: rng.random_range(0.25..0.35),
        upper_pitch_gain: rng.random_range(0.6..1.0),
        lower_pitch_gain: rng.random_range(0.3..0.6),
    };
    PersonSpec {
        id,
        radius,
        iris_radius,
        roll,
        kappa: PersonCalibration { d_pitch, d_yaw },
        inner_corner,
        outer_corner,
        eyelid,
    }
}

/// Four points on each lid, upper lid inner-to-outer then lower lid
/// outer-to-inner. Positive pitch (looking down) lowers both lids.
fn eyelid_points(p: &PersonSpec, pitch: f64) -> [Point2; 8] {
    let (c1, c2) = (p.inner_corner, p.outer_corner);
    let upper = p.radius * p.eyelid.upper_apex * (1.0 - p.eyelid.upper_pitch_gain * pitch).max(0.05);
    let lower = p.radius * p.eyelid.lower_apex * (1.0 + p.eyelid.lower_pitch_gain * pitch).max(0.05);
    let arc = |t: f64, apex: f64| {
        let base = c1 + (c2 - c1) * t;
        Point2::new(base.u, base.v + apex * 4.0 * t * (1.0 - t))
    };
    let ts = [0.2, 0.4, 0.6, 0.8];
    std::array::from_fn(|k| if k < 4 { arc(ts[k], -upper) } else { arc(ts[7 - k], lower) })
}

/// Noise-free landmarks of `person` gazing along `gaze` (optical axis).
pub fn render(person: &PersonSpec, gaze: GazeAngles) -> Result<EyeLandmarks> {
    let state = EyeballState::new(gaze, person.roll, person.iris_radius)?;
    let geom = EyeGeometry {
        center: frame_center(),
        radius: person.radius,
    };
    Ok(EyeLandmarks {
        inner_corner: person.inner_corner,
        outer_corner: person.outer_corner,
        eyelid: eyelid_points(person, gaze.pitch()),
        iris_edges: project_iris_edges(&state, geom),
        iris_center: project_iris_center(&state, geom),
        eyeball_center: geom.center,
        radius_px: Some(person.radius),
    })
}

/// Applies jitter to every landmark, then one similarity transform about
/// the frame center to all points and the radius.
pub fn apply_noise<R: Rng>(lm: &EyeLandmarks, noise: &NoiseSpec, rng: &mut R) -> EyeLandmarks {
    let d = noise.difficulty;
    let mut gauss = |scale: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * scale * d
    };
    let sigma = noise.jitter_px;
    let mut jitter = |p: Point2| p + Point2::new(gauss(sigma), gauss(sigma));
    let mut out = EyeLandmarks {
        inner_corner: jitter(lm.inner_corner),
        outer_corner: jitter(lm.outer_corner),
        eyelid: lm.eyelid,
        iris_edges: lm.iris_edges,
        iris_center: jitter(lm.iris_center),
        eyeball_center: jitter(lm.eyeball_center),
        radius_px: lm.radius_px,
    };
    out.eyelid.iter_mut().chain(out.iris_edges.iter_mut()).for_each(|p| *p = jitter(*p));

    let shift = Point2::new(gauss(noise.translation_px), gauss(noise.translation_px));
    let angle = gauss(noise.rotation_rad);
    let scale = (1.0 + gauss(noise.scale)).max(0.5);
    let c = frame_center();
    let transformed = out.map_points(|p| c + (p.rotate_about(c, angle) - c) * scale + shift);
    EyeLandmarks {
        radius_px: out.radius_px.map(|r| r * scale),
        ..transformed
    }
}

/// Renders and corrupts one record. The noise stream is keyed by
/// `(noise.seed, id)`.
pub fn generate(person: &PersonSpec, gaze: GazeAngles, noise: &NoiseSpec, id: u64) -> Result<SampleRecord> {
    noise.validate()?;
    let clean = render(person, gaze)?;
    let mut rng = stream_rng(noise.seed, STREAM_NOISE, id);
    let landmarks = apply_noise(&clean, noise, &mut rng);
    let visual = GazeAngles::new(gaze.pitch() + person.kappa.d_pitch, gaze.yaw() + person.kappa.d_yaw)?;
    Ok(SampleRecord {
        id,
        person_id: person.id,
        side: if id.is_multiple_of(2) { EyeSide::Left } else { EyeSide::Right },
        landmarks,
        gaze_optical: Some(gaze),
        gaze_visual: Some(visual),
        difficulty: noise.difficulty,
        fit: None,
        prediction: None,
    })
}

/// Half-widths of the uniform optical-axis gaze box, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeRange {
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for GazeRange {
    fn default() -> Self {
        GazeRange {
            pitch: 35f64.to_radians(),
            yaw: 35f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub n_people: usize,
    pub n_per_person: usize,
    pub gaze_range: GazeRange,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Offset added to person ids, for building disjoint populations.
    pub first_person_id: u64,
}

impl DatasetSpec {
    pub fn new(n_people: usize, n_per_person: usize, noise: NoiseSpec, seed: u64) -> Self {
        DatasetSpec {
            n_people,
            n_per_person,
            gaze_range: GazeRange::default(),
            noise,
            seed,
            first_person_id: 0,
        }
    }
}

pub fn sample_gaze(seed: u64, id: u64, range: GazeRange) -> Result<GazeAngles> {
    let mut rng = stream_rng(seed, STREAM_GAZE, id);
    let pitch = if range.pitch > 0.0 { rng.random_range(-range.pitch..range.pitch) } else { 0.0 };
    let yaw = if range.yaw > 0.0 { rng.random_range(-range.yaw..range.yaw) } else { 0.0 };
    GazeAngles::new(pitch, yaw)
}

/// Generates `n_people * n_per_person` records with ids `0..n`, grouped by
/// person. Everything derives from `spec.seed`; `spec.noise.seed` is ignored.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<SampleRecord>> {
    if spec.n_people == 0 || spec.n_per_person == 0 {
        return Err(invalid("dataset needs at least one person and one sample per person"));
    }
    if !(spec.gaze_range.pitch >= 0.0 && spec.gaze_range.pitch < std::f64::consts::FRAC_PI_2 - 0.2) {
        return Err(invalid("pitch range must lie in [0, pi/2 - 0.2)"));
    }
    if !(spec.gaze_range.yaw >= 0.0 && spec.gaze_range.yaw.is_finite()) {
        return Err(invalid("yaw range must be non-negative"));
    }
    spec.noise.validate()?;
    let noise = NoiseSpec {
        seed: substream(spec.seed, STREAM_NOISE, 0),
        ..spec.noise
    };
    let people: Vec<PersonSpec> = (0..spec.n_people as u64)
        .map(|p| sample_person(spec.first_person_id + p, spec.seed))
        .collect();
    let n = spec.n_people * spec.n_per_person;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let person = &people[i / spec.n_per_person];
            let id = i as u64;
            let gaze = sample_gaze(spec.seed, id, spec.gaze_range)?;
            generate(person, gaze, &noise, id)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eyeball::{fit, SolverConfig};
    use crate::geometry::angular_error;

    #[test]
    fn person_sampling_is_deterministic_and_bounded() {
        assert_eq!(sample_person(3, 9), sample_person(3, 9));
        assert_ne!(sample_person(3, 9), sample_person(4, 9));
        let mut radius_sum = 0.0;
        for id in 0..10_000 {
            let p = sample_person(id, 1);
            assert!((0.45..=0.55).contains(&p.iris_radius));
            assert!((50.0..=70.0).contains(&p.radius));
            assert!(p.outer_corner.distance(p.inner_corner) > 0.0);
            radius_sum += p.radius;
        }
        let mean = radius_sum / 10_000.0;
        assert!((58.0..=62.0).contains(&mean), "{mean}");
    }

    #[test]
    fn clean_record_fits_exactly() {
        let person = sample_person(0, 5);
        let gaze = GazeAngles::new(0.3, -0.4).unwrap();
        let rec = generate(&person, gaze, &NoiseSpec::none(), 0).unwrap();
        let res = fit(&rec.landmarks.observation().unwrap(), &SolverConfig::default()).unwrap();
        assert!(angular_error(res.state.gaze, gaze) <= 1e-4);
        assert!((res.state.gaze.pitch() - 0.3).abs() <= 1e-4);
    }

    #[test]
    fn global_translation_leaves_fit_unchanged() {
        let person = sample_person(1, 5);
        let gaze = GazeAngles::new(-0.2, 0.25).unwrap();
        let shifted = NoiseSpec {
            difficulty: 1.0,
            jitter_px: 0.0,
            translation_px: 10.0,
            rotation_rad: 0.0,
            scale: 0.0,
            seed: 17,
        };
        let a = generate(&person, gaze, &NoiseSpec::none(), 4).unwrap();
        let b = generate(&person, gaze, &shifted, 4).unwrap();
        assert!(a.landmarks.iris_center.distance(b.landmarks.iris_center) > 0.1);
        let cfg = SolverConfig::default();
        let fa = fit(&a.landmarks.observation().unwrap(), &cfg).unwrap().state;
        let fb = fit(&b.landmarks.observation().unwrap(), &cfg).unwrap().state;
        assert!((fa.gaze.pitch() - fb.gaze.pitch()).abs() < 1e-8);
        assert!((fa.gaze.yaw() - fb.gaze.yaw()).abs() < 1e-8);
    }

    #[test]
    fn same_seeds_same_record() {
        let person = sample_person(2, 5);
        let gaze = GazeAngles::new(0.1, 0.1).unwrap();
        let noise = NoiseSpec::with_difficulty(0.7, 99);
        assert_eq!(generate(&person, gaze, &noise, 8).unwrap(), generate(&person, gaze, &noise, 8).unwrap());
    }

    #[test]
    fn visual_axis_is_optical_plus_kappa() {
        let spec = DatasetSpec::new(3, 20, NoiseSpec::with_difficulty(1.0, 0), 4);
        let people: Vec<_> = (0..3).map(|p| sample_person(p, 4)).collect();
        for r in generate_dataset(&spec).unwrap() {
            let k = people[r.person_id as usize].kappa;
            let (o, v) = (r.gaze_optical.unwrap(), r.gaze_visual.unwrap());
            assert_eq!(v.pitch(), o.pitch() + k.d_pitch);
            assert_eq!(v.yaw(), o.yaw() + k.d_yaw);
        }
    }

    #[test]
    fn dataset_cardinality_and_validity() {
        let recs = generate_dataset(&DatasetSpec::new(2, 3, NoiseSpec::with_difficulty(0.5, 0), 7)).unwrap();
        assert_eq!(recs.iter().map(|r| r.id).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(recs.iter().map(|r| r.person_id).collect::<Vec<_>>(), vec![0, 0, 0, 1, 1, 1]);
        assert!(recs.iter().all(|r| r.landmarks.validate().is_ok()));
        assert!(generate_dataset(&DatasetSpec::new(2, 0, NoiseSpec::none(), 7)).is_err());
    }

    #[test]
    fn gaze_box_is_covered() {
        let range = GazeRange::default();
        let recs = generate_dataset(&DatasetSpec::new(1, 1000, NoiseSpec::none(), 3)).unwrap();
        let bins = 10;
        let mut occupied = vec![false; bins * bins];
        for r in &recs {
            let g = r.gaze_optical.unwrap();
            let bi = (((g.pitch() + range.pitch) / (2.0 * range.pitch)) * bins as f64) as usize;
            let bj = (((g.yaw() + range.yaw) / (2.0 * range.yaw)) * bins as f64) as usize;
            occupied[bi.min(bins - 1) * bins + bj.min(bins - 1)] = true;
        }
        let frac = occupied.iter().filter(|&&o| o).count() as f64 / (bins * bins) as f64;
        assert!(frac >= 0.9, "{frac}");
    }

    #[test]
    fn noise_grows_with_difficulty() {
        let person = sample_person(0, 11);
        let mean_disp = |d: f64| {
            let noise = NoiseSpec::with_difficulty(d, 21);
            let mut total = 0.0;
            for id in 0..1000u64 {
                let gaze = sample_gaze(11, id, GazeRange::default()).unwrap();
                let clean = render(&person, gaze).unwrap();
                let noisy = generate(&person, gaze, &noise, id).unwrap().landmarks;
                total += clean.iris_center.distance(noisy.iris_center) + clean.eyelid[2].distance(noisy.eyelid[2]);
            }
            total / 1000.0
        };
        let ladder: Vec<f64> = [0.0, 0.25, 0.5, 1.0].iter().map(|&d| mean_disp(d)).collect();
        assert!(ladder[0] < 1e-9);
        assert!(ladder.windows(2).all(|w| w[1] > w[0]), "{ladder:?}");
    }

    #[test]
    fn curriculum_ramp() {
        assert_eq!(curriculum_difficulty(0), 0.0);
        assert_eq!(curriculum_difficulty(500_000), 0.5);
        assert_eq!(curriculum_difficulty(5_000_000), 1.0);
    }

    #[test]
    fn dataset_bytes_are_reproducible() {
        let spec = DatasetSpec::new(2, 5, NoiseSpec::with_difficulty(1.0, 0), 42);
        let a: Vec<String> = generate_dataset(&spec).unwrap().iter().map(|r| r.to_json_line()).collect();
        let b: Vec<String> = generate_dataset(&spec).unwrap().iter().map(|r| r.to_json_line()).collect();
        assert_eq!(a, b);
        let parsed = SampleRecord::from_json_line(&a[3]).unwrap();
        assert_eq!(parsed.to_json_line(), a[3]);
    }
}
