//! Evaluation metrics and the personalization / cross-population protocols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::SampleRecord;
use crate::error::{invalid, Error, Result};
use crate::eyeball::{apply_calibration, calibrate_offsets, fit, SolverConfig};
use crate::features::{build_features_with, FeatureConfig};
use crate::geometry::{angular_error_deg, GazeAngles, Point2};
use crate::svr::{select_calibration, tune, GazeRegressor, GridPoint, RegressorParams, SvrParams};

/// Step function of success rate over normalized error thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    points: Vec<(f64, f64)>,
}

impl SuccessCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("curve thresholds must be strictly increasing"));
        }
        if points.iter().any(|&(_, r)| !(0.0..=1.0).contains(&r)) {
            return Err(invalid("success rates must lie in [0, 1]"));
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(invalid("success rates must be non-decreasing"));
        }
        Ok(SuccessCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,success_rate\n");
        for (t, r) in &self.points {
            out.push_str(&format!("{t},{r}\n"));
        }
        out
    }
}

/// 0.00 to 0.20 in steps of 0.005.
pub fn default_thresholds() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.005).collect()
}

pub fn iris_localization_curve(
    pred: &[Point2],
    truth: &[Point2],
    eye_widths: &[f64],
    thresholds: &[f64],
) -> Result<SuccessCurve> {
    if pred.len() != truth.len() || pred.len() != eye_widths.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            found: if pred.len() != truth.len() { truth.len() } else { eye_widths.len() },
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("iris localization samples"));
    }
    if eye_widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(invalid("eye widths must be positive"));
    }
    let mut errors: Vec<f64> = pred
        .iter()
        .zip(truth)
        .zip(eye_widths)
        .map(|((p, t), w)| p.distance(*t) / w)
        .collect();
    if errors.iter().any(|e| e.is_nan()) {
        return Err(Error::NonFinite("iris localization error"));
    }
    errors.sort_by(f64::total_cmp);
    let n = errors.len() as f64;
    let points = thresholds
        .iter()
        .map(|&t| (t, errors.partition_point(|&e| e <= t) as f64 / n))
        .collect();
    SuccessCurve::new(points)
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

pub fn point_polyline_distance(p: Point2, polyline: &[Point2]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [a] => p.distance(*a),
        _ => polyline
            .windows(2)
            .map(|s| point_segment_distance(p, s[0], s[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Mean point-to-polyline distance of `pred`, normalized by `interocular`.
/// A polyline whose points all coincide acts as a single point.
pub fn eyelid_registration_error(pred: &[Point2], polyline: &[Point2], interocular: f64) -> Result<f64> {
    if polyline.len() < 2 {
        return Err(invalid("eyelid polyline needs at least 2 points"));
    }
    if pred.is_empty() {
        return Err(Error::Empty("predicted eyelid points"));
    }
    if !(interocular > 0.0 && interocular.is_finite()) {
        return Err(invalid("interocular distance must be positive"));
    }
    let total: f64 = pred.iter().map(|&p| point_polyline_distance(p, polyline)).sum();
    Ok(total / pred.len() as f64 / interocular)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ModelFit,
    SvrLandmarks,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ModelFit => "model-fit",
            Method::SvrLandmarks => "svr-landmarks",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model-fit" => Ok(Method::ModelFit),
            "svr-landmarks" => Ok(Method::SvrLandmarks),
            _ => Err(invalid(format!("unknown method '{s}' (expected model-fit or svr-landmarks)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonError {
    pub person_id: u64,
    pub n_eval: usize,
    pub mean_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub method: Method,
    /// Calibration size per person; for cross-population runs, the number
    /// of training samples used.
    pub k: usize,
    pub per_person: Vec<PersonError>,
    /// Mean over every evaluated sample.
    pub pooled_mean_deg: f64,
    pub n_eval: usize,
}

impl ExperimentReport {
    fn from_people(method: Method, k: usize, per_person: Vec<PersonError>) -> Self {
        let n_eval = per_person.iter().map(|p| p.n_eval).sum();
        let total: f64 = per_person.iter().map(|p| p.mean_error_deg * p.n_eval as f64).sum();
        ExperimentReport {
            method,
            k,
            per_person,
            pooled_mean_deg: if n_eval == 0 { 0.0 } else { total / n_eval as f64 },
            n_eval,
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "method,person_id,k,n_eval,mean_error_deg";

/// One row per (person, k), in report order.
pub fn reports_to_csv(reports: &[ExperimentReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        for p in &r.per_person {
            out.push_str(&format!("{},{},{},{},{}\n", r.method, p.person_id, r.k, p.n_eval, p.mean_error_deg));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SvrChoice {
    Fixed(RegressorParams),
    /// Grid-searched per axis on each training set.
    Tune { grid: Vec<GridPoint>, base: SvrParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    pub features: FeatureConfig,
    pub svr: SvrChoice,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            solver: SolverConfig::default(),
            features: FeatureConfig::default(),
            svr: SvrChoice::Fixed(RegressorParams::shared(SvrParams::default())),
        }
    }
}

fn visual_truth(r: &SampleRecord) -> Result<GazeAngles> {
    r.gaze_visual
        .ok_or_else(|| invalid(format!("record {} has no visual-axis label", r.id)))
}

/// Optical-axis fits for every record, in input order.
pub fn fit_all(records: &[SampleRecord], solver: &SolverConfig) -> Result<Vec<GazeAngles>> {
    records
        .par_iter()
        .map(|r| Ok(fit(&r.landmarks.observation()?, solver)?.state.gaze))
        .collect()
}

fn feature_rows(records: &[SampleRecord], cfg: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    records
        .par_iter()
        .map(|r| build_features_with(&r.landmarks, cfg).map(|f| f.into_vec()))
        .collect()
}

fn train_regressor(x: &[Vec<f64>], y: &[GazeAngles], cfg: &ExperimentConfig) -> Result<GazeRegressor> {
    let params = match &cfg.svr {
        SvrChoice::Fixed(p) => *p,
        SvrChoice::Tune { grid, base } => {
            let pitch: Vec<f64> = y.iter().map(|g| g.pitch()).collect();
            let yaw: Vec<f64> = y.iter().map(|g| g.yaw()).collect();
            RegressorParams {
                pitch: tune(x, &pitch, grid, base)?.apply(base),
                yaw: tune(x, &yaw, grid, base)?.apply(base),
            }
        }
    };
    GazeRegressor::train_on_features(x, y, cfg.features, &params)
}

fn mean_error(pred: &[GazeAngles], truth: &[GazeAngles]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| angular_error_deg(*p, *t)).sum::<f64>() / pred.len() as f64
}

/// Record indices grouped by person id, ascending.
fn by_person(records: &[SampleRecord]) -> BTreeMap<u64, Vec<usize>> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.person_id).or_default().push(i);
    }
    groups
}

/// Per-person calibration sweep. For every person and every `k`, picks `k`
/// calibration samples by farthest-point selection on visual-axis truth,
/// calibrates (model-fit) or trains (svr-landmarks) on them and scores the
/// remaining samples against visual-axis truth. Returns one report per `k`,
/// in the order given.
pub fn run_personalized(
    records: &[SampleRecord],
    method: Method,
    ks: &[usize],
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentReport>> {
    if records.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if ks.is_empty() {
        return Err(Error::Empty("calibration sizes"));
    }
    let k_max = *ks.iter().max().unwrap();
    if method == Method::SvrLandmarks && ks.contains(&0) {
        return Err(invalid("svr-landmarks needs at least one calibration sample"));
    }
    let truth = records.iter().map(visual_truth).collect::<Result<Vec<_>>>()?;
    let groups = by_person(records);
    if let Some((id, idx)) = groups.iter().find(|(_, idx)| idx.len() <= k_max) {
        return Err(invalid(format!(
            "person {id} has {} samples; k = {k_max} needs more",
            idx.len()
        )));
    }
    let fits = match method {
        Method::ModelFit => Some(fit_all(records, &cfg.solver)?),
        Method::SvrLandmarks => None,
    };
    let feats = match method {
        Method::SvrLandmarks => Some(feature_rows(records, &cfg.features)?),
        Method::ModelFit => None,
    };

    let people: Vec<(u64, Vec<usize>)> = groups.into_iter().collect();
    // per person: one PersonError per k
    let rows = people
        .par_iter()
        .map(|(id, idx)| {
            let person_truth: Vec<GazeAngles> = idx.iter().map(|&i| truth[i]).collect();
            // farthest-point picks are prefix-stable, so one selection serves every k
            let order = select_calibration(&person_truth, k_max)?;
            ks.iter()
                .map(|&k| {
                    let calib = &order[..k];
                    let mut is_calib = vec![false; idx.len()];
                    calib.iter().for_each(|&c| is_calib[c] = true);
                    let eval: Vec<usize> = (0..idx.len()).filter(|&j| !is_calib[j]).collect();
                    let eval_truth: Vec<GazeAngles> = eval.iter().map(|&j| person_truth[j]).collect();
                    let pred: Vec<GazeAngles> = match method {
                        Method::ModelFit => {
                            let f = fits.as_ref().unwrap();
                            let raw: Vec<GazeAngles> = eval.iter().map(|&j| f[idx[j]]).collect();
                            if k == 0 {
                                raw
                            } else {
                                let est: Vec<GazeAngles> = calib.iter().map(|&j| f[idx[j]]).collect();
                                let ct: Vec<GazeAngles> = calib.iter().map(|&j| person_truth[j]).collect();
                                let offset = calibrate_offsets(&est, &ct)?;
                                raw.iter()
                                    .map(|g| apply_calibration(*g, offset))
                                    .collect::<Result<Vec<_>>>()?
                            }
                        }
                        Method::SvrLandmarks => {
                            let x = feats.as_ref().unwrap();
                            let cx: Vec<Vec<f64>> = calib.iter().map(|&j| x[idx[j]].clone()).collect();
                            let ct: Vec<GazeAngles> = calib.iter().map(|&j| person_truth[j]).collect();
                            let model = train_regressor(&cx, &ct, cfg)?;
                            eval.iter()
                                .map(|&j| model.predict_features(&x[idx[j]]))
                                .collect::<Result<Vec<_>>>()?
                        }
                    };
                    Ok(PersonError {
                        person_id: *id,
                        n_eval: eval.len(),
                        mean_error_deg: mean_error(&pred, &eval_truth),
                    })
                })
                .collect::<Result<Vec<PersonError>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| ExperimentReport::from_people(method, k, rows.iter().map(|r| r[ki].clone()).collect()))
        .collect())
}

/// Trains on every record of `train` and scores every record of `test`
/// against visual-axis truth. Model-fit is training-free and scores its
/// uncalibrated optical-axis output.
pub fn run_cross_population(
    train: &[SampleRecord],
    test: &[SampleRecord],
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if test.is_empty() {
        return Err(Error::Empty("test population"));
    }
    let train_ids: BTreeSet<u64> = train.iter().map(|r| r.person_id).collect();
    if let Some(r) = test.iter().find(|r| train_ids.contains(&r.person_id)) {
        return Err(invalid(format!("person {} appears in both populations", r.person_id)));
    }
    let truth = test.iter().map(visual_truth).collect::<Result<Vec<_>>>()?;
    let (pred, k) = match method {
        Method::ModelFit => (fit_all(test, &cfg.solver)?, 0),
        Method::SvrLandmarks => {
            if train.is_empty() {
                return Err(Error::Empty("training population"));
            }
            let tx = feature_rows(train, &cfg.features)?;
            let ty = train.iter().map(visual_truth).collect::<Result<Vec<_>>>()?;
            let model = train_regressor(&tx, &ty, cfg)?;
            let x = feature_rows(test, &cfg.features)?;
            let pred = x.par_iter().map(|f| model.predict_features(f)).collect::<Result<Vec<_>>>()?;
            (pred, train.len())
        }
    };
    let per_person = by_person(test)
        .into_iter()
        .map(|(id, idx)| {
            let p: Vec<GazeAngles> = idx.iter().map(|&i| pred[i]).collect();
            let t: Vec<GazeAngles> = idx.iter().map(|&i| truth[i]).collect();
            PersonError {
                person_id: id,
                n_eval: idx.len(),
                mean_error_deg: mean_error(&p, &t),
            }
        })
        .collect();
    Ok(ExperimentReport::from_people(method, k, per_person))
}
