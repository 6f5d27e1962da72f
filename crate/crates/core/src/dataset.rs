//! Labeled eye observations and their line-delimited JSON file format.
//!
//! One record per line with keys, in order: `id`, `person_id`, `side`,
//! `corners {inner, outer}`, `eyelid` (8 points), `iris` (8 points),
//! `iris_center`, `eyeball_center`, `radius_px`, `gaze_optical`,
//! `gaze_visual`, `difficulty`. Points are `[u, v]` pixels (origin top-left,
//! `v` down), angles `[pitch, yaw]` radians, and every float is rounded to
//! 9 significant digits. The `fit` and `prediction` keys are appended by
//! the fitting and prediction commands.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::eyeball::FitResult;
use crate::features::EyeLandmarks;
use crate::geometry::{GazeAngles, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EyeSide {
    Left,
    Right,
}

impl fmt::Display for EyeSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EyeSide::Left => "left",
            EyeSide::Right => "right",
        })
    }
}

impl FromStr for EyeSide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(EyeSide::Left),
            "right" => Ok(EyeSide::Right),
            _ => Err(invalid(format!("unknown eye side `{s}`"))),
        }
    }
}

/// Fitted eyeball parameters attached to a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSummary {
    pub gaze: GazeAngles,
    pub roll: f64,
    pub iris_radius: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            gaze: f.state.gaze,
            roll: f.state.roll,
            iris_radius: f.state.iris_radius,
            residual: f.residual,
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

/// One labeled eye observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: u64,
    pub person_id: u64,
    pub side: EyeSide,
    pub landmarks: EyeLandmarks,
    pub gaze_optical: Option<GazeAngles>,
    pub gaze_visual: Option<GazeAngles>,
    pub difficulty: f64,
    pub fit: Option<FitSummary>,
    pub prediction: Option<GazeAngles>,
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap()
}

#[derive(Debug, Clone, Copy)]
struct Sig9(f64);

impl Serialize for Sig9 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(round_sig9(self.0))
    }
}

impl<'de> Deserialize<'de> for Sig9 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Sig9)
    }
}

type Pair = [Sig9; 2];

fn pt(p: Point2) -> Pair {
    [Sig9(p.u), Sig9(p.v)]
}

fn ang(g: GazeAngles) -> Pair {
    [Sig9(g.pitch()), Sig9(g.yaw())]
}

#[derive(Serialize, Deserialize)]
struct CornersJson {
    inner: Pair,
    outer: Pair,
}

#[derive(Serialize, Deserialize)]
struct FitJson {
    pitch: Sig9,
    yaw: Sig9,
    roll: Sig9,
    iris_radius: Sig9,
    residual: Sig9,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    id: u64,
    person_id: u64,
    side: String,
    corners: CornersJson,
    eyelid: Vec<Pair>,
    iris: Vec<Pair>,
    iris_center: Pair,
    eyeball_center: Pair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_px: Option<Sig9>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gaze_optical: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gaze_visual: Option<Pair>,
    difficulty: Sig9,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit: Option<FitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prediction: Option<Pair>,
}

fn to_point(p: &Pair) -> Point2 {
    Point2::new(p[0].0, p[1].0)
}

fn to_angles(p: &Pair) -> Result<GazeAngles> {
    GazeAngles::new(p[0].0, p[1].0)
}

fn eight(points: &[Pair], what: &str) -> Result<[Point2; 8]> {
    if points.len() != 8 {
        return Err(invalid(format!("{what}: expected 8 points, found {}", points.len())));
    }
    Ok(std::array::from_fn(|i| to_point(&points[i])))
}

impl SampleRecord {
    pub fn to_json_line(&self) -> String {
        let lm = &self.landmarks;
        let json = RecordJson {
            id: self.id,
            person_id: self.person_id,
            side: self.side.to_string(),
            corners: CornersJson {
                inner: pt(lm.inner_corner),
                outer: pt(lm.outer_corner),
            },
            eyelid: lm.eyelid.iter().map(|&p| pt(p)).collect(),
            iris: lm.iris_edges.iter().map(|&p| pt(p)).collect(),
            iris_center: pt(lm.iris_center),
            eyeball_center: pt(lm.eyeball_center),
            radius_px: lm.radius_px.map(Sig9),
            gaze_optical: self.gaze_optical.map(ang),
            gaze_visual: self.gaze_visual.map(ang),
            difficulty: Sig9(self.difficulty),
            fit: self.fit.map(|f| FitJson {
                pitch: Sig9(f.gaze.pitch()),
                yaw: Sig9(f.gaze.yaw()),
                roll: Sig9(f.roll),
                iris_radius: Sig9(f.iris_radius),
                residual: Sig9(f.residual),
                iterations: f.iterations,
                converged: f.converged,
            }),
            prediction: self.prediction.map(ang),
        };
        serde_json::to_string(&json).expect("record serialization cannot fail")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let j: RecordJson = serde_json::from_str(line).map_err(|e| invalid(e.to_string()))?;
        let landmarks = EyeLandmarks {
            inner_corner: to_point(&j.corners.inner),
            outer_corner: to_point(&j.corners.outer),
            eyelid: eight(&j.eyelid, "eyelid")?,
            iris_edges: eight(&j.iris, "iris")?,
            iris_center: to_point(&j.iris_center),
            eyeball_center: to_point(&j.eyeball_center),
            radius_px: j.radius_px.map(|r| r.0),
        };
        landmarks.validate()?;
        let fit = match &j.fit {
            Some(f) => Some(FitSummary {
                gaze: GazeAngles::new(f.pitch.0, f.yaw.0)?,
                roll: f.roll.0,
                iris_radius: f.iris_radius.0,
                residual: f.residual.0,
                iterations: f.iterations,
                converged: f.converged,
            }),
            None => None,
        };
        Ok(SampleRecord {
            id: j.id,
            person_id: j.person_id,
            side: j.side.parse()?,
            landmarks,
            gaze_optical: j.gaze_optical.as_ref().map(to_angles).transpose()?,
            gaze_visual: j.gaze_visual.as_ref().map(to_angles).transpose()?,
            difficulty: j.difficulty.0,
            fit,
            prediction: j.prediction.as_ref().map(to_angles).transpose()?,
        })
    }
}

pub fn write_records<W: Write>(mut out: W, records: &[SampleRecord]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json_line())?;
    }
    out.flush()?;
    Ok(())
}

/// Records that parsed, plus `(line number, error)` for every line that did
/// not. Blank lines are ignored.
#[derive(Debug, Default)]
pub struct ReadOutcome {
    pub records: Vec<SampleRecord>,
    pub skipped: Vec<(usize, Error)>,
}

pub fn read_records<R: BufRead>(input: R) -> Result<ReadOutcome> {
    let mut out = ReadOutcome::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match SampleRecord::from_json_line(&line) {
            Ok(r) => out.records.push(r),
            Err(e) => out.skipped.push((i + 1, e)),
        }
    }
    Ok(out)
}
