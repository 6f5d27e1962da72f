//! Landmark feature vectors for regression-based gaze estimation.
//!
//! Every landmark `p` is mapped to `(p - c1) / w`, where `c1` is the inner
//! eye corner and `w` is the Euclidean distance between the two corners.
//! The full vector holds, in order: 8 eyelid points, 8 iris edge points,
//! the iris center, and the gaze prior `(iris_center - eyeball_center) / w`,
//! 36 values in total. Each point contributes `u` then `v`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::eyeball::EyeballObservation;
use crate::geometry::Point2;

pub const EYELID_COUNT: usize = 8;
pub const IRIS_EDGE_COUNT: usize = 8;
pub const FULL_DIM: usize = 36;
const MIN_EYE_WIDTH: f64 = 1e-6;

/// The 18 eye-region landmarks plus both eye corners, in image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeLandmarks {
    pub inner_corner: Point2,
    pub outer_corner: Point2,
    pub eyelid: [Point2; EYELID_COUNT],
    pub iris_edges: [Point2; IRIS_EDGE_COUNT],
    pub iris_center: Point2,
    pub eyeball_center: Point2,
    pub radius_px: Option<f64>,
}

impl EyeLandmarks {
    pub fn eye_width(&self) -> f64 {
        self.outer_corner.distance(self.inner_corner)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.inner_corner, self.outer_corner, self.iris_center, self.eyeball_center]
            .iter()
            .chain(&self.eyelid)
            .chain(&self.iris_edges)
            .all(|p| p.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("landmarks"));
        }
        if self.eye_width() < MIN_EYE_WIDTH {
            return Err(invalid("eye corners coincide"));
        }
        if let Some(r) = self.radius_px {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid(format!("eyeball radius must be positive, got {r}")));
            }
        }
        Ok(())
    }

    /// Iris landmarks and eyeball geometry for model fitting. Requires the
    /// eyeball radius.
    pub fn observation(&self) -> Result<EyeballObservation> {
        let radius = self.radius_px.ok_or_else(|| invalid("eyeball radius missing"))?;
        let obs = EyeballObservation {
            eyeball_center: self.eyeball_center,
            radius,
            iris_center: self.iris_center,
            iris_edges: self.iris_edges,
        };
        obs.validate()?;
        Ok(obs)
    }

    /// Applies `f` to every point. The radius is left untouched.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> EyeLandmarks {
        EyeLandmarks {
            inner_corner: f(self.inner_corner),
            outer_corner: f(self.outer_corner),
            eyelid: self.eyelid.map(&f),
            iris_edges: self.iris_edges.map(&f),
            iris_center: f(self.iris_center),
            eyeball_center: f(self.eyeball_center),
            radius_px: self.radius_px,
        }
    }
}

/// Feature ablations, from the pupil center alone up to the full vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    /// Iris center only (2).
    Pupil,
    /// Iris center minus each eye corner (4).
    PcEc,
    /// Iris edges and iris center (18).
    Iris,
    /// Eyelid, iris edges and iris center (34).
    EyelidIris,
    /// Everything plus the gaze prior (36).
    Full,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::Pupil,
        FeatureSet::PcEc,
        FeatureSet::Iris,
        FeatureSet::EyelidIris,
        FeatureSet::Full,
    ];

    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Pupil => 2,
            FeatureSet::PcEc => 4,
            FeatureSet::Iris => 18,
            FeatureSet::EyelidIris => 34,
            FeatureSet::Full => FULL_DIM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Pupil => "pupil",
            FeatureSet::PcEc => "pcec",
            FeatureSet::Iris => "iris",
            FeatureSet::EyelidIris => "eyelid-iris",
            FeatureSet::Full => "full",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|set| set.name() == s)
            .ok_or_else(|| invalid(format!("unknown feature set `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub set: FeatureSet,
    /// Rotate into the frame whose `u` axis runs from the inner to the outer corner.
    pub rotation_normalize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            set: FeatureSet::Full,
            rotation_normalize: false,
        }
    }
}

impl FeatureConfig {
    pub fn new(set: FeatureSet) -> Self {
        FeatureConfig {
            set,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub fn build_features(lm: &EyeLandmarks) -> Result<FeatureVector> {
    build_features_with(lm, &FeatureConfig::default())
}

pub fn build_features_with(lm: &EyeLandmarks, cfg: &FeatureConfig) -> Result<FeatureVector> {
    lm.validate()?;
    let c1 = lm.inner_corner;
    let axis = lm.outer_corner - c1;
    let w = axis.norm();
    let (cos, sin) = if cfg.rotation_normalize {
        (axis.u / w, axis.v / w)
    } else {
        (1.0, 0.0)
    };
    // rotation by -atan2(axis) maps the corner axis onto +u
    let frame = |d: Point2| Point2::new((cos * d.u + sin * d.v) / w, (-sin * d.u + cos * d.v) / w);
    let norm = |p: Point2| frame(p - c1);

    let mut out = Vec::with_capacity(cfg.set.dim());
    let mut push = |p: Point2| {
        out.push(p.u);
        out.push(p.v);
    };
    match cfg.set {
        FeatureSet::Pupil => push(norm(lm.iris_center)),
        FeatureSet::PcEc => {
            push(frame(lm.iris_center - lm.inner_corner));
            push(frame(lm.iris_center - lm.outer_corner));
        }
        FeatureSet::Iris => {
            lm.iris_edges.iter().for_each(|&p| push(norm(p)));
            push(norm(lm.iris_center));
        }
        FeatureSet::EyelidIris | FeatureSet::Full => {
            lm.eyelid.iter().for_each(|&p| push(norm(p)));
            lm.iris_edges.iter().for_each(|&p| push(norm(p)));
            push(norm(lm.iris_center));
            if cfg.set == FeatureSet::Full {
                push(frame(lm.iris_center - lm.eyeball_center));
            }
        }
    }
    debug_assert_eq!(out.len(), cfg.set.dim());
    Ok(FeatureVector(out))
}
