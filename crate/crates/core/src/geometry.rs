//! Coordinate conventions and gaze direction helpers.
//!
//! Image coordinates are pixels with the origin at the top-left corner, `u`
//! growing rightward and `v` growing downward. A positive pitch therefore
//! moves the projected iris center down in the image.
//!
//! Gaze vectors point out of the eye towards the camera side, so a frontal
//! gaze is `(0, 0, -1)`. The orthographic projection used by the eyeball
//! model is the `(x, y)` truncation of this vector scaled by the eyeball
//! radius.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A 2D point in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const fn new(u: f64, v: f64) -> Self {
        Point2 { u, v }
    }

    pub fn norm(self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.u * other.u + self.v * other.v
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Rotates the point by `angle` radians about `center`.
    pub fn rotate_about(self, center: Point2, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        let d = self - center;
        Point2::new(center.u + c * d.u - s * d.v, center.v + s * d.u + c * d.v)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.u - rhs.u, self.v - rhs.v)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.u * rhs, self.v * rhs)
    }
}

/// Eyeball pitch and yaw in radians.
///
/// Pitch is restricted to the open interval `(-pi/2, pi/2)`; yaw only needs
/// to be finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeAngles {
    pitch: f64,
    yaw: f64,
}

impl GazeAngles {
    pub fn new(pitch: f64, yaw: f64) -> Result<Self> {
        if !pitch.is_finite() || !yaw.is_finite() {
            return Err(Error::NonFinite("gaze angles"));
        }
        if pitch.abs() >= FRAC_PI_2 {
            return Err(Error::PitchOutOfRange(pitch));
        }
        Ok(GazeAngles { pitch, yaw })
    }

    pub const fn zero() -> Self {
        GazeAngles { pitch: 0.0, yaw: 0.0 }
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn to_vector(self) -> GazeVector {
        angles_to_vector(self)
    }
}

/// Unit gaze direction, camera-facing (`z < 0` for gaze towards the camera).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GazeVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &GazeVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    fn cross_norm(&self, other: &GazeVector) -> f64 {
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        (cx * cx + cy * cy + cz * cz).sqrt()
    }

    /// Recovers pitch and yaw. Fails when the vector points straight up or
    /// down (pitch at the gimbal limit).
    pub fn to_angles(&self) -> Result<GazeAngles> {
        let n = self.norm();
        let pitch = (self.y / n).clamp(-1.0, 1.0).asin();
        let yaw = (-self.x).atan2(-self.z);
        GazeAngles::new(pitch, yaw)
    }
}

pub fn angles_to_vector(g: GazeAngles) -> GazeVector {
    let (sp, cp) = g.pitch.sin_cos();
    let (sy, cy) = g.yaw.sin_cos();
    GazeVector {
        x: -cp * sy,
        y: sp,
        z: -cp * cy,
    }
}

/// Angle in radians between two gaze directions, in `[0, pi]`.
///
/// Mathematically `acos(a . b)`; evaluated as `atan2(|a x b|, a . b)` which
/// keeps full precision for nearly parallel vectors.
pub fn angular_error(a: GazeAngles, b: GazeAngles) -> f64 {
    let va = angles_to_vector(a);
    let vb = angles_to_vector(b);
    va.cross_norm(&vb).atan2(va.dot(&vb))
}

pub fn angular_error_deg(a: GazeAngles, b: GazeAngles) -> f64 {
    angular_error(a, b).to_degrees()
}
