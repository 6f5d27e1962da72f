//! Gaussian landmark heatmaps and soft-argmax decoding.
//!
//! A heatmap covers the input image at `1 / scale` resolution. Cell `(x, y)`
//! corresponds to image position `(x * scale, y * scale)`.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;

pub const DEFAULT_WIDTH: usize = 75;
pub const DEFAULT_HEIGHT: usize = 45;
pub const DEFAULT_SCALE: f64 = 2.0;
pub const DEFAULT_SIGMA: f64 = 2.0;
/// Default soft-argmax temperature. A temperature of 10 leaves the zero
/// background with ~5% of the softmax mass, which biases decoded points
/// towards the grid centroid by up to a few pixels; 20 keeps the round-trip
/// error under 0.2 px across the interior.
pub const DEFAULT_TEMPERATURE: f64 = 20.0;
pub const LANDMARK_COUNT: usize = 18;
pub const MIN_DIM: usize = 8;

/// Grid dimensions and image-to-grid downscale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            scale: DEFAULT_SCALE,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.width < MIN_DIM || self.height < MIN_DIM {
            return Err(invalid(format!(
                "heatmap must be at least {MIN_DIM}x{MIN_DIM}, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid("heatmap scale must be positive"));
        }
        Ok(())
    }
}

/// Per-landmark confidence grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    scale: f64,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.width * grid.height {
            return Err(Error::DimensionMismatch {
                expected: grid.width * grid.height,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("heatmap values"));
        }
        Ok(Heatmap {
            width: grid.width,
            height: grid.height,
            scale: grid.scale,
            values,
        })
    }

    pub fn zeros(grid: GridSpec) -> Result<Self> {
        Self::from_values(grid, vec![0.0; grid.width * grid.height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            width: self.width,
            height: self.height,
            scale: self.scale,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Plain-text dump: a `width height scale` header line followed by one
    /// line per row of space-separated values.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.width, self.height, self.scale);
        for row in self.values.chunks(self.width) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Empty("heatmap dump"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                msg: "expected `width height scale`".into(),
            });
        }
        let bad = |msg: &str| Error::Parse { line: 1, msg: msg.into() };
        let grid = GridSpec {
            width: fields[0].parse().map_err(|_| bad("bad width"))?,
            height: fields[1].parse().map_err(|_| bad("bad height"))?,
            scale: fields[2].parse().map_err(|_| bad("bad scale"))?,
        };
        let mut values = Vec::with_capacity(grid.width * grid.height);
        for (i, line) in lines.enumerate() {
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    msg: e.to_string(),
                })?);
            }
            if values.len() - before != grid.width {
                return Err(Error::Parse {
                    line: i + 2,
                    msg: format!("expected {} values", grid.width),
                });
            }
        }
        Heatmap::from_values(grid, values)
    }
}

/// Renders a unit-peak Gaussian centered on `landmark` (image pixels).
///
/// Landmarks outside the image are accepted; their map simply holds the
/// Gaussian tail.
pub fn encode(landmark: Point2, grid: GridSpec, sigma: f64) -> Result<Heatmap> {
    grid.validate()?;
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    if !landmark.is_finite() {
        return Err(Error::NonFinite("landmark"));
    }
    let cx = landmark.u / grid.scale;
    let cy = landmark.v / grid.scale;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut values = Vec::with_capacity(grid.width * grid.height);
    for y in 0..grid.height {
        let dy = y as f64 - cy;
        for x in 0..grid.width {
            let dx = x as f64 - cx;
            values.push((-(dx * dx + dy * dy) * inv).exp());
        }
    }
    Heatmap::from_values(grid, values)
}

/// Expected grid position under `softmax(temperature * h)`, returned in
/// image pixels. A constant map decodes to the grid centroid.
pub fn soft_argmax(h: &Heatmap, temperature: f64) -> Result<Point2> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid("temperature must be positive"));
    }
    let peak = h.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (y, row) in h.values.chunks(h.width).enumerate() {
        for (x, &v) in row.iter().enumerate() {
            let w = (temperature * (v - peak)).exp();
            total += w;
            sx += w * x as f64;
            sy += w * y as f64;
        }
    }
    Ok(Point2::new(h.scale * sx / total, h.scale * sy / total))
}

/// Ordered set of 18 heatmaps: 8 eyelid, 8 iris edge, iris center,
/// eyeball center.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSet {
    maps: Vec<Heatmap>,
}

impl HeatmapSet {
    pub fn new(maps: Vec<Heatmap>) -> Result<Self> {
        if maps.len() != LANDMARK_COUNT {
            return Err(Error::DimensionMismatch {
                expected: LANDMARK_COUNT,
                found: maps.len(),
            });
        }
        let grid = maps[0].grid();
        if maps.iter().any(|m| m.grid() != grid) {
            return Err(invalid("all heatmaps in a set must share dimensions"));
        }
        Ok(HeatmapSet { maps })
    }

    pub fn encode(points: &[Point2; LANDMARK_COUNT], grid: GridSpec, sigma: f64) -> Result<Self> {
        let maps = points
            .iter()
            .map(|&p| encode(p, grid, sigma))
            .collect::<Result<Vec<_>>>()?;
        HeatmapSet::new(maps)
    }

    pub fn decode(&self, temperature: f64) -> Result<[Point2; LANDMARK_COUNT]> {
        let mut out = [Point2::default(); LANDMARK_COUNT];
        for (slot, map) in out.iter_mut().zip(&self.maps) {
            *slot = soft_argmax(map, temperature)?;
        }
        Ok(out)
    }

    pub fn maps(&self) -> &[Heatmap] {
        &self.maps
    }

    pub fn grid(&self) -> GridSpec {
        self.maps[0].grid()
    }
}

/// Weighted sum of squared per-pixel differences over all 18 maps.
pub fn heatmap_loss(predicted: &HeatmapSet, truth: &HeatmapSet, alpha: f64) -> Result<f64> {
    let (pg, tg) = (predicted.grid(), truth.grid());
    if pg.width != tg.width || pg.height != tg.height {
        return Err(Error::DimensionMismatch {
            expected: tg.width * tg.height,
            found: pg.width * pg.height,
        });
    }
    let sum: f64 = predicted
        .maps
        .iter()
        .zip(&truth.maps)
        .flat_map(|(p, t)| p.values.iter().zip(&t.values))
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(alpha * sum)
}
