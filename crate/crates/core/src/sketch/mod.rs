//! Sketch input: timed strokes on a unit canvas, their rasterization and
//! affine manipulation.
//!
//! The canvas uses screen orientation: `x` grows to the right, `y` grows
//! downward, both in `[0, 1]`.

mod corpus;
mod raster;

pub use corpus::{read_corpus_manifest, read_pgm, synthetic_corpus, synthetic_frame, synthetic_frames, write_corpus, write_pgm, CorpusError};
pub use raster::{rasterize, Raster, RasterError, DEFAULT_RESOLUTION, MIN_RESOLUTION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point on the canvas with its time offset (ms) from the frame start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    /// Builds a point, clamping coordinates into the unit square.
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self {
            x: clamp_unit(x),
            y: clamp_unit(y),
            t,
        }
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    points: Vec<Point>,
}

impl Stroke {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a point; the timestamp is raised to the previous one if it
    /// would go backwards.
    pub fn push(&mut self, p: Point) {
        let mut p = Point::new(p.x, p.y, p.t);
        if let Some(last) = self.points.last() {
            if !(p.t >= last.t) {
                p.t = last.t;
            }
        }
        self.points.push(p);
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.points.last().map(|p| p.t)
    }
}

impl FromIterator<Point> for Stroke {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        let mut s = Stroke::new();
        for p in iter {
            s.push(p);
        }
        s
    }
}

/// The full canvas content: ordered strokes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SketchFrame {
    pub strokes: Vec<Stroke>,
}

impl SketchFrame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_strokes(strokes: Vec<Stroke>) -> Self {
        Self { strokes }
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.iter().all(Stroke::is_empty)
    }

    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(Stroke::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("scale must be finite and positive, got {0}")]
    NonPositiveScale(f64),
}

/// Canvas centre, the pivot for rotation and scaling.
pub const CANVAS_CENTER: (f64, f64) = (0.5, 0.5);

/// Rotates (radians, y-down canvas) then scales every point about the canvas
/// centre, translates, and clamps back into the unit square.
pub fn affine_transform(
    frame: &SketchFrame,
    rotation: f64,
    scale: f64,
    translate: (f64, f64),
) -> Result<SketchFrame, TransformError> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(TransformError::NonPositiveScale(scale));
    }
    let (sin, cos) = rotation.sin_cos();
    let (cx, cy) = CANVAS_CENTER;
    let (dx, dy) = translate;

    let strokes = frame
        .strokes
        .iter()
        .map(|stroke| {
            let points = stroke
                .points
                .iter()
                .map(|p| {
                    // Written as a displacement of p so identity parameters
                    // reproduce p exactly.
                    let (u, v) = (p.x - cx, p.y - cy);
                    let x = p.x + ((scale * (cos * u - sin * v) - u) + dx);
                    let y = p.y + ((scale * (sin * u + cos * v) - v) + dy);
                    Point::new(x, y, p.t)
                })
                .collect();
            Stroke { points }
        })
        .collect();
    Ok(SketchFrame { strokes })
}
