use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SketchFrame;

pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("resolution {0} is below the minimum of {MIN_RESOLUTION}")]
    ResolutionTooSmall(usize),
    #[error("expected {expected} pixels, got {actual}")]
    PixelCount { expected: usize, actual: usize },
    #[error("pixel values must lie in [0, 1]")]
    PixelRange,
}

/// Square grayscale image, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    resolution: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn zeros(resolution: usize) -> Self {
        Self {
            resolution,
            pixels: vec![0.0; resolution * resolution],
        }
    }

    pub fn from_pixels(resolution: usize, pixels: Vec<f64>) -> Result<Self, RasterError> {
        if pixels.len() != resolution * resolution {
            return Err(RasterError::PixelCount {
                expected: resolution * resolution,
                actual: pixels.len(),
            });
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(RasterError::PixelRange);
        }
        Ok(Self { resolution, pixels })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.resolution + col]
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.resolution + col] = v;
    }

    /// Number of pixels with a non-zero value.
    pub fn ink(&self) -> usize {
        self.pixels.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn mean_squared_error(&self, other: &Raster) -> f64 {
        debug_assert_eq!(self.pixels.len(), other.pixels.len());
        let n = self.pixels.len() as f64;
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n
    }
}

#[inline]
fn to_pixel(coord: f64, resolution: usize) -> i64 {
    let idx = (coord * resolution as f64).floor();
    (idx.max(0.0) as i64).min(resolution as i64 - 1)
}

/// Draws every stroke as binary line segments between consecutive points.
pub fn rasterize(frame: &SketchFrame, resolution: usize) -> Result<Raster, RasterError> {
    if resolution < MIN_RESOLUTION {
        return Err(RasterError::ResolutionTooSmall(resolution));
    }
    let mut raster = Raster::zeros(resolution);
    for stroke in &frame.strokes {
        let mut prev: Option<(i64, i64)> = None;
        for p in stroke.points() {
            let cur = (to_pixel(p.x, resolution), to_pixel(p.y, resolution));
            match prev {
                None => raster.set(cur.1 as usize, cur.0 as usize, 1.0),
                Some(start) => draw_line(&mut raster, start, cur),
            }
            prev = Some(cur);
        }
    }
    Ok(raster)
}

/// Integer Bresenham traversal including both endpoints.
fn draw_line(raster: &mut Raster, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        raster.set(y as usize, x as usize, 1.0);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{Point, Stroke};
    use proptest::prelude::*;

    fn frame(points: &[(f64, f64)]) -> SketchFrame {
        let stroke: Stroke = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Point::new(x, y, i as f64))
            .collect();
        SketchFrame::from_strokes(vec![stroke])
    }

    #[test]
    fn empty_frame_is_blank() {
        let r = rasterize(&SketchFrame::new(), 64).unwrap();
        assert_eq!(r.pixels().len(), 4096);
        assert_eq!(r.ink(), 0);
    }

    #[test]
    fn single_point_sets_one_pixel() {
        let r = rasterize(&frame(&[(0.5, 0.5)]), 64).unwrap();
        assert_eq!(r.ink(), 1);
        assert_eq!(r.get(32, 32), 1.0);
    }

    #[test]
    fn horizontal_line_fills_row() {
        let r = rasterize(&frame(&[(0.0, 0.5), (1.0, 0.5)]), 64).unwrap();
        for row in 0..64 {
            for col in 0..64 {
                let expected = if row == 32 { 1.0 } else { 0.0 };
                assert_eq!(r.get(row, col), expected, "row {row} col {col}");
            }
        }
    }

    #[test]
    fn resolution_floor() {
        assert_eq!(
            rasterize(&SketchFrame::new(), 7),
            Err(RasterError::ResolutionTooSmall(7))
        );
        assert!(rasterize(&SketchFrame::new(), 8).is_ok());
    }

    #[test]
    fn from_pixels_validates() {
        assert!(Raster::from_pixels(8, vec![0.0; 63]).is_err());
        assert!(Raster::from_pixels(8, vec![1.5; 64]).is_err());
    }

    // Independent oracle: for a segment between pixel centres, the drawn
    // pixels must be exactly one per step along the major axis, each within
    // half a pixel of the ideal line.
    fn line_oracle_ok(r: &Raster, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) -> bool {
        let res = r.resolution() as i64;
        let mut drawn = Vec::new();
        for row in 0..res {
            for col in 0..res {
                if r.get(row as usize, col as usize) > 0.0 {
                    drawn.push((col, row));
                }
            }
        }
        let (major_x, len) = if (x1 - x0).abs() >= (y1 - y0).abs() {
            (true, (x1 - x0).abs())
        } else {
            (false, (y1 - y0).abs())
        };
        if drawn.len() as i64 != len + 1 {
            return false;
        }
        drawn.iter().all(|&(x, y)| {
            if len == 0 {
                return (x, y) == (x0, y0);
            }
            let (a, b, a0, a1, b0, b1) = if major_x {
                (x, y, x0, x1, y0, y1)
            } else {
                (y, x, y0, y1, x0, x1)
            };
            let t = (a - a0) as f64 / (a1 - a0) as f64;
            if !(0.0..=1.0).contains(&t) {
                return false;
            }
            let ideal = b0 as f64 + t * (b1 - b0) as f64;
            (b as f64 - ideal).abs() <= 0.5 + 1e-12
        })
    }

    proptest! {
        #[test]
        fn segment_matches_traversal_oracle(
            x0 in 0i64..32, y0 in 0i64..32, x1 in 0i64..32, y1 in 0i64..32
        ) {
            let res = 32usize;
            let c = |v: i64| (v as f64 + 0.5) / res as f64;
            let r = rasterize(&frame(&[(c(x0), c(y0)), (c(x1), c(y1))]), res).unwrap();
            prop_assert!(line_oracle_ok(&r, (x0, y0), (x1, y1)));
        }

        #[test]
        fn rasterize_is_repeatable(pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20)) {
            let f = frame(&pts);
            let a = rasterize(&f, 16).unwrap();
            let b = rasterize(&f, 16).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        }
    }
}
