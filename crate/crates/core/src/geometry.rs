//! Geometric kernel: segment sampling, stroke frames, ray marching against
//! the foreground mask, and pixel-center polygon rasterization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::point::Point;
use crate::stroke::Stroke;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("stroke endpoints coincide")]
    DegenerateStroke,
    #[error("sampling threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("ray origin ({0}, {1}) is not on a black pixel")]
    OriginNotBlack(f64, f64),
    #[error("march step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Ray-march step of a quarter pixel along the longer image axis.
pub fn default_march_step(width: usize, height: usize) -> f64 {
    0.25 / width.max(height) as f64
}

/// A stroke with `m` evenly spaced interior samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledStroke {
    pub stroke: Stroke,
    /// `interior_points[i - 1] = (i * start + (m + 1 - i) * end) / (m + 1)`
    /// for `i = 1..=m`, so the first entry lies next to `end`.
    pub interior_points: Vec<Point>,
    pub m: usize,
    pub spacing: f64,
}

impl SampledStroke {
    /// Start, interior samples and end, ordered from `start` to `end`.
    pub fn chain(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.m + 2);
        pts.push(self.stroke.start);
        pts.extend(self.interior_points.iter().rev().copied());
        pts.push(self.stroke.end);
        pts
    }
}

/// Smallest `m >= 0` with `length / (m + 1) < threshold`.
pub fn sample_count(length: f64, threshold: f64) -> usize {
    let mut m = (length / threshold).floor().max(0.0) as usize;
    while length / (m + 1) as f64 >= threshold {
        m += 1;
    }
    while m > 0 && length / (m as f64) < threshold {
        m -= 1;
    }
    m
}

/// Sample a stroke so neighbouring samples are closer than `threshold`.
pub fn sample_stroke(stroke: &Stroke, threshold: f64) -> Result<SampledStroke, GeometryError> {
    if !(threshold > 0.0) {
        return Err(GeometryError::InvalidThreshold(threshold));
    }
    if stroke.is_degenerate() {
        return Err(GeometryError::DegenerateStroke);
    }
    let length = stroke.length();
    let m = sample_count(length, threshold);
    let denom = (m + 1) as f64;
    let interior_points = (1..=m)
        .map(|i| {
            let (a, b) = (i as f64, (m + 1 - i) as f64);
            Point::new(
                (a * stroke.start.x + b * stroke.end.x) / denom,
                (a * stroke.start.y + b * stroke.end.y) / denom,
            )
        })
        .collect();
    Ok(SampledStroke {
        stroke: *stroke,
        interior_points,
        m,
        spacing: length / denom,
    })
}

/// Unit tangent and counterclockwise unit normal of a stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeFrame {
    pub tangent: Point,
    pub normal: Point,
}

impl StrokeFrame {
    pub fn from_stroke(stroke: &Stroke) -> Result<Self, GeometryError> {
        if stroke.is_degenerate() {
            return Err(GeometryError::DegenerateStroke);
        }
        let d = stroke.end - stroke.start;
        let len = d.norm();
        let tangent = Point::new(d.x / len, d.y / len);
        Ok(Self {
            tangent,
            normal: Point::new(-tangent.y, tangent.x),
        })
    }
}

/// Distance from `origin` to the black/white boundary along `dir`, measured
/// in whole `step`s: the largest `k * step` such that every test point
/// `origin + j * step * dir` for `j = 0..=k` is black.
pub fn march_to_boundary(
    glyph: &BinaryGlyph,
    origin: Point,
    dir: Point,
    step: f64,
) -> Result<f64, GeometryError> {
    if !(step > 0.0) {
        return Err(GeometryError::InvalidStep(step));
    }
    if !glyph.is_black_at(origin) {
        return Err(GeometryError::OriginNotBlack(origin.x, origin.y));
    }
    // Any ray leaves the unit square within 2 units.
    let max_k = (2.0 / step).ceil() as u64 + 1;
    let mut k = 0u64;
    while k < max_k {
        let d = (k + 1) as f64 * step;
        if !glyph.is_black_at(origin + dir * d) {
            break;
        }
        k += 1;
    }
    Ok(k as f64 * step)
}

/// Closed polygon in normalized coordinates. Insideness follows the
/// even-odd rule, so self-intersections are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePolygon {
    pub vertices: Vec<Point>,
}

impl CoveragePolygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Pixels `[col_start, col_end)` of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub row: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl Span {
    pub fn indices(self, width: usize) -> std::ops::Range<usize> {
        self.row * width + self.col_start..self.row * width + self.col_end
    }
}

/// First column whose pixel center is `>= x`.
fn first_center_at_or_after(x: f64, width: usize) -> usize {
    let w = width as f64;
    let center = |c: usize| (c as f64 + 0.5) / w;
    let guess = (x * w - 0.5).ceil();
    let mut c = if guess.is_nan() || guess <= 0.0 {
        0
    } else if guess >= w {
        width
    } else {
        guess as usize
    };
    while c > 0 && center(c - 1) >= x {
        c -= 1;
    }
    while c < width && center(c) < x {
        c += 1;
    }
    c
}

/// Rows of pixels whose centers lie inside `poly` (even-odd rule).
///
/// A pixel center on a crossing `x` counts as inside when it is the left
/// end of a span, which matches the usual half-open crossing test.
pub fn fill_spans(poly: &CoveragePolygon, width: usize, height: usize) -> Vec<Span> {
    let mut spans = Vec::new();
    if poly.vertices.len() < 3 || poly.vertices.iter().any(|p| !p.is_finite()) {
        return spans;
    }
    let (min_y, max_y) = poly
        .vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let h = height as f64;
    let row_lo = ((min_y * h - 0.5).floor().max(0.0) as usize).min(height);
    let row_hi = ((max_y * h - 0.5).ceil().max(-1.0) + 1.0).min(h) as usize;

    let mut xs = Vec::new();
    for row in row_lo..row_hi {
        let y = (row as f64 + 0.5) / h;
        xs.clear();
        for (a, b) in poly.edges() {
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let col_start = first_center_at_or_after(pair[0], width);
            let col_end = first_center_at_or_after(pair[1], width);
            if col_start < col_end {
                spans.push(Span {
                    row,
                    col_start,
                    col_end,
                });
            }
        }
    }
    spans
}

/// Per-pixel membership of the union of `polys`.
pub fn union_mask(polys: &[CoveragePolygon], width: usize, height: usize) -> Vec<bool> {
    let mut covered = vec![false; width * height];
    for poly in polys {
        for span in fill_spans(poly, width, height) {
            covered[span.indices(width)]
                .iter_mut()
                .for_each(|c| *c = true);
        }
    }
    covered
}

/// Number of black pixels whose center lies in the union of `polys`.
pub fn polygon_region_intersection_area(glyph: &BinaryGlyph, polys: &[CoveragePolygon]) -> usize {
    union_mask(polys, glyph.width(), glyph.height())
        .iter()
        .zip(glyph.mask())
        .filter(|(&c, &b)| c && b)
        .count()
}
