//! Synthetic glyphs drawn from thick segments, for tests and demos.

use crate::bitmap::BinaryGlyph;
use crate::point::Point;

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    p.distance(a + ab * t)
}

/// Render segments (normalized endpoints) as round-capped strokes of
/// `thickness_px` pixels on a `size x size` canvas.
pub fn render_segments(
    size: usize,
    segments: &[(Point, Point)],
    thickness_px: f64,
    id: &str,
) -> BinaryGlyph {
    let half = thickness_px / 2.0;
    let scale = size as f64;
    BinaryGlyph::from_fn(size, size, id, |c, r| {
        let p = Point::new(c as f64 + 0.5, r as f64 + 0.5);
        segments
            .iter()
            .any(|&(a, b)| point_segment_distance(p, a * scale, b * scale) <= half)
    })
    .expect("size >= 1")
}

/// Render an open polyline.
pub fn render_polyline(size: usize, points: &[Point], thickness_px: f64, id: &str) -> BinaryGlyph {
    let segs: Vec<_> = points.windows(2).map(|w| (w[0], w[1])).collect();
    render_segments(size, &segs, thickness_px, id)
}

pub fn horizontal_bar(size: usize, y: f64, x0: f64, x1: f64, thickness_px: f64) -> BinaryGlyph {
    render_segments(
        size,
        &[(Point::new(x0, y), Point::new(x1, y))],
        thickness_px,
        "bar",
    )
}

pub fn plus_sign(size: usize, arm: f64, thickness_px: f64) -> BinaryGlyph {
    let c = 0.5;
    render_segments(
        size,
        &[
            (Point::new(c - arm, c), Point::new(c + arm, c)),
            (Point::new(c, c - arm), Point::new(c, c + arm)),
        ],
        thickness_px,
        "plus",
    )
}

/// Closed triangle outline.
pub fn triangle(size: usize, a: Point, b: Point, c: Point, thickness_px: f64) -> BinaryGlyph {
    render_segments(size, &[(a, b), (b, c), (c, a)], thickness_px, "triangle")
}

/// Ring of the given radius, as a 64-gon.
pub fn ring(size: usize, center: Point, radius: f64, thickness_px: f64) -> BinaryGlyph {
    let pts: Vec<Point> = (0..=64)
        .map(|i| {
            let a = i as f64 / 64.0 * std::f64::consts::TAU;
            Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect();
    render_polyline(size, &pts, thickness_px, "ring")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_has_expected_extent() {
        let g = horizontal_bar(100, 0.5, 0.2, 0.8, 10.0);
        assert!(g.is_black_at(Point::new(0.5, 0.5)));
        assert!(g.is_black_at(Point::new(0.5, 0.54)));
        assert!(!g.is_black_at(Point::new(0.5, 0.56)));
        assert!(!g.is_black_at(Point::new(0.1, 0.5)));
        // Area of a capsule: rectangle plus a disc.
        let expected = 60.0 * 10.0 + std::f64::consts::PI * 25.0;
        assert!((g.black_count() as f64 - expected).abs() / expected < 0.03);
    }

    #[test]
    fn plus_is_one_component() {
        let g = plus_sign(64, 0.3, 6.0);
        assert_eq!(crate::bitmap::count_components(&g), 1);
    }
}
