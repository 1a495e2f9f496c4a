//! SVG overlays of strokes, coverage polygons and a coordinate grid on top
//! of the glyph bitmap.

use std::fmt::Write as _;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::bitmap::BinaryGlyph;
use crate::geometry::CoveragePolygon;
use crate::point::Point;
use crate::reward::RewardReport;
use crate::stroke::StrokeSet;

pub const GRID_COLOR: &str = "#9e9e9e";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlaySpec {
    pub show_bitmap: bool,
    pub show_strokes: bool,
    pub show_polygons: bool,
    pub show_grid: bool,
    pub grid_divisions: usize,
    pub stroke_color: String,
    pub polygon_color: String,
    pub invalid_color: String,
}

impl Default for OverlaySpec {
    fn default() -> Self {
        Self {
            show_bitmap: true,
            show_strokes: true,
            show_polygons: true,
            show_grid: false,
            grid_divisions: 10,
            stroke_color: "#1f6feb".into(),
            polygon_color: "#2da44e".into(),
            invalid_color: "#d1242f".into(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn path_data(poly: &CoveragePolygon, w: f64, h: f64) -> String {
    let mut d = String::new();
    for (i, p) in poly.vertices.iter().enumerate() {
        let _ = write!(
            d,
            "{}{:.3} {:.3} ",
            if i == 0 { "M" } else { "L" },
            p.x * w,
            p.y * h
        );
    }
    d.push('Z');
    d
}

/// Render an SVG document whose viewBox matches the bitmap's pixel frame.
///
/// With a report, strokes it marks invalid are drawn in `invalid_color` and
/// the coverage polygons of accepted strokes are drawn in `polygon_color`.
pub fn render_overlay(
    glyph: &BinaryGlyph,
    report: Option<&RewardReport>,
    strokes: &StrokeSet,
    spec: &OverlaySpec,
) -> String {
    let (w, h) = (glyph.width() as f64, glyph.height() as f64);
    let scale = (512.0 / w.max(h)).max(1.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{:.0}" height="{:.0}">"#,
        w * scale,
        h * scale
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(glyph.source_id()));

    if spec.show_bitmap {
        let png = glyph.to_png_bytes().expect("in-memory PNG encoding");
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        let _ = writeln!(
            svg,
            r#"<image x="0" y="0" width="{w}" height="{h}" style="image-rendering:pixelated" href="data:image/png;base64,{b64}"/>"#
        );
    }

    if spec.show_grid && spec.grid_divisions >= 1 {
        let n = spec.grid_divisions;
        let sw = w.max(h) / 400.0;
        let font = w.max(h) / 40.0;
        let _ = writeln!(svg, r#"<g class="grid">"#);
        for i in 0..=n {
            let f = i as f64 / n as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.3}" y1="0" x2="{x:.3}" y2="{h}" stroke="{GRID_COLOR}" stroke-width="{sw:.3}"/>"#,
                x = f * w
            );
        }
        for i in 0..=n {
            let f = i as f64 / n as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="0" y1="{y:.3}" x2="{w}" y2="{y:.3}" stroke="{GRID_COLOR}" stroke-width="{sw:.3}"/>"#,
                y = f * h
            );
        }
        for i in 0..n {
            let f = i as f64 / n as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{:.3}" y="{font:.3}" font-size="{font:.3}" fill="{GRID_COLOR}">{f:.2}</text>"#,
                f * w + sw
            );
            if i > 0 {
                let _ = writeln!(
                    svg,
                    r#"<text x="{sw:.3}" y="{:.3}" font-size="{font:.3}" fill="{GRID_COLOR}">{f:.2}</text>"#,
                    f * h + font
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }

    if spec.show_polygons {
        if let Some(report) = report {
            let color = escape(&spec.polygon_color);
            let _ = writeln!(svg, r#"<g class="coverage">"#);
            for poly in report.accepted_polygons() {
                let _ = writeln!(
                    svg,
                    r#"<path d="{}" fill="{color}" fill-opacity="0.3" fill-rule="evenodd" stroke="{color}" stroke-width="{:.3}"/>"#,
                    path_data(poly, w, h),
                    w.max(h) / 300.0
                );
            }
            let _ = writeln!(svg, "</g>");
        }
    }

    if spec.show_strokes {
        let sw = w.max(h) / 120.0;
        let _ = writeln!(svg, r#"<g class="strokes" stroke-linecap="round">"#);
        for (i, s) in strokes.iter().enumerate() {
            let invalid = report
                .and_then(|r| r.per_stroke.get(i))
                .is_some_and(|rec| !rec.accepted());
            let color = escape(if invalid {
                &spec.invalid_color
            } else {
                &spec.stroke_color
            });
            let (a, b) = (scaled(s.start, w, h), scaled(s.end, w, h));
            let _ = writeln!(
                svg,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="{sw:.3}"/>"#,
                a.x, a.y, b.x, b.y
            );
        }
        let _ = writeln!(svg, "</g>");
    }

    svg.push_str("</svg>\n");
    svg
}

fn scaled(p: Point, w: f64, h: f64) -> Point {
    // Non-finite coordinates would produce invalid attribute values.
    let f = |v: f64| if v.is_finite() { v } else { 0.0 };
    Point::new(f(p.x) * w, f(p.y) * h)
}
