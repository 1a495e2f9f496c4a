//! Stroke sets in normalized coordinates and the textual output grammar.
//!
//! The grammar is a block delimited by `<strokes>` and `</strokes>` lines,
//! one segment per interior line:
//!
//! ```text
//! <strokes>
//! (0.1000, 0.2000) -> (0.9000, 0.2000)
//! </strokes>
//! ```
//!
//! Text outside the block is ignored.

use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;

/// Endpoints closer than this are a degenerate stroke.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StrokeError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// A line segment from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Point; 2]", into = "[Point; 2]")]
pub struct Stroke {
    pub start: Point,
    pub end: Point,
}

impl Stroke {
    pub const fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(Point::new(x1, y1), Point::new(x2, y2))
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn is_degenerate(&self) -> bool {
        self.length() <= DEGENERATE_EPS
    }

    pub fn is_finite(&self) -> bool {
        self.start.is_finite() && self.end.is_finite()
    }

    pub fn midpoint(&self) -> Point {
        self.start.midpoint(self.end)
    }
}

impl From<[Point; 2]> for Stroke {
    fn from([start, end]: [Point; 2]) -> Self {
        Stroke::new(start, end)
    }
}

impl From<Stroke> for [Point; 2] {
    fn from(s: Stroke) -> Self {
        [s.start, s.end]
    }
}

/// Ordered strokes of one glyph. Order matters for reward aggregation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrokeSet {
    #[serde(default)]
    pub source_id: String,
    pub strokes: Vec<Stroke>,
}

impl StrokeSet {
    pub fn new(strokes: Vec<Stroke>) -> Self {
        Self {
            source_id: String::new(),
            strokes,
        }
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Stroke> {
        self.strokes.iter()
    }

    pub fn push(&mut self, stroke: Stroke) {
        self.strokes.push(stroke);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stroke sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl FromIterator<Stroke> for StrokeSet {
    fn from_iter<I: IntoIterator<Item = Stroke>>(iter: I) -> Self {
        StrokeSet::new(iter.into_iter().collect())
    }
}

/// A chain of points; consecutive pairs form strokes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
}

/// Expand a polyline of `q` points into `q - 1` consecutive strokes.
pub fn expand_polyline(polyline: &Polyline) -> Result<StrokeSet, StrokeError> {
    if polyline.points.len() < 2 {
        return Err(StrokeError::TooFewPoints(polyline.points.len()));
    }
    Ok(polyline
        .points
        .windows(2)
        .map(|w| Stroke::new(w[0], w[1]))
        .collect())
}

/// Result of parsing model output text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    /// Every stroke on success, otherwise the longest parseable prefix.
    pub strokes: StrokeSet,
    pub format_ok: bool,
}

fn segment_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let num = r"([+-]?(?:\d+(?:\.\d*)?|\.\d+))";
        let pt = format!(r"\(\s*{num}\s*,\s*{num}\s*\)");
        Regex::new(&format!(r"^{pt}\s*->\s*{pt}$")).expect("valid regex")
    })
}

/// Parse a single `(x1, y1) -> (x2, y2)` line (already trimmed).
pub fn parse_segment_line(line: &str) -> Option<Stroke> {
    let caps = segment_regex().captures(line)?;
    let mut v = [0.0; 4];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = caps[i + 1].parse::<f64>().ok().filter(|x| x.is_finite())?;
    }
    Some(Stroke::from_coords(v[0], v[1], v[2], v[3]))
}

/// Parse structured model output. `format_ok` holds iff both delimiters are
/// present, every non-empty interior line is a segment, and at least one
/// segment exists.
pub fn parse_stroke_output(text: &str) -> ParsedOutput {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    let open = lines.iter().position(|l| *l == "<strokes>");
    let body_start = open.map_or(0, |i| i + 1);

    let mut strokes = Vec::new();
    let mut closed = false;
    let mut malformed = false;
    for line in &lines[body_start..] {
        if *line == "</strokes>" {
            closed = true;
            break;
        }
        if line.is_empty() {
            continue;
        }
        match parse_segment_line(line) {
            Some(s) => strokes.push(s),
            None => {
                malformed = true;
                break;
            }
        }
    }

    let format_ok = open.is_some() && closed && !malformed && !strokes.is_empty();
    ParsedOutput {
        strokes: StrokeSet::new(strokes),
        format_ok,
    }
}

/// Emit the canonical grammar with four decimal places per coordinate.
pub fn serialize_stroke_set(set: &StrokeSet) -> String {
    let mut out = String::from("<strokes>\n");
    for s in set.iter() {
        let _ = writeln!(
            out,
            "({:.4}, {:.4}) -> ({:.4}, {:.4})",
            s.start.x, s.start.y, s.end.x, s.end.y
        );
    }
    out.push_str("</strokes>");
    out
}
