//! Stroke reward: validity filtering, per-stroke coverage polygons and
//! sequential novelty-gated aggregation.
//!
//! For each stroke the pipeline
//!
//! 1. samples the segment so neighbouring samples are closer than `d` and
//!    rejects it if any sample is off the foreground;
//! 2. marches rays along both normals from every sample to the black/white
//!    boundary, truncates abnormally long rays to `lambda` times the mean of
//!    the remaining ones, extends both endpoints along the tangent, and joins
//!    the offsets into a coverage polygon;
//! 3. accepts the stroke only if its polygon adds at least `tau_novel` of
//!    the foreground that earlier accepted strokes did not cover.
//!
//! The stroke reward is `covered / |foreground| * (1 - alpha * invalid)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::geometry::{
    default_march_step, fill_spans, march_to_boundary, sample_stroke, CoveragePolygon,
    GeometryError, SampledStroke, StrokeFrame,
};
use crate::point::Point;
use crate::stroke::{Stroke, StrokeSet};

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("empty foreground: the glyph has no black pixels")]
    EmptyForeground,
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error("sample point ({0}, {1}) is not on a black pixel")]
    PreconditionViolated(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Maximum spacing between validity samples.
    pub d: f64,
    /// Abnormal-extension threshold.
    pub lambda: f64,
    /// Penalty per invalid stroke.
    pub alpha: f64,
    /// Weight of the format reward.
    pub beta: f64,
    /// Minimum fraction of the foreground a stroke must newly cover.
    pub tau_novel: f64,
    /// Ray-march step; `None` means a quarter pixel.
    pub march_step: Option<f64>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            d: 0.05,
            lambda: 1.3,
            alpha: 0.1,
            beta: 0.125,
            tau_novel: 0.005,
            march_step: None,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |msg: String| Err(RewardError::InvalidConfig(msg));
        if !(self.d > 0.0) {
            return bad(format!("d must be > 0, got {}", self.d));
        }
        if !(self.lambda > 1.0) {
            return bad(format!("lambda must be > 1, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(0.0..1.0).contains(&self.tau_novel) {
            return bad(format!(
                "tau_novel must be in [0, 1), got {}",
                self.tau_novel
            ));
        }
        if let Some(step) = self.march_step {
            if !(step > 0.0) {
                return bad(format!("march_step must be > 0, got {step}"));
            }
        }
        Ok(())
    }

    pub fn step_for(&self, glyph: &BinaryGlyph) -> f64 {
        self.march_step
            .unwrap_or_else(|| default_march_step(glyph.width(), glyph.height()))
    }
}

/// Geometry of one stroke's coverage estimate.
///
/// Per-sample vectors are indexed along the stroke: index 0 is the start
/// point, the last index is the end point, interior samples in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeCoverage {
    pub frame: StrokeFrame,
    pub samples: Vec<Point>,
    /// `(d+, d-)` ray lengths along `+normal` and `-normal`.
    pub raw_extensions: Vec<(f64, f64)>,
    pub mean_ext: f64,
    pub abnormal_set: Vec<usize>,
    pub refined_mean: f64,
    pub truncated_extensions: Vec<(f64, f64)>,
    /// Tangential extension at the start and end.
    pub tangential: (f64, f64),
    pub extended_endpoints: (Point, Point),
    /// `(q+, q-)` offset vertices per sample.
    pub offsets: Vec<(Point, Point)>,
    pub polygon: CoveragePolygon,
}

/// Returns `(valid, sampled)`. A stroke is valid iff its endpoints and every
/// interior sample lie on black pixels. Degenerate or non-finite strokes are
/// invalid and unsampled.
pub fn check_valid_stroke(
    glyph: &BinaryGlyph,
    stroke: &Stroke,
    cfg: &RewardConfig,
) -> (bool, Option<SampledStroke>) {
    if !stroke.is_finite() || stroke.is_degenerate() {
        return (false, None);
    }
    // Far out-of-frame strokes would need absurd sample counts.
    if stroke.length() / cfg.d > 1e6 {
        return (false, None);
    }
    match sample_stroke(stroke, cfg.d) {
        Ok(sampled) => {
            let valid = glyph.is_black_at(stroke.start)
                && glyph.is_black_at(stroke.end)
                && sampled
                    .interior_points
                    .iter()
                    .all(|&p| glyph.is_black_at(p));
            (valid, Some(sampled))
        }
        Err(_) => (false, None),
    }
}

/// Build the coverage polygon of a valid sampled stroke.
pub fn estimate_coverage(
    glyph: &BinaryGlyph,
    sampled: &SampledStroke,
    cfg: &RewardConfig,
) -> Result<StrokeCoverage, RewardError> {
    let frame = StrokeFrame::from_stroke(&sampled.stroke)?;
    let samples = sampled.chain();
    if let Some(p) = samples.iter().find(|&&p| !glyph.is_black_at(p)) {
        return Err(RewardError::PreconditionViolated(p.x, p.y));
    }

    let step = cfg.step_for(glyph);
    let n = frame.normal;
    let raw_extensions = samples
        .iter()
        .map(|&p| {
            Ok((
                march_to_boundary(glyph, p, n, step)?,
                march_to_boundary(glyph, p, -n, step)?,
            ))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;

    let count = raw_extensions.len() as f64;
    let mean_ext = raw_extensions.iter().map(|(a, b)| a + b).sum::<f64>() / (2.0 * count);
    let limit = cfg.lambda * mean_ext;
    let abnormal_set: Vec<usize> = raw_extensions
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| a.max(*b) > limit)
        .map(|(j, _)| j)
        .collect();

    let kept: Vec<&(f64, f64)> = raw_extensions
        .iter()
        .enumerate()
        .filter(|(j, _)| abnormal_set.binary_search(j).is_err())
        .map(|(_, e)| e)
        .collect();
    let refined_mean = if kept.is_empty() {
        mean_ext
    } else {
        kept.iter().map(|(a, b)| a + b).sum::<f64>() / (2.0 * kept.len() as f64)
    };

    let cap = cfg.lambda * refined_mean;
    let truncated_extensions: Vec<(f64, f64)> = raw_extensions
        .iter()
        .map(|&(a, b)| (a.min(cap), b.min(cap)))
        .collect();

    let (first, last) = (
        truncated_extensions[0],
        truncated_extensions[truncated_extensions.len() - 1],
    );
    let tangential = ((first.0 + first.1) / 2.0, (last.0 + last.1) / 2.0);
    let t = frame.tangent;
    let extended_endpoints = (
        sampled.stroke.start - t * tangential.0,
        sampled.stroke.end + t * tangential.1,
    );

    let offsets: Vec<(Point, Point)> = samples
        .iter()
        .zip(&truncated_extensions)
        .map(|(&p, &(plus, minus))| (p + n * plus, p - n * minus))
        .collect();

    let mut vertices = Vec::with_capacity(2 * offsets.len() + 2);
    vertices.push(extended_endpoints.0);
    vertices.extend(offsets.iter().map(|o| o.0));
    vertices.push(extended_endpoints.1);
    vertices.extend(offsets.iter().rev().map(|o| o.1));

    Ok(StrokeCoverage {
        frame,
        samples,
        raw_extensions,
        mean_ext,
        abnormal_set,
        refined_mean,
        truncated_extensions,
        tangential,
        extended_endpoints,
        offsets,
        polygon: CoveragePolygon::new(vertices),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub index: usize,
    pub valid_geometric: bool,
    /// False when the novelty test failed or was never reached.
    pub valid_novelty: bool,
    /// Newly covered foreground fraction; absent for geometrically invalid strokes.
    pub novelty_ratio: Option<f64>,
    pub coverage: Option<StrokeCoverage>,
}

impl StrokeRecord {
    pub fn accepted(&self) -> bool {
        self.valid_geometric && self.valid_novelty
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardReport {
    pub per_stroke: Vec<StrokeRecord>,
    pub n_invalid: usize,
    pub final_coverage_pixels: usize,
    pub omega_b_pixels: usize,
    pub r_s: f64,
    pub r_f: f64,
    pub r: f64,
}

impl RewardReport {
    /// `|C_final ∩ Ω_B| / |Ω_B|`.
    pub fn coverage_fraction(&self) -> f64 {
        self.final_coverage_pixels as f64 / self.omega_b_pixels as f64
    }

    pub fn accepted_count(&self) -> usize {
        self.per_stroke.iter().filter(|r| r.accepted()).count()
    }

    pub fn stroke_count(&self) -> usize {
        self.per_stroke.len()
    }

    /// Coverage polygons of accepted strokes, in stroke order.
    pub fn accepted_polygons(&self) -> Vec<&CoveragePolygon> {
        self.per_stroke
            .iter()
            .filter(|r| r.accepted())
            .filter_map(|r| r.coverage.as_ref().map(|c| &c.polygon))
            .collect()
    }
}

/// Stroke reward from pixel counts.
pub fn stroke_reward(covered: usize, omega: usize, n_invalid: usize, alpha: f64) -> f64 {
    (covered as f64 / omega as f64) * (1.0 - alpha * n_invalid as f64)
}

/// Outcome of scoring one stroke against the current accepted union.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub record: StrokeRecord,
    /// Black pixel indices this stroke would newly cover.
    new_pixels: Vec<usize>,
}

impl Evaluation {
    pub fn new_pixel_count(&self) -> usize {
        self.new_pixels.len()
    }
}

/// Incremental form of the sequential aggregation. Scoring a candidate with
/// [`Aggregator::evaluate`] does not change state; [`Aggregator::commit`]
/// appends it.
#[derive(Debug, Clone)]
pub struct Aggregator<'a> {
    glyph: &'a BinaryGlyph,
    cfg: RewardConfig,
    covered: Vec<bool>,
    covered_black: usize,
    omega: usize,
    n_invalid: usize,
    records: Vec<StrokeRecord>,
}

impl<'a> Aggregator<'a> {
    pub fn new(glyph: &'a BinaryGlyph, cfg: &RewardConfig) -> Result<Self, RewardError> {
        cfg.validate()?;
        let omega = glyph.black_count();
        if omega == 0 {
            return Err(RewardError::EmptyForeground);
        }
        Ok(Self {
            glyph,
            cfg: *cfg,
            covered: vec![false; glyph.width() * glyph.height()],
            covered_black: 0,
            omega,
            n_invalid: 0,
            records: Vec::new(),
        })
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn covered_black(&self) -> usize {
        self.covered_black
    }

    pub fn n_invalid(&self) -> usize {
        self.n_invalid
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Current stroke reward.
    pub fn r_s(&self) -> f64 {
        stroke_reward(
            self.covered_black,
            self.omega,
            self.n_invalid,
            self.cfg.alpha,
        )
    }

    /// Stroke reward if `eval` were committed.
    pub fn r_s_after(&self, eval: &Evaluation) -> f64 {
        let invalid = self.n_invalid + usize::from(!eval.record.accepted());
        stroke_reward(
            self.covered_black + eval.new_pixels.len(),
            self.omega,
            invalid,
            self.cfg.alpha,
        )
    }

    pub fn evaluate(&self, stroke: &Stroke) -> Result<Evaluation, RewardError> {
        let index = self.records.len();
        let (valid, sampled) = check_valid_stroke(self.glyph, stroke, &self.cfg);
        let sampled = match (valid, sampled) {
            (true, Some(s)) => s,
            _ => {
                return Ok(Evaluation {
                    record: StrokeRecord {
                        index,
                        valid_geometric: false,
                        valid_novelty: false,
                        novelty_ratio: None,
                        coverage: None,
                    },
                    new_pixels: Vec::new(),
                })
            }
        };

        let coverage = estimate_coverage(self.glyph, &sampled, &self.cfg)?;
        let width = self.glyph.width();
        let mask = self.glyph.mask();
        let mut new_pixels = Vec::new();
        for span in fill_spans(&coverage.polygon, width, self.glyph.height()) {
            new_pixels.extend(span.indices(width).filter(|&i| mask[i] && !self.covered[i]));
        }
        let ratio = new_pixels.len() as f64 / self.omega as f64;
        let novel = ratio >= self.cfg.tau_novel;
        if !novel {
            new_pixels.clear();
        }
        Ok(Evaluation {
            record: StrokeRecord {
                index,
                valid_geometric: true,
                valid_novelty: novel,
                novelty_ratio: Some(ratio),
                coverage: Some(coverage),
            },
            new_pixels,
        })
    }

    /// Append an evaluation produced by [`Aggregator::evaluate`] on the
    /// current state.
    pub fn commit(&mut self, eval: Evaluation) {
        debug_assert_eq!(eval.record.index, self.records.len());
        if eval.record.accepted() {
            for &i in &eval.new_pixels {
                self.covered[i] = true;
            }
            self.covered_black += eval.new_pixels.len();
        } else {
            self.n_invalid += 1;
        }
        self.records.push(eval.record);
    }

    pub fn push(&mut self, stroke: &Stroke) -> Result<&StrokeRecord, RewardError> {
        let eval = self.evaluate(stroke)?;
        self.commit(eval);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn finish(self, format_ok: bool) -> RewardReport {
        let r_s = self.r_s();
        let r_f = if format_ok { 1.0 } else { 0.0 };
        RewardReport {
            per_stroke: self.records,
            n_invalid: self.n_invalid,
            final_coverage_pixels: self.covered_black,
            omega_b_pixels: self.omega,
            r_s,
            r_f,
            r: r_s + self.cfg.beta * r_f,
        }
    }
}

/// Score a stroke set against a glyph, processing strokes in order.
pub fn aggregate_reward(
    glyph: &BinaryGlyph,
    strokes: &StrokeSet,
    format_ok: bool,
    cfg: &RewardConfig,
) -> Result<RewardReport, RewardError> {
    let mut agg = Aggregator::new(glyph, cfg)?;
    for stroke in strokes.iter() {
        agg.push(stroke)?;
    }
    Ok(agg.finish(format_ok))
}
