//! Greedy stroke fitting that maximizes the stroke reward directly.
//!
//! Each round draws chord-like candidates through random foreground pixels,
//! keeps the one with the largest marginal reward gain, then hill-climbs its
//! endpoints one pixel at a time. Fitting stops at the stroke budget or when
//! no candidate gains at least `min_gain`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::point::Point;
use crate::reward::{
    aggregate_reward, Aggregator, Evaluation, RewardConfig, RewardError, RewardReport,
};
use crate::stroke::{Stroke, StrokeSet};

const PROPOSAL_RETRIES: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("empty foreground: nothing to fit")]
    EmptyForeground,
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reward(RewardError),
}

impl From<RewardError> for OptimizerError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::EmptyForeground => OptimizerError::EmptyForeground,
            other => OptimizerError::Reward(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_strokes: usize,
    pub candidates_per_round: usize,
    /// Minimum marginal `r_s` gain; `None` uses the reward's novelty threshold.
    pub min_gain: Option<f64>,
    pub rng_seed: u64,
    pub refine_steps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_strokes: 12,
            candidates_per_round: 96,
            min_gain: None,
            rng_seed: 0,
            refine_steps: 12,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.max_strokes == 0 {
            return Err(OptimizerError::InvalidConfig(
                "max_strokes must be >= 1".into(),
            ));
        }
        if self.candidates_per_round == 0 {
            return Err(OptimizerError::InvalidConfig(
                "candidates_per_round must be >= 1".into(),
            ));
        }
        if let Some(g) = self.min_gain {
            if !(g >= 0.0) {
                return Err(OptimizerError::InvalidConfig(format!(
                    "min_gain must be >= 0, got {g}"
                )));
            }
        }
        Ok(())
    }
}

fn black_pixels(glyph: &BinaryGlyph) -> Vec<(usize, usize)> {
    let w = glyph.width();
    glyph
        .mask()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| (i % w, i / w))
        .collect()
}

/// Walk from `origin` (pixel units) along `dir` in half-pixel steps and
/// return the pixel holding the last black point.
fn walk(glyph: &BinaryGlyph, origin: (f64, f64), dir: (f64, f64)) -> (usize, usize) {
    let (w, h) = (glyph.width() as f64, glyph.height() as f64);
    let mut last = (origin.0 as usize, origin.1 as usize);
    let mut k = 1.0;
    loop {
        let (x, y) = (origin.0 + dir.0 * 0.5 * k, origin.1 + dir.1 * 0.5 * k);
        if x < 0.0 || y < 0.0 || x >= w || y >= h {
            return last;
        }
        let (c, r) = (x as usize, y as usize);
        if !glyph.pixel(c, r) {
            return last;
        }
        last = (c, r);
        k += 1.0;
    }
}

/// Draw up to `count` chords of the foreground through uniformly chosen
/// black pixels in uniformly random directions. Endpoints are black pixel
/// centers; chords shorter than one pixel are redrawn a bounded number of
/// times, then skipped.
pub fn propose_candidates<R: Rng + ?Sized>(
    glyph: &BinaryGlyph,
    rng: &mut R,
    count: usize,
) -> Result<Vec<Stroke>, OptimizerError> {
    let black = black_pixels(glyph);
    if black.is_empty() {
        return Err(OptimizerError::EmptyForeground);
    }
    let min_len = 1.0 / glyph.width().max(glyph.height()) as f64;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..PROPOSAL_RETRIES {
            let (c, r) = black[rng.random_range(0..black.len())];
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let dir = (theta.cos(), theta.sin());
            let origin = (c as f64 + 0.5, r as f64 + 0.5);
            let a = walk(glyph, origin, (-dir.0, -dir.1));
            let b = walk(glyph, origin, dir);
            let stroke = Stroke::new(glyph.pixel_center(a.0, a.1), glyph.pixel_center(b.0, b.1));
            if stroke.length() >= min_len {
                out.push(stroke);
                break;
            }
        }
    }
    Ok(out)
}

/// Gain of `stroke` over the aggregator's current reward, with its
/// evaluation, or `None` if it would not be accepted.
fn score(agg: &Aggregator<'_>, stroke: &Stroke) -> Result<Option<(f64, Evaluation)>, RewardError> {
    let eval = agg.evaluate(stroke)?;
    if !eval.record.accepted() {
        return Ok(None);
    }
    Ok(Some((agg.r_s_after(&eval) - agg.r_s(), eval)))
}

fn neighbours(stroke: &Stroke, dx: f64, dy: f64) -> Vec<Stroke> {
    let mut out = Vec::with_capacity(16);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            if i == 0 && j == 0 {
                continue;
            }
            let delta = Point::new(i as f64 * dx, j as f64 * dy);
            out.push(Stroke::new(stroke.start + delta, stroke.end));
            out.push(Stroke::new(stroke.start, stroke.end + delta));
        }
    }
    out
}

/// Greedily fit strokes to `glyph`. Returns the accepted strokes and their
/// reward report.
pub fn greedy_fit(
    glyph: &BinaryGlyph,
    ocfg: &OptimizerConfig,
    rcfg: &RewardConfig,
) -> Result<(StrokeSet, RewardReport), OptimizerError> {
    ocfg.validate()?;
    let mut agg = Aggregator::new(glyph, rcfg)?;
    let min_gain = ocfg.min_gain.unwrap_or(rcfg.tau_novel);
    let mut rng = ChaCha8Rng::seed_from_u64(ocfg.rng_seed);
    let (dx, dy) = (1.0 / glyph.width() as f64, 1.0 / glyph.height() as f64);
    let mut accepted = StrokeSet::default().with_source_id(glyph.source_id());

    while accepted.len() < ocfg.max_strokes {
        let mut best: Option<(f64, Stroke, Evaluation)> = None;
        for cand in propose_candidates(glyph, &mut rng, ocfg.candidates_per_round)? {
            if let Some((gain, eval)) = score(&agg, &cand)? {
                if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                    best = Some((gain, cand, eval));
                }
            }
        }
        let Some((mut gain, mut stroke, mut eval)) = best else {
            break;
        };
        if gain < min_gain {
            break;
        }

        for _ in 0..ocfg.refine_steps {
            let mut improved = false;
            for cand in neighbours(&stroke, dx, dy) {
                if let Some((g, e)) = score(&agg, &cand)? {
                    if g > gain {
                        (gain, stroke, eval) = (g, cand, e);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }

        agg.commit(eval);
        accepted.push(stroke);
    }

    let report = aggregate_reward(glyph, &accepted, !accepted.is_empty(), rcfg)?;
    Ok((accepted, report))
}
