//! Distance-decayed stochastic stroke masking.
//!
//! A center is drawn uniformly among stroke midpoints. Stroke `k` gets weight
//! `exp(-d_k / temperature)` from its midpoint distance `d_k`; weights are
//! rescaled to mean one and the discard probability is
//! `clip(base_rate * w_k, 0, 1)`. Each stroke is then dropped independently,
//! and dropped strokes have their coverage polygons whitened in the image.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::geometry::{fill_spans, CoveragePolygon};
use crate::point::Point;
use crate::stroke::StrokeSet;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("no strokes to mask")]
    EmptyStrokeSet,
    #[error("length mismatch: {strokes} strokes, {coverages} coverages, {plan} plan entries")]
    LengthMismatch {
        strokes: usize,
        coverages: usize,
        plan: usize,
    },
    #[error("center override {0} is out of range")]
    CenterOutOfRange(usize),
    #[error("invalid mask config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub temperature: f64,
    pub base_rate: f64,
    pub trials: usize,
    pub rng_seed: u64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            temperature: 0.4,
            base_rate: 0.5,
            trials: 3,
            rng_seed: 0,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        if !(self.temperature > 0.0) {
            return Err(MaskError::InvalidConfig(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return Err(MaskError::InvalidConfig(format!(
                "base_rate must be in (0, 1), got {}",
                self.base_rate
            )));
        }
        if self.trials == 0 {
            return Err(MaskError::InvalidConfig("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generator for masking trial `trial`: one ChaCha stream per trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub center_index: usize,
    pub center: Point,
    pub midpoints: Vec<Point>,
    pub distances: Vec<f64>,
    pub weights: Vec<f64>,
    pub normalized_weights: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub outcomes: Vec<bool>,
}

impl MaskPlan {
    pub fn masked_count(&self) -> usize {
        self.outcomes.iter().filter(|&&z| z).count()
    }

    /// Same plan with every outcome set to "keep".
    pub fn keep_all(mut self) -> Self {
        self.outcomes.iter_mut().for_each(|z| *z = false);
        self
    }
}

/// Deterministic part of a plan: everything except the outcomes.
pub fn discard_probabilities(
    strokes: &StrokeSet,
    cfg: &MaskConfig,
    center_index: usize,
) -> Result<MaskPlan, MaskError> {
    if strokes.is_empty() {
        return Err(MaskError::EmptyStrokeSet);
    }
    if center_index >= strokes.len() {
        return Err(MaskError::CenterOutOfRange(center_index));
    }
    let midpoints: Vec<Point> = strokes.iter().map(|s| s.midpoint()).collect();
    let center = midpoints[center_index];
    let distances: Vec<f64> = midpoints.iter().map(|m| m.distance(center)).collect();
    let weights: Vec<f64> = distances
        .iter()
        .map(|d| (-d / cfg.temperature).exp())
        .collect();
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let normalized_weights: Vec<f64> = weights.iter().map(|w| w / mean).collect();
    let probabilities = normalized_weights
        .iter()
        .map(|w| (cfg.base_rate * w).clamp(0.0, 1.0))
        .collect();
    Ok(MaskPlan {
        center_index,
        center,
        midpoints,
        distances,
        weights,
        normalized_weights,
        probabilities,
        outcomes: vec![false; strokes.len()],
    })
}

/// Draw a masking plan. `center_override` fixes the center stroke instead of
/// sampling it.
pub fn plan_mask<R: Rng + ?Sized>(
    strokes: &StrokeSet,
    cfg: &MaskConfig,
    rng: &mut R,
    center_override: Option<usize>,
) -> Result<MaskPlan, MaskError> {
    cfg.validate()?;
    if strokes.is_empty() {
        return Err(MaskError::EmptyStrokeSet);
    }
    let center_index = match center_override {
        Some(i) => i,
        None => rng.random_range(0..strokes.len()),
    };
    let mut plan = discard_probabilities(strokes, cfg, center_index)?;
    plan.outcomes = plan
        .probabilities
        .iter()
        .map(|&p| rng.random_bool(p))
        .collect();
    Ok(plan)
}

/// Whiten every black pixel whose center lies inside the coverage polygon of
/// a masked stroke.
pub fn apply_mask(
    glyph: &BinaryGlyph,
    strokes: &StrokeSet,
    coverages: &[CoveragePolygon],
    plan: &MaskPlan,
) -> Result<BinaryGlyph, MaskError> {
    if strokes.len() != coverages.len() || strokes.len() != plan.outcomes.len() {
        return Err(MaskError::LengthMismatch {
            strokes: strokes.len(),
            coverages: coverages.len(),
            plan: plan.outcomes.len(),
        });
    }
    let (w, h) = (glyph.width(), glyph.height());
    let mut mask = glyph.mask().to_vec();
    for (poly, _) in coverages.iter().zip(&plan.outcomes).filter(|(_, &z)| z) {
        for span in fill_spans(poly, w, h) {
            mask[span.indices(w)].iter_mut().for_each(|b| *b = false);
        }
    }
    Ok(BinaryGlyph::from_mask(w, h, mask, glyph.source_id()).expect("same dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_region_intersection_area;
    use crate::reward::{aggregate_reward, RewardConfig};
    use crate::stroke::Stroke;
    use proptest::prelude::*;

    fn strokes_with_midpoints(mids: &[(f64, f64)]) -> StrokeSet {
        mids.iter()
            .map(|&(x, y)| Stroke::from_coords(x - 0.01, y, x + 0.01, y))
            .collect()
    }

    #[test]
    fn single_stroke_probability() {
        let s = strokes_with_midpoints(&[(0.5, 0.5)]);
        let plan = plan_mask(&s, &MaskConfig::default(), &mut trial_rng(0, 0), None).unwrap();
        assert_eq!(plan.normalized_weights, vec![1.0]);
        assert_eq!(plan.probabilities, vec![0.5]);
    }

    #[test]
    fn coincident_midpoints_share_probability() {
        let s: StrokeSet = vec![
            Stroke::from_coords(0.4, 0.5, 0.6, 0.5),
            Stroke::from_coords(0.5, 0.4, 0.5, 0.6),
        ]
        .into_iter()
        .collect();
        let plan = plan_mask(&s, &MaskConfig::default(), &mut trial_rng(3, 0), None).unwrap();
        assert_eq!(plan.probabilities, vec![0.5, 0.5]);
    }

    #[test]
    fn three_stroke_closed_form() {
        let s = strokes_with_midpoints(&[(0.0, 0.5), (0.5, 0.5), (1.0, 0.5)]);
        let plan = discard_probabilities(&s, &MaskConfig::default(), 0).unwrap();
        // Independent scalar evaluation.
        let w: Vec<f64> = [0.0f64, 0.5, 1.0]
            .iter()
            .map(|d| (-d / 0.4).exp())
            .collect();
        let mean = (w[0] + w[1] + w[2]) / 3.0;
        for (got, wk) in plan.probabilities.iter().zip(&w) {
            assert!((got - (0.5 * wk / mean).min(1.0)).abs() < 1e-12);
        }
        assert!((w[1] - 0.2865).abs() < 1e-4 && (w[2] - 0.0821).abs() < 1e-4);
        assert!((mean - 0.4562).abs() < 1e-4);
        let expected = [1.0, 0.314, 0.090];
        for (got, want) in plan.probabilities.iter().zip(expected) {
            assert!((got - want).abs() < 1e-3, "{:?}", plan.probabilities);
        }
    }

    #[test]
    fn errors() {
        let cfg = MaskConfig::default();
        assert_eq!(
            plan_mask(&StrokeSet::default(), &cfg, &mut trial_rng(0, 0), None),
            Err(MaskError::EmptyStrokeSet)
        );
        let s = strokes_with_midpoints(&[(0.5, 0.5)]);
        assert_eq!(
            plan_mask(&s, &cfg, &mut trial_rng(0, 0), Some(3)),
            Err(MaskError::CenterOutOfRange(3))
        );
        let g = BinaryGlyph::from_mask(4, 4, vec![true; 16], "").unwrap();
        let plan = plan_mask(&s, &cfg, &mut trial_rng(0, 0), None).unwrap();
        assert!(matches!(
            apply_mask(&g, &s, &[], &plan),
            Err(MaskError::LengthMismatch { .. })
        ));
        assert!(plan_mask(
            &s,
            &MaskConfig {
                base_rate: 1.0,
                ..cfg
            },
            &mut trial_rng(0, 0),
            None
        )
        .is_err());
    }

    #[test]
    fn apply_mask_cases() {
        let g = crate::synth::horizontal_bar(100, 0.5, 0.1, 0.9, 10.0);
        let cfg = RewardConfig::default();
        let strokes: StrokeSet = vec![
            Stroke::from_coords(0.15, 0.5, 0.5, 0.5),
            Stroke::from_coords(0.5, 0.5, 0.85, 0.5),
        ]
        .into_iter()
        .collect();
        let report = aggregate_reward(&g, &strokes, true, &cfg).unwrap();
        let polys: Vec<CoveragePolygon> = report
            .per_stroke
            .iter()
            .map(|r| r.coverage.as_ref().unwrap().polygon.clone())
            .collect();
        let base = discard_probabilities(&strokes, &MaskConfig::default(), 0).unwrap();

        let keep = apply_mask(&g, &strokes, &polys, &base).unwrap();
        assert_eq!(keep, g);

        let mut first = base.clone();
        first.outcomes = vec![true, false];
        let masked = apply_mask(&g, &strokes, &polys, &first).unwrap();
        let removed = polygon_region_intersection_area(&g, &polys[..1]);
        assert!(removed > 0);
        assert_eq!(g.black_count() - masked.black_count(), removed);

        let cover_all = vec![CoveragePolygon::rect(0.0, 0.0, 1.0, 1.0); 2];
        let mut all = base;
        all.outcomes = vec![true, true];
        assert_eq!(
            apply_mask(&g, &strokes, &cover_all, &all)
                .unwrap()
                .black_count(),
            0
        );
    }

    proptest! {
        #[test]
        fn plan_invariants(mids in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8), seed in any::<u64>()) {
            let s = strokes_with_midpoints(&mids);
            let cfg = MaskConfig::default();
            let plan = plan_mask(&s, &cfg, &mut trial_rng(seed, 0), None).unwrap();
            let again = plan_mask(&s, &cfg, &mut trial_rng(seed, 0), None).unwrap();
            prop_assert_eq!(&plan, &again);
            prop_assert!(plan.midpoints.contains(&plan.center));
            let mean = plan.normalized_weights.iter().sum::<f64>() / plan.normalized_weights.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
            let wmax = plan.weights.iter().cloned().fold(0.0, f64::max);
            prop_assert_eq!(plan.weights[plan.center_index], wmax);
            for a in 0..s.len() {
                prop_assert!((0.0..=1.0).contains(&plan.probabilities[a]));
                for b in 0..s.len() {
                    if plan.distances[a] < plan.distances[b] {
                        prop_assert!(plan.probabilities[a] >= plan.probabilities[b]);
                    }
                }
            }
        }

        #[test]
        fn masking_never_adds_black(bits in proptest::collection::vec(any::<bool>(), 20 * 20), seed in any::<u64>()) {
            let g = BinaryGlyph::from_mask(20, 20, bits, "").unwrap();
            let s = strokes_with_midpoints(&[(0.2, 0.2), (0.5, 0.6), (0.8, 0.3)]);
            let polys = vec![
                CoveragePolygon::rect(0.0, 0.0, 0.4, 0.4),
                CoveragePolygon::rect(0.3, 0.4, 0.7, 0.8),
                CoveragePolygon::rect(0.6, 0.1, 1.0, 0.5),
            ];
            let plan = plan_mask(&s, &MaskConfig::default(), &mut trial_rng(seed, 1), None).unwrap();
            let out = apply_mask(&g, &s, &polys, &plan).unwrap();
            for (o, i) in out.mask().iter().zip(g.mask()) {
                prop_assert!(!*o || *i);
            }
        }
    }
}
