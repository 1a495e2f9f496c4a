//! Browser bindings: score a stroke set, fit strokes greedily, and preview
//! stroke masking on a handful of preset glyphs.

use glyphstroke::masking::{apply_mask, plan_mask, trial_rng, MaskConfig};
use glyphstroke::matcher::query_coverages;
use glyphstroke::optimizer::{greedy_fit, OptimizerConfig};
use glyphstroke::synth;
use glyphstroke::visualize::{render_overlay, OverlaySpec};
use glyphstroke::{
    aggregate_reward, parse_stroke_output, serialize_stroke_set, BinaryGlyph, Point, RewardConfig,
    StrokeSet,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SIZE: usize = 96;

pub const PRESETS: &[&str] = &["plus", "bar", "triangle", "ring", "zigzag", "tree"];

pub fn preset(name: &str) -> Result<BinaryGlyph, String> {
    let p = Point::new;
    let g = match name {
        "plus" => synth::plus_sign(SIZE, 0.32, 7.0),
        "bar" => synth::horizontal_bar(SIZE, 0.5, 0.15, 0.85, 8.0),
        "triangle" => synth::triangle(SIZE, p(0.5, 0.15), p(0.85, 0.8), p(0.15, 0.8), 6.0),
        "ring" => synth::ring(SIZE, p(0.5, 0.5), 0.32, 6.0),
        "zigzag" => synth::render_polyline(
            SIZE,
            &[p(0.15, 0.2), p(0.85, 0.2), p(0.15, 0.8), p(0.85, 0.8)],
            6.0,
            "zigzag",
        ),
        "tree" => synth::render_segments(
            SIZE,
            &[
                (p(0.5, 0.12), p(0.5, 0.88)),
                (p(0.5, 0.35), p(0.2, 0.15)),
                (p(0.5, 0.35), p(0.8, 0.15)),
                (p(0.5, 0.6), p(0.22, 0.45)),
                (p(0.5, 0.6), p(0.78, 0.45)),
            ],
            6.0,
            "tree",
        ),
        other => return Err(format!("unknown preset {other:?}")),
    };
    Ok(g.with_source_id(name))
}

#[derive(Serialize)]
struct ScoreView {
    r_s: f64,
    r_f: f64,
    r: f64,
    coverage: f64,
    n_invalid: usize,
    strokes: usize,
    format_ok: bool,
    svg: String,
}

fn overlay(
    glyph: &BinaryGlyph,
    report: Option<&glyphstroke::RewardReport>,
    strokes: &StrokeSet,
) -> String {
    let spec = OverlaySpec {
        show_grid: true,
        ..Default::default()
    };
    render_overlay(glyph, report, strokes, &spec)
}

/// Score `<strokes>` text against a preset. Returns JSON with the reward
/// terms and an SVG overlay.
pub fn score_text(preset_name: &str, strokes_text: &str) -> Result<String, String> {
    let glyph = preset(preset_name)?;
    let parsed = parse_stroke_output(strokes_text);
    let report = aggregate_reward(
        &glyph,
        &parsed.strokes,
        parsed.format_ok,
        &RewardConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let view = ScoreView {
        r_s: report.r_s,
        r_f: report.r_f,
        r: report.r,
        coverage: report.coverage_fraction(),
        n_invalid: report.n_invalid,
        strokes: report.stroke_count(),
        format_ok: parsed.format_ok,
        svg: overlay(&glyph, Some(&report), &parsed.strokes),
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

#[derive(Serialize)]
struct FitView {
    text: String,
    r_s: f64,
    coverage: f64,
    svg: String,
}

/// Greedy stroke fit; returns the strokes as `<strokes>` text plus an overlay.
pub fn fit_text(preset_name: &str, seed: u64, max_strokes: usize) -> Result<String, String> {
    let glyph = preset(preset_name)?;
    let ocfg = OptimizerConfig {
        max_strokes,
        rng_seed: seed,
        ..Default::default()
    };
    let (strokes, report) =
        greedy_fit(&glyph, &ocfg, &RewardConfig::default()).map_err(|e| e.to_string())?;
    let view = FitView {
        text: serialize_stroke_set(&strokes),
        r_s: report.r_s,
        coverage: report.coverage_fraction(),
        svg: overlay(&glyph, Some(&report), &strokes),
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

#[derive(Serialize)]
struct MaskView {
    probabilities: Vec<f64>,
    outcomes: Vec<bool>,
    center_index: usize,
    svg: String,
}

/// One masking trial over the accepted strokes of `strokes_text`.
pub fn mask_text(
    preset_name: &str,
    strokes_text: &str,
    seed: u64,
    trial: usize,
) -> Result<String, String> {
    let glyph = preset(preset_name)?;
    let parsed = parse_stroke_output(strokes_text);
    let cfg = RewardConfig::default();
    let (strokes, polygons) =
        query_coverages(&glyph, &parsed.strokes, &cfg).map_err(|e| e.to_string())?;
    if strokes.is_empty() {
        return Err("no accepted strokes to mask".into());
    }
    let plan = plan_mask(
        &strokes,
        &MaskConfig::default(),
        &mut trial_rng(seed, trial),
        None,
    )
    .map_err(|e| e.to_string())?;
    let masked = apply_mask(&glyph, &strokes, &polygons, &plan).map_err(|e| e.to_string())?;
    let view = MaskView {
        probabilities: plan.probabilities.clone(),
        outcomes: plan.outcomes.clone(),
        center_index: plan.center_index,
        svg: overlay(&masked, None, &strokes),
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

#[wasm_bindgen]
pub fn presets() -> String {
    serde_json::to_string(PRESETS).expect("serializable")
}

#[wasm_bindgen]
pub fn score(preset_name: &str, strokes_text: &str) -> Result<String, JsValue> {
    score_text(preset_name, strokes_text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fit(preset_name: &str, seed: u32, max_strokes: u32) -> Result<String, JsValue> {
    fit_text(preset_name, seed.into(), max_strokes as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mask(
    preset_name: &str,
    strokes_text: &str,
    seed: u32,
    trial: u32,
) -> Result<String, JsValue> {
    mask_text(preset_name, strokes_text, seed.into(), trial as usize)
        .map_err(|e| JsValue::from_str(&e))
}
