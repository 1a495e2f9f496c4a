//! Stroke-structure analysis of binarized glyph bitmaps.
//!
//! Glyphs are explained by ordered sets of line segments in normalized
//! coordinates. Each segment is checked against the foreground, grown into a
//! coverage polygon bounded by the black/white boundary, and aggregated into
//! a coverage reward that penalizes invalid and redundant strokes. Around
//! that core sit corpus metrics, structural statistics, a greedy stroke
//! fitter, stroke-masking perturbations for structure-guided retrieval, and
//! SVG overlays.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitmap;
pub mod geometry;
pub mod masking;
pub mod matcher;
pub mod metrics;
pub mod optimizer;
pub mod point;
pub mod reward;
pub mod stroke;
pub mod synth;
pub mod visualize;

pub use bitmap::{load_and_binarize, structural_stats, BinaryGlyph, BitmapError, StructuralStats};
pub use point::Point;
pub use reward::{aggregate_reward, RewardConfig, RewardError, RewardReport};
pub use stroke::{parse_stroke_output, serialize_stroke_set, Stroke, StrokeSet};
