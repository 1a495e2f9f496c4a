//! Corpus-level evaluation metrics.
//!
//! | field    | meaning                                                  |
//! |----------|----------------------------------------------------------|
//! | `re`     | mean total reward `r`                                    |
//! | `re_s`   | mean stroke reward `r_s` (without the format term)       |
//! | `co`     | mean percentage of foreground covered                    |
//! | `is_pct` | invalid strokes as a percentage of all strokes           |
//! | `cs`     | `co` divided by the mean number of accepted strokes      |
//! | `ts`     | mean number of strokes per sample                        |
//!
//! Floating means are summed in sorted order so that results do not depend
//! on corpus order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::reward::{aggregate_reward, RewardConfig, RewardError, RewardReport};
use crate::stroke::StrokeSet;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sample {index} ({id}): {source}")]
    Sample {
        index: usize,
        id: String,
        #[source]
        source: RewardError,
    },
}

/// How the invalid-stroke percentage is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidRateMode {
    /// Total invalid strokes over total strokes.
    #[default]
    Corpus,
    /// Mean of per-sample percentages; samples without strokes count as 0.
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub re: f64,
    pub re_s: f64,
    pub co: f64,
    pub is_pct: f64,
    pub cs: f64,
    pub ts: f64,
    pub n_samples: usize,
}

/// One corpus entry.
#[derive(Debug, Clone)]
pub struct Sample {
    pub glyph: BinaryGlyph,
    pub strokes: StrokeSet,
    pub format_ok: bool,
}

fn sorted_mean(mut values: Vec<f64>) -> f64 {
    let n = values.len() as f64;
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / n
}

/// Reduce per-sample reward reports to corpus metrics.
pub fn summarize(
    reports: &[RewardReport],
    mode: InvalidRateMode,
) -> Result<MetricsReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let n = reports.len();
    let total_strokes: usize = reports.iter().map(RewardReport::stroke_count).sum();
    let total_invalid: usize = reports.iter().map(|r| r.n_invalid).sum();
    let total_accepted: usize = reports.iter().map(RewardReport::accepted_count).sum();

    let re = sorted_mean(reports.iter().map(|r| r.r).collect());
    let re_s = sorted_mean(reports.iter().map(|r| r.r_s).collect());
    let co = sorted_mean(
        reports
            .iter()
            .map(|r| 100.0 * r.final_coverage_pixels as f64 / r.omega_b_pixels as f64)
            .collect(),
    );
    let is_pct = match mode {
        InvalidRateMode::Corpus if total_strokes == 0 => 0.0,
        InvalidRateMode::Corpus => 100.0 * total_invalid as f64 / total_strokes as f64,
        InvalidRateMode::PerSample => sorted_mean(
            reports
                .iter()
                .map(|r| match r.stroke_count() {
                    0 => 0.0,
                    s => 100.0 * r.n_invalid as f64 / s as f64,
                })
                .collect(),
        ),
    };
    let mean_accepted = total_accepted as f64 / n as f64;
    let cs = if total_accepted == 0 {
        0.0
    } else {
        co / mean_accepted
    };

    Ok(MetricsReport {
        re,
        re_s,
        co,
        is_pct,
        cs,
        ts: total_strokes as f64 / n as f64,
        n_samples: n,
    })
}

/// Score every sample and reduce to corpus metrics.
pub fn evaluate_corpus(
    samples: &[Sample],
    cfg: &RewardConfig,
    mode: InvalidRateMode,
) -> Result<MetricsReport, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let reports = samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            aggregate_reward(&s.glyph, &s.strokes, s.format_ok, cfg).map_err(|source| {
                MetricsError::Sample {
                    index,
                    id: s.glyph.source_id().to_string(),
                    source,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    summarize(&reports, mode)
}
