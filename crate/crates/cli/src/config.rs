//! Experiment configuration: TOML file values overridden by flags.

use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use glyphstroke::bitmap::DEFAULT_THRESHOLD;
use glyphstroke::RewardConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub d: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tau_novel: Option<f64>,
    pub march_step: Option<f64>,
    pub threshold: Option<u8>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Reward parameters shared by every scoring subcommand.
#[derive(Debug, Args, Clone, Default)]
pub struct RewardArgs {
    /// TOML config with keys d, lambda, alpha, beta, tau_novel, march_step, threshold.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Binarization threshold (gray values below it are black).
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Maximum spacing between validity samples.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Penalty per invalid stroke.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Format reward weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Novelty threshold as a fraction of the foreground.
    #[arg(long)]
    pub tau_novel: Option<f64>,
    /// Ray-march step in normalized units.
    #[arg(long)]
    pub march_step: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub reward: RewardConfig,
    pub threshold: u8,
}

impl RewardArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let base = RewardConfig::default();
        let reward = RewardConfig {
            d: self.d.or(file.d).unwrap_or(base.d),
            lambda: self.lambda.or(file.lambda).unwrap_or(base.lambda),
            alpha: self.alpha.or(file.alpha).unwrap_or(base.alpha),
            beta: self.beta.or(file.beta).unwrap_or(base.beta),
            tau_novel: self.tau_novel.or(file.tau_novel).unwrap_or(base.tau_novel),
            march_step: self.march_step.or(file.march_step).or(base.march_step),
        };
        reward.validate()?;
        Ok(Resolved {
            reward,
            threshold: self
                .threshold
                .or(file.threshold)
                .unwrap_or(DEFAULT_THRESHOLD),
        })
    }
}
