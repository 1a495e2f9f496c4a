//! Structure-guided character matching.
//!
//! A query glyph is perturbed by stroke masking over several trials. Every
//! masked query is compared with each pool image by cosine similarity of
//! unit embeddings, and a candidate's score is the maximum over trials.
//! Embeddings come from an [`EmbeddingProvider`]; the built-in
//! [`PixelEmbedding`] runs offline, and the `remote` feature adds an HTTP
//! bridge to an external embedding service.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::BinaryGlyph;
use crate::geometry::CoveragePolygon;
use crate::masking::{apply_mask, plan_mask, trial_rng, MaskConfig, MaskError, MaskPlan};
use crate::reward::{aggregate_reward, RewardConfig, RewardError};
use crate::stroke::StrokeSet;

/// Side length of the pixel embedding grid.
pub const PIXEL_GRID: usize = 32;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("k must be >= 1")]
    ZeroK,
    #[error("query has no accepted strokes to mask")]
    NoQueryStrokes,
    #[error("embedding transport error: {0}")]
    Transport(String),
    #[error("embedding protocol error: {0}")]
    Protocol(String),
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding cache error: {0}")]
    Cache(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Maps a glyph to a unit-norm vector of fixed dimension. Must be
/// deterministic per provider.
pub trait EmbeddingProvider {
    fn provider_id(&self) -> &str;
    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
        (**self).embed(glyph)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
        (**self).embed(glyph)
    }
}

/// Scale a vector to unit L2 norm. Empty, non-finite and zero vectors are
/// protocol errors.
pub fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, MatchError> {
    if v.is_empty() {
        return Err(MatchError::Protocol("zero-dimension embedding".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MatchError::Protocol(
            "non-finite embedding component".into(),
        ));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(MatchError::Protocol("zero-norm embedding".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, MatchError> {
    if a.len() != b.len() {
        return Err(MatchError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Block-mean downsampling of the foreground to a 32x32 grid, mean-centred
/// and normalized. A uniform image maps to the first basis vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct PixelEmbedding;

/// Overlap of pixel `i` (width 1) with cell `[lo, hi)` in pixel units.
fn overlap(i: usize, lo: f64, hi: f64) -> f64 {
    let (a, b) = (i as f64, i as f64 + 1.0);
    (b.min(hi) - a.max(lo)).max(0.0)
}

pub fn pixel_embedding(glyph: &BinaryGlyph) -> Vec<f64> {
    let (w, h) = (glyph.width(), glyph.height());
    let (sx, sy) = (w as f64 / PIXEL_GRID as f64, h as f64 / PIXEL_GRID as f64);
    let mut v = Vec::with_capacity(PIXEL_GRID * PIXEL_GRID);
    for gy in 0..PIXEL_GRID {
        let (y0, y1) = (gy as f64 * sy, (gy + 1) as f64 * sy);
        let rows = (y0.floor() as usize)..(y1.ceil() as usize).min(h);
        for gx in 0..PIXEL_GRID {
            let (x0, x1) = (gx as f64 * sx, (gx + 1) as f64 * sx);
            let cols = (x0.floor() as usize)..(x1.ceil() as usize).min(w);
            let mut black = 0.0;
            for r in rows.clone() {
                let wy = overlap(r, y0, y1);
                for c in cols.clone() {
                    if glyph.pixel(c, r) {
                        black += wy * overlap(c, x0, x1);
                    }
                }
            }
            v.push(black / (sx * sy));
        }
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let mut basis = vec![0.0; v.len()];
        basis[0] = 1.0;
        return basis;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

impl EmbeddingProvider for PixelEmbedding {
    fn provider_id(&self) -> &str {
        "pixel32"
    }
    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
        Ok(pixel_embedding(glyph))
    }
}

/// Wraps a provider with an on-disk cache keyed by provider id and glyph
/// content hash. Writes go through a temp file and rename, so concurrent
/// writers of the same entry are harmless.
pub struct CachedProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache_root: impl AsRef<Path>) -> Self {
        let safe: String = inner
            .provider_id()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        Self {
            dir: cache_root.as_ref().join(safe),
            inner,
        }
    }

    fn entry(&self, glyph: &BinaryGlyph) -> PathBuf {
        self.dir.join(format!("{}.json", glyph.content_hash()))
    }

    fn store(&self, path: &Path, v: &[f64]) -> Result<(), MatchError> {
        let err = |e: std::io::Error| MatchError::Cache(e.to_string());
        std::fs::create_dir_all(&self.dir).map_err(err)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        tmp.write_all(
            serde_json::to_string(v)
                .expect("vectors serialize")
                .as_bytes(),
        )
        .map_err(err)?;
        tmp.persist(path).map_err(|e| err(e.error))?;
        Ok(())
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
        let path = self.entry(glyph);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
                return Ok(v);
            }
        }
        let v = self.inner.embed(glyph)?;
        // A failed cache write only costs a recomputation later.
        let _ = self.store(&path, &v);
        Ok(v)
    }
}

#[cfg(feature = "remote")]
pub use remote::{remote_embedding, RemoteEmbedding};

#[cfg(feature = "remote")]
mod remote {
    use super::{normalize, EmbeddingProvider, MatchError};
    use crate::bitmap::BinaryGlyph;

    /// POST `image_bytes` as `image/png` and read back a JSON number array.
    pub fn remote_embedding(endpoint: &str, image_bytes: &[u8]) -> Result<Vec<f64>, MatchError> {
        let response = ureq::post(endpoint)
            .header("Content-Type", "image/png")
            .send(image_bytes);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) => {
                return Err(MatchError::Protocol(format!("HTTP status {code}")))
            }
            Err(e) => return Err(MatchError::Transport(e.to_string())),
        };
        if response.status() != 200 {
            return Err(MatchError::Protocol(format!(
                "HTTP status {}",
                response.status()
            )));
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| MatchError::Transport(e.to_string()))?;
        let v: Vec<f64> = serde_json::from_str(&body)
            .map_err(|e| MatchError::Protocol(format!("bad response body: {e}")))?;
        normalize(v)
    }

    pub struct RemoteEmbedding {
        endpoint: String,
        id: String,
    }

    impl RemoteEmbedding {
        pub fn new(endpoint: impl Into<String>) -> Self {
            let endpoint = endpoint.into();
            Self {
                id: format!("remote:{endpoint}"),
                endpoint,
            }
        }
    }

    impl EmbeddingProvider for RemoteEmbedding {
        fn provider_id(&self) -> &str {
            &self.id
        }

        fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
            let png = glyph
                .to_png_bytes()
                .map_err(|e| MatchError::Protocol(e.to_string()))?;
            remote_embedding(&self.endpoint, &png)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    #[serde(rename = "id")]
    pub candidate_id: String,
    #[serde(rename = "score")]
    pub aggregated_score: f64,
    #[serde(rename = "trial_scores")]
    pub per_trial_scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

/// What to do when a pool image cannot be embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnEmbedError {
    #[default]
    Abort,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    pub k: usize,
    pub aggregation: Aggregation,
    /// Drop candidates whose image is identical to the query.
    pub exclude_self: bool,
    pub on_error: OnEmbedError,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            k: 5,
            aggregation: Aggregation::Max,
            exclude_self: false,
            on_error: OnEmbedError::Abort,
        }
    }
}

/// A pool entry: candidate id and image.
pub type PoolEntry = (String, BinaryGlyph);

struct EmbeddedPool<'a> {
    entries: Vec<(&'a str, Vec<f64>)>,
}

fn embed_pool<'a, P: EmbeddingProvider>(
    query: &BinaryGlyph,
    pool: &'a [PoolEntry],
    provider: &P,
    opts: &MatchOptions,
) -> Result<EmbeddedPool<'a>, MatchError> {
    if pool.is_empty() {
        return Err(MatchError::EmptyPool);
    }
    if opts.k == 0 {
        return Err(MatchError::ZeroK);
    }
    let query_hash = opts.exclude_self.then(|| query.content_hash());
    let mut entries = Vec::with_capacity(pool.len());
    for (id, glyph) in pool {
        if query_hash.as_deref() == Some(glyph.content_hash().as_str()) {
            continue;
        }
        match provider.embed(glyph) {
            Ok(v) => entries.push((id.as_str(), v)),
            Err(e)
                if opts.on_error == OnEmbedError::Skip
                    && !matches!(e, MatchError::DimensionMismatch(..)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(EmbeddedPool { entries })
}

fn rank(mut results: Vec<MatchResult>, k: usize) -> Vec<MatchResult> {
    results.sort_by(|a, b| {
        b.aggregated_score
            .partial_cmp(&a.aggregated_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    results.truncate(k);
    results
}

fn score_trials<P: EmbeddingProvider>(
    queries: &[BinaryGlyph],
    pool: &EmbeddedPool<'_>,
    provider: &P,
    opts: &MatchOptions,
) -> Result<Vec<MatchResult>, MatchError> {
    let query_vecs = queries
        .iter()
        .map(|q| provider.embed(q))
        .collect::<Result<Vec<_>, _>>()?;
    let mut results = Vec::with_capacity(pool.entries.len());
    for (id, cand) in &pool.entries {
        let per_trial_scores = query_vecs
            .iter()
            .map(|q| cosine(q, cand))
            .collect::<Result<Vec<_>, _>>()?;
        let aggregated_score = match opts.aggregation {
            Aggregation::Max => per_trial_scores
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Mean => {
                per_trial_scores.iter().sum::<f64>() / per_trial_scores.len() as f64
            }
        };
        results.push(MatchResult {
            candidate_id: id.to_string(),
            aggregated_score,
            per_trial_scores,
        });
    }
    Ok(rank(results, opts.k))
}

/// Rank the pool by similarity to the unmasked query.
pub fn baseline_match<P: EmbeddingProvider>(
    query: &BinaryGlyph,
    pool: &[PoolEntry],
    provider: &P,
    opts: &MatchOptions,
) -> Result<Vec<MatchResult>, MatchError> {
    let embedded = embed_pool(query, pool, provider, opts)?;
    score_trials(std::slice::from_ref(query), &embedded, provider, opts)
}

/// Accepted strokes of the query and their coverage polygons.
pub fn query_coverages(
    query: &BinaryGlyph,
    strokes: &StrokeSet,
    rcfg: &RewardConfig,
) -> Result<(StrokeSet, Vec<CoveragePolygon>), MatchError> {
    let report = aggregate_reward(query, strokes, true, rcfg)?;
    let mut kept = StrokeSet::default().with_source_id(strokes.source_id.clone());
    let mut polys = Vec::new();
    for rec in report.per_stroke.iter().filter(|r| r.accepted()) {
        kept.push(strokes.strokes[rec.index]);
        polys.push(
            rec.coverage
                .as_ref()
                .expect("accepted strokes have coverage")
                .polygon
                .clone(),
        );
    }
    Ok((kept, polys))
}

/// Rank the pool against masked versions of the query given explicit plans.
pub fn rank_with_plans<P: EmbeddingProvider>(
    query: &BinaryGlyph,
    strokes: &StrokeSet,
    polygons: &[CoveragePolygon],
    plans: &[MaskPlan],
    pool: &[PoolEntry],
    provider: &P,
    opts: &MatchOptions,
) -> Result<Vec<MatchResult>, MatchError> {
    let embedded = embed_pool(query, pool, provider, opts)?;
    let masked = plans
        .iter()
        .map(|plan| apply_mask(query, strokes, polygons, plan))
        .collect::<Result<Vec<_>, _>>()?;
    score_trials(&masked, &embedded, provider, opts)
}

/// Masking plans for trials `0..mcfg.trials`, each from its own stream.
pub fn trial_plans(strokes: &StrokeSet, mcfg: &MaskConfig) -> Result<Vec<MaskPlan>, MatchError> {
    (0..mcfg.trials)
        .map(|t| {
            Ok(plan_mask(
                strokes,
                mcfg,
                &mut trial_rng(mcfg.rng_seed, t),
                None,
            )?)
        })
        .collect()
}

/// Structure-guided exploration: mask the query's accepted strokes over
/// `mcfg.trials` trials and rank the pool by aggregated similarity.
pub fn explore<P: EmbeddingProvider>(
    query: &BinaryGlyph,
    query_strokes: &StrokeSet,
    pool: &[PoolEntry],
    provider: &P,
    mcfg: &MaskConfig,
    rcfg: &RewardConfig,
    opts: &MatchOptions,
) -> Result<Vec<MatchResult>, MatchError> {
    if pool.is_empty() {
        return Err(MatchError::EmptyPool);
    }
    let (strokes, polygons) = query_coverages(query, query_strokes, rcfg)?;
    if strokes.is_empty() {
        return Err(MatchError::NoQueryStrokes);
    }
    let plans = trial_plans(&strokes, mcfg)?;
    rank_with_plans(query, &strokes, &polygons, &plans, pool, provider, opts)
}

/// In-memory memo of embeddings by content hash.
#[derive(Default)]
pub struct MemoProvider<P> {
    inner: P,
    memo: std::sync::Mutex<HashMap<String, Vec<f64>>>,
}

impl<P: EmbeddingProvider> MemoProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            memo: Default::default(),
        }
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for MemoProvider<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn embed(&self, glyph: &BinaryGlyph) -> Result<Vec<f64>, MatchError> {
        let key = glyph.content_hash();
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(glyph)?;
        self.memo.lock().expect("memo lock").insert(key, v.clone());
        Ok(v)
    }
}
