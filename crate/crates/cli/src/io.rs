//! File helpers: atomic writes, image and stroke loading, JSONL manifests.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use glyphstroke::{load_and_binarize, parse_stroke_output, BinaryGlyph, Stroke, StrokeSet};
use serde::Deserialize;

/// Write via a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_glyph(path: &Path, threshold: u8) -> Result<BinaryGlyph> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_and_binarize(&bytes, threshold, id).with_context(|| format!("loading {}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StrokeJson {
    Set(StrokeSet),
    Bare(Vec<Stroke>),
}

/// Load strokes from JSON (a stroke-set object or a bare list) or from raw
/// model text with `<strokes>` delimiters. Returns the strokes and whether
/// the format was well formed.
pub fn parse_strokes_text(text: &str) -> (StrokeSet, bool) {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        if let Ok(parsed) = serde_json::from_str::<StrokeJson>(text) {
            let set = match parsed {
                StrokeJson::Set(s) => s,
                StrokeJson::Bare(v) => StrokeSet::new(v),
            };
            return (set, true);
        }
    }
    let parsed = parse_stroke_output(text);
    (parsed.strokes, parsed.format_ok)
}

pub fn load_strokes(path: &Path) -> Result<(StrokeSet, bool)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_strokes_text(&text))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    id: Option<String>,
    #[serde(alias = "image")]
    image_path: PathBuf,
    #[serde(alias = "strokes", default)]
    strokes_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub strokes_path: Option<PathBuf>,
}

/// Parse a JSONL manifest. Paths are resolved against the manifest's
/// directory; ids default to the image path and must be unique.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: ManifestLine = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad manifest line", path.display(), n + 1))?;
        let id = raw
            .id
            .unwrap_or_else(|| raw.image_path.display().to_string());
        if !seen.insert(id.clone()) {
            bail!("{}:{}: duplicate id {id:?}", path.display(), n + 1);
        }
        entries.push(ManifestEntry {
            id,
            image_path: base.join(raw.image_path),
            strokes_path: raw.strokes_path.map(|p| base.join(p)),
        });
    }
    if entries.is_empty() {
        bail!("manifest {} has no entries", path.display());
    }
    Ok(entries)
}

pub fn is_image_path(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("png" | "pgm" | "pbm" | "pnm")
    )
}
