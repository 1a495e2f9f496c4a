//! Binarized glyph bitmaps and corpus structural statistics.
//!
//! A [`BinaryGlyph`] owns a row-major foreground mask. Normalized coordinates
//! run left to right in `x` and top to bottom in `y`; pixel `(col, row)` owns
//! the half-open rectangle `[col/w, (col+1)/w) x [row/h, (row+1)/h)`.

use std::io::Cursor;

use image::{DynamicImage, GrayImage, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;

pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Debug, Error)]
pub enum BitmapError {
    #[error("failed to decode image: {0}")]
    Decode(String),
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("mask has {actual} entries, expected {expected}")]
    MaskSize { expected: usize, actual: usize },
    #[error("failed to encode image: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGlyph {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    source_id: String,
}

impl BinaryGlyph {
    /// Build a glyph from a row-major mask (`true` = black).
    pub fn from_mask(
        width: usize,
        height: usize,
        mask: Vec<bool>,
        source_id: impl Into<String>,
    ) -> Result<Self, BitmapError> {
        if width == 0 || height == 0 {
            return Err(BitmapError::EmptyImage);
        }
        if mask.len() != width * height {
            return Err(BitmapError::MaskSize {
                expected: width * height,
                actual: mask.len(),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
            source_id: source_id.into(),
        })
    }

    /// Build a glyph by evaluating `f(col, row)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        source_id: impl Into<String>,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, BitmapError> {
        let mut mask = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                mask.push(f(col, row));
            }
        }
        Self::from_mask(width, height, mask, source_id)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn pixel(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.width + col]
    }

    /// Number of foreground pixels, `|Ω_B|`.
    pub fn black_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Normalized coordinates of the center of pixel `(col, row)`.
    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            (col as f64 + 0.5) / self.width as f64,
            (row as f64 + 0.5) / self.height as f64,
        )
    }

    /// Pixel owning normalized point `p`, or `None` outside the unit square.
    ///
    /// `x = 1` and `y = 1` clamp to the last column and row.
    pub fn pixel_at(&self, p: Point) -> Option<(usize, usize)> {
        if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
            return None;
        }
        let col = ((p.x * self.width as f64) as usize).min(self.width - 1);
        let row = ((p.y * self.height as f64) as usize).min(self.height - 1);
        Some((col, row))
    }

    /// Whether normalized point `p` falls on a black pixel. Points outside
    /// the unit square (and NaN) are white.
    pub fn is_black_at(&self, p: Point) -> bool {
        self.pixel_at(p)
            .is_some_and(|(col, row)| self.pixel(col, row))
    }

    /// Copy of the glyph with black/white swapped.
    pub fn inverted(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|b| !b).collect(),
            ..self.clone()
        }
    }

    /// Rotate by 90 degrees about the image center. A normalized point
    /// `(x, y)` of the original maps to `(1 - y, x)` in the result.
    pub fn rotated_quarter(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut mask = vec![false; w * h];
        for row in 0..h {
            for col in 0..w {
                // new width is h, new height is w
                let (nc, nr) = (h - 1 - row, col);
                mask[nr * h + nc] = self.pixel(col, row);
            }
        }
        Self {
            width: h,
            height: w,
            mask,
            source_id: self.source_id.clone(),
        }
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.pixel(x as usize, y as usize) {
                0
            } else {
                255
            }])
        })
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>, BitmapError> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray_image()
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| BitmapError::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// Stable content hash of dimensions and mask, hex encoded.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update((self.height as u64).to_le_bytes());
        let packed: Vec<u8> = self
            .mask
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i))
            })
            .collect();
        hasher.update(&packed);
        hex::encode(hasher.finalize())
    }
}

/// Decode an encoded raster (PNG, PGM, PBM, ...) and binarize it: a pixel is
/// black iff its luminance is below `threshold`. Transparent pixels are
/// composited over white first.
pub fn load_and_binarize(
    image_bytes: &[u8],
    threshold: u8,
    source_id: impl Into<String>,
) -> Result<BinaryGlyph, BitmapError> {
    let img =
        image::load_from_memory(image_bytes).map_err(|e| BitmapError::Decode(e.to_string()))?;
    binarize_image(&img, threshold, source_id)
}

pub fn binarize_image(
    img: &DynamicImage,
    threshold: u8,
    source_id: impl Into<String>,
) -> Result<BinaryGlyph, BitmapError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(BitmapError::EmptyImage);
    }
    let mask = if img.color().has_alpha() {
        img.to_luma_alpha8()
            .pixels()
            .map(|p| {
                let [l, a] = p.0;
                let a = a as u32;
                let blended = (l as u32 * a + 255 * (255 - a) + 127) / 255;
                blended < threshold as u32
            })
            .collect()
    } else {
        img.to_luma8()
            .pixels()
            .map(|p| p.0[0] < threshold)
            .collect()
    };
    BinaryGlyph::from_mask(w, h, mask, source_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralStats {
    /// 8-connected foreground components.
    pub cc: usize,
    /// Foreground boundary length in normalized units.
    pub fb: f64,
    /// Foreground area as a fraction of the image.
    pub fa: f64,
    /// `fb / fa`; absent for an empty foreground.
    pub bar: Option<f64>,
}

/// Component count, boundary length, area fraction and boundary-to-area
/// ratio of a glyph's foreground.
///
/// Boundary length counts exposed pixel edges: horizontal edges contribute
/// `1/width` each, vertical edges `1/height`.
pub fn structural_stats(glyph: &BinaryGlyph) -> StructuralStats {
    let (w, h) = (glyph.width(), glyph.height());
    let black = |c: isize, r: isize| {
        c >= 0
            && r >= 0
            && (c as usize) < w
            && (r as usize) < h
            && glyph.pixel(c as usize, r as usize)
    };

    let mut horizontal_edges = 0usize;
    let mut vertical_edges = 0usize;
    let mut area = 0usize;
    for r in 0..h as isize {
        for c in 0..w as isize {
            if !black(c, r) {
                continue;
            }
            area += 1;
            horizontal_edges += usize::from(!black(c, r - 1)) + usize::from(!black(c, r + 1));
            vertical_edges += usize::from(!black(c - 1, r)) + usize::from(!black(c + 1, r));
        }
    }

    let fb = horizontal_edges as f64 / w as f64 + vertical_edges as f64 / h as f64;
    let fa = area as f64 / (w * h) as f64;
    StructuralStats {
        cc: count_components(glyph),
        fb,
        fa,
        bar: (area > 0).then(|| fb / fa),
    }
}

/// Count 8-connected black components with a two-pass union-find labeling.
pub fn count_components(glyph: &BinaryGlyph) -> usize {
    let (w, h) = (glyph.width(), glyph.height());
    let mut sets = DisjointSets::new(w * h);
    for r in 0..h {
        for c in 0..w {
            if !glyph.pixel(c, r) {
                continue;
            }
            let idx = r * w + c;
            // Previously scanned neighbours: W, NW, N, NE.
            if c > 0 && glyph.pixel(c - 1, r) {
                sets.union(idx, idx - 1);
            }
            if r > 0 {
                for nc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    if glyph.pixel(nc, r - 1) {
                        sets.union(idx, (r - 1) * w + nc);
                    }
                }
            }
        }
    }
    (0..w * h)
        .filter(|&i| glyph.mask()[i] && sets.find(i) == i)
        .count()
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
