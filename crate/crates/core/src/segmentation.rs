//! Felzenszwalb–Huttenlocher graph-based segmentation over an 8-connected pixel grid.
//!
//! Edge weights are Euclidean distances between blurred RGB triples (0–255 units).
//! Components merge along ascending edges while the edge is no heavier than
//! `min(Int(A) + scale/|A|, Int(B) + scale/|B|)`; a second pass then absorbs every
//! component smaller than `min_size` into its cheapest neighbour.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{gaussian_blur, write_atomic, Image, ImagingError};

pub const SCALE_RANGE: (f64, f64) = (1.0, 1000.0);
pub const SIGMA_RANGE: (f64, f64) = (0.0, 5.0);
pub const MIN_SIZE_RANGE: (u32, u32) = (15, 500);

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("scale {0} outside [1, 1000]")]
    Scale(f64),
    #[error("sigma {0} outside [0, 5]")]
    Sigma(f64),
    #[error("min_size {0} outside [15, 500]")]
    MinSize(i64),
    #[error("invalid segment map: {0}")]
    InvalidMap(String),
    #[error("label {label} out of range (segment count {count})")]
    LabelOutOfRange { label: u32, count: usize },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Integer identity of a quantized genome; equal keys mean equal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamsKey {
    pub scale_milli: i64,
    pub sigma_centi: i64,
    pub min_size: u32,
}

/// The three evolvable segmentation parameters.
///
/// Scale is kept to 3 decimals, sigma to 2, min_size is an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SegmentationParams {
    scale: f64,
    sigma: f64,
    min_size: u32,
}

#[derive(Deserialize)]
struct RawParams {
    scale: f64,
    sigma: f64,
    min_size: i64,
}

impl TryFrom<RawParams> for SegmentationParams {
    type Error = SegmentationError;
    fn try_from(r: RawParams) -> Result<Self, Self::Error> {
        SegmentationParams::new(r.scale, r.sigma, r.min_size)
    }
}

impl SegmentationParams {
    /// Validates user-supplied values, rejecting anything outside the ranges.
    pub fn new(scale: f64, sigma: f64, min_size: i64) -> Result<Self, SegmentationError> {
        if !(SCALE_RANGE.0..=SCALE_RANGE.1).contains(&scale) {
            return Err(SegmentationError::Scale(scale));
        }
        if !(SIGMA_RANGE.0..=SIGMA_RANGE.1).contains(&sigma) {
            return Err(SegmentationError::Sigma(sigma));
        }
        if !(MIN_SIZE_RANGE.0 as i64..=MIN_SIZE_RANGE.1 as i64).contains(&min_size) {
            return Err(SegmentationError::MinSize(min_size));
        }
        Ok(Self::clamped(scale, sigma, min_size))
    }

    /// Clamps each value into its range, then quantizes. Used by the genetic operators.
    pub fn clamped(scale: f64, sigma: f64, min_size: i64) -> Self {
        let scale = if scale.is_nan() { SCALE_RANGE.0 } else { scale };
        let sigma = if sigma.is_nan() { SIGMA_RANGE.0 } else { sigma };
        Self {
            scale: round_to(scale.clamp(SCALE_RANGE.0, SCALE_RANGE.1), 3),
            sigma: round_to(sigma.clamp(SIGMA_RANGE.0, SIGMA_RANGE.1), 2),
            min_size: min_size.clamp(MIN_SIZE_RANGE.0 as i64, MIN_SIZE_RANGE.1 as i64) as u32,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn min_size(&self) -> u32 {
        self.min_size
    }

    pub fn key(&self) -> ParamsKey {
        ParamsKey {
            scale_milli: (self.scale * 1000.0).round() as i64,
            sigma_centi: (self.sigma * 100.0).round() as i64,
            min_size: self.min_size,
        }
    }
}

impl Eq for SegmentationParams {}

impl std::hash::Hash for SegmentationParams {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

/// Dense per-pixel segment labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    segment_count: usize,
}

impl SegmentMap {
    /// Validates that `labels` use exactly `0..count` for some count.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, SegmentationError> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(SegmentationError::InvalidMap(format!(
                "{} labels for {width}x{height}",
                labels.len()
            )));
        }
        let count = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut seen = vec![false; count];
        labels.iter().for_each(|&l| seen[l as usize] = true);
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(SegmentationError::InvalidMap(format!("label {gap} unused")));
        }
        Ok(Self {
            width,
            height,
            labels,
            segment_count: count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "EVEXSEG 1\n{} {} {}\n",
            self.width, self.height, self.segment_count
        );
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, SegmentationError> {
        let bad = |m: &str| SegmentationError::InvalidMap(m.to_string());
        let mut lines = text.splitn(3, '\n');
        if lines.next().map(str::trim_end) != Some("EVEXSEG 1") {
            return Err(bad("missing EVEXSEG 1 header"));
        }
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header value")))
            .collect::<Result<_, _>>()?;
        let [w, h, count] = header[..] else {
            return Err(bad("expected `<width> <height> <segment_count>`"));
        };
        let labels: Vec<u32> = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad label")))
            .collect::<Result<_, _>>()?;
        let map = Self::from_labels(w, h, labels)?;
        if map.segment_count != count {
            return Err(bad("segment count does not match labels"));
        }
        Ok(map)
    }

    pub fn write(&self, path: &Path) -> Result<(), SegmentationError> {
        Ok(write_atomic(path, self.to_text().as_bytes())?)
    }
}

/// Pixel count per label.
pub fn segment_sizes(segmap: &SegmentMap) -> Vec<usize> {
    let mut sizes = vec![0; segmap.segment_count()];
    segmap.labels().iter().for_each(|&l| sizes[l as usize] += 1);
    sizes
}

/// Fraction of the image covered by `label`.
pub fn relative_area(segmap: &SegmentMap, label: u32) -> Result<f64, SegmentationError> {
    if label as usize >= segmap.segment_count() {
        return Err(SegmentationError::LabelOutOfRange {
            label,
            count: segmap.segment_count(),
        });
    }
    let size = segmap.labels().iter().filter(|&&l| l == label).count();
    Ok(size as f64 / segmap.pixel_count() as f64)
}

/// Union-find carrying component size and largest internal edge.
struct Forest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    size: Vec<u32>,
    internal: Vec<f64>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32, weight: f64) {
        let (a, b) = (a as usize, b as usize);
        let (root, child) = if self.rank[a] < self.rank[b] { (b, a) } else { (a, b) };
        if self.rank[a] == self.rank[b] {
            self.rank[root] += 1;
        }
        self.parent[child] = root as u32;
        self.size[root] += self.size[child];
        self.internal[root] = self.internal[a].max(self.internal[b]).max(weight);
    }
}

struct Edge {
    weight: f64,
    src: u32,
    dst: u32,
}

fn build_edges(image: &Image, sigma: f64) -> Vec<Edge> {
    let (w, h) = (image.width(), image.height());
    let [r, g, b] = gaussian_blur(image, sigma);
    let (r, g, b) = (r.values(), g.values(), b.values());
    let dist = |p: usize, q: usize| {
        let (dr, dg, db) = (r[p] - r[q], g[p] - g[q], b[p] - b[q]);
        (dr * dr + dg * dg + db * db).sqrt()
    };
    let mut edges = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut push = |q: usize| {
                edges.push(Edge {
                    weight: dist(p, q),
                    src: p as u32,
                    dst: q as u32,
                })
            };
            if x + 1 < w {
                push(p + 1);
            }
            if y + 1 < h {
                if x > 0 {
                    push(p + w - 1);
                }
                push(p + w);
                if x + 1 < w {
                    push(p + w + 1);
                }
            }
        }
    }
    // src < dst for every edge, so (weight, src, dst) is a total order with no ties
    edges.sort_unstable_by(|a, b| {
        a.weight
            .total_cmp(&b.weight)
            .then(a.src.cmp(&b.src))
            .then(a.dst.cmp(&b.dst))
    });
    edges
}

fn relabel(forest: &mut Forest, w: usize, h: usize) -> SegmentMap {
    let n = w * h;
    let mut dense = vec![u32::MAX; n];
    let mut next = 0u32;
    let labels = (0..n as u32)
        .map(|p| {
            let root = forest.find(p) as usize;
            if dense[root] == u32::MAX {
                dense[root] = next;
                next += 1;
            }
            dense[root]
        })
        .collect();
    SegmentMap {
        width: w,
        height: h,
        labels,
        segment_count: next as usize,
    }
}

/// Segment counts before and after the min-size pass, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationStats {
    pub merged_segments: usize,
    pub final_segments: usize,
}

/// Graph-based segmentation. Deterministic for fixed input.
pub fn felzenszwalb(image: &Image, params: &SegmentationParams) -> SegmentMap {
    felzenszwalb_with_stats(image, params).0
}

pub fn felzenszwalb_with_stats(image: &Image, params: &SegmentationParams) -> (SegmentMap, SegmentationStats) {
    let (w, h) = (image.width(), image.height());
    let edges = build_edges(image, params.sigma());
    let mut forest = Forest::new(w * h);
    let scale = params.scale();
    let mut components = w * h;

    for e in &edges {
        let a = forest.find(e.src);
        let b = forest.find(e.dst);
        if a == b {
            continue;
        }
        let (ai, bi) = (a as usize, b as usize);
        let threshold_a = forest.internal[ai] + scale / forest.size[ai] as f64;
        let threshold_b = forest.internal[bi] + scale / forest.size[bi] as f64;
        if e.weight <= threshold_a.min(threshold_b) {
            forest.union(a, b, e.weight);
            components -= 1;
        }
    }
    let merged_segments = components;

    let min_size = params.min_size();
    for e in &edges {
        let a = forest.find(e.src);
        let b = forest.find(e.dst);
        if a != b && (forest.size[a as usize] < min_size || forest.size[b as usize] < min_size) {
            forest.union(a, b, e.weight);
        }
    }

    let map = relabel(&mut forest, w, h);
    let stats = SegmentationStats {
        merged_segments,
        final_segments: map.segment_count(),
    };
    (map, stats)
}
