//! Raster types shared by every other module, plus blur, colormaps and file I/O.

mod blur;
mod io;
mod render;

pub use blur::gaussian_blur;
pub use io::{load_png, read_float_grid, save_png, write_float_grid, write_atomic};
pub use render::{overlay_boundaries, render_grayscale, render_heatmap, HeatmapScale, EXCLUDED_COLOR};

use thiserror::Error;

/// One 8-bit RGB pixel.
pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("malformed PNG {path}: {reason}")]
    MalformedPng { path: String, reason: String },
    #[error("unsupported PNG format in {path}: {reason}")]
    UnsupportedFormat { path: String, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed grid file {path}: {reason}")]
    MalformedGrid { path: String, reason: String },
    #[error("invalid dimensions {width}x{height} for {len} values")]
    Dimensions { width: usize, height: usize, len: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    Mismatch(usize, usize, usize, usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("grayscale cap must be positive, got {0}")]
    InvalidCap(f64),
}

/// Row-major RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImagingError::Dimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image filled with one color.
    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Rgb,
    ) -> Result<Self, ImagingError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Raw row-major RGB8 bytes.
    pub fn to_raw(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn from_raw(width: usize, height: usize, raw: &[u8]) -> Result<Self, ImagingError> {
        if raw.len() != width * height * 3 {
            return Err(ImagingError::Dimensions {
                width,
                height,
                len: raw.len() / 3,
            });
        }
        let pixels = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }
}

/// Row-major grid of finite scalars, e.g. per-pixel explanation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(ImagingError::Dimensions {
                width,
                height,
                len: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ImagingError::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn same_shape(&self, other: &FloatGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Largest absolute value, 0 for an all-zero grid.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
