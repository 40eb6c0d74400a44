use serde::{Deserialize, Serialize};

use super::{FloatGrid, Image, ImagingError, Rgb};
use crate::segmentation::SegmentMap;

/// Color used for pixels excluded from a grayscale map.
pub const EXCLUDED_COLOR: Rgb = [0, 255, 0];
const BOUNDARY_COLOR: Rgb = [255, 255, 0];

/// Normalization of the diverging colormap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatmapScale {
    /// Full intensity at |v| = 1.
    Fixed,
    /// Full intensity at the grid's largest |v|.
    Auto,
}

fn quantize(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Red-white-blue map: positive weights fade white to blue, negative white to red.
pub fn render_heatmap(grid: &FloatGrid, scale: HeatmapScale) -> Image {
    let m = match scale {
        HeatmapScale::Fixed => 1.0,
        HeatmapScale::Auto => match grid.max_abs() {
            m if m > 0.0 => m,
            _ => 1.0,
        },
    };
    let pixels = grid
        .values()
        .iter()
        .map(|&v| {
            let s = (v.abs() / m).clamp(0.0, 1.0);
            let fade = quantize(255.0 * (1.0 - s));
            if v > 0.0 {
                [fade, fade, 255]
            } else if v < 0.0 {
                [255, fade, fade]
            } else {
                [255, 255, 255]
            }
        })
        .collect();
    Image::new(grid.width(), grid.height(), pixels).expect("grid dimensions are valid")
}

/// White (0) to black (`cap` and above). Pixels flagged in `excluded` get [`EXCLUDED_COLOR`].
pub fn render_grayscale(
    grid: &FloatGrid,
    cap: f64,
    excluded: Option<&[bool]>,
) -> Result<Image, ImagingError> {
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(ImagingError::InvalidCap(cap));
    }
    if let Some(ex) = excluded {
        if ex.len() != grid.len() {
            return Err(ImagingError::Dimensions {
                width: grid.width(),
                height: grid.height(),
                len: ex.len(),
            });
        }
    }
    let pixels = grid
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if excluded.is_some_and(|ex| ex[i]) {
                return EXCLUDED_COLOR;
            }
            let s = (v / cap).clamp(0.0, 1.0);
            let g = quantize(255.0 * (1.0 - s));
            [g, g, g]
        })
        .collect();
    Image::new(grid.width(), grid.height(), pixels)
}

/// Marks pixels that touch (4-connectivity) a pixel of another segment in yellow.
pub fn overlay_boundaries(image: &Image, segmap: &SegmentMap) -> Result<Image, ImagingError> {
    let (w, h) = (image.width(), image.height());
    if segmap.width() != w || segmap.height() != h {
        return Err(ImagingError::Mismatch(w, h, segmap.width(), segmap.height()));
    }
    let labels = segmap.labels();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let l = labels[i];
            let boundary = (x > 0 && labels[i - 1] != l)
                || (x + 1 < w && labels[i + 1] != l)
                || (y > 0 && labels[i - w] != l)
                || (y + 1 < h && labels[i + w] != l);
            if boundary {
                out.pixels_mut()[i] = BOUNDARY_COLOR;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<f64>) -> FloatGrid {
        FloatGrid::new(values.len(), 1, values).unwrap()
    }

    #[test]
    fn heatmap_endpoints() {
        let img = render_heatmap(&grid(vec![0.0, 1.0, -1.0, 0.5, -0.5, 3.0]), HeatmapScale::Fixed);
        assert_eq!(
            img.pixels(),
            &[
                [255, 255, 255],
                [0, 0, 255],
                [255, 0, 0],
                [128, 128, 255],
                [255, 128, 128],
                [0, 0, 255]
            ]
        );
    }

    #[test]
    fn heatmap_auto_scale() {
        let img = render_heatmap(&grid(vec![0.2, -0.1, 0.0]), HeatmapScale::Auto);
        assert_eq!(img.pixels()[0], [0, 0, 255]);
        assert_eq!(img.pixels()[1], [255, 128, 128]);
        let zeros = render_heatmap(&FloatGrid::zeros(3, 2), HeatmapScale::Auto);
        assert!(zeros.pixels().iter().all(|p| *p == [255, 255, 255]));
    }

    #[test]
    fn grayscale_values() {
        let g = grid(vec![0.0, 1.0, 2.0, 0.5, 0.7]);
        let ex = [false, false, false, false, true];
        let img = render_grayscale(&g, 1.0, Some(&ex)).unwrap();
        assert_eq!(
            img.pixels(),
            &[[255; 3], [0; 3], [0; 3], [128; 3], EXCLUDED_COLOR]
        );
        assert!(matches!(render_grayscale(&g, 0.0, None), Err(ImagingError::InvalidCap(_))));
    }

    #[test]
    fn overlay_single_segment_unchanged() {
        let img = Image::from_fn(6, 5, |x, y| [x as u8, y as u8, 9]).unwrap();
        let seg = SegmentMap::from_labels(6, 5, vec![0; 30]).unwrap();
        assert_eq!(overlay_boundaries(&img, &seg).unwrap(), img);
    }

    #[test]
    fn overlay_vertical_split_marks_two_columns() {
        let (w, h, c) = (8, 4, 3);
        let img = Image::filled(w, h, [10, 20, 30]).unwrap();
        let labels = (0..w * h).map(|i| u32::from(i % w >= c)).collect();
        let seg = SegmentMap::from_labels(w, h, labels).unwrap();
        let out = overlay_boundaries(&img, &seg).unwrap();
        for y in 0..h {
            for x in 0..w {
                let marked = out.get(x, y) == BOUNDARY_COLOR;
                assert_eq!(marked, x == c - 1 || x == c, "({x},{y})");
            }
        }
    }

    #[test]
    fn overlay_checker_marks_everything() {
        let img = Image::filled(4, 4, [0, 0, 0]).unwrap();
        let labels: Vec<u32> = (0..16).map(|i| ((i % 4 + i / 4) % 2) as u32).collect();
        let seg = SegmentMap::from_labels(4, 4, labels.clone()).unwrap();
        let out = overlay_boundaries(&img, &seg).unwrap();
        // brute-force adjacency enumeration
        for i in 0..16usize {
            let (x, y) = (i % 4, i / 4);
            let nbrs = [(0i32, 1i32), (0, -1), (1, 0), (-1, 0)];
            let touches = nbrs.iter().any(|(dx, dy)| {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                (0..4).contains(&nx)
                    && (0..4).contains(&ny)
                    && labels[(ny * 4 + nx) as usize] != labels[i]
            });
            assert!(touches);
            assert_eq!(out.pixels()[i], BOUNDARY_COLOR);
        }
    }

    #[test]
    fn overlay_dimension_mismatch() {
        let img = Image::filled(4, 4, [0, 0, 0]).unwrap();
        let seg = SegmentMap::from_labels(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(overlay_boundaries(&img, &seg), Err(ImagingError::Mismatch(..))));
    }
}
