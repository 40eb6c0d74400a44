use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use super::{FloatGrid, Image, ImagingError};

fn io_err(path: &Path, source: std::io::Error) -> ImagingError {
    ImagingError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
///
/// Nothing is left behind on failure.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ImagingError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Decodes an 8-bit RGB or RGBA PNG. Alpha is discarded.
pub fn load_png(path: &Path) -> Result<Image, ImagingError> {
    let shown = || path.display().to_string();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ImagingError::NotFound(shown()),
        _ => io_err(path, e),
    })?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| ImagingError::MalformedPng {
        path: shown(),
        reason: e.to_string(),
    })?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(ImagingError::UnsupportedFormat {
            path: shown(),
            reason: format!("bit depth {depth:?}, expected 8"),
        });
    }
    let channels = match color {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(ImagingError::UnsupportedFormat {
                path: shown(),
                reason: format!("color type {other:?}, expected RGB or RGBA"),
            })
        }
    };
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| ImagingError::MalformedPng {
        path: shown(),
        reason: e.to_string(),
    })?;
    let (w, h) = (info.width as usize, info.height as usize);
    let pixels = buf[..info.buffer_size()]
        .chunks_exact(channels)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Image::new(w, h, pixels)
}

/// Lossless 8-bit RGB PNG with fixed encoder settings, so output bytes are reproducible.
pub fn save_png(image: &Image, path: &Path) -> Result<(), ImagingError> {
    let mut bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut bytes, image.width() as u32, image.height() as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Default);
        encoder.set_filter(png::FilterType::NoFilter);
        let mut writer = encoder.write_header().map_err(|e| encode_err(path, e))?;
        writer
            .write_image_data(&image.to_raw())
            .map_err(|e| encode_err(path, e))?;
    }
    write_atomic(path, &bytes)
}

fn encode_err(path: &Path, e: png::EncodingError) -> ImagingError {
    io_err(path, std::io::Error::other(e.to_string()))
}

const GRID_MAGIC: &str = "EVEXMAP 1";

fn format_value(v: f64) -> String {
    // 9 significant digits; normalize negative zero
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.8e}")
}

/// Serializes a grid as `EVEXMAP 1`: header, dimensions, then one text row per raster row.
pub fn grid_to_string(grid: &FloatGrid) -> String {
    let mut out = format!("{GRID_MAGIC}\n{} {}\n", grid.width(), grid.height());
    for row in grid.values().chunks(grid.width()) {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_float_grid(grid: &FloatGrid, path: &Path) -> Result<(), ImagingError> {
    write_atomic(path, grid_to_string(grid).as_bytes())
}

pub fn read_float_grid(path: &Path) -> Result<FloatGrid, ImagingError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ImagingError::NotFound(path.display().to_string()),
        _ => io_err(path, e),
    })?;
    parse_float_grid(&text).map_err(|reason| ImagingError::MalformedGrid {
        path: path.display().to_string(),
        reason,
    })
}

pub(crate) fn parse_float_grid(text: &str) -> Result<FloatGrid, String> {
    let mut lines = text.splitn(3, '\n');
    if lines.next().map(str::trim_end) != Some(GRID_MAGIC) {
        return Err("missing EVEXMAP 1 header".into());
    }
    let dims: Vec<usize> = lines
        .next()
        .ok_or("missing dimensions")?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad dimension {t:?}")))
        .collect::<Result<_, _>>()?;
    let [w, h] = dims[..] else {
        return Err("expected `<width> <height>`".into());
    };
    let values: Vec<f64> = lines
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad value {t:?}")))
        .collect::<Result<_, _>>()?;
    FloatGrid::new(w, h, values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_white_pixel_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.png");
        let img = Image::filled(1, 1, [255, 255, 255]).unwrap();
        save_png(&img, &path).unwrap();
        assert_eq!(load_png(&path).unwrap(), img);
    }

    #[test]
    fn missing_file_is_not_found() {
        let err = load_png(Path::new("/definitely/not/here.png")).unwrap_err();
        assert!(matches!(err, ImagingError::NotFound(_)));
    }

    #[test]
    fn garbage_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        std::fs::write(&path, b"not a png at all").unwrap();
        assert!(matches!(load_png(&path), Err(ImagingError::MalformedPng { .. })));
    }

    #[test]
    fn sixteen_bit_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let mut bytes = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut bytes, 2, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0u8; 12]).unwrap();
        }
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_png(&path), Err(ImagingError::UnsupportedFormat { .. })));
    }

    #[test]
    fn save_into_missing_dir_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("nope").join("x.png");
        let img = Image::filled(2, 2, [1, 2, 3]).unwrap();
        assert!(save_png(&img, &target).is_err());
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn grid_text_format() {
        let g = FloatGrid::new(2, 2, vec![0.5, -0.0, 1.0 / 3.0, -12345.678]).unwrap();
        let s = grid_to_string(&g);
        assert_eq!(
            s,
            "EVEXMAP 1\n2 2\n5.00000000e-1 0.00000000e0\n3.33333333e-1 -1.23456780e4\n"
        );
        let back = parse_float_grid(&s).unwrap();
        assert_eq!(back.values()[0], 0.5);
        assert!((back.values()[2] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn grid_parse_rejects_wrong_count() {
        assert!(parse_float_grid("EVEXMAP 1\n2 2\n1 2 3\n").is_err());
        assert!(parse_float_grid("EVEXSEG 1\n1 1\n1\n").is_err());
    }
}
