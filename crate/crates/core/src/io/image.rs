//! Image decoding and encoding: PNG (8/16-bit gray and RGB) plus binary
//! PGM (P5) and PPM (P6). Values are scaled to [0, 1] by the declared
//! maximum; channel order is R, G, B.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use crate::error::{ChmError, Result};
use crate::grid::{ImagePlane, LabelMap, ProbabilityMap};

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| ChmError::io(path, e))?;
    Ok(buf)
}

const PNG_MAGIC: [u8; 4] = [0x89, b'P', b'N', b'G'];

/// Loads a PNG, PGM or PPM image, sniffing the format from magic bytes.
pub fn load_image(path: &Path) -> Result<ImagePlane> {
    let bytes = read_all(path)?;
    if bytes.len() < 8 {
        return Err(ChmError::Truncated { path: path.into() });
    }
    if bytes[..4] == PNG_MAGIC {
        decode_png(path, &bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(path, &bytes)
    } else {
        Err(ChmError::UnsupportedFormat(format!(
            "{}: not PNG, PGM (P5) or PPM (P6)",
            path.display()
        )))
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<ImagePlane> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|_| ChmError::Truncated { path: path.into() })?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|_| ChmError::Truncated { path: path.into() })?;
    let data = &buf[..info.buffer_size()];
    let (width, height) = (info.width as usize, info.height as usize);
    use png::{BitDepth, ColorType};
    let (src_channels, keep) = match info.color_type {
        ColorType::Grayscale => (1usize, 1usize),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        other => {
            return Err(ChmError::UnsupportedFormat(format!(
                "{}: PNG color type {other:?}",
                path.display()
            )))
        }
    };
    let (sample_bytes, maxval) = match info.bit_depth {
        BitDepth::Eight => (1usize, 255.0),
        BitDepth::Sixteen => (2, 65535.0),
        other => {
            return Err(ChmError::UnsupportedFormat(format!(
                "{}: PNG bit depth {other:?}",
                path.display()
            )))
        }
    };
    let expected = width * height * src_channels * sample_bytes;
    if data.len() < expected {
        return Err(ChmError::Truncated { path: path.into() });
    }
    let mut values = vec![0.0; width * height * keep];
    for pixel in 0..width * height {
        for ch in 0..keep {
            let at = (pixel * src_channels + ch) * sample_bytes;
            let raw = if sample_bytes == 1 {
                data[at] as f64
            } else {
                u16::from_be_bytes([data[at], data[at + 1]]) as f64
            };
            values[ch * width * height + pixel] = raw / maxval;
        }
    }
    ImagePlane::new(width, height, keep, values)
}

/// Parses the ASCII header of a binary PNM file: magic, width, height,
/// maxval, then a single whitespace byte before the raster.
fn pnm_header(path: &Path, bytes: &[u8]) -> Result<(usize, usize, usize, u32, usize)> {
    let channels = match &bytes[..2] {
        b"P5" => 1usize,
        b"P6" => 3,
        _ => unreachable!("checked by caller"),
    };
    let mut fields = Vec::new();
    let mut at = 2;
    while fields.len() < 3 {
        match bytes.get(at) {
            None => return Err(ChmError::Truncated { path: path.into() }),
            Some(b'#') => {
                while at < bytes.len() && bytes[at] != b'\n' {
                    at += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => at += 1,
            Some(c) if c.is_ascii_digit() => {
                let start = at;
                while at < bytes.len() && bytes[at].is_ascii_digit() {
                    at += 1;
                }
                let text = std::str::from_utf8(&bytes[start..at]).unwrap();
                fields.push(text.parse::<u32>().map_err(|_| ChmError::Truncated {
                    path: path.into(),
                })?);
            }
            Some(_) => return Err(ChmError::Truncated { path: path.into() }),
        }
    }
    // exactly one whitespace byte separates maxval from the raster
    if !bytes.get(at).is_some_and(u8::is_ascii_whitespace) {
        return Err(ChmError::Truncated { path: path.into() });
    }
    at += 1;
    let (w, h, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(ChmError::UnsupportedFormat(format!(
            "{}: bad PNM dimensions or maxval",
            path.display()
        )));
    }
    Ok((channels, w, h, maxval, at))
}

fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<ImagePlane> {
    let (channels, width, height, maxval, data_at) = pnm_header(path, bytes)?;
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let data = &bytes[data_at..];
    let expected = width * height * channels * sample_bytes;
    if data.len() < expected {
        return Err(ChmError::Truncated { path: path.into() });
    }
    let scale = 1.0 / maxval as f64;
    let mut values = vec![0.0; width * height * channels];
    for pixel in 0..width * height {
        for ch in 0..channels {
            let at = (pixel * channels + ch) * sample_bytes;
            let raw = if sample_bytes == 1 {
                data[at] as f64
            } else {
                u16::from_be_bytes([data[at], data[at + 1]]) as f64
            };
            values[ch * width * height + pixel] = raw * scale;
        }
    }
    ImagePlane::new(width, height, channels, values)
}

/// Loads a label image: 8-bit single channel. Binary problems map any
/// value above zero to class 1; multiclass problems take the raw value as
/// the class id and reject ids outside the declared range.
pub fn load_labels(path: &Path, class_count: usize) -> Result<LabelMap> {
    let bytes = read_all(path)?;
    if bytes.len() < 8 {
        return Err(ChmError::Truncated { path: path.into() });
    }
    let raw = if bytes[..4] == PNG_MAGIC {
        decode_labels_png(path, &bytes)?
    } else if bytes.starts_with(b"P5") {
        decode_labels_pgm(path, &bytes)?
    } else {
        return Err(ChmError::UnsupportedFormat(format!(
            "{}: labels must be 8-bit grayscale PNG or PGM",
            path.display()
        )));
    };
    let (width, height, data) = raw;
    let values = if class_count == 2 {
        data.iter().map(|&v| u8::from(v > 0)).collect()
    } else {
        for &v in &data {
            if v as usize >= class_count {
                return Err(ChmError::LabelOutOfRange {
                    label: v as u32,
                    class_count,
                });
            }
        }
        data
    };
    LabelMap::new(width, height, class_count, values)
}

fn decode_labels_png(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|_| ChmError::Truncated { path: path.into() })?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|_| ChmError::Truncated { path: path.into() })?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(ChmError::UnsupportedFormat(format!(
            "{}: labels must be 8-bit grayscale",
            path.display()
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    Ok((w, h, buf[..info.buffer_size()].to_vec()))
}

fn decode_labels_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let (channels, width, height, maxval, data_at) = pnm_header(path, bytes)?;
    if channels != 1 || maxval > 255 {
        return Err(ChmError::UnsupportedFormat(format!(
            "{}: labels must be 8-bit grayscale",
            path.display()
        )));
    }
    let data = &bytes[data_at..];
    if data.len() < width * height {
        return Err(ChmError::Truncated { path: path.into() });
    }
    Ok((width, height, data[..width * height].to_vec()))
}

/// Loads a per-annotator boundary set: a directory of label images, each
/// binarized at value > 0, or a single file treated as one annotator.
pub fn load_annotator_set(path: &Path) -> Result<Vec<LabelMap>> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| ChmError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(ChmError::MissingFile { path: path.into() });
        }
        files.iter().map(|f| load_labels(f, 2)).collect()
    } else {
        Ok(vec![load_labels(path, 2)?])
    }
}

/// Writes a probability map as 16-bit grayscale PNG with
/// value = round(p * 65535).
pub fn save_probability_png(path: &Path, map: &ProbabilityMap) -> Result<()> {
    let file = File::create(path).map_err(|e| ChmError::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), map.width() as u32, map.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder
        .write_header()
        .map_err(|e| ChmError::io(path, std::io::Error::other(e)))?;
    let mut bytes = Vec::with_capacity(map.values().len() * 2);
    for &v in map.values() {
        let q = (v * 65535.0).round() as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    writer
        .write_image_data(&bytes)
        .map_err(|e| ChmError::io(path, std::io::Error::other(e)))?;
    Ok(())
}

/// Reads a 16-bit probability PNG back into a map.
pub fn load_probability_png(path: &Path) -> Result<ProbabilityMap> {
    let image = load_image(path)?;
    if image.channels() != 1 {
        return Err(ChmError::UnsupportedFormat(format!(
            "{}: probability maps are single channel",
            path.display()
        )));
    }
    ProbabilityMap::new(image.width(), image.height(), image.channel(0).to_vec())
}

/// Writes a label map as 8-bit grayscale PNG with pixel value = class id.
pub fn save_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let file = File::create(path).map_err(|e| ChmError::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        labels.width() as u32,
        labels.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| ChmError::io(path, std::io::Error::other(e)))?;
    writer
        .write_image_data(labels.values())
        .map_err(|e| ChmError::io(path, std::io::Error::other(e)))?;
    Ok(())
}

/// Writes a grayscale image as binary PGM (maxval 255).
pub fn save_pgm(path: &Path, image: &ImagePlane) -> Result<()> {
    if image.channels() != 1 {
        return Err(ChmError::UnsupportedFormat(
            "PGM output is single channel".into(),
        ));
    }
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.channel(0).iter().map(|&v| (v * 255.0).round() as u8));
    std::fs::write(path, out).map_err(|e| ChmError::io(path, e))
}
