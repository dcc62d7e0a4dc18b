//! Portable float map I/O.
//!
//! PFM stores single-precision samples, so a write/read cycle is exact for
//! values representable as `f32` and rounds everything else to nearest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{LinearImage, LuminanceMap};
use crate::error::{Error, Result};

pub fn read_pfm(bytes: &[u8]) -> Result<LinearImage> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor)?;
    let channels = match magic {
        b"PF" => 3,
        b"Pf" => 1,
        other => {
            return Err(Error::Pfm(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = parse_token::<usize>(bytes, &mut cursor, "width")?;
    let height = parse_token::<usize>(bytes, &mut cursor, "height")?;
    let scale = parse_token::<f64>(bytes, &mut cursor, "scale")?;
    if width == 0 || height == 0 {
        return Err(Error::Pfm(format!("zero dimension {width}x{height}")));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm(format!("invalid scale {scale}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if bytes.get(cursor).is_none_or(|b| !b.is_ascii_whitespace()) {
        return Err(Error::Pfm("missing separator after header".into()));
    }
    cursor += 1;

    let little_endian = scale < 0.0;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels * 4))
        .ok_or_else(|| Error::Pfm("dimensions overflow".into()))?;
    let raster = &bytes[cursor..];
    if raster.len() != expected {
        return Err(Error::Pfm(format!(
            "header declares {width}x{height}x{channels} ({expected} bytes) but {} bytes follow",
            raster.len()
        )));
    }
    let samples: Vec<f64> = raster
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little_endian {
                f32::from_le_bytes(b) as f64
            } else {
                f32::from_be_bytes(b) as f64
            }
        })
        .collect();

    let mut data = vec![[0.0; 3]; width * height];
    // Rows are stored bottom to top.
    for (row_idx, row) in samples.chunks_exact(width * channels).enumerate() {
        let y = height - 1 - row_idx;
        for x in 0..width {
            let px = &row[x * channels..(x + 1) * channels];
            data[y * width + x] = if channels == 3 {
                [px[0], px[1], px[2]]
            } else {
                [px[0]; 3]
            };
        }
    }
    LinearImage::new(width, height, data).map_err(|e| Error::Pfm(e.to_string()))
}

pub fn read_pfm_file(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_pfm(&bytes).map_err(|e| match e {
        Error::Pfm(msg) => Error::Pfm(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a colour PFM in little-endian order.
pub fn write_pfm(img: &LinearImage) -> Vec<u8> {
    let (w, h) = img.dimensions();
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for c in img.get(x, y) {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    out
}

/// Serializes a single-channel PFM in little-endian order.
pub fn write_pfm_luminance(map: &LuminanceMap) -> Vec<u8> {
    let (w, h) = map.dimensions();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            out.extend_from_slice(&(map.get(x, y) as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_pfm_file(path: impl AsRef<Path>, img: &LinearImage) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&write_pfm(img))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Result<&'a [u8]> {
    while bytes.get(*cursor).is_some_and(|b| b.is_ascii_whitespace()) {
        *cursor += 1;
    }
    let start = *cursor;
    while bytes.get(*cursor).is_some_and(|b| !b.is_ascii_whitespace()) {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(Error::Pfm("truncated header".into()));
    }
    Ok(&bytes[start..*cursor])
}

fn parse_token<T: std::str::FromStr>(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<T> {
    let tok = next_token(bytes, cursor)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pfm(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}
