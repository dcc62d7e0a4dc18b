use std::fs::File;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use super::{srgb, LinearImage};
use crate::error::{Error, Result};

/// Sample depth for encoded PNG output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

/// Decodes an 8- or 16-bit RGB PNG into linear RGB.
pub fn decode_srgb(bytes: &[u8]) -> Result<LinearImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(format!("corrupt PNG header: {e}")))?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let (color, depth) = (info.color_type, info.bit_depth);
    if color != png::ColorType::Rgb {
        return Err(Error::Decode(format!(
            "unsupported channel layout {color:?} (only RGB is accepted)"
        )));
    }
    let max_code = match depth {
        png::BitDepth::Eight => 255.0,
        png::BitDepth::Sixteen => 65535.0,
        other => {
            return Err(Error::Decode(format!(
                "unsupported bit depth {other:?} (only 8 and 16 are accepted)"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(format!("corrupt PNG data: {e}")))?;
    let buf = &buf[..frame.buffer_size()];

    // 256-entry table for 8-bit input; 16-bit input evaluates the curve directly.
    let lut: Vec<f64> = (0..256).map(|c| srgb::to_linear(c as f64 / 255.0)).collect();
    let mut data = Vec::with_capacity(width * height);
    match depth {
        png::BitDepth::Eight => {
            for px in buf.chunks_exact(3) {
                data.push([
                    lut[px[0] as usize],
                    lut[px[1] as usize],
                    lut[px[2] as usize],
                ]);
            }
        }
        _ => {
            for px in buf.chunks_exact(6) {
                let c = |i: usize| {
                    srgb::to_linear(u16::from_be_bytes([px[i], px[i + 1]]) as f64 / max_code)
                };
                data.push([c(0), c(2), c(4)]);
            }
        }
    }
    LinearImage::new(width, height, data)
}

pub fn decode_srgb_file(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_srgb(&bytes).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Encodes linear RGB as an sRGB PNG. Channels outside `[0, 1]` are clipped.
pub fn encode_srgb(img: &LinearImage, depth: BitDepth) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_rgb_png(&mut out, img, depth)?;
    Ok(out)
}

pub fn encode_srgb_file(path: impl AsRef<Path>, img: &LinearImage, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_rgb_png(&mut w, img, depth)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_rgb_png<W: Write>(w: W, img: &LinearImage, depth: BitDepth) -> Result<()> {
    let mut encoder = png::Encoder::new(w, img.width() as u32, img.height() as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    let samples: Vec<u8> = match depth {
        BitDepth::Eight => {
            encoder.set_depth(png::BitDepth::Eight);
            img.pixels()
                .iter()
                .flat_map(|px| px.map(|c| srgb::quantize(c, 255) as u8))
                .collect()
        }
        BitDepth::Sixteen => {
            encoder.set_depth(png::BitDepth::Sixteen);
            img.pixels()
                .iter()
                .flat_map(|px| px.map(|c| srgb::quantize(c, 65535) as u16))
                .flat_map(u16::to_be_bytes)
                .collect()
        }
    };
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Encode(e.to_string()))?;
    writer
        .write_image_data(&samples)
        .map_err(|e| Error::Encode(e.to_string()))?;
    writer.finish().map_err(|e| Error::Encode(e.to_string()))
}

/// Writes an 8-bit indexed PNG. `indices` are row-major palette entries.
pub fn write_indexed_png(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    indices: &[u8],
    palette: &[[u8; 3]],
) -> Result<()> {
    let path = path.as_ref();
    if indices.len() != width * height {
        return Err(Error::InvalidInput("index buffer size mismatch".into()));
    }
    if palette.is_empty() || palette.len() > 256 {
        return Err(Error::InvalidInput(format!(
            "palette must have 1..=256 entries, got {}",
            palette.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_palette(palette.iter().flatten().copied().collect::<Vec<u8>>());
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Encode(e.to_string()))?;
    writer
        .write_image_data(indices)
        .map_err(|e| Error::Encode(e.to_string()))?;
    writer.finish().map_err(|e| Error::Encode(e.to_string()))
}
