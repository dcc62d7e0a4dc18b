//! Image I/O round trips.
//!
//! PFM stores linear floats, so a write and read reproduces the image to
//! f32 precision. PNG goes through the sRGB curve and 8 or 16 bit codes.

use ssla::imageio::{decode_srgb, encode_srgb, read_pfm, write_pfm, BitDepth};
use ssla::LinearImage;

fn max_error(a: &LinearImage, b: &LinearImage) -> f64 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn main() -> ssla::Result<()> {
    let img = LinearImage::from_fn(64, 48, |x, y| {
        let u = x as f64 / 63.0;
        let v = y as f64 / 47.0;
        [u * u, v, 0.25 * (u + v) * (u + v)]
    });

    let pfm = write_pfm(&img);
    let back = read_pfm(&pfm)?;
    println!("PFM     {} bytes, max error {:.2e}", pfm.len(), max_error(&img, &back));

    for depth in [BitDepth::Eight, BitDepth::Sixteen] {
        let png = encode_srgb(&img, depth)?;
        let back = decode_srgb(&png)?;
        println!("PNG {depth:?}: {} bytes, max error {:.2e}", png.len(), max_error(&img, &back));
    }
    Ok(())
}
