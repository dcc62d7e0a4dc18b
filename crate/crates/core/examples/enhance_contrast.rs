//! Local contrast enhancement of one exposure.
//!
//! Computes the bilateral local mean of the luminance, applies dodging and
//! burning, and writes before/after luminance as PFM plus the recoloured
//! result as PNG.
//!
//! ```text
//! cargo run --release --example enhance_contrast -- [out_dir]
//! ```

use std::path::PathBuf;

use ssla::adjust::recombine_color;
use ssla::enhance::{bilateral_grid_mean, bilateral_local_mean, dodge_and_burn, BilateralParams};
use ssla::expogen::{expose, window_scene, Response};
use ssla::imageio::{encode_srgb_file, write_pfm_luminance, BitDepth};

fn main() -> ssla::Result<()> {
    let out = out_dir("enhance");
    let scene = window_scene(192, 128, 1);
    let img = expose(&scene, -3.0, Response::ClippedLinear);
    let l = img.luminance();

    let params = BilateralParams::default();
    let local = bilateral_local_mean(&l, params);
    let grid = bilateral_grid_mean(&l, params);
    let enhanced = dodge_and_burn(&l, &local);

    let max_gap = local
        .values()
        .iter()
        .zip(grid.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("bilateral radius {} px", params.radius());
    println!("exact vs grid local mean, max |diff| = {max_gap:.4}");
    println!("luminance range before [{:.4}, {:.4}]", l.min(), l.max());
    println!("luminance range after  [{:.4}, {:.4}]", enhanced.min(), enhanced.max());

    std::fs::write(out.join("luminance.pfm"), write_pfm_luminance(&l)).map_err(|e| ssla::Error::io(&out, e))?;
    std::fs::write(out.join("enhanced.pfm"), write_pfm_luminance(&enhanced)).map_err(|e| ssla::Error::io(&out, e))?;
    encode_srgb_file(out.join("input.png"), &img, BitDepth::Eight)?;
    encode_srgb_file(out.join("enhanced.png"), &recombine_color(&img, &l, &enhanced).clamped(), BitDepth::Eight)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join(name));
    std::fs::create_dir_all(&dir).expect("create output directory");
    dir
}
