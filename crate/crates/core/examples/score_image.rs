//! Discrete entropy and statistical naturalness of an image.
//!
//! Scores the PNG or PFM given on the command line, or a sweep of synthetic
//! exposures when no path is given.

use ssla::expogen::{expose, gradient_scene, Response};
use ssla::imageio::read_image;
use ssla::metrics::{luma_statistics, score_image, NaturalnessParams};

fn main() -> ssla::Result<()> {
    let params = NaturalnessParams::default();
    if let Some(path) = std::env::args().nth(1) {
        let img = read_image(&path)?;
        let s = score_image(&img, &params)?;
        let (mean, mean_std) = luma_statistics(&img, &params);
        println!("{path}");
        println!("  entropy      {:.4} bits", s.entropy_bits);
        println!("  naturalness  {:.4} (mean luma {mean:.1}, mean patch std {mean_std:.1})", s.naturalness);
        return Ok(());
    }

    let scene = gradient_scene(128, 128, 0);
    println!("{:>5} {:>9} {:>12}", "ev", "entropy", "naturalness");
    for ev in [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0] {
        let s = score_image(&expose(&scene, ev, Response::ClippedLinear), &params)?;
        println!("{ev:>5.1} {:>9.4} {:>12.4}", s.entropy_bits, s.naturalness);
    }
    Ok(())
}
