//! Exposure fusion backends on an unadjusted stack.
//!
//! Fuses the same three exposures with Mertens weights and with a plain
//! average, in both the encoded and the linear domain, and prints the
//! scores of each result.

use std::path::PathBuf;

use ssla::expogen::{make_stack, window_scene, ExposureSpec};
use ssla::fuse::{mertens_weights, FuseDomain, Fusion};
use ssla::imageio::{encode_srgb_file, BitDepth};
use ssla::metrics::{score_image, NaturalnessParams};

fn main() -> ssla::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join("fuse"));
    std::fs::create_dir_all(&out).map_err(|e| ssla::Error::io(&out, e))?;

    let stack = make_stack(&window_scene(256, 192, 5), &ExposureSpec::new(vec![-6.0, -3.0, 0.0])?)?;
    let images = stack.images();

    let weights = mertens_weights(images)?;
    for (i, map) in weights.maps().iter().enumerate() {
        let mean = map.iter().sum::<f64>() / map.len() as f64;
        println!("exposure {i}: mean normalized weight {mean:.3}");
    }

    let params = NaturalnessParams::default();
    for fusion in [Fusion::Mertens, Fusion::Average] {
        for domain in [FuseDomain::Encoded, FuseDomain::Linear] {
            let fused = fusion.fuse(images, domain)?;
            let s = score_image(&fused, &params)?;
            let name = format!("{fusion:?}_{domain:?}").to_lowercase();
            println!("{name:<16} entropy {:.4} bits  naturalness {:.4}", s.entropy_bits, s.naturalness);
            encode_srgb_file(out.join(format!("{name}.png")), &fused, BitDepth::Eight)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}
