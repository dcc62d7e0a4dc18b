//! Synthetic exposure stacks from the builtin HDR scenes.
//!
//! Each scene is rendered at a few exposure values with a clipping camera
//! response. The 0 EV reference is written as PFM next to the PNG exposures.

use std::path::PathBuf;

use ssla::expogen::{builtin_scenes, make_stack, ExposureSpec};
use ssla::imageio::{encode_srgb_file, write_pfm_file, BitDepth};

fn main() -> ssla::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join("expogen"));

    let spec = ExposureSpec::unclear(3, 11)?;
    println!("exposure values {:.2?}", spec.evs);
    for scene in builtin_scenes(128, 96, 11) {
        let dir = out.join(scene.name());
        std::fs::create_dir_all(&dir).map_err(|e| ssla::Error::io(&dir, e))?;
        let stack = make_stack(&scene, &spec)?;
        for (i, img) in stack.images().iter().enumerate() {
            let clipped = img.pixels().iter().flatten().filter(|&&c| c >= 1.0).count();
            println!("{:<9} #{i}: {:5.1}% channels saturated", scene.name(), 100.0 * clipped as f64 / (3 * img.len()) as f64);
            encode_srgb_file(dir.join(format!("exposure_{i:02}.png")), img, BitDepth::Eight)?;
        }
        write_pfm_file(dir.join("reference.pfm"), &scene.reference())?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
