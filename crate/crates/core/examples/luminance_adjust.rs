//! Per-segment luminance adjustment.
//!
//! Each segment picks the input whose geometric mean is closest to middle
//! gray, scales it there, compresses highlights with the Reinhard curve and
//! puts the colour back. One PNG per adjusted image.

use std::path::PathBuf;

use ssla::adjust::{adjust_stack, reinhard, AdjustConfig};
use ssla::expogen::{make_stack, window_scene, ExposureSpec};
use ssla::imageio::{encode_srgb_file, BitDepth};
use ssla::pipeline::{enhanced_luminances, PipelineConfig};
use ssla::segment::{segment_approach1, select_middle};

fn main() -> ssla::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join("adjust"));
    std::fs::create_dir_all(&out).map_err(|e| ssla::Error::io(&out, e))?;

    for t in [0.0, 0.18, 1.0, 4.0] {
        println!("reinhard({t}, knee 4) = {:.4}", reinhard(t, 4.0));
    }

    let stack = make_stack(&window_scene(192, 128, 2), &ExposureSpec::new(vec![-6.0, -3.0, 0.0])?)?;
    let enhanced = enhanced_luminances(&stack, &PipelineConfig::default());
    let mid = select_middle(&enhanced, 1e-6)?;
    let seg = segment_approach1(&enhanced[mid], stack.len())?;

    let adjusted = adjust_stack(&stack, &enhanced, &seg.partition, &AdjustConfig::default())?;
    for (i, a) in adjusted.images.iter().enumerate() {
        let s = &a.scale;
        println!(
            "segment {} ({} px): source #{} alpha {:.3} knee {:.3}",
            s.segment, s.pixel_count, s.source_index, s.alpha, s.knee
        );
        encode_srgb_file(out.join(format!("adjusted_{i:02}.png")), &a.image.clamped(), BitDepth::Eight)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
