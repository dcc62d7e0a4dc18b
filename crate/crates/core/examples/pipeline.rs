//! End-to-end run from files on disk.
//!
//! Writes a synthetic stack as PNG, configures the pipeline from
//! `key = value` text, then fuses the files and writes the result, the JSON
//! report and the intermediates.

use std::path::PathBuf;

use ssla::expogen::{make_stack, window_scene, ExposureSpec};
use ssla::imageio::{encode_srgb_file, BitDepth};
use ssla::pipeline::{run_pipeline, PipelineConfig};

const CONFIG: &str = "
# Approach 2 with a coarser fit
approach = 2
k_max = 6
downsize_max = 128
fusion = mertens
";

fn main() -> ssla::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join("pipeline"));
    std::fs::create_dir_all(&out).map_err(|e| ssla::Error::io(&out, e))?;

    let stack = make_stack(&window_scene(256, 256, 9), &ExposureSpec::new(vec![-6.0, -4.0, -2.0])?)?;
    let mut inputs = Vec::new();
    for (i, img) in stack.images().iter().enumerate() {
        let path = out.join(format!("input_{i:02}.png"));
        encode_srgb_file(&path, img, BitDepth::Sixteen)?;
        inputs.push(path);
    }

    let mut config = PipelineConfig::default();
    config.apply_text(CONFIG)?;
    config.output = Some(out.join("fused.png"));
    config.report = Some(out.join("report.json"));
    config.emit_intermediates = true;

    let result = run_pipeline(&inputs, &config)?;
    let r = &result.report;
    println!("M = {}, entropy {:.4} bits, naturalness {:.4}", r.segment_count, r.scores.entropy_bits, r.scores.naturalness);
    for s in &r.segments {
        println!("  segment {}: {} px, alpha {:.3}, source {:?}", s.segment, s.pixel_count, s.alpha, s.source_index);
    }
    for (stage, ms) in &r.timings_ms {
        println!("  {stage:<10} {ms:8.1} ms");
    }
    println!("wrote {}", out.display());
    Ok(())
}
