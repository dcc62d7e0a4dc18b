//! Both segmentation approaches on one synthetic stack.
//!
//! Approach 1 bins the middle exposure into equal-width luminance ranges.
//! Approach 2 fits a variational mixture to the per-pixel vectors of all
//! exposures. Label maps are written as palette PNGs.

use std::path::PathBuf;

use ssla::expogen::{make_stack, trimodal_scene, ExposureSpec};
use ssla::pipeline::{enhanced_luminances, write_label_map, PipelineConfig};
use ssla::segment::{segment_approach1, segment_approach2, select_middle, Approach2Params};

fn main() -> ssla::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ssla-examples").join("segment"));
    std::fs::create_dir_all(&out).map_err(|e| ssla::Error::io(&out, e))?;

    let scene = trimodal_scene(160, 160, 3);
    let stack = make_stack(&scene, &ExposureSpec::new(vec![-5.0, -3.0, -1.0])?)?;
    let enhanced = enhanced_luminances(&stack, &PipelineConfig::default());

    let mid = select_middle(&enhanced, 1e-6)?;
    let a1 = segment_approach1(&enhanced[mid], stack.len())?;
    println!("approach 1: middle exposure #{mid}, thresholds {:.3?}", a1.thresholds);
    println!("  {} segments, pixel counts {:?}", a1.partition.segment_count(), a1.partition.pixel_counts());

    let a2 = segment_approach2(&enhanced, &Approach2Params::default())?;
    println!(
        "approach 2: fitted on {}x{}, {} components kept, {} iterations",
        a2.fit_dimensions.0,
        a2.fit_dimensions.1,
        a2.fit.model.len(),
        a2.fit.iterations
    );
    println!("  {} segments, pixel counts {:?}", a2.partition.segment_count(), a2.partition.pixel_counts());

    write_label_map(out.join("labels_approach1.png"), &a1.partition)?;
    write_label_map(out.join("labels_approach2.png"), &a2.partition)?;
    println!("wrote {}", out.display());
    Ok(())
}
