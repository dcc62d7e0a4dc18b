//! The four standard configurations on one stack.
//!
//! Runs no adjustment, Approach 1, Approach 2 and Approach 2 without
//! contrast enhancement, then prints a Markdown table of the scores.

use ssla::expogen::{builtin_scene, make_stack, ExposureSpec};
use ssla::pipeline::{compare_runs, standard_variants, PipelineConfig};

fn main() -> ssla::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "window".into());
    let scene = builtin_scene(&name, 192, 192, 0)?;
    let stack = make_stack(&scene, &ExposureSpec::new(vec![-5.0, -2.5, 0.0])?)?;
    let table = compare_runs(&stack, &standard_variants(&PipelineConfig::default()))?;
    print!("{}", table.to_markdown());
    Ok(())
}
