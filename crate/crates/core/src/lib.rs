//! Multi-exposure fusion with scene-segmentation-based luminance adjustment.
//!
//! A bracketed stack of exposures is fused in four stages:
//!
//! 1. [`enhance`]: local contrast enhancement of every luminance map using a
//!    bilateral local mean (dodging and burning).
//! 2. [`segment`]: the frame is split into regions of similar brightness,
//!    either by thresholding one exposure or by a variational Gaussian
//!    mixture over the per-pixel luminance vectors.
//! 3. [`adjust`]: one adjusted exposure per region, scaled so that the
//!    region sits at middle gray, tone mapped and recoloured.
//! 4. [`fuse`]: exposure fusion of the adjusted stack.
//!
//! [`metrics`] scores the result, [`expogen`] synthesises test stacks from
//! HDR scenes and [`pipeline`] wires everything together.
//!
//! ```no_run
//! use ssla::pipeline::{process_stack, PipelineConfig};
//! use ssla::expogen::{make_stack, window_scene, ExposureSpec};
//!
//! let scene = window_scene(256, 256, 0);
//! let stack = make_stack(&scene, &ExposureSpec::new(vec![-6.0, -4.0, -2.0])?)?;
//! let out = process_stack(&stack, &PipelineConfig::default())?;
//! println!("{} segments, {:.3} bits", out.report.segment_count, out.report.scores.entropy_bits);
//! # Ok::<(), ssla::Error>(())
//! ```

pub mod adjust;
pub mod enhance;
pub mod error;
pub mod expogen;
pub mod fuse;
pub mod imageio;
mod math;
pub mod metrics;
pub mod pipeline;
pub mod segment;

pub use error::{Error, Result};
pub use imageio::{ExposureStack, LinearImage, LuminanceMap};
