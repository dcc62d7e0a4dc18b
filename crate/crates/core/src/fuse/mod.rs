//! Fusion backends that turn an (adjusted) exposure stack into one image.
//!
//! Backends implement [`FusionBackend`]. Two are provided: Mertens exposure
//! fusion and a plain per-pixel average. [`FuseDomain`] picks whether the
//! backend sees linear light or the sRGB-encoded rendition; the result is
//! always returned in linear light.

pub mod mertens;
pub mod pyramid;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imageio::{srgb, LinearImage};

pub use mertens::{mertens_fuse, mertens_weights};

/// Per-image weight maps, normalized so that they sum to one at every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMaps {
    width: usize,
    height: usize,
    maps: Vec<Vec<f64>>,
}

impl WeightMaps {
    pub(crate) fn new(width: usize, height: usize, maps: Vec<Vec<f64>>) -> Self {
        Self { width, height, maps }
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// One row-major map per input image.
    pub fn maps(&self) -> &[Vec<f64>] {
        &self.maps
    }
}

/// A fusion method `y = F(x_1, ..., x_M)`.
pub trait FusionBackend {
    fn name(&self) -> &'static str;

    /// Fuses an aligned, non-empty stack. Inputs and output are linear.
    fn fuse(&self, images: &[LinearImage]) -> Result<LinearImage>;
}

/// Value domain the backend operates in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FuseDomain {
    /// sRGB-encoded values, clipped to `[0, 1]`.
    #[default]
    Encoded,
    Linear,
}

/// Built-in backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fusion {
    #[default]
    Mertens,
    Average,
}

impl Fusion {
    pub fn backend(self, domain: FuseDomain) -> Box<dyn FusionBackend> {
        match self {
            Fusion::Mertens => Box::new(MertensFusion { domain, depth: None }),
            Fusion::Average => Box::new(AverageFusion { domain }),
        }
    }

    pub fn fuse(self, images: &[LinearImage], domain: FuseDomain) -> Result<LinearImage> {
        self.backend(domain).fuse(images)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MertensFusion {
    pub domain: FuseDomain,
    /// Pyramid levels; `None` picks them from the image size.
    pub depth: Option<usize>,
}

impl FusionBackend for MertensFusion {
    fn name(&self) -> &'static str {
        "mertens"
    }

    fn fuse(&self, images: &[LinearImage]) -> Result<LinearImage> {
        in_domain(self.domain, images, |imgs| mertens_fuse(imgs, self.depth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AverageFusion {
    pub domain: FuseDomain,
}

impl FusionBackend for AverageFusion {
    fn name(&self) -> &'static str {
        "average"
    }

    fn fuse(&self, images: &[LinearImage]) -> Result<LinearImage> {
        in_domain(self.domain, images, average_fuse)
    }
}

fn in_domain(
    domain: FuseDomain,
    images: &[LinearImage],
    f: impl Fn(&[LinearImage]) -> Result<LinearImage>,
) -> Result<LinearImage> {
    match domain {
        FuseDomain::Linear => f(images),
        FuseDomain::Encoded => {
            let encoded: Vec<LinearImage> = images.iter().map(|i| i.map_channels(srgb::to_encoded)).collect();
            Ok(f(&encoded)?.map_channels(srgb::to_linear))
        }
    }
}

/// Unweighted per-pixel mean of the stack.
pub fn average_fuse(images: &[LinearImage]) -> Result<LinearImage> {
    let (w, h) = mertens::check_stack(images)?;
    let n = images.len() as f64;
    Ok(LinearImage::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        for img in images {
            let px = img.get(x, y);
            for c in 0..3 {
                acc[c] += px[c];
            }
        }
        acc.map(|v| v / n)
    }))
}

impl FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mertens" => Ok(Fusion::Mertens),
            "average" => Ok(Fusion::Average),
            other => Err(Error::param("fusion", format!("unknown backend '{other}'"))),
        }
    }
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fusion::Mertens => "mertens",
            Fusion::Average => "average",
        })
    }
}

impl FromStr for FuseDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoded" => Ok(FuseDomain::Encoded),
            "linear" => Ok(FuseDomain::Linear),
            other => Err(Error::param("fuse_domain", format!("unknown domain '{other}'"))),
        }
    }
}

impl fmt::Display for FuseDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FuseDomain::Encoded => "encoded",
            FuseDomain::Linear => "linear",
        })
    }
}
