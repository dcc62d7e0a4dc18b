//! Image containers, sRGB transfer functions, PNG/PFM codecs and luminance.
//!
//! Everything downstream of decoding works on scene-linear RGB. Values above
//! 1.0 are legal in a [`LinearImage`] and are only clipped when an image is
//! encoded back to sRGB.

mod pfm;
mod png_codec;
pub mod srgb;

pub use pfm::{read_pfm, read_pfm_file, write_pfm, write_pfm_file, write_pfm_luminance};
pub use png_codec::{
    decode_srgb, decode_srgb_file, encode_srgb, encode_srgb_file, write_indexed_png, BitDepth,
};

use std::path::Path;

use crate::error::{Error, Result};

/// Rec. 709 / sRGB-primaries weights for the Y component of CIE XYZ.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Scene-linear RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl LinearImage {
    /// Builds an image, rejecting empty grids, length mismatches and
    /// negative or non-finite channel values.
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data
            .iter()
            .position(|px| px.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "pixel {i} has a negative or non-finite channel: {:?}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from a per-pixel generator `f(x, y)`.
    ///
    /// The generator must produce finite, non-negative values; this is
    /// checked in debug builds only.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        assert!(width >= 1 && height >= 1, "image must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        debug_assert!(data
            .iter()
            .all(|px| px.iter().all(|c| c.is_finite() && *c >= 0.0)));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<[f64; 3]> {
        self.data
    }

    /// Applies `f` to every channel value. `f` must keep values finite and
    /// non-negative.
    pub fn map_channels(&self, f: impl Fn(f64) -> f64) -> Self {
        let data = self
            .data
            .iter()
            .map(|px| [f(px[0]), f(px[1]), f(px[2])])
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0 && factor.is_finite());
        self.map_channels(|c| c * factor)
    }

    /// Clamps every channel into `[0, 1]`.
    pub fn clamped(&self) -> Self {
        self.map_channels(|c| c.clamp(0.0, 1.0))
    }

    pub fn luminance(&self) -> LuminanceMap {
        luminance(self)
    }

    /// Splits the image into three planar channels.
    pub(crate) fn planes(&self) -> [Vec<f64>; 3] {
        let mut planes = [
            Vec::with_capacity(self.len()),
            Vec::with_capacity(self.len()),
            Vec::with_capacity(self.len()),
        ];
        for px in &self.data {
            for (plane, c) in planes.iter_mut().zip(px) {
                plane.push(*c);
            }
        }
        planes
    }

    pub(crate) fn from_planes(width: usize, height: usize, planes: &[Vec<f64>; 3]) -> Self {
        let data = (0..width * height)
            .map(|i| [planes[0][i], planes[1][i], planes[2][i]])
            .collect();
        Self {
            width,
            height,
            data,
        }
    }
}

/// Scalar luminance grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LuminanceMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "luminance sample {i} is negative or non-finite: {}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width >= 1 && height >= 1, "map must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0 && factor.is_finite());
        self.map(|v| v * factor)
    }

    /// Bilinear resampling to `width` x `height` using pixel-center alignment.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1);
        if (width, height) == self.dimensions() {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let sample_axis = |dst: usize, scale: f64, len: usize| {
            let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, pos - i0 as f64)
        };
        Self::from_fn(width, height, |x, y| {
            let (x0, x1, fx) = sample_axis(x, sx, self.width);
            let (y0, y1, fy) = sample_axis(y, sy, self.height);
            let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
            let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
            top * (1.0 - fy) + bottom * fy
        })
    }
}

/// An ordered set of aligned exposures, optionally tagged with their EVs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureStack {
    images: Vec<LinearImage>,
    exposure_values: Option<Vec<f64>>,
}

impl ExposureStack {
    pub fn new(images: Vec<LinearImage>) -> Result<Self> {
        let Some(first) = images.first() else {
            return Err(Error::InvalidInput("exposure stack is empty".into()));
        };
        let (w, h) = first.dimensions();
        for img in &images[1..] {
            if img.dimensions() != (w, h) {
                return Err(Error::DimensionMismatch {
                    expected_width: w,
                    expected_height: h,
                    width: img.width(),
                    height: img.height(),
                });
            }
        }
        Ok(Self {
            images,
            exposure_values: None,
        })
    }

    pub fn with_exposure_values(mut self, evs: Vec<f64>) -> Result<Self> {
        if evs.len() != self.images.len() {
            return Err(Error::InvalidInput(format!(
                "{} exposure values for {} images",
                evs.len(),
                self.images.len()
            )));
        }
        self.exposure_values = Some(evs);
        Ok(self)
    }

    pub fn images(&self) -> &[LinearImage] {
        &self.images
    }

    pub fn exposure_values(&self) -> Option<&[f64]> {
        self.exposure_values.as_deref()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.images[0].dimensions()
    }

    pub fn luminances(&self) -> Vec<LuminanceMap> {
        self.images.iter().map(luminance).collect()
    }
}

/// Y of CIE XYZ for linear sRGB primaries.
pub fn luminance(img: &LinearImage) -> LuminanceMap {
    let data = img.pixels().iter().map(|px| pixel_luminance(*px)).collect();
    LuminanceMap {
        width: img.width(),
        height: img.height(),
        data,
    }
}

#[inline]
pub fn pixel_luminance(px: [f64; 3]) -> f64 {
    LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2]
}

/// Reads a PNG or PFM file (chosen by extension) into linear RGB.
pub fn read_image(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => read_pfm_file(path),
        Some("png") => decode_srgb_file(path),
        other => Err(Error::Decode(format!(
            "{}: unsupported file extension {:?} (expected .png or .pfm)",
            path.display(),
            other.unwrap_or("")
        ))),
    }
}

/// Writes a PNG (8-bit sRGB) or PFM file, chosen by extension.
pub fn write_image(path: impl AsRef<Path>, img: &LinearImage) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => write_pfm_file(path, img),
        Some("png") => encode_srgb_file(path, img, BitDepth::Eight),
        other => Err(Error::Encode(format!(
            "{}: unsupported file extension {:?} (expected .png or .pfm)",
            path.display(),
            other.unwrap_or("")
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::InvalidInput(format!(
            "{width}x{height} image needs {} samples, got {len}",
            width * height
        )));
    }
    Ok(())
}
