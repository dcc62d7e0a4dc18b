//! No-reference quality scores: discrete entropy and statistical
//! naturalness. Both read the luma of the sRGB-encoded image on a 0..255
//! scale.

use statrs::distribution::{Beta, Continuous, Normal};

use crate::error::{Error, Result};
use crate::imageio::{srgb, LinearImage, LUMA_WEIGHTS};

/// Display luma in `[0, 255]` for every pixel.
pub fn display_luma(img: &LinearImage) -> Vec<f64> {
    img.pixels()
        .iter()
        .map(|px| {
            255.0
                * px.iter()
                    .zip(LUMA_WEIGHTS)
                    .map(|(c, w)| w * srgb::to_encoded(*c))
                    .sum::<f64>()
        })
        .collect()
}

/// Shannon entropy, in bits, of the 256-bin histogram of display luma.
pub fn discrete_entropy(img: &LinearImage) -> f64 {
    let mut hist = [0usize; 256];
    for v in display_luma(img) {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    let n = img.len() as f64;
    -hist
        .iter()
        .filter(|c| **c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Constants of the naturalness model plus the local-contrast patch layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalnessParams {
    pub gauss_mean: f64,
    pub gauss_std: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    /// Divisor mapping the mean patch deviation into the Beta support.
    pub sigma_scale: f64,
    /// Patch side in pixels.
    pub patch: usize,
    /// Step between patch origins; equal to `patch` for a non-overlapping grid.
    pub stride: usize,
}

impl Default for NaturalnessParams {
    fn default() -> Self {
        Self {
            gauss_mean: 115.94,
            gauss_std: 27.99,
            beta_a: 4.4,
            beta_b: 10.1,
            sigma_scale: 64.29,
            patch: 11,
            stride: 11,
        }
    }
}

impl NaturalnessParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gauss_std", self.gauss_std),
            ("beta_a", self.beta_a),
            ("beta_b", self.beta_b),
            ("sigma_scale", self.sigma_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if self.beta_a <= 1.0 || self.beta_b <= 1.0 {
            return Err(Error::param("beta_a", "both Beta shapes must exceed 1 for an interior peak"));
        }
        if self.patch == 0 || self.stride == 0 {
            return Err(Error::param("patch", "patch size and stride must be at least 1"));
        }
        Ok(())
    }

    /// Mode of the Beta density, `(a - 1) / (a + b - 2)`.
    pub fn beta_mode(&self) -> f64 {
        (self.beta_a - 1.0) / (self.beta_a + self.beta_b - 2.0)
    }

    fn densities(&self) -> (Normal, Beta) {
        (
            Normal::new(self.gauss_mean, self.gauss_std).expect("validated Gaussian parameters"),
            Beta::new(self.beta_a, self.beta_b).expect("validated Beta parameters"),
        )
    }

    /// Product of the two density peaks; dividing by it scales the score
    /// into `[0, 1]`.
    pub fn normalizer(&self) -> f64 {
        let (n, b) = self.densities();
        n.pdf(self.gauss_mean) * b.pdf(self.beta_mode())
    }

    /// Score for given global mean and mean local deviation.
    pub fn score(&self, mean: f64, mean_std: f64) -> f64 {
        let (n, b) = self.densities();
        let t = mean_std / self.sigma_scale;
        if !(t > 0.0 && t < 1.0) {
            return 0.0;
        }
        (n.pdf(mean) * b.pdf(t) / self.normalizer()).clamp(0.0, 1.0)
    }
}

/// Global mean of display luma and mean of per-patch standard deviations.
/// Patches that run over the border are cut to the image.
pub fn luma_statistics(img: &LinearImage, params: &NaturalnessParams) -> (f64, f64) {
    let (w, h) = img.dimensions();
    let luma = display_luma(img);
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    let mut std_sum = 0.0;
    let mut patches = 0usize;
    for y0 in (0..h).step_by(params.stride) {
        for x0 in (0..w).step_by(params.stride) {
            let (x1, y1) = ((x0 + params.patch).min(w), (y0 + params.patch).min(h));
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            // offsets from the first sample keep flat patches at exactly zero
            let origin = luma[y0 * w + x0];
            let rows = || (y0..y1).flat_map(|y| luma[y * w + x0..y * w + x1].iter().map(|v| v - origin));
            let m = rows().sum::<f64>() / n;
            let var = rows().map(|d| (d - m) * (d - m)).sum::<f64>() / n;
            std_sum += var.sqrt();
            patches += 1;
        }
    }
    (mean, std_sum / patches as f64)
}

/// Statistical naturalness in `[0, 1]`.
pub fn statistical_naturalness(img: &LinearImage, params: &NaturalnessParams) -> Result<f64> {
    params.validate()?;
    let (mean, mean_std) = luma_statistics(img, params);
    Ok(params.score(mean, mean_std))
}

/// Both scores for one image.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scores {
    pub entropy_bits: f64,
    pub naturalness: f64,
}

pub fn score_image(img: &LinearImage, params: &NaturalnessParams) -> Result<Scores> {
    Ok(Scores {
        entropy_bits: discrete_entropy(img),
        naturalness: statistical_naturalness(img, params)?,
    })
}
