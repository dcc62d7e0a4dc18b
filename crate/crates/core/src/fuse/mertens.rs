//! Exposure fusion after Mertens, Kautz and Van Reeth: per-pixel quality
//! weights from contrast, saturation and well-exposedness, blended across
//! scales with Laplacian pyramids.

use super::pyramid::{self, Plane};
use super::WeightMaps;
use crate::error::{Error, Result};
use crate::imageio::LinearImage;

/// Width of the well-exposedness bell around 0.5.
pub const WELL_EXPOSED_SIGMA: f64 = 0.2;

/// Added to every raw weight before normalization.
pub const WEIGHT_FLOOR: f64 = 1e-12;

const GRAY_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Absolute response of the 4-neighbour Laplacian on the gray image.
fn contrast(img: &LinearImage) -> Vec<f64> {
    let (w, h) = img.dimensions();
    let gray: Vec<f64> = img
        .pixels()
        .iter()
        .map(|p| p.iter().zip(GRAY_WEIGHTS).map(|(c, k)| c * k).sum())
        .collect();
    let at = |x: usize, y: usize| gray[y * w + x];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = at(x, y);
            let lap = at(x.saturating_sub(1), y)
                + at((x + 1).min(w - 1), y)
                + at(x, y.saturating_sub(1))
                + at(x, (y + 1).min(h - 1))
                - 4.0 * c;
            out.push(lap.abs());
        }
    }
    out
}

fn saturation(px: [f64; 3]) -> f64 {
    let mean = (px[0] + px[1] + px[2]) / 3.0;
    (px.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 3.0).sqrt()
}

fn well_exposedness(px: [f64; 3]) -> f64 {
    let s2 = 2.0 * WELL_EXPOSED_SIGMA * WELL_EXPOSED_SIGMA;
    px.iter().map(|c| (-(c - 0.5).powi(2) / s2).exp()).product()
}

/// Raw `C * S * E` per pixel, before normalization.
pub fn quality_measures(img: &LinearImage) -> Vec<f64> {
    contrast(img)
        .into_iter()
        .zip(img.pixels())
        .map(|(c, px)| c * saturation(*px) * well_exposedness(*px))
        .collect()
}

/// Normalized fusion weights for an aligned stack.
pub fn mertens_weights(images: &[LinearImage]) -> Result<WeightMaps> {
    let (w, h) = check_stack(images)?;
    let mut weights: Vec<Vec<f64>> = images
        .iter()
        .map(|img| quality_measures(img).into_iter().map(|v| v + WEIGHT_FLOOR).collect())
        .collect();
    for i in 0..w * h {
        let total: f64 = weights.iter().map(|m| m[i]).sum();
        for m in &mut weights {
            m[i] /= total;
        }
    }
    Ok(WeightMaps::new(w, h, weights))
}

/// Multi-scale fusion with `depth` pyramid levels, or the automatic depth
/// when `None`. The result is clamped to `[0, 1]`.
pub fn mertens_fuse(images: &[LinearImage], depth: Option<usize>) -> Result<LinearImage> {
    let weights = mertens_weights(images)?;
    let (w, h) = weights.dimensions();
    if w < 2 || h < 2 {
        return Ok(weighted_average(images, &weights));
    }
    let levels = depth.unwrap_or_else(|| pyramid::auto_depth(w, h)).max(1);

    let mut blended: Vec<[Plane; 3]> = Vec::new();
    for (img, wmap) in images.iter().zip(weights.maps()) {
        let wpyr = pyramid::gaussian_pyramid(&Plane::new(w, h, wmap.clone()), levels);
        let channels = img.planes().map(|c| pyramid::laplacian_pyramid(&Plane::new(w, h, c), levels));
        if blended.is_empty() {
            blended = wpyr
                .iter()
                .map(|l| std::array::from_fn(|_| Plane::filled(l.width(), l.height(), 0.0)))
                .collect();
        }
        for (lvl, wl) in wpyr.iter().enumerate() {
            for (c, chan) in channels.iter().enumerate() {
                let acc = &mut blended[lvl][c];
                let data: Vec<f64> = acc
                    .data()
                    .iter()
                    .zip(chan[lvl].data().iter().zip(wl.data()))
                    .map(|(a, (v, k))| a + v * k)
                    .collect();
                *acc = Plane::new(wl.width(), wl.height(), data);
            }
        }
    }
    let planes: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let levels: Vec<Plane> = blended.iter().map(|l| l[c].clone()).collect();
        pyramid::collapse(&levels)
            .into_data()
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect()
    });
    Ok(LinearImage::from_planes(w, h, &planes))
}

/// Single-scale blend, used when the image is too small for a pyramid.
fn weighted_average(images: &[LinearImage], weights: &WeightMaps) -> LinearImage {
    let (w, h) = weights.dimensions();
    LinearImage::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let mut out = [0.0; 3];
        for (img, m) in images.iter().zip(weights.maps()) {
            let px = img.pixels()[i];
            for c in 0..3 {
                out[c] += m[i] * px[c];
            }
        }
        out.map(|v| v.clamp(0.0, 1.0))
    })
}

pub(super) fn check_stack(images: &[LinearImage]) -> Result<(usize, usize)> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot fuse an empty stack".into()))?;
    let (w, h) = first.dimensions();
    for img in images {
        if img.dimensions() != (w, h) {
            return Err(Error::DimensionMismatch {
                expected_width: w,
                expected_height: h,
                width: img.width(),
                height: img.height(),
            });
        }
    }
    Ok((w, h))
}
