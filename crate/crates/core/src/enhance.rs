//! Local contrast enhancement by dodging and burning.
//!
//! Each luminance sample is divided by an edge-preserving local average:
//! `l'(p) = l(p)^2 / lbar(p)`, where `lbar` is a bilateral-filtered copy of
//! `l`. Pixels brighter than their neighbourhood get brighter, darker ones
//! darker, while the range kernel keeps strong edges from bleeding.

use crate::error::{Error, Result};
use crate::imageio::LuminanceMap;
use crate::math::exp_nonpositive;

/// Guard for the division in the dodging-and-burning rule.
pub const DIVISION_GUARD: f64 = 1e-9;

/// Cells above this count make the grid path fall back to the exact filter.
const MAX_GRID_CELLS: usize = 1 << 26;

/// Spatial and range widths of the bilateral kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    /// Spatial standard deviation in pixels.
    pub sigma_spatial: f64,
    /// Range standard deviation in luminance units.
    pub sigma_range: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_spatial: 16.0,
            sigma_range: 3.0 / 255.0,
        }
    }
}

impl BilateralParams {
    pub fn new(sigma_spatial: f64, sigma_range: f64) -> Result<Self> {
        let p = Self {
            sigma_spatial,
            sigma_range,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_spatial > 0.0 && self.sigma_spatial.is_finite()) {
            return Err(Error::param("sigma_spatial", "must be positive and finite"));
        }
        if !(self.sigma_range > 0.0 && self.sigma_range.is_finite()) {
            return Err(Error::param("sigma_range", "must be positive and finite"));
        }
        Ok(())
    }

    /// Truncation radius of the spatial kernel, `ceil(3 sigma_spatial)`.
    pub fn radius(&self) -> usize {
        (3.0 * self.sigma_spatial).ceil() as usize
    }
}

/// Which bilateral implementation computes the local average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BilateralMethod {
    /// Exact filter over a disc of radius `ceil(3 sigma_spatial)`.
    #[default]
    Exact,
    /// Bilateral-grid approximation; much faster on large images.
    Grid,
}

/// Bilateral local mean over a disc of radius `ceil(3 sigma_spatial)`,
/// clipped at the image border.
pub fn bilateral_local_mean(l: &LuminanceMap, params: BilateralParams) -> LuminanceMap {
    params.validate().expect("invalid bilateral parameters");
    let (w, h) = l.dimensions();
    let r = params.radius() as isize;
    let inv_2s1 = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    let inv_2s2 = 1.0 / (2.0 * params.sigma_range * params.sigma_range);

    // log of the spatial weight, split into its row and column parts
    let offset_term: Vec<f64> = (-r..=r).map(|d| -((d * d) as f64) * inv_2s1).collect();
    let half_width: Vec<isize> = (-r..=r)
        .map(|dy| (((r * r - dy * dy) as f64).sqrt().floor()) as isize)
        .collect();

    let kernel = Kernel {
        values: l.values(),
        width: w as isize,
        height: h as isize,
        radius: r,
        offset_term: &offset_term,
        half_width: &half_width,
        inv_2s2,
    };
    let mut out = vec![0.0; w * h];
    kernel.run(&mut out);
    LuminanceMap::new(w, h, out).expect("bilateral mean of a valid map is valid")
}

/// Bilateral local mean by the bilateral grid: splat into a coarse
/// (x, y, luminance) lattice with cell size (sigma_spatial, sigma_range),
/// blur it, and slice trilinearly. Falls back to the exact filter when the
/// lattice would be too large.
pub fn bilateral_grid_mean(l: &LuminanceMap, params: BilateralParams) -> LuminanceMap {
    params.validate().expect("invalid bilateral parameters");
    let (w, h) = l.dimensions();
    let (lo, hi) = (l.min(), l.max());
    const PAD: usize = 2;
    let ss = params.sigma_spatial;
    let sr = params.sigma_range;
    let gx = ((w - 1) as f64 / ss).ceil() as usize + 1 + 2 * PAD;
    let gy = ((h - 1) as f64 / ss).ceil() as usize + 1 + 2 * PAD;
    let gz_f = ((hi - lo) / sr).ceil() + 1.0 + 2.0 * PAD as f64;
    if gz_f * (gx * gy) as f64 > MAX_GRID_CELLS as f64 {
        log::warn!("bilateral grid too large ({gx}x{gy}x{gz_f}); using exact filter");
        return bilateral_local_mean(l, params);
    }
    let gz = gz_f as usize;
    let idx = |x: usize, y: usize, z: usize| (z * gy + y) * gx + x;
    let coords = |px: usize, py: usize, v: f64| {
        (
            px as f64 / ss + PAD as f64,
            py as f64 / ss + PAD as f64,
            (v - lo) / sr + PAD as f64,
        )
    };

    let mut num = vec![0.0; gx * gy * gz];
    let mut den = vec![0.0; gx * gy * gz];
    for py in 0..h {
        for px in 0..w {
            let v = l.get(px, py);
            let (fx, fy, fz) = coords(px, py, v);
            for (x, y, z, wt) in trilinear(fx, fy, fz) {
                num[idx(x, y, z)] += wt * v;
                den[idx(x, y, z)] += wt;
            }
        }
    }

    let taps: [f64; 5] = [-2.0f64, -1.0, 0.0, 1.0, 2.0].map(|d| (-0.5 * d * d).exp());
    for grid in [&mut num, &mut den] {
        blur_axis(grid, [gx, gy, gz], 0, &taps);
        blur_axis(grid, [gx, gy, gz], 1, &taps);
        blur_axis(grid, [gx, gy, gz], 2, &taps);
    }

    LuminanceMap::from_fn(w, h, |px, py| {
        let v = l.get(px, py);
        let (fx, fy, fz) = coords(px, py, v);
        let (mut n, mut d) = (0.0, 0.0);
        for (x, y, z, wt) in trilinear(fx, fy, fz) {
            n += wt * num[idx(x, y, z)];
            d += wt * den[idx(x, y, z)];
        }
        if d > 0.0 {
            (n / d).max(0.0)
        } else {
            v
        }
    })
}

/// Dodging-and-burning enhancement with the exact bilateral local mean.
pub fn enhance_contrast(l: &LuminanceMap, params: BilateralParams) -> LuminanceMap {
    enhance_contrast_with(l, params, BilateralMethod::Exact)
}

pub fn enhance_contrast_with(
    l: &LuminanceMap,
    params: BilateralParams,
    method: BilateralMethod,
) -> LuminanceMap {
    let mean = match method {
        BilateralMethod::Exact => bilateral_local_mean(l, params),
        BilateralMethod::Grid => bilateral_grid_mean(l, params),
    };
    dodge_and_burn(l, &mean)
}

/// `l^2 / max(mean, DIVISION_GUARD)` pointwise.
pub fn dodge_and_burn(l: &LuminanceMap, local_mean: &LuminanceMap) -> LuminanceMap {
    assert_eq!(l.dimensions(), local_mean.dimensions());
    let (w, h) = l.dimensions();
    let data = l
        .values()
        .iter()
        .zip(local_mean.values())
        .map(|(&v, &m)| v * v / m.max(DIVISION_GUARD))
        .collect();
    LuminanceMap::new(w, h, data).expect("enhanced luminance is finite and non-negative")
}

struct Kernel<'a> {
    values: &'a [f64],
    width: isize,
    height: isize,
    radius: isize,
    offset_term: &'a [f64],
    half_width: &'a [isize],
    inv_2s2: f64,
}

impl Kernel<'_> {
    fn run(&self, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        {
            if crate::math::x86::available() {
                // SAFETY: both features were detected just above.
                unsafe { self.run_avx2(out) };
                return;
            }
        }
        self.run_generic(out);
    }

    /// Works on values prescaled by `sqrt(inv_2s2)` so the range term is a
    /// single square, and applies each row's spatial factor once per row.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn run_avx2(&self, out: &mut [f64]) {
        let (w, h, r) = (self.width, self.height, self.radius);
        let scale = self.inv_2s2.sqrt();
        let scaled: Vec<f64> = self.values.iter().map(|v| v * scale).collect();
        let row_weight: Vec<f64> = self.offset_term.iter().map(|t| t.exp()).collect();
        for y in 0..h {
            for x in 0..w {
                let center = scaled[(y * w + x) as usize];
                let mut acc = simd::Accumulator::new(center);
                for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                    let dy = yy - y;
                    let hw = self.half_width[(dy + r) as usize];
                    let x0 = (x - hw).max(0);
                    let x1 = (x + hw).min(w - 1);
                    let span = (yy * w + x0) as usize..=(yy * w + x1) as usize;
                    let cols = &self.offset_term[(x0 - x + r) as usize..=(x1 - x + r) as usize];
                    acc.add_row(&self.values[span.clone()], &scaled[span], cols, row_weight[(dy + r) as usize]);
                }
                let (num, den) = acc.sums();
                out[(y * w + x) as usize] = num / den;
            }
        }
    }

    #[inline(always)]
    fn run_generic(&self, out: &mut [f64]) {
        let (w, h, r) = (self.width, self.height, self.radius);
        for y in 0..h {
            for x in 0..w {
                let center = self.values[(y * w + x) as usize];
                let (mut num, mut den) = (0.0, 0.0);
                for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                    let dy = yy - y;
                    let hw = self.half_width[(dy + r) as usize];
                    let x0 = (x - hw).max(0);
                    let x1 = (x + hw).min(w - 1);
                    let row = &self.values[(yy * w + x0) as usize..=(yy * w + x1) as usize];
                    let cols = &self.offset_term[(x0 - x + r) as usize..=(x1 - x + r) as usize];
                    let (n, d) = accumulate_row(
                        row,
                        cols,
                        self.offset_term[(dy + r) as usize],
                        center,
                        self.inv_2s2,
                    );
                    num += n;
                    den += d;
                }
                out[(y * w + x) as usize] = num / den;
            }
        }
    }
}

/// Sums `w * v` and `w` along one clipped window row, where
/// `w = exp(row_term + col_term - (v - center)^2 * inv_2s2)`.
#[inline(always)]
fn accumulate_row(
    row: &[f64],
    cols: &[f64],
    row_term: f64,
    center: f64,
    inv_2s2: f64,
) -> (f64, f64) {
    const LANES: usize = 4;
    let mut num = [0.0; LANES];
    let mut den = [0.0; LANES];
    let mut rows = row.chunks_exact(LANES);
    let mut colc = cols.chunks_exact(LANES);
    for (v, c) in (&mut rows).zip(&mut colc) {
        for i in 0..LANES {
            let d = v[i] - center;
            let wt = exp_nonpositive(row_term + c[i] - d * d * inv_2s2);
            num[i] += wt * v[i];
            den[i] += wt;
        }
    }
    let (mut n, mut s) = (0.0, 0.0);
    for (v, c) in rows.remainder().iter().zip(colc.remainder()) {
        let d = v - center;
        let wt = exp_nonpositive(row_term + c - d * d * inv_2s2);
        n += wt * v;
        s += wt;
    }
    (
        n + (num[0] + num[1]) + (num[2] + num[3]),
        s + (den[0] + den[1]) + (den[2] + den[3]),
    )
}

#[cfg(target_arch = "x86_64")]
mod simd {
    use std::arch::x86_64::*;

    use crate::math::x86::{exp_nonpositive, to_array};

    /// Four-lane running sums of `w * v` and `w` for one output pixel.
    pub(super) struct Accumulator {
        num: __m256d,
        den: __m256d,
        center: f64,
    }

    impl Accumulator {
        #[inline]
        #[target_feature(enable = "avx2,fma")]
        pub(super) fn new(center: f64) -> Self {
            Self {
                num: _mm256_setzero_pd(),
                den: _mm256_setzero_pd(),
                center,
            }
        }

        /// Adds one clipped window row. `scaled` holds the same values as
        /// `row` times `sqrt(inv_2s2)`; weights are
        /// `row_weight * exp(col - (scaled - center)^2)`.
        #[inline]
        #[target_feature(enable = "avx2,fma")]
        pub(super) fn add_row(&mut self, row: &[f64], scaled: &[f64], cols: &[f64], row_weight: f64) {
            let n = row.len().min(scaled.len()).min(cols.len());
            let center = _mm256_set1_pd(self.center);
            let mut num = _mm256_setzero_pd();
            let mut den = _mm256_setzero_pd();
            let mut i = 0;
            while i + 4 <= n {
                // SAFETY: i + 4 <= n <= len of all three slices.
                let (v, sv, c) = unsafe {
                    (
                        _mm256_loadu_pd(row.as_ptr().add(i)),
                        _mm256_loadu_pd(scaled.as_ptr().add(i)),
                        _mm256_loadu_pd(cols.as_ptr().add(i)),
                    )
                };
                let d = _mm256_sub_pd(sv, center);
                let wt = exp_nonpositive(_mm256_fnmadd_pd(d, d, c));
                num = _mm256_fmadd_pd(wt, v, num);
                den = _mm256_add_pd(den, wt);
                i += 4;
            }
            let (mut tail_num, mut tail_den) = (0.0, 0.0);
            for ((v, sv), c) in row[i..n].iter().zip(&scaled[i..n]).zip(&cols[i..n]) {
                let d = sv - self.center;
                let wt = crate::math::exp_nonpositive(c - d * d);
                tail_num += wt * v;
                tail_den += wt;
            }
            let rw = _mm256_set1_pd(row_weight);
            let tail_num = _mm256_setr_pd(tail_num, 0.0, 0.0, 0.0);
            let tail_den = _mm256_setr_pd(tail_den, 0.0, 0.0, 0.0);
            self.num = _mm256_fmadd_pd(_mm256_add_pd(num, tail_num), rw, self.num);
            self.den = _mm256_fmadd_pd(_mm256_add_pd(den, tail_den), rw, self.den);
        }

        #[inline]
        #[target_feature(enable = "avx2,fma")]
        pub(super) fn sums(&self) -> (f64, f64) {
            let (a, b) = (to_array(self.num), to_array(self.den));
            ((a[0] + a[1]) + (a[2] + a[3]), (b[0] + b[1]) + (b[2] + b[3]))
        }
    }
}

fn trilinear(fx: f64, fy: f64, fz: f64) -> impl Iterator<Item = (usize, usize, usize, f64)> {
    let (x0, y0, z0) = (fx.floor(), fy.floor(), fz.floor());
    let (tx, ty, tz) = (fx - x0, fy - y0, fz - z0);
    let (x0, y0, z0) = (x0 as usize, y0 as usize, z0 as usize);
    (0..8).map(move |corner| {
        let (cx, cy, cz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let wx = if cx == 1 { tx } else { 1.0 - tx };
        let wy = if cy == 1 { ty } else { 1.0 - ty };
        let wz = if cz == 1 { tz } else { 1.0 - tz };
        (x0 + cx, y0 + cy, z0 + cz, wx * wy * wz)
    })
}

fn blur_axis(grid: &mut [f64], dims: [usize; 3], axis: usize, taps: &[f64; 5]) {
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let len = dims[axis];
    let src = grid.to_vec();
    for (i, out) in grid.iter_mut().enumerate() {
        let pos = (i / stride) % len;
        let mut acc = 0.0;
        for (k, t) in taps.iter().enumerate() {
            let p = pos as isize + k as isize - 2;
            if (0..len as isize).contains(&p) {
                acc += t * src[(i as isize + (p - pos as isize) * stride as isize) as usize];
            }
        }
        *out = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_map_is_fixed() {
        let l = LuminanceMap::filled(20, 13, 0.37);
        let m = bilateral_local_mean(&l, BilateralParams::default());
        assert!(m.values().iter().all(|v| (v - 0.37).abs() < 1e-15));
        let e = enhance_contrast(&l, BilateralParams::default());
        assert!(e.values().iter().all(|v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn single_pixel_is_identity() {
        let l = LuminanceMap::filled(1, 1, 0.8);
        assert_eq!(bilateral_local_mean(&l, BilateralParams::default()).values(), &[0.8]);
    }

    #[test]
    fn zero_map_stays_zero() {
        let l = LuminanceMap::filled(6, 6, 0.0);
        let e = enhance_contrast(&l, BilateralParams::default());
        assert!(e.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn range_kernel_isolates_outlier() {
        // Reference values from a high-precision double loop over all pixels.
        let l = LuminanceMap::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 0.9 } else { 0.2 });
        let m = bilateral_local_mean(&l, BilateralParams::default());
        assert!((m.get(2, 2) - 0.9).abs() < 1e-12);
        assert!((m.get(3, 2) - 0.2).abs() < 1e-12);
        assert!((m.get(0, 0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_contrast() {
        let board = LuminanceMap::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0.2 } else { 0.8 });
        let ratio = |p: BilateralParams| {
            let e = enhance_contrast(&board, p);
            e.max() / e.min()
        };
        // Levels 0.6 apart never mix under the default 3/255 range kernel,
        // so the checkerboard passes through unchanged.
        assert!((ratio(BilateralParams::default()) - 4.0).abs() < 1e-12);
        // A wide range kernel averages both levels and the ratio grows.
        let wide = ratio(BilateralParams::new(16.0, 1.0).unwrap());
        assert!((wide - 14.365_268_493_869_621).abs() < 1e-9, "{wide}");
    }

    #[test]
    fn grid_path_tracks_exact_filter_on_smooth_input() {
        let l = LuminanceMap::from_fn(64, 48, |x, y| {
            0.3 + 0.2 * ((x as f64) / 9.0).sin() * ((y as f64) / 7.0).cos()
        });
        let p = BilateralParams::new(4.0, 0.1).unwrap();
        let exact = bilateral_local_mean(&l, p);
        let grid = bilateral_grid_mean(&l, p);
        let mae: f64 = exact
            .values()
            .iter()
            .zip(grid.values())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / l.len() as f64;
        assert!(mae < 0.01, "mean abs error {mae}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BilateralParams::new(0.0, 1.0).is_err());
        assert!(BilateralParams::new(1.0, -1.0).is_err());
        assert!(BilateralParams::new(f64::NAN, 1.0).is_err());
        assert_eq!(BilateralParams::default().radius(), 48);
    }

    proptest! {
        #[test]
        fn local_mean_within_window_bounds(
            vals in prop::collection::vec(0.0f64..1.0, 12 * 9),
            s1 in 0.5f64..4.0, s2 in 0.01f64..1.0,
        ) {
            let l = LuminanceMap::new(12, 9, vals).unwrap();
            let p = BilateralParams::new(s1, s2).unwrap();
            let m = bilateral_local_mean(&l, p);
            let r = p.radius() as isize;
            for y in 0..9isize {
                for x in 0..12isize {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for yy in (y - r).max(0)..=(y + r).min(8) {
                        for xx in (x - r).max(0)..=(x + r).min(11) {
                            let v = l.get(xx as usize, yy as usize);
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    let v = m.get(x as usize, y as usize);
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn joint_scale_covariance(
            vals in prop::collection::vec(0.0f64..1.0, 10 * 10),
            alpha in 0.1f64..10.0,
        ) {
            let l = LuminanceMap::new(10, 10, vals).unwrap();
            let p = BilateralParams::new(3.0, 0.05).unwrap();
            let scaled_p = BilateralParams::new(3.0, 0.05 * alpha).unwrap();
            let base = enhance_contrast(&l, p);
            let scaled = enhance_contrast(&l.scaled(alpha), scaled_p);
            for (a, b) in base.values().iter().zip(scaled.values()) {
                prop_assert!((a * alpha - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
