//! Segment-wise luminance scaling, global tone mapping and colour
//! recombination.
//!
//! For every segment `P_m` the enhanced exposure whose geometric mean over
//! `P_m` is closest to middle gray is picked and scaled so that the mean
//! lands exactly on middle gray. The scale is applied to the whole frame,
//! so each adjusted image keeps the structure of its source. A Reinhard
//! curve then folds the scaled luminance back into `[0, 1]` and the source
//! RGB is rescaled to the new luminance, which leaves chromaticity intact.

use crate::enhance::DIVISION_GUARD;
use crate::error::{Error, Result};
use crate::imageio::{ExposureStack, LinearImage, LuminanceMap};
use crate::segment::PartitionLabels;

pub const MIDDLE_GRAY: f64 = 0.18;

/// Floor applied before taking logarithms in the geometric mean.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// How the tone-curve knee `L_m` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TonemapKnee {
    /// `L_m = max l''_m`: the brightest pixel maps to 1, nothing clips.
    #[default]
    Max,
    /// `L_m = 1`: the curve is the identity and luminance is kept as is.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustConfig {
    pub middle_gray: f64,
    pub epsilon: f64,
    pub knee: TonemapKnee,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        Self {
            middle_gray: MIDDLE_GRAY,
            epsilon: DEFAULT_EPSILON,
            knee: TonemapKnee::Max,
        }
    }
}

impl AdjustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.middle_gray > 0.0 && self.middle_gray.is_finite()) {
            return Err(Error::param("middle_gray", "must be positive and finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive and finite"));
        }
        Ok(())
    }
}

/// `exp(mean(ln(max(l(p), eps))))` over the pixels listed in `region`.
pub fn geometric_mean(l: &LuminanceMap, region: &[usize], epsilon: f64) -> Result<f64> {
    geometric_mean_of(region.iter().map(|&i| l.values()[i]), epsilon)
}

/// Geometric mean of arbitrary samples with the same floor.
pub fn geometric_mean_of(values: impl IntoIterator<Item = f64>, epsilon: f64) -> Result<f64> {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v.max(epsilon).ln(), n + 1));
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok((sum / count as f64).exp())
}

/// Scaling decision for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScale {
    /// Partition label this entry belongs to.
    pub segment: usize,
    pub pixel_count: usize,
    /// Index of the enhanced exposure that gets scaled.
    pub source_index: usize,
    pub alpha: f64,
    /// Tone-curve knee `L_m`.
    pub knee: f64,
    /// Geometric mean of every enhanced exposure over this segment.
    pub geometric_means: Vec<f64>,
}

/// Per-segment scales, ordered by `alpha`, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePlan {
    pub segments: Vec<SegmentScale>,
}

/// Picks a source exposure and scale factor for every segment.
pub fn build_scale_plan(
    enhanced: &[LuminanceMap],
    partition: &PartitionLabels,
    config: &AdjustConfig,
) -> Result<ScalePlan> {
    config.validate()?;
    if enhanced.is_empty() {
        return Err(Error::InvalidInput("no enhanced luminance maps".into()));
    };
    for l in enhanced {
        if l.dimensions() != partition.dimensions() {
            return Err(Error::DimensionMismatch {
                expected_width: partition.width(),
                expected_height: partition.height(),
                width: l.width(),
                height: l.height(),
            });
        }
    }
    let mut segments = Vec::with_capacity(partition.segment_count());
    for (segment, region) in partition.regions().into_iter().enumerate() {
        let geometric_means: Vec<f64> = enhanced
            .iter()
            .map(|l| geometric_mean(l, &region, config.epsilon))
            .collect::<Result<_>>()?;
        // argmin of the squared distance to middle gray; ties keep the lower index
        let mut source_index = 0;
        let mut best = f64::INFINITY;
        for (j, g) in geometric_means.iter().enumerate() {
            let dist = (config.middle_gray - g).powi(2);
            if dist < best {
                best = dist;
                source_index = j;
            }
        }
        let alpha = config.middle_gray / geometric_means[source_index];
        let knee = match config.knee {
            TonemapKnee::Max => {
                let peak = alpha * enhanced[source_index].max();
                if peak > 0.0 {
                    peak
                } else {
                    1.0
                }
            }
            TonemapKnee::One => 1.0,
        };
        segments.push(SegmentScale {
            segment,
            pixel_count: region.len(),
            source_index,
            alpha,
            knee,
            geometric_means,
        });
    }
    segments.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    Ok(ScalePlan { segments })
}

pub fn scale_luminance(l: &LuminanceMap, alpha: f64) -> LuminanceMap {
    assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive, got {alpha}");
    l.scaled(alpha)
}

/// Reinhard's global curve `t/(1+t) * (1 + t/L^2)`; `f(L) = 1`.
#[inline]
pub fn reinhard(t: f64, knee: f64) -> f64 {
    let v = t / (1.0 + t) * (1.0 + t / (knee * knee));
    if t <= knee {
        v.min(1.0)
    } else {
        v
    }
}

pub fn reinhard_tonemap(l: &LuminanceMap, knee: f64) -> LuminanceMap {
    assert!(knee > 0.0 && knee.is_finite(), "knee must be positive, got {knee}");
    l.map(|t| reinhard(t, knee))
}

/// Rescales `x_src` so its luminance becomes `l_hat`. Pixels whose source
/// luminance is at or below the division guard carry no colour and become
/// neutral gray at the target luminance.
pub fn recombine_color(x_src: &LinearImage, l_src: &LuminanceMap, l_hat: &LuminanceMap) -> LinearImage {
    assert_eq!(x_src.dimensions(), l_src.dimensions());
    assert_eq!(x_src.dimensions(), l_hat.dimensions());
    let (w, h) = x_src.dimensions();
    let data = x_src
        .pixels()
        .iter()
        .zip(l_src.values().iter().zip(l_hat.values()))
        .map(|(px, (&src, &target))| {
            if src > DIVISION_GUARD {
                let ratio = target / src;
                [px[0] * ratio, px[1] * ratio, px[2] * ratio]
            } else {
                [target; 3]
            }
        })
        .collect();
    LinearImage::new(w, h, data).expect("recombined pixels stay finite and non-negative")
}

/// One adjusted exposure together with its intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedImage {
    pub scale: SegmentScale,
    /// Scaled luminance before tone mapping.
    pub scaled: LuminanceMap,
    /// Tone-mapped luminance.
    pub mapped: LuminanceMap,
    pub image: LinearImage,
}

/// `M` adjusted exposures, ordered by scale factor, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedStack {
    pub images: Vec<AdjustedImage>,
}

impl AdjustedStack {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn linear_images(&self) -> Vec<LinearImage> {
        self.images.iter().map(|a| a.image.clone()).collect()
    }
}

/// Builds the adjusted stack: scale, tone map and recolour per segment.
pub fn adjust_stack(
    inputs: &ExposureStack,
    enhanced: &[LuminanceMap],
    partition: &PartitionLabels,
    config: &AdjustConfig,
) -> Result<AdjustedStack> {
    if enhanced.len() != inputs.len() {
        return Err(Error::InvalidInput(format!(
            "{} enhanced maps for {} input images",
            enhanced.len(),
            inputs.len()
        )));
    }
    let plan = build_scale_plan(enhanced, partition, config)?;
    let raw_luminance = inputs.luminances();
    let images = plan
        .segments
        .into_iter()
        .map(|scale| {
            let src = scale.source_index;
            let scaled = scale_luminance(&enhanced[src], scale.alpha);
            let mapped = reinhard_tonemap(&scaled, scale.knee);
            let image = recombine_color(&inputs.images()[src], &raw_luminance[src], &mapped);
            AdjustedImage {
                scale,
                scaled,
                mapped,
                image,
            }
        })
        .collect();
    Ok(AdjustedStack { images })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::luminance;
    use proptest::prelude::*;

    #[test]
    fn geometric_mean_examples() {
        let l = LuminanceMap::new(4, 1, vec![0.09, 0.36, 0.0, 0.5]).unwrap();
        assert!((geometric_mean(&l, &[0, 1], 1e-6).unwrap() - 0.18).abs() < 1e-15);
        let c = LuminanceMap::filled(3, 3, 0.42);
        let all: Vec<usize> = (0..9).collect();
        assert!((geometric_mean(&c, &all, 1e-6).unwrap() - 0.42).abs() < 1e-15);
        // (1e-6 * 0.5 * 0.25)^(1/3), evaluated in high precision
        let z = LuminanceMap::new(3, 1, vec![0.0, 0.5, 0.25]).unwrap();
        assert!((geometric_mean(&z, &[0, 1, 2], 1e-6).unwrap() - 0.005).abs() < 1e-15);
        assert!(matches!(geometric_mean(&l, &[], 1e-6), Err(Error::EmptyRegion)));
    }

    #[test]
    fn plan_picks_closest_to_middle_gray() {
        let p = PartitionLabels::single(2, 2);
        let exact = [LuminanceMap::filled(2, 2, 0.05), LuminanceMap::filled(2, 2, 0.18)];
        let plan = build_scale_plan(&exact, &p, &AdjustConfig::default()).unwrap();
        assert_eq!(plan.segments[0].source_index, 1);
        assert!((plan.segments[0].alpha - 1.0).abs() < 1e-15);

        let pair = [LuminanceMap::filled(2, 2, 0.09), LuminanceMap::filled(2, 2, 0.30)];
        let plan = build_scale_plan(&pair, &p, &AdjustConfig::default()).unwrap();
        assert_eq!(plan.segments[0].source_index, 0);
        assert!((plan.segments[0].alpha - 2.0).abs() < 1e-14);
    }

    #[test]
    fn equidistant_sources_tie_to_lower_index() {
        let p = PartitionLabels::single(1, 1);
        let maps = [LuminanceMap::filled(1, 1, 0.36), LuminanceMap::filled(1, 1, 0.36)];
        let plan = build_scale_plan(&maps, &p, &AdjustConfig::default()).unwrap();
        assert_eq!(plan.segments[0].source_index, 0);
    }

    #[test]
    fn alpha_tracks_segment_darkness() {
        // three vertical bands at three brightness levels, three exposures
        let (w, h) = (9, 3);
        let labels: Vec<usize> = (0..w * h).map(|i| (i % w) / 3).collect();
        let p = PartitionLabels::new(w, h, labels, 3).unwrap();
        let maps: Vec<LuminanceMap> = [0.25, 1.0, 4.0]
            .iter()
            .map(|g| LuminanceMap::from_fn(w, h, |x, _| g * [0.004, 0.03, 0.8][x / 3]))
            .collect();
        let plan = build_scale_plan(&maps, &p, &AdjustConfig::default()).unwrap();
        // sorted by alpha: darkest band first
        let order: Vec<usize> = plan.segments.iter().map(|s| s.segment).collect();
        assert_eq!(order, vec![0, 1, 2]);
        for s in &plan.segments {
            let g = s.geometric_means[s.source_index];
            assert!((s.alpha * g - 0.18).abs() < 1e-15);
        }
        // exposure choice: brightest exposure for the darkest band, etc.
        assert_eq!(plan.segments[0].source_index, 2);
        assert_eq!(plan.segments[2].source_index, 0);
    }

    #[test]
    fn reinhard_identities() {
        assert_eq!(reinhard(0.0, 3.0), 0.0);
        for knee in [0.1, 1.0, 7.5, 300.0] {
            assert!((reinhard(knee, knee) - 1.0).abs() < 1e-15);
        }
        for t in [0.0, 0.3, 1.0, 12.0] {
            assert!((reinhard(t, 1.0) - t).abs() < 1e-14);
        }
    }

    #[test]
    fn scale_examples() {
        let l = LuminanceMap::filled(1, 1, 0.3);
        assert_eq!(scale_luminance(&l, 1.0), l);
        assert!((scale_luminance(&l, 2.0).values()[0] - 0.6).abs() < 1e-16);
    }

    #[test]
    fn recombine_examples() {
        let x = LinearImage::new(2, 1, vec![[0.2, 0.4, 0.1], [0.0, 0.0, 0.0]]).unwrap();
        let l = luminance(&x);
        assert_eq!(recombine_color(&x, &l, &l).get(0, 0), x.get(0, 0));
        let doubled = LuminanceMap::new(2, 1, vec![2.0 * l.values()[0], 0.3]).unwrap();
        let out = recombine_color(&x, &l, &doubled);
        for (a, b) in out.get(0, 0).iter().zip([0.4, 0.8, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(out.get(1, 0), [0.3; 3]);
    }

    #[test]
    fn all_zero_luminance_falls_back_to_unit_knee() {
        let p = PartitionLabels::single(2, 1);
        let maps = [LuminanceMap::filled(2, 1, 0.0)];
        let plan = build_scale_plan(&maps, &p, &AdjustConfig::default()).unwrap();
        assert_eq!(plan.segments[0].knee, 1.0);
    }

    #[test]
    fn single_input_still_adjusts() {
        let x = LinearImage::from_fn(8, 8, |x, y| [0.01 * (x + 1) as f64, 0.02 * (y + 1) as f64, 0.05]);
        let stack = ExposureStack::new(vec![x]).unwrap();
        let enhanced = stack.luminances();
        let labels: Vec<usize> = (0..64).map(|i| usize::from(i % 8 >= 4)).collect();
        let p = PartitionLabels::new(8, 8, labels, 2).unwrap();
        let out = adjust_stack(&stack, &enhanced, &p, &AdjustConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        for a in &out.images {
            assert!(a.mapped.values().iter().all(|v| (0.0..=1.0).contains(v)));
            let region: Vec<usize> = (0..64).filter(|i| p.labels()[*i] == a.scale.segment).collect();
            let g = geometric_mean(&a.scaled, &region, 1e-6).unwrap();
            assert!((g / 0.18 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mid_gray_stack_is_nearly_unchanged() {
        let x = LinearImage::filled(4, 4, [0.18; 3]);
        let stack = ExposureStack::new(vec![x.clone()]).unwrap();
        let cfg = AdjustConfig {
            knee: TonemapKnee::One,
            ..Default::default()
        };
        let out = adjust_stack(&stack, &stack.luminances(), &PartitionLabels::single(4, 4), &cfg).unwrap();
        for (a, b) in out.images[0].image.pixels().iter().zip(x.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn tonemap_is_monotone_and_bounded(a in 0.0f64..50.0, b in 0.0f64..50.0, knee in 0.01f64..60.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(reinhard(lo, knee) < reinhard(hi, knee));
            if hi <= knee {
                prop_assert!(reinhard(hi, knee) <= 1.0);
            }
        }

        #[test]
        fn geometric_mean_scales_log_linearly(
            vals in prop::collection::vec(1e-3f64..10.0, 1..40),
            alpha in 0.01f64..100.0,
        ) {
            let n = vals.len();
            let l = LuminanceMap::new(n, 1, vals).unwrap();
            let region: Vec<usize> = (0..n).collect();
            let g = geometric_mean(&l, &region, 1e-6).unwrap();
            let gs = geometric_mean(&scale_luminance(&l, alpha), &region, 1e-6).unwrap();
            prop_assert!((gs / (alpha * g) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn recombination_preserves_chromaticity(
            px in prop::array::uniform3(1e-3f64..1.0),
            target in 1e-4f64..2.0,
        ) {
            let x = LinearImage::new(1, 1, vec![px]).unwrap();
            let l = luminance(&x);
            let hat = LuminanceMap::new(1, 1, vec![target]).unwrap();
            let out = recombine_color(&x, &l, &hat);
            let o = out.get(0, 0);
            let (s_in, s_out) = (px.iter().sum::<f64>(), o.iter().sum::<f64>());
            for c in 0..3 {
                prop_assert!((o[c] / s_out - px[c] / s_in).abs() <= 1e-6 * px[c] / s_in);
            }
            prop_assert!((luminance(&out).values()[0] / target - 1.0).abs() < 1e-6);
        }
    }
}
