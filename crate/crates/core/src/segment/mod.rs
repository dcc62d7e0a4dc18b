//! Luminance-based scene segmentation.
//!
//! Two strategies split the pixel grid into `M` areas of coherent
//! brightness:
//!
//! * **Approach 1** cuts the luminance range of the middle exposure into
//!   `N` equal bins. Cheap, and usually good enough.
//! * **Approach 2** treats each pixel's luminances across the whole stack
//!   as an `N`-vector, fits a variational-Bayes Gaussian mixture to them,
//!   and labels each pixel with its most responsible component. `M` is
//!   chosen by the fit, bounded by `K`.
//!
//! Both return labels ordered brightest segment first.

pub mod gmm;

pub use gmm::{
    fit_vb_gmm, kmeans_plus_plus, Assignment, GmmComponent, GmmModel, LuminanceVectors, VbFit,
    VbGmmConfig,
};

use crate::adjust::geometric_mean_of;
use crate::error::{Error, Result};
use crate::imageio::LuminanceMap;

/// A partition of the pixel grid into `segment_count` non-empty areas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLabels {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    segment_count: usize,
}

impl PartitionLabels {
    /// Validates that every label is in range and every segment is used.
    pub fn new(width: usize, height: usize, labels: Vec<usize>, segment_count: usize) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} labels for a {width}x{height} grid",
                labels.len()
            )));
        }
        if segment_count == 0 {
            return Err(Error::InvalidInput("partition needs at least one segment".into()));
        }
        let mut used = vec![false; segment_count];
        for &l in &labels {
            if l >= segment_count {
                return Err(Error::InvalidInput(format!(
                    "label {l} out of range for {segment_count} segments"
                )));
            }
            used[l] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!("segment {empty} is empty")));
        }
        Ok(Self {
            width,
            height,
            labels,
            segment_count,
        })
    }

    /// Everything in one segment.
    pub fn single(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
            segment_count: 1,
        }
    }

    /// Renumbers raw ids to `0..M`, following `order` and skipping ids that
    /// label no pixel. Ids missing from `order` are a logic error.
    fn compact(width: usize, height: usize, raw: &[usize], order: &[usize]) -> (Self, Vec<usize>) {
        let max_id = order.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0usize; max_id + 1];
        for &r in raw {
            counts[r] += 1;
        }
        let mut remap = vec![usize::MAX; max_id + 1];
        let mut kept = Vec::new();
        for &id in order {
            if counts[id] > 0 {
                remap[id] = kept.len();
                kept.push(id);
            }
        }
        let labels = raw.iter().map(|&r| remap[r]).collect();
        let partition = Self {
            width,
            height,
            labels,
            segment_count: kept.len(),
        };
        (partition, kept)
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

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn pixel_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.segment_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Pixel indices of each segment.
    pub fn regions(&self) -> Vec<Vec<usize>> {
        let mut regions = vec![Vec::new(); self.segment_count];
        for (i, &l) in self.labels.iter().enumerate() {
            regions[l].push(i);
        }
        regions
    }
}

/// Index of the map with median global geometric-mean brightness. For an
/// even count the lower middle wins; equal means keep their input order.
pub fn select_middle(maps: &[LuminanceMap], epsilon: f64) -> Result<usize> {
    if maps.is_empty() {
        return Err(Error::InvalidInput("no luminance maps".into()));
    }
    let means: Vec<f64> = maps
        .iter()
        .map(|m| geometric_mean_of(m.values().iter().copied(), epsilon))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    Ok(order[(maps.len() - 1) / 2])
}

/// Approach 1 output: the partition plus the thresholds behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSegmentation {
    pub partition: PartitionLabels,
    /// `N + 1` thresholds from `max` down to `min`; bin `b` holds values in
    /// `[thresholds[b + 1], thresholds[b]]`.
    pub thresholds: Vec<f64>,
    /// The bin each compacted label came from.
    pub bins: Vec<usize>,
}

/// Equal-width thresholds over the range of `l_med`, highest first.
pub fn approach1_thresholds(l_med: &LuminanceMap, n: usize) -> Vec<f64> {
    let (lo, hi) = (l_med.min(), l_med.max());
    let range = hi - lo;
    let mut thresholds: Vec<f64> = (0..=n)
        .map(|i| ((n - i) as f64 / n as f64) * range + lo)
        .collect();
    // Pin the ends so max/min land inside the outer bins despite rounding.
    thresholds[0] = hi;
    thresholds[n] = lo;
    thresholds
}

/// Splits the luminance range of the middle exposure into `n` equal bins.
/// A value sitting exactly on a threshold goes to the brighter bin; empty
/// bins are dropped.
pub fn segment_approach1(l_med: &LuminanceMap, n: usize) -> Result<ThresholdSegmentation> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let thresholds = approach1_thresholds(l_med, n);
    if n > 1 && l_med.max() == l_med.min() {
        log::warn!("middle exposure is constant; approach 1 collapses to a single segment");
    }
    let raw: Vec<usize> = l_med
        .values()
        .iter()
        .map(|&v| (0..n).find(|&b| v >= thresholds[b + 1]).unwrap_or(n - 1))
        .collect();
    let order: Vec<usize> = (0..n).collect();
    let (partition, bins) = PartitionLabels::compact(l_med.width(), l_med.height(), &raw, &order);
    Ok(ThresholdSegmentation {
        partition,
        thresholds,
        bins,
    })
}

/// Settings for Approach 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach2Params {
    pub k: usize,
    pub max_iters: usize,
    /// Longer side of the grid the mixture is fitted on.
    pub downsize_max: usize,
    pub seed: u64,
}

impl Default for Approach2Params {
    fn default() -> Self {
        Self {
            k: 10,
            max_iters: 100,
            downsize_max: 256,
            seed: 0,
        }
    }
}

/// Approach 2 output.
#[derive(Debug, Clone)]
pub struct GmmSegmentation {
    pub partition: PartitionLabels,
    /// Active components of the fitted mixture, in model order.
    pub fit: VbFit,
    /// Model component behind each label.
    pub components: Vec<usize>,
    /// Pixels assigned through the nearest-mean fallback.
    pub degenerate_pixels: usize,
    /// Grid size the mixture was fitted on.
    pub fit_dimensions: (usize, usize),
}

/// Dimensions with the longer side scaled down to `max_side`, preserving
/// aspect ratio. Grids already within bounds are left alone.
pub fn downsized_dimensions(width: usize, height: usize, max_side: usize) -> (usize, usize) {
    let longest = width.max(height);
    if longest <= max_side {
        return (width, height);
    }
    let scale = max_side as f64 / longest as f64;
    let fit = |len: usize| {
        if len == longest {
            max_side
        } else {
            ((len as f64 * scale).round() as usize).clamp(1, max_side)
        }
    };
    (fit(width), fit(height))
}

/// Fits a VB Gaussian mixture on downsized luminance vectors and labels
/// every full-resolution pixel with its most responsible component.
pub fn segment_approach2(maps: &[LuminanceMap], params: &Approach2Params) -> Result<GmmSegmentation> {
    if params.downsize_max == 0 {
        return Err(Error::param("downsize_max", "must be at least 1"));
    }
    let full = LuminanceVectors::from_maps(maps)?;
    let (w, h) = maps[0].dimensions();
    let (dw, dh) = downsized_dimensions(w, h, params.downsize_max);
    let small: Vec<LuminanceMap> = maps.iter().map(|m| m.resize_bilinear(dw, dh)).collect();
    let train = LuminanceVectors::from_maps(&small)?;

    let fit = fit_vb_gmm(
        &train,
        &VbGmmConfig {
            k: params.k,
            max_iters: params.max_iters,
            seed: params.seed,
            ..Default::default()
        },
    )?;

    let mut degenerate = 0;
    let raw: Vec<usize> = full
        .rows()
        .map(|v| {
            let a = fit.model.assign(v);
            degenerate += a.degenerate as usize;
            a.component
        })
        .collect();

    let brightness: Vec<f64> = fit
        .model
        .components()
        .iter()
        .map(|c| c.mean().iter().sum())
        .collect();
    let mut order: Vec<usize> = (0..fit.model.len()).collect();
    order.sort_by(|&a, &b| brightness[b].total_cmp(&brightness[a]));
    let (partition, components) = PartitionLabels::compact(w, h, &raw, &order);
    Ok(GmmSegmentation {
        partition,
        fit,
        components,
        degenerate_pixels: degenerate,
        fit_dimensions: (dw, dh),
    })
}
