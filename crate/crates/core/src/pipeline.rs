//! End-to-end processing: decode, enhance, segment, adjust, fuse, score.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjust::{adjust_stack, AdjustConfig, AdjustedStack, TonemapKnee};
use crate::enhance::{enhance_contrast_with, BilateralMethod, BilateralParams};
use crate::error::{Error, Result};
use crate::fuse::{FuseDomain, Fusion};
use crate::imageio::{self, write_image, ExposureStack, LinearImage, LuminanceMap};
use crate::metrics::{score_image, NaturalnessParams, Scores};
use crate::segment::{
    segment_approach1, segment_approach2, select_middle, Approach2Params, PartitionLabels,
};

/// Version of the JSON report layout.
pub const REPORT_SCHEMA: u32 = 1;

/// How the scene is segmented, or whether adjustment is skipped entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Approach {
    /// Fuse the decoded inputs directly.
    Unadjusted,
    /// Equal-width luminance bins of the middle exposure.
    Threshold,
    /// Variational Gaussian mixture over per-pixel luminance vectors.
    #[default]
    Gmm,
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "0" => Ok(Approach::Unadjusted),
            "1" => Ok(Approach::Threshold),
            "2" => Ok(Approach::Gmm),
            other => Err(Error::param("approach", format!("expected 1, 2 or none, got '{other}'"))),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Unadjusted => "none",
            Approach::Threshold => "1",
            Approach::Gmm => "2",
        })
    }
}

/// Every tunable of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub approach: Approach,
    pub contrast_enhancement: bool,
    pub bilateral: BilateralParams,
    pub bilateral_method: BilateralMethod,
    pub k_max: usize,
    pub max_iters: usize,
    pub downsize_max: usize,
    pub seed: u64,
    pub tonemap_knee: TonemapKnee,
    pub middle_gray: f64,
    pub epsilon: f64,
    pub fusion: Fusion,
    pub fuse_domain: FuseDomain,
    pub naturalness: NaturalnessParams,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub emit_intermediates: bool,
    /// Where intermediates go; defaults to the output file's directory.
    pub intermediates_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            approach: Approach::Gmm,
            contrast_enhancement: true,
            bilateral: BilateralParams::default(),
            bilateral_method: BilateralMethod::Exact,
            k_max: 10,
            max_iters: 100,
            downsize_max: 256,
            seed: 0,
            tonemap_knee: TonemapKnee::Max,
            middle_gray: crate::adjust::MIDDLE_GRAY,
            epsilon: crate::adjust::DEFAULT_EPSILON,
            fusion: Fusion::Mertens,
            fuse_domain: FuseDomain::Encoded,
            naturalness: NaturalnessParams::default(),
            output: None,
            report: None,
            emit_intermediates: false,
            intermediates_dir: None,
        }
    }
}

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(key, format!("cannot parse '{value}'")))
}

fn parse_bool(key: &'static str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::param(key, format!("expected on/off, got '{value}'"))),
    }
}

impl PipelineConfig {
    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "approach" => self.approach = value.parse()?,
            "contrast_enhancement" => self.contrast_enhancement = parse_bool("contrast_enhancement", value)?,
            "sigma_spatial" => self.bilateral.sigma_spatial = parse("sigma_spatial", value)?,
            "sigma_range" => self.bilateral.sigma_range = parse("sigma_range", value)?,
            "bilateral" => {
                self.bilateral_method = match value {
                    "exact" => BilateralMethod::Exact,
                    "grid" => BilateralMethod::Grid,
                    _ => return Err(Error::param("bilateral", format!("expected exact or grid, got '{value}'"))),
                }
            }
            "k_max" | "k" => self.k_max = parse("k_max", value)?,
            "max_iters" => self.max_iters = parse("max_iters", value)?,
            "downsize_max" => self.downsize_max = parse("downsize_max", value)?,
            "seed" => self.seed = parse("seed", value)?,
            "tonemap_knee" => {
                self.tonemap_knee = match value {
                    "max" => TonemapKnee::Max,
                    "1" | "one" => TonemapKnee::One,
                    _ => return Err(Error::param("tonemap_knee", format!("expected max or 1, got '{value}'"))),
                }
            }
            "middle_gray" => self.middle_gray = parse("middle_gray", value)?,
            "epsilon" => self.epsilon = parse("epsilon", value)?,
            "fusion" => self.fusion = value.parse()?,
            "fuse_domain" => self.fuse_domain = value.parse()?,
            "patch_stride" => self.naturalness.stride = parse("patch_stride", value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "report" => self.report = Some(PathBuf::from(value)),
            "emit_intermediates" => self.emit_intermediates = parse_bool("emit_intermediates", value)?,
            "intermediates_dir" => self.intermediates_dir = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.bilateral.validate()?;
        self.adjust_config().validate()?;
        self.naturalness.validate()?;
        if !(1..=256).contains(&self.k_max) {
            return Err(Error::param("k_max", "must be between 1 and 256"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if self.downsize_max == 0 {
            return Err(Error::param("downsize_max", "must be at least 1"));
        }
        Ok(())
    }

    pub fn adjust_config(&self) -> AdjustConfig {
        AdjustConfig {
            middle_gray: self.middle_gray,
            epsilon: self.epsilon,
            knee: self.tonemap_knee,
        }
    }

    pub fn approach2_params(&self) -> Approach2Params {
        Approach2Params {
            k: self.k_max,
            max_iters: self.max_iters,
            downsize_max: self.downsize_max,
            seed: self.seed,
        }
    }
}

/// One row of [`RunReport::segments`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: usize,
    pub pixel_count: usize,
    pub alpha: f64,
    /// Input the segment's adjusted image was derived from; absent when the
    /// run skipped adjustment.
    pub source_index: Option<usize>,
    pub knee: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub approach: String,
    pub contrast_enhancement: bool,
    pub fusion: String,
    pub fuse_domain: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub inputs: usize,
    pub segment_count: usize,
    pub segments: Vec<SegmentReport>,
    pub scores: Scores,
    /// Wall time per stage in milliseconds.
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub fused: LinearImage,
    pub report: RunReport,
    pub adjusted: Option<AdjustedStack>,
    pub partition: Option<PartitionLabels>,
}

struct Stopwatch(BTreeMap<String, f64>);

impl Stopwatch {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

/// Luminance maps fed to segmentation and scaling: contrast-enhanced when
/// enabled, raw otherwise.
pub fn enhanced_luminances(stack: &ExposureStack, config: &PipelineConfig) -> Vec<LuminanceMap> {
    let raw = stack.luminances();
    if !config.contrast_enhancement {
        return raw;
    }
    raw.iter()
        .map(|l| enhance_contrast_with(l, config.bilateral, config.bilateral_method))
        .collect()
}

/// Runs the pipeline on a decoded stack.
pub fn process_stack(stack: &ExposureStack, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let mut clock = Stopwatch(BTreeMap::new());
    let enhanced = if config.approach == Approach::Unadjusted {
        Vec::new()
    } else {
        clock.time("enhance", || enhanced_luminances(stack, config))
    };
    finish(stack, &enhanced, config, clock)
}

/// Like [`process_stack`] but with precomputed [`enhanced_luminances`], so
/// several configurations can share the enhancement stage.
pub fn process_with_enhanced(
    stack: &ExposureStack,
    enhanced: &[LuminanceMap],
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    finish(stack, enhanced, config, Stopwatch(BTreeMap::new()))
}

fn finish(
    stack: &ExposureStack,
    enhanced: &[LuminanceMap],
    config: &PipelineConfig,
    mut clock: Stopwatch,
) -> Result<PipelineOutput> {
    let (w, h) = stack.dimensions();
    let backend = config.fusion.backend(config.fuse_domain);

    let (fused, adjusted, partition, segments) = if config.approach == Approach::Unadjusted {
        let fused = clock.time("fuse", || backend.fuse(stack.images()))?;
        let segments = vec![SegmentReport {
            segment: 0,
            pixel_count: w * h,
            alpha: 1.0,
            source_index: None,
            knee: None,
        }];
        (fused, None, None, segments)
    } else {
        let partition = clock.time("segment", || match config.approach {
            Approach::Threshold => {
                let mid = select_middle(enhanced, config.epsilon)?;
                Ok(segment_approach1(&enhanced[mid], stack.len())?.partition)
            }
            _ => Ok::<_, Error>(segment_approach2(enhanced, &config.approach2_params())?.partition),
        })?;
        let adjusted = clock.time("adjust", || {
            adjust_stack(stack, enhanced, &partition, &config.adjust_config())
        })?;
        let fused = clock.time("fuse", || backend.fuse(&adjusted.linear_images()))?;
        let counts = partition.pixel_counts();
        let segments = adjusted
            .images
            .iter()
            .map(|a| SegmentReport {
                segment: a.scale.segment,
                pixel_count: counts[a.scale.segment],
                alpha: a.scale.alpha,
                source_index: Some(a.scale.source_index),
                knee: Some(a.scale.knee),
            })
            .collect();
        (fused, Some(adjusted), Some(partition), segments)
    };
    let scores = clock.time("metrics", || score_image(&fused, &config.naturalness))?;
    let total = clock.0.values().sum();
    clock.0.insert("total".into(), total);

    let report = RunReport {
        schema: REPORT_SCHEMA,
        approach: config.approach.to_string(),
        contrast_enhancement: config.contrast_enhancement,
        fusion: config.fusion.to_string(),
        fuse_domain: config.fuse_domain.to_string(),
        seed: config.seed,
        width: w,
        height: h,
        inputs: stack.len(),
        segment_count: segments.len(),
        segments,
        scores,
        timings_ms: clock.0,
    };
    Ok(PipelineOutput {
        fused,
        report,
        adjusted,
        partition,
    })
}

/// Palette of the label-map PNG: label `i` is drawn with entry
/// `i % LABEL_PALETTE.len()`.
pub const LABEL_PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [170, 110, 40],
];

pub fn write_label_map(path: impl AsRef<Path>, partition: &PartitionLabels) -> Result<()> {
    let indices: Vec<u8> = partition
        .labels()
        .iter()
        .map(|l| (l % LABEL_PALETTE.len()) as u8)
        .collect();
    let used = partition.segment_count().min(LABEL_PALETTE.len());
    imageio::write_indexed_png(path, partition.width(), partition.height(), &indices, &LABEL_PALETTE[..used])
}

/// Decodes `inputs`, processes them and writes whatever outputs `config`
/// names: the fused image, the JSON report and, when enabled, the adjusted
/// images (`adjusted_00.png`, ...) and `labels.png`.
pub fn run_pipeline(inputs: &[PathBuf], config: &PipelineConfig) -> Result<PipelineOutput> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no input images".into()));
    }
    let start = Instant::now();
    let images = inputs.iter().map(imageio::read_image).collect::<Result<Vec<_>>>()?;
    let decode_ms = start.elapsed().as_secs_f64() * 1e3;
    let stack = ExposureStack::new(images)?;
    let mut out = process_stack(&stack, config)?;
    out.report.timings_ms.insert("decode".into(), decode_ms);
    *out.report.timings_ms.get_mut("total").expect("total is always recorded") += decode_ms;

    if let Some(path) = &config.output {
        write_image(path, &out.fused)?;
    }
    if let Some(path) = &config.report {
        std::fs::write(path, out.report.to_json()).map_err(|e| Error::io(path, e))?;
    }
    if config.emit_intermediates {
        let dir = config
            .intermediates_dir
            .clone()
            .or_else(|| config.output.as_ref().and_then(|p| p.parent().map(Path::to_path_buf)))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if let Some(adjusted) = &out.adjusted {
            for (i, a) in adjusted.images.iter().enumerate() {
                write_image(dir.join(format!("adjusted_{i:02}.png")), &a.image)?;
            }
        }
        if let Some(partition) = &out.partition {
            write_label_map(dir.join("labels.png"), partition)?;
        }
    }
    Ok(out)
}

/// The four configurations compared in the evaluation: no adjustment,
/// Approach 1, Approach 2 and Approach 2 without contrast enhancement.
pub fn standard_variants(base: &PipelineConfig) -> Vec<(String, PipelineConfig)> {
    let with = |approach, ce| PipelineConfig {
        approach,
        contrast_enhancement: ce,
        output: None,
        report: None,
        emit_intermediates: false,
        ..base.clone()
    };
    vec![
        ("w/o".into(), with(Approach::Unadjusted, base.contrast_enhancement)),
        ("approach1".into(), with(Approach::Threshold, true)),
        ("approach2".into(), with(Approach::Gmm, true)),
        ("approach2_no_ce".into(), with(Approach::Gmm, false)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub config: String,
    pub entropy: f64,
    pub naturalness: f64,
    pub segments: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,entropy,naturalness,M,wall_ms\n");
        for r in &self.rows {
            writeln!(out, "{},{:.6},{:.6},{},{:.3}", r.config, r.entropy, r.naturalness, r.segments, r.wall_ms)
                .expect("writing to a String");
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| config | entropy | naturalness | M | wall_ms |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            writeln!(
                out,
                "| {} | {:.4} | {:.4} | {} | {:.1} |",
                r.config, r.entropy, r.naturalness, r.segments, r.wall_ms
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Runs every configuration on the same stack.
pub fn compare_runs(stack: &ExposureStack, configs: &[(String, PipelineConfig)]) -> Result<ComparisonTable> {
    if configs.len() < 2 {
        return Err(Error::InvalidInput("comparison needs at least two configurations".into()));
    }
    let rows = configs
        .iter()
        .map(|(name, cfg)| {
            let start = Instant::now();
            let out = process_stack(stack, cfg)?;
            Ok(ComparisonRow {
                config: name.clone(),
                entropy: out.report.scores.entropy_bits,
                naturalness: out.report.scores.naturalness,
                segments: out.report.segment_count,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expogen::{make_stack, window_scene, ExposureSpec};

    fn small_stack() -> ExposureStack {
        make_stack(&window_scene(48, 40, 2), &ExposureSpec::new(vec![-5.0, -3.0, -1.0]).unwrap()).unwrap()
    }

    #[test]
    fn config_text_overrides_defaults() {
        let mut c = PipelineConfig::default();
        c.apply_text("# comment\napproach = 1\nk_max=4\n\ncontrast_enhancement = off\nfusion = average  # inline\n")
            .unwrap();
        assert_eq!(c.approach, Approach::Threshold);
        assert_eq!(c.k_max, 4);
        assert!(!c.contrast_enhancement);
        assert_eq!(c.fusion, Fusion::Average);
        assert!(matches!(c.apply_text("colour = red"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("k_max"), Err(Error::Config(_))));
        assert!(c.apply_text("sigma_range = -1").is_ok());
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_mid_gray_input_yields_one_segment() {
        let stack = ExposureStack::new(vec![LinearImage::filled(16, 16, [0.18; 3])]).unwrap();
        let cfg = PipelineConfig {
            approach: Approach::Threshold,
            ..Default::default()
        };
        let out = process_stack(&stack, &cfg).unwrap();
        assert_eq!(out.report.segment_count, 1);
        assert_eq!(out.report.segments[0].pixel_count, 256);
    }

    #[test]
    fn report_is_consistent() {
        let stack = small_stack();
        for approach in [Approach::Unadjusted, Approach::Threshold, Approach::Gmm] {
            let out = process_stack(&stack, &PipelineConfig { approach, ..Default::default() }).unwrap();
            let r = &out.report;
            assert_eq!(r.schema, 1);
            assert!(r.segment_count >= 1 && r.segment_count <= 10);
            assert_eq!(r.segments.iter().map(|s| s.pixel_count).sum::<usize>(), 48 * 40);
            assert!(r.timings_ms.contains_key("total"));
            let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
            assert_eq!(json["schema"], 1);
        }
    }

    #[test]
    fn unadjusted_run_equals_direct_fusion() {
        let stack = small_stack();
        let out = process_stack(&stack, &PipelineConfig { approach: Approach::Unadjusted, ..Default::default() }).unwrap();
        let direct = Fusion::Mertens.fuse(stack.images(), FuseDomain::Encoded).unwrap();
        assert_eq!(out.fused, direct);
    }

    #[test]
    fn runs_are_deterministic() {
        let stack = small_stack();
        let cfg = PipelineConfig { seed: 5, ..Default::default() };
        let a = process_stack(&stack, &cfg).unwrap();
        let b = process_stack(&stack, &cfg).unwrap();
        assert_eq!(a.fused, b.fused);
        let strip = |mut r: RunReport| {
            r.timings_ms.clear();
            r
        };
        assert_eq!(strip(a.report), strip(b.report));
    }

    #[test]
    fn comparison_table_layout() {
        let stack = small_stack();
        let table = compare_runs(&stack, &standard_variants(&PipelineConfig::default())).unwrap();
        assert_eq!(table.rows.len(), 4);
        let csv = table.to_csv();
        assert!(csv.starts_with("config,entropy,naturalness,M,wall_ms\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(table.to_markdown().contains("| approach2_no_ce |"));
        assert!(compare_runs(&stack, &standard_variants(&PipelineConfig::default())[..1]).is_err());
    }
}
