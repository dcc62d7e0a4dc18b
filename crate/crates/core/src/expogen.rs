//! Synthetic exposure stacks from procedurally generated HDR scenes.
//!
//! A scene is normalized so that the log-mean luminance of its 0 EV
//! rendering is middle gray; exposure `v` multiplies it by `2^v` and, with
//! the clipped response, saturates at 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjust::MIDDLE_GRAY;
use crate::error::{Error, Result};
use crate::imageio::{pixel_luminance, ExposureStack, LinearImage};

/// Names accepted by [`builtin_scene`].
pub const BUILTIN_SCENES: [&str; 3] = ["window", "trimodal", "gradient"];

/// Linear irradiance map; values are unbounded but finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrScene {
    name: String,
    width: usize,
    height: usize,
    irradiance: Vec<[f64; 3]>,
}

impl HdrScene {
    pub fn new(name: impl Into<String>, width: usize, height: usize, irradiance: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || irradiance.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "scene buffer of {} pixels does not match {width}x{height}",
                irradiance.len()
            )));
        }
        if irradiance.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("scene irradiance must be finite and non-negative".into()));
        }
        Ok(Self {
            name: name.into(),
            width,
            height,
            irradiance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn irradiance(&self) -> &[[f64; 3]] {
        &self.irradiance
    }

    /// Factor that puts the log-mean luminance at middle gray.
    pub fn normalization(&self) -> f64 {
        let n = self.irradiance.len() as f64;
        let log_mean = self
            .irradiance
            .iter()
            .map(|p| pixel_luminance(*p).max(1e-12).ln())
            .sum::<f64>()
            / n;
        MIDDLE_GRAY / log_mean.exp()
    }

    /// The 0 EV rendering `x_0`, without clipping.
    pub fn reference(&self) -> LinearImage {
        let k = self.normalization();
        LinearImage::new(self.width, self.height, self.irradiance.iter().map(|p| p.map(|c| c * k)).collect())
            .expect("validated scene")
    }
}

/// Camera response applied after the exposure gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Response {
    Linear,
    /// Linear up to sensor saturation at 1.
    #[default]
    ClippedLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureSpec {
    pub evs: Vec<f64>,
    pub response: Response,
}

impl ExposureSpec {
    pub fn new(evs: Vec<f64>) -> Result<Self> {
        if evs.is_empty() {
            return Err(Error::InvalidInput("exposure list is empty".into()));
        }
        if evs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("exposure values must be finite".into()));
        }
        Ok(Self {
            evs,
            response: Response::ClippedLinear,
        })
    }

    /// `count` EVs drawn uniformly from `[-7, 0]`, sorted ascending.
    pub fn unclear(count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut evs: Vec<f64> = (0..count).map(|_| rng.random_range(-7.0..=0.0)).collect();
        evs.sort_by(f64::total_cmp);
        Self::new(evs)
    }
}

/// Renders the scene at exposure value `ev`.
pub fn expose(scene: &HdrScene, ev: f64, response: Response) -> LinearImage {
    let gain = ev.exp2() * scene.normalization();
    let data = scene
        .irradiance
        .iter()
        .map(|p| {
            p.map(|c| match response {
                Response::Linear => gain * c,
                Response::ClippedLinear => (gain * c).min(1.0),
            })
        })
        .collect();
    LinearImage::new(scene.width, scene.height, data).expect("validated scene")
}

pub fn make_stack(scene: &HdrScene, spec: &ExposureSpec) -> Result<ExposureStack> {
    let images = spec.evs.iter().map(|v| expose(scene, *v, spec.response)).collect();
    ExposureStack::new(images)?.with_exposure_values(spec.evs.clone())
}

/// Smooth periodic texture: a sum of random oriented sinusoids. Returns a
/// log-domain offset with roughly unit amplitude.
struct Texture {
    waves: Vec<(f64, f64, f64, f64)>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, count: usize, min_period: f64, max_period: f64) -> Self {
        let waves = (0..count)
            .map(|_| {
                let period = rng.random_range(min_period..max_period);
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                let freq = std::f64::consts::TAU / period;
                (freq * angle.cos(), freq * angle.sin(), rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.5..1.0))
            })
            .collect();
        Self { waves }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let norm: f64 = self.waves.iter().map(|w| w.3).sum();
        self.waves.iter().map(|(fx, fy, ph, a)| a * (fx * x + fy * y + ph).sin()).sum::<f64>() / norm
    }
}

/// Assembles a scene from a region map and per-region base luminance and
/// tint, then rescales every region so its mean luminance equals its base.
fn compose(
    name: &str,
    width: usize,
    height: usize,
    seed: u64,
    region: impl Fn(f64, f64) -> usize,
    base: impl Fn(usize, f64, f64) -> f64,
    tints: &[[f64; 3]],
) -> HdrScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = Texture::new(&mut rng, 4, width.max(height) as f64 / 6.0, width.max(height) as f64 / 2.0);
    let fine = Texture::new(&mut rng, 5, 4.0, 16.0);
    let mut labels = Vec::with_capacity(width * height);
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = ((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64);
            let r = region(u, v);
            let noise: f64 = rng.random_range(-1.0..1.0);
            let log_tex = 0.9 * coarse.at(x as f64, y as f64) + 0.5 * fine.at(x as f64, y as f64) + 0.08 * noise;
            let l = base(r, u, v) * log_tex.exp();
            labels.push(r);
            data.push(tints[r].map(|t| t * l));
        }
    }
    let regions = tints.len();
    let mut sums = vec![(0.0, 0usize); regions];
    for (p, r) in data.iter().zip(&labels) {
        sums[*r].0 += pixel_luminance(*p);
        sums[*r].1 += 1;
    }
    let targets: Vec<f64> = (0..regions)
        .map(|r| {
            let (sum, count) = sums[r];
            if count == 0 {
                return 1.0;
            }
            // mean base level of the region, so flat-base regions hit it exactly
            let target = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == r)
                .map(|(i, _)| base(r, ((i % width) as f64 + 0.5) / width as f64, ((i / width) as f64 + 0.5) / height as f64))
                .sum::<f64>()
                / count as f64;
            target / (sum / count as f64)
        })
        .collect();
    for (p, r) in data.iter_mut().zip(&labels) {
        *p = p.map(|c| c * targets[*r]);
    }
    HdrScene::new(name, width, height, data).expect("generated irradiance is finite and positive")
}

/// Indoor scene with a bright window; mean luminance of the window region is
/// 256 times that of the room.
pub fn window_scene(width: usize, height: usize, seed: u64) -> HdrScene {
    compose(
        "window",
        width,
        height,
        seed,
        |u, v| usize::from((0.45..0.9).contains(&u) && (0.1..0.6).contains(&v)),
        |r, _, _| if r == 1 { 256.0 } else { 1.0 },
        &[[1.15, 1.0, 0.75], [0.8, 0.97, 1.3]],
    )
}

/// Three bands at 1, 16 and 256 separated by wavy borders.
pub fn trimodal_scene(width: usize, height: usize, seed: u64) -> HdrScene {
    compose(
        "trimodal",
        width,
        height,
        seed,
        |u, v| {
            let t = u + 0.05 * (v * 9.0).sin();
            if t < 0.33 {
                0
            } else if t < 0.66 {
                1
            } else {
                2
            }
        },
        |r, _, _| [1.0, 16.0, 256.0][r],
        &[[0.9, 1.0, 1.2], [1.2, 1.0, 0.8], [1.0, 1.0, 1.0]],
    )
}

/// Horizontal exponential ramp spanning ten stops.
pub fn gradient_scene(width: usize, height: usize, seed: u64) -> HdrScene {
    compose(
        "gradient",
        width,
        height,
        seed,
        |_, _| 0,
        |_, u, _| (10.0 * u).exp2(),
        &[[1.1, 1.0, 0.9]],
    )
}

pub fn builtin_scene(name: &str, width: usize, height: usize, seed: u64) -> Result<HdrScene> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("scene dimensions must be non-zero".into()));
    }
    match name {
        "window" => Ok(window_scene(width, height, seed)),
        "trimodal" => Ok(trimodal_scene(width, height, seed)),
        "gradient" => Ok(gradient_scene(width, height, seed)),
        other => Err(Error::param(
            "scene",
            format!("unknown scene '{other}', expected one of {}", BUILTIN_SCENES.join(", ")),
        )),
    }
}

/// Every built-in scene at the given size.
pub fn builtin_scenes(width: usize, height: usize, seed: u64) -> Vec<HdrScene> {
    BUILTIN_SCENES
        .iter()
        .map(|n| builtin_scene(n, width, height, seed).expect("built-in name"))
        .collect()
}
