//! Acceptance suite. Runs every criterion in sequence (timings are part of
//! the checks, so nothing here runs in parallel) and prints one PASS/FAIL
//! line per criterion. Exits non-zero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssla::adjust::{geometric_mean, recombine_color, reinhard};
use ssla::enhance::{bilateral_local_mean, BilateralParams};
use ssla::expogen::{builtin_scene, make_stack, ExposureSpec, BUILTIN_SCENES};
use ssla::fuse::{FuseDomain, Fusion};
use ssla::pipeline::{enhanced_luminances, process_stack, process_with_enhanced, Approach, PipelineConfig, PipelineOutput};
use ssla::segment::gmm::{fit_vb_gmm, LuminanceVectors, VbGmmConfig};
use ssla::segment::{approach1_thresholds, segment_approach1};
use ssla::{ExposureStack, LinearImage, LuminanceMap};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// 1-3: the unclear-stack trials

struct Trial {
    scene: &'static str,
    entropy: [f64; 3],
    naturalness: [f64; 3],
    adjusted_runs: Vec<PipelineOutput>,
}

fn unclear_stack(trial: u64, size: usize) -> (&'static str, ExposureStack) {
    let name = BUILTIN_SCENES[trial as usize % BUILTIN_SCENES.len()];
    let scene = builtin_scene(name, size, size, trial).expect("builtin scene");
    let spec = ExposureSpec::unclear(3, trial).expect("exposure spec");
    (name, make_stack(&scene, &spec).expect("stack"))
}

fn run_trials() -> (Vec<Trial>, f64) {
    let base = PipelineConfig::default();
    let with = |approach| PipelineConfig { approach, ..base.clone() };
    let start = Instant::now();
    let trials = (0..20u64)
        .map(|t| {
            let (scene, stack) = unclear_stack(t, 256);
            let plain = process_stack(&stack, &with(Approach::Unadjusted)).expect("w/o run");
            // both approaches scale the same enhanced maps
            let enhanced = enhanced_luminances(&stack, &base);
            let a1 = process_with_enhanced(&stack, &enhanced, &with(Approach::Threshold)).expect("approach 1");
            let a2 = process_with_enhanced(&stack, &enhanced, &with(Approach::Gmm)).expect("approach 2");
            let runs = [&plain, &a1, &a2];
            Trial {
                scene,
                entropy: runs.map(|r| r.report.scores.entropy_bits),
                naturalness: runs.map(|r| r.report.scores.naturalness),
                adjusted_runs: vec![a1, a2],
            }
        })
        .collect();
    (trials, start.elapsed().as_secs_f64())
}

fn criterion_1(trials: &[Trial], seconds: f64) -> Outcome {
    let ordered = trials
        .iter()
        .filter(|t| t.entropy[2] >= t.entropy[1] && t.entropy[1] >= t.entropy[0])
        .count();
    let gain = trials.iter().map(|t| t.entropy[2] - t.entropy[0]).sum::<f64>() / trials.len() as f64;
    let need = (trials.len() * 4).div_ceil(5);
    let mut per_scene = String::new();
    for name in BUILTIN_SCENES {
        let of: Vec<&Trial> = trials.iter().filter(|t| t.scene == name).collect();
        let ok = of
            .iter()
            .filter(|t| t.entropy[2] >= t.entropy[1] && t.entropy[1] >= t.entropy[0])
            .count();
        per_scene.push_str(&format!(" {name} {ok}/{}", of.len()));
    }
    outcome(
        ordered >= need && gain >= 0.5 && seconds <= 60.0,
        format!(
            "A2>=A1>=w/o in {ordered}/{} trials (need {need};{per_scene}), mean gain {gain:.3} bits (need 0.5), {seconds:.1} s (limit 60)",
            trials.len()
        ),
    )
}

fn criterion_2(trials: &[Trial]) -> Outcome {
    let n = trials.len() as f64;
    let mean = |i: usize| trials.iter().map(|t| t.naturalness[i]).sum::<f64>() / n;
    let (plain, a1, a2) = (mean(0), mean(1), mean(2));
    outcome(
        a2 > plain,
        format!("mean naturalness w/o {plain:.4}, A1 {a1:.4}, A2 {a2:.4}"),
    )
}

fn criterion_3(trials: &[Trial]) -> Outcome {
    let config = PipelineConfig::default();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for run in trials.iter().flat_map(|t| &t.adjusted_runs) {
        let adjusted = run.adjusted.as_ref().expect("adjusted stack");
        let regions = run.partition.as_ref().expect("partition").regions();
        for a in &adjusted.images {
            let g = geometric_mean(&a.scaled, &regions[a.scale.segment], config.epsilon).expect("non-empty segment");
            worst = worst.max((g - config.middle_gray).abs() / config.middle_gray);
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-9 && checked > 0,
        format!("{checked} segments, max relative deviation of G from 0.18: {worst:.2e} (limit 1e-9)"),
    )
}

// ---------------------------------------------------------------------------
// 4-6: closed-form checks against independent evaluations

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut at_knee, mut identity): (f64, f64) = (0.0, 0.0);
    for _ in 0..1_000_000 {
        let t: f64 = rng.random_range(0.0..=100.0);
        identity = identity.max((reinhard(t, 1.0) - t).abs());
        if t > 0.0 {
            at_knee = at_knee.max((reinhard(t, t) - 1.0).abs());
        }
    }
    outcome(
        at_knee <= 1e-12 && identity <= 1e-12,
        format!("10^6 samples, max |f(L)-1| {at_knee:.2e}, max |f(t)-t| at L=1 {identity:.2e} (limit 1e-12)"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..50 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let src = LinearImage::from_fn(w, h, |_, _| {
            let scale = 10f64.powf(rng.random_range(-7.0..1.0));
            [0, 1, 2].map(|_| if rng.random_bool(0.05) { 0.0 } else { scale * rng.random::<f64>() })
        });
        let l_src = src.luminance();
        let l_hat = LuminanceMap::from_fn(w, h, |_, _| rng.random::<f64>());
        let out = recombine_color(&src, &l_src, &l_hat);
        for ((s, o), l) in src.pixels().iter().zip(out.pixels()).zip(l_src.values()) {
            if *l <= 1e-6 {
                continue;
            }
            // every pair of channels keeps its ratio; cross-multiplied so
            // zero channels are covered too
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let lhs = o[a] * s[b];
                let rhs = o[b] * s[a];
                let scale = lhs.abs().max(rhs.abs());
                if scale > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-6,
        format!("{checked} pixels, max relative channel-ratio error {worst:.2e} (limit 1e-6)"),
    )
}

/// Direct double loop over every pixel pair. At 16x16 and the default
/// sigma_spatial of 16 the whole image lies inside the filter support.
fn brute_force_bilateral(l: &LuminanceMap, params: BilateralParams) -> Vec<f64> {
    let (w, h) = l.dimensions();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = l.get(x, y);
            let (mut num, mut den) = (0.0, 0.0);
            for yy in 0..h {
                for xx in 0..w {
                    let ds = ((xx as f64 - x as f64).powi(2) + (yy as f64 - y as f64).powi(2)).sqrt();
                    let v = l.get(xx, yy);
                    let wt = (-ds * ds / (2.0 * params.sigma_spatial.powi(2))).exp()
                        * (-(v - c).powi(2) / (2.0 * params.sigma_range.powi(2))).exp();
                    num += wt * v;
                    den += wt;
                }
            }
            out.push(num / den);
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = BilateralParams::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        // alternate between spread-out values and values within a few sigma
        let (lo, span) = if i % 2 == 0 { (0.0, 1.0) } else { (rng.random::<f64>(), 0.05) };
        let l = LuminanceMap::from_fn(w, h, |_, _| lo + span * rng.random::<f64>());
        let fast = bilateral_local_mean(&l, params);
        for (f, b) in fast.values().iter().zip(brute_force_bilateral(&l, params)) {
            worst = worst.max((f - b).abs() / b.abs().max(1e-300));
        }
    }
    outcome(worst <= 1e-6, format!("100 images, max relative error {worst:.2e} (limit 1e-6)"))
}

// ---------------------------------------------------------------------------
// 7: VB-GMM recovery

struct Synthetic {
    vectors: LuminanceVectors,
    truth: Vec<usize>,
}

/// `components` isotropic clusters in 3-D with a common sigma; every pair of
/// means is between 5 and 8 sigma apart.
fn separated_clusters(components: usize, seed: u64) -> Synthetic {
    const SIGMA: f64 = 0.02;
    const DIM: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<[f64; DIM]> = vec![[0.0; DIM].map(|_| rng.random_range(0.3..0.7))];
    while means.len() < components {
        let from = means[rng.random_range(0..means.len())];
        let dir = [0.0; DIM].map(|_| gaussian(&mut rng));
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let dist = rng.random_range(5.0..8.0) * SIGMA;
        let cand: [f64; DIM] = std::array::from_fn(|a| from[a] + dir[a] / norm * dist);
        let ok = means.iter().all(|m| {
            let d = m.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            d >= 5.0 * SIGMA
        });
        if ok && cand.iter().all(|v| *v > 8.0 * SIGMA) {
            means.push(cand);
        }
    }
    let mut data = Vec::with_capacity(2000 * DIM);
    let mut truth = Vec::with_capacity(2000);
    for i in 0..2000 {
        let c = i % components;
        truth.push(c);
        data.extend(means[c].map(|m| (m + SIGMA * gaussian(&mut rng)).max(0.0)));
    }
    Synthetic {
        vectors: LuminanceVectors::new(DIM, data).expect("non-negative data"),
        truth,
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fraction of points whose fitted component maps to their true component
/// under the best one-to-one matching (extra fitted components count as
/// errors).
fn matched_accuracy(assigned: &[usize], truth: &[usize], fitted: usize, actual: usize) -> f64 {
    let mut table = vec![vec![0usize; actual]; fitted];
    for (&a, &t) in assigned.iter().zip(truth) {
        table[a][t] += 1;
    }
    let mut best = 0;
    permutations(fitted.max(actual), &mut Vec::new(), &mut |perm| {
        let hits: usize = (0..fitted)
            .filter(|&f| perm[f] < actual)
            .map(|f| table[f][perm[f]])
            .sum();
        best = best.max(hits);
    });
    best as f64 / truth.len() as f64
}

fn permutations(n: usize, prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if prefix.len() == n {
        visit(prefix);
        return;
    }
    for i in 0..n {
        if !prefix.contains(&i) {
            prefix.push(i);
            permutations(n, prefix, visit);
            prefix.pop();
        }
    }
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for components in [2, 3] {
        let (mut right, mut min_acc, mut monotone) = (0, 1.0f64, true);
        for seed in 0..20 {
            let data = separated_clusters(components, 1000 * components as u64 + seed);
            let fit = fit_vb_gmm(&data.vectors, &VbGmmConfig { seed, ..Default::default() }).expect("fit");
            monotone &= fit.elbo.windows(2).all(|p| p[1] >= p[0] - 1e-8 * p[0].abs());
            let assigned: Vec<usize> = data.vectors.rows().map(|v| fit.model.assign(v).component).collect();
            if fit.model.len() == components {
                right += 1;
            }
            if fit.model.len() <= 6 {
                min_acc = min_acc.min(matched_accuracy(&assigned, &data.truth, fit.model.len(), components));
            } else {
                min_acc = 0.0;
            }
        }
        pass &= right >= 18 && min_acc >= 0.95 && monotone;
        parts.push(format!(
            "{components} clusters: M correct {right}/20, min accuracy {:.2}%, ELBO monotone {monotone}",
            100.0 * min_acc
        ));
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 8-10

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut pixels = 0usize;
    for case in 0..200 {
        let (w, h) = (rng.random_range(1..48), rng.random_range(1..48));
        let n = rng.random_range(1..=8);
        // mix continuous values with a few repeated levels so ties and
        // exact-threshold hits occur
        let levels: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let l = LuminanceMap::from_fn(w, h, |_, _| {
            if rng.random_bool(0.3) {
                levels[rng.random_range(0..levels.len())]
            } else {
                rng.random::<f64>().powi(3)
            }
        });
        let seg = segment_approach1(&l, n).expect("approach 1");
        let labels = seg.partition.labels();
        let m = seg.partition.segment_count();

        // independent thresholds: theta_m = ((N - m + 1) / N)(max - min) + min
        let (lo, hi) = (l.min(), l.max());
        let theta: Vec<f64> = (1..=n + 1).map(|m| ((n + 1 - m) as f64 / n as f64) * (hi - lo) + lo).collect();
        let reference = approach1_thresholds(&l, n);
        if theta.iter().zip(&reference).any(|(a, b)| (a - b).abs() > 1e-12 * (hi - lo).max(1e-300)) {
            failures.push(format!("case {case}: thresholds differ"));
        }
        let counts = labels.iter().fold(vec![0usize; m], |mut c, &lab| {
            c[lab] += 1;
            c
        });
        if labels.len() != w * h || labels.iter().any(|&lab| lab >= m) || counts.contains(&0) {
            failures.push(format!("case {case}: not a partition"));
            continue;
        }
        for (p, (&v, &lab)) in l.values().iter().zip(labels).enumerate() {
            let bin = seg.bins[lab];
            let (upper, lower) = (seg.thresholds[bin], seg.thresholds[bin + 1]);
            let brighter_claims = bin > 0 && v >= seg.thresholds[bin];
            if !(lower <= v && v <= upper) || brighter_claims {
                failures.push(format!("case {case}: pixel {p} value {v} in bin {bin} [{lower}, {upper}]"));
            }
            pixels += 1;
        }
        // brighter pixels never get a later label
        let mut by_value: Vec<(f64, usize)> = l.values().iter().copied().zip(labels.iter().copied()).collect();
        by_value.sort_by(|a, b| b.0.total_cmp(&a.0));
        if by_value.windows(2).any(|p| p[0].0 > p[1].0 && p[0].1 > p[1].1) {
            failures.push(format!("case {case}: labels not monotone"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("200 maps, {pixels} pixels re-checked")
        } else {
            format!("{} problems, first: {}", failures.len(), failures[0])
        },
    )
}

fn criterion_9() -> Outcome {
    let (_, stack) = unclear_stack(3, 128);
    let config = PipelineConfig { seed: 11, ..Default::default() };
    let first = process_stack(&stack, &config).expect("first run");
    let second = process_stack(&stack, &config).expect("second run");
    let bits = |img: &LinearImage| img.pixels().iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
    let strip = |out: &PipelineOutput| {
        let mut report = out.report.clone();
        report.timings_ms.clear();
        report.to_json()
    };
    let identical = bits(&first.fused) == bits(&second.fused) && strip(&first) == strip(&second);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for copies in [2, 3, 5] {
        for domain in [FuseDomain::Encoded, FuseDomain::Linear] {
            let img = LinearImage::from_fn(61, 47, |_, _| [0, 1, 2].map(|_| rng.random::<f64>()));
            let fused = Fusion::Mertens.fuse(&vec![img.clone(); copies], domain).expect("fusion");
            for (a, b) in fused.pixels().iter().flatten().zip(img.pixels().iter().flatten()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        identical && worst <= 1e-5,
        format!("repeat run bit-identical: {identical}; replica fusion max error {worst:.2e} (limit 1e-5)"),
    )
}

fn criterion_10() -> Outcome {
    let mut times = [Vec::new(), Vec::new()];
    for run in 0..10u64 {
        let (_, stack) = unclear_stack(100 + run, 512);
        for (slot, approach) in [Approach::Threshold, Approach::Gmm].into_iter().enumerate() {
            let config = PipelineConfig { approach, ..Default::default() };
            let start = Instant::now();
            process_stack(&stack, &config).expect("timed run");
            times[slot].push(start.elapsed().as_secs_f64() * 1e3);
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[4] + v[5]) / 2.0
    };
    let (a1, a2) = (median(&mut times[0]), median(&mut times[1]));
    outcome(
        a1 < a2,
        format!("median wall time at 512x512 over 10 runs: A1 {a1:.0} ms, A2 {a2:.0} ms"),
    )
}

fn main() {
    let start = Instant::now();
    let (trials, seconds) = run_trials();
    let results = [
        ("entropy ordering of the two approaches", criterion_1(&trials, seconds)),
        ("naturalness of Approach 2", criterion_2(&trials)),
        ("middle gray before tone mapping", criterion_3(&trials)),
        ("tone curve identities", criterion_4()),
        ("chromaticity preservation", criterion_5()),
        ("bilateral filter against brute force", criterion_6()),
        ("VB-GMM recovery", criterion_7()),
        ("Approach 1 partition", criterion_8()),
        ("determinism and replica fusion", criterion_9()),
        ("Approach 1 faster than Approach 2", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
