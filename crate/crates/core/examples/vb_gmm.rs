//! Variational Bayesian Gaussian mixture on synthetic clusters.
//!
//! Three well separated blobs in 3-D are fitted with an upper bound of ten
//! components. Surplus components are pruned or merged away, so the fit
//! should report three.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssla::segment::gmm::{fit_vb_gmm, LuminanceVectors, VbGmmConfig};

// Box-Muller draw from N(mean, sd^2)
fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    mean + sd * (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn main() -> ssla::Result<()> {
    let centers = [[0.05, 0.12, 0.30], [0.20, 0.45, 0.80], [0.55, 0.85, 0.98]];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut flat = Vec::new();
    for i in 0..3000 {
        let c = centers[i % 3];
        flat.extend(c.iter().map(|&m| normal(&mut rng, m, 0.02).abs()));
    }
    let vectors = LuminanceVectors::new(3, flat)?;

    let fit = fit_vb_gmm(&vectors, &VbGmmConfig::default())?;
    println!(
        "{} components after {} iterations (converged: {})",
        fit.model.len(),
        fit.iterations,
        fit.converged
    );
    for c in fit.model.components() {
        let mean: Vec<String> = c.mean().iter().map(|v| format!("{v:.3}")).collect();
        println!("  weight {:.3}  mean [{}]", c.weight(), mean.join(", "));
    }
    let first = fit.elbo.first().copied().unwrap_or(f64::NAN);
    let last = fit.elbo.last().copied().unwrap_or(f64::NAN);
    println!("lower bound {first:.1} -> {last:.1}");
    Ok(())
}
