//! Gaussian mixture fitted by variational Bayes.
//!
//! The variational posterior is the usual conjugate family: Dirichlet over
//! the mixing weights and Gaussian-Wishart over each component's mean and
//! precision. A small symmetric Dirichlet concentration (`1/K`) starves
//! redundant components of mass, so fitting with a generous `K` and pruning
//! afterwards selects the model order automatically.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::imageio::LuminanceMap;
use crate::math::exp_nonpositive;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-pixel N-dimensional luminance vectors, row-major (one row per pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceVectors {
    dim: usize,
    data: Vec<f64>,
}

impl LuminanceVectors {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into rows of {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "vector entry {i} is negative or non-finite: {}",
                data[i]
            )));
        }
        Ok(Self { dim, data })
    }

    /// Stacks aligned luminance maps into one vector per pixel.
    pub fn from_maps(maps: &[LuminanceMap]) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::InvalidInput("no luminance maps".into()));
        };
        for m in maps {
            if m.dimensions() != first.dimensions() {
                return Err(Error::DimensionMismatch {
                    expected_width: first.width(),
                    expected_height: first.height(),
                    width: m.width(),
                    height: m.height(),
                });
            }
        }
        let dim = maps.len();
        let mut data = Vec::with_capacity(first.len() * dim);
        for i in 0..first.len() {
            data.extend(maps.iter().map(|m| m.values()[i]));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }
}

/// One Gaussian of a fitted mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmComponent {
    weight: f64,
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    /// Lower Cholesky factor of the covariance.
    chol: DMatrix<f64>,
    /// `-(D ln 2pi)/2 - ln|L|`, the log of the normalizing constant.
    log_norm: f64,
}

impl GmmComponent {
    pub fn new(weight: f64, mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || covariance.shape() != (d, d) {
            return Err(Error::InvalidInput(format!(
                "covariance shape {:?} does not match mean dimension {d}",
                covariance.shape()
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidInput(format!("weight {weight} outside [0, 1]")));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }
        let chol = Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::InvalidInput("covariance is not positive definite".into()))?
            .l();
        let log_det_l: f64 = chol.diagonal().iter().map(|v| v.ln()).sum();
        Ok(Self {
            weight,
            mean,
            covariance,
            chol,
            log_norm: -0.5 * d as f64 * LN_2PI - log_det_l,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Squared Mahalanobis distance of `v` from the mean.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        forward_solve_norm_sq(&self.chol, v, &self.mean)
    }

    /// `ln N(v | mean, covariance)`.
    pub fn log_density(&self, v: &[f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(v)
    }
}

/// Result of assigning one vector to a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub component: usize,
    /// All weighted densities were zero or undefined, so the nearest mean
    /// by Mahalanobis distance was used instead.
    pub degenerate: bool,
}

/// A mixture of the active components left after fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    k_max: usize,
    components: Vec<GmmComponent>,
}

impl GmmModel {
    pub fn new(k_max: usize, components: Vec<GmmComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidInput("mixture has no components".into()));
        };
        if components.len() > k_max {
            return Err(Error::InvalidInput(format!(
                "{} components exceed K = {k_max}",
                components.len()
            )));
        }
        let d = first.mean.len();
        if components.iter().any(|c| c.mean.len() != d) {
            return Err(Error::InvalidInput("components differ in dimension".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mixing weights sum to {total}, not 1"
            )));
        }
        Ok(Self { k_max, components })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Number of active components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }

    /// `ln(pi_k) + ln N(v | mu_k, Sigma_k)` for every component.
    pub fn log_weighted_densities(&self, v: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(v))
            .collect()
    }

    /// Posterior component probabilities for `v`, computed in log space.
    pub fn responsibilities(&self, v: &[f64]) -> Vec<f64> {
        let logs = self.log_weighted_densities(v);
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            let mut one_hot = vec![0.0; self.len()];
            one_hot[self.nearest_mean(v)] = 1.0;
            return one_hot;
        }
        let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// The component with the largest responsibility for `v`.
    pub fn assign(&self, v: &[f64]) -> Assignment {
        let logs = self.log_weighted_densities(v);
        let (best, max) = argmax(&logs);
        if max.is_finite() {
            Assignment {
                component: best,
                degenerate: false,
            }
        } else {
            Assignment {
                component: self.nearest_mean(v),
                degenerate: true,
            }
        }
    }

    fn nearest_mean(&self, v: &[f64]) -> usize {
        let dists: Vec<f64> = self
            .components
            .iter()
            .map(|c| -c.mahalanobis_sq(v))
            .collect();
        argmax(&dists).0
    }
}

/// Settings for [`fit_vb_gmm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbGmmConfig {
    /// Upper bound on the number of components.
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop when the relative change of the lower bound drops below this.
    pub tolerance: f64,
    /// Components whose expected weight is below this are dropped.
    pub prune_weight: f64,
}

impl Default for VbGmmConfig {
    fn default() -> Self {
        Self {
            k: 10,
            max_iters: 100,
            seed: 0,
            tolerance: 1e-6,
            prune_weight: 1e-3,
        }
    }
}

/// A fitted mixture plus the optimization trace.
#[derive(Debug, Clone)]
pub struct VbFit {
    pub model: GmmModel,
    /// Evidence lower bound after each variational update.
    pub elbo: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits a mixture of at most `config.k` Gaussians by variational Bayes.
pub fn fit_vb_gmm(vectors: &LuminanceVectors, config: &VbGmmConfig) -> Result<VbFit> {
    if config.k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if config.max_iters == 0 {
        return Err(Error::param("max_iters", "must be at least 1"));
    }
    let n = vectors.len();
    if n < 2 {
        return Err(Error::Inference(format!(
            "need at least 2 vectors to fit a mixture, got {n}"
        )));
    }
    let d = vectors.dim();
    let k = config.k;
    let prior = Prior::from_data(vectors, k);
    let data = Data::new(vectors);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds = kmeans_plus_plus(vectors, k, &mut rng);
    let mut resp = vec![0.0; n * k];
    for (i, x) in vectors.rows().enumerate() {
        let nearest = seeds
            .iter()
            .enumerate()
            .map(|(j, s)| (j, sq_dist(x, vectors.row(*s))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .expect("k-means++ returns at least one seed");
        resp[nearest * n + i] = 1.0;
    }
    let post = Posterior::from_stats(Stats::from_resp(&data, &resp, &prior.m0), &prior)?;
    // hard responsibilities have zero entropy
    let mut state = State {
        resp,
        post,
        entropy: 0.0,
    };
    let mut elbo = vec![state.bound(&prior)];
    let (steps, converged) = ascend(&data, &prior, &mut state, &mut elbo, config.max_iters - 1, config.tolerance)?;
    merge_components(&data, &prior, &mut state, &mut elbo, config)?;
    if !elbo.iter().all(|v| v.is_finite()) {
        return Err(Error::Inference("lower bound became non-finite".into()));
    }

    let model = state.post.into_model(vectors, config, d)?;
    Ok(VbFit {
        model,
        elbo,
        iterations: steps + 1,
        converged,
    })
}

/// Training vectors in both layouts: row-major for the statistics and one
/// column per dimension for the vectorized E-step.
struct Data<'a> {
    rows: &'a LuminanceVectors,
    columns: Vec<Vec<f64>>,
}

impl<'a> Data<'a> {
    fn new(rows: &'a LuminanceVectors) -> Self {
        let columns = (0..rows.dim())
            .map(|a| rows.rows().map(|x| x[a]).collect())
            .collect();
        Self { rows, columns }
    }
}

/// Responsibilities (component-major, `resp[j * n + i]`), the posterior
/// computed from them, and `sum r ln r`.
struct State {
    resp: Vec<f64>,
    post: Posterior,
    entropy: f64,
}

impl State {
    fn bound(&self, prior: &Prior) -> f64 {
        self.post.elbo(prior, self.entropy)
    }
}

/// Alternating E and M steps. Appends the bound after every step to
/// `trace`; returns the step count and whether the relative change fell
/// below `tolerance`.
fn ascend(
    data: &Data,
    prior: &Prior,
    state: &mut State,
    trace: &mut Vec<f64>,
    max_steps: usize,
    tolerance: f64,
) -> Result<(usize, bool)> {
    let mut prev = *trace.last().expect("trace starts with the initial bound");
    for step in 1..=max_steps {
        state.entropy = state.post.expectation(data, &mut state.resp);
        state.post = Posterior::from_stats(Stats::from_resp(data, &state.resp, &prior.m0), prior)?;
        let bound = state.bound(prior);
        trace.push(bound);
        if ((bound - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < tolerance {
            return Ok((step, true));
        }
        prev = bound;
    }
    Ok((max_steps, false))
}

/// Coordinate ascent drains redundant components only very slowly, so a
/// cluster covered by several components can stay split for hundreds of
/// iterations. Greedy merge moves fix this. Every pair is scored by the
/// bound of the pooled statistics (cheap, no pass over the data); the best
/// few are refined with a handful of steps and the first one that beats
/// the current bound replaces the fit.
fn merge_components(
    data: &Data,
    prior: &Prior,
    state: &mut State,
    trace: &mut Vec<f64>,
    config: &VbGmmConfig,
) -> Result<()> {
    const TRIALS: usize = 3;
    const REFINE_STEPS: usize = 10;
    let k = state.post.nk.len();
    loop {
        let current = *trace.last().expect("non-empty trace");
        let stats = state.post.stats();
        let active: Vec<usize> = (0..k).filter(|&j| stats.nk[j] >= 1.0).collect();
        let mut scored = Vec::new();
        for (i, &a) in active.iter().enumerate() {
            for &b in &active[i + 1..] {
                // the heavier component keeps its slot
                let (keep, drop) = if stats.nk[a] >= stats.nk[b] { (a, b) } else { (b, a) };
                let post = Posterior::from_stats(stats.merged(keep, drop, &prior.m0), prior)?;
                scored.push((post.elbo(prior, state.entropy), keep, drop));
            }
        }
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));

        let mut accepted = false;
        for &(_, keep, drop) in scored.iter().take(TRIALS) {
            let mut resp = state.resp.clone();
            let n = data.rows.len();
            for i in 0..n {
                resp[keep * n + i] += resp[drop * n + i];
                resp[drop * n + i] = 0.0;
            }
            let post = Posterior::from_stats(Stats::from_resp(data, &resp, &prior.m0), prior)?;
            let entropy = resp_entropy(&resp);
            let mut trial = State { resp, post, entropy };
            let mut trial_trace = vec![trial.bound(prior)];
            ascend(data, prior, &mut trial, &mut trial_trace, REFINE_STEPS, config.tolerance)?;
            let bound = *trial_trace.last().expect("non-empty trace");
            if bound > current {
                log::debug!("merged component {drop} into {keep}: bound {current} -> {bound}");
                *state = trial;
                trace.push(bound);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Ok(());
        }
    }
}

fn resp_entropy(resp: &[f64]) -> f64 {
    resp.iter().filter(|r| **r > 0.0).map(|r| r * r.ln()).sum()
}

/// k-means++ seeding. Returns indices of up to `k` distinct seed vectors;
/// fewer when the data has fewer distinct points.
pub fn kmeans_plus_plus(vectors: &LuminanceVectors, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = vectors.len();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = vectors
        .rows()
        .map(|x| sq_dist(x, vectors.row(seeds[0])))
        .collect();
    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, w) in nearest.iter().enumerate() {
            if target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        // A zero-distance point can only be picked through rounding in the
        // scan above; walk back to the last positive one.
        while nearest[pick] <= 0.0 && pick > 0 {
            pick -= 1;
        }
        if nearest[pick] <= 0.0 {
            break;
        }
        seeds.push(pick);
        let s = vectors.row(pick).to_vec();
        for (x, best) in vectors.rows().zip(nearest.iter_mut()) {
            *best = best.min(sq_dist(x, &s));
        }
    }
    seeds
}

struct Prior {
    dim: usize,
    alpha0: f64,
    beta0: f64,
    nu0: f64,
    m0: DVector<f64>,
    w0_inv: DMatrix<f64>,
    ln_b0: f64,
}

impl Prior {
    fn from_data(vectors: &LuminanceVectors, k: usize) -> Self {
        let d = vectors.dim();
        let n = vectors.len() as f64;
        let mut mean = DVector::zeros(d);
        for x in vectors.rows() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean /= n;
        let mut var = vec![0.0; d];
        for x in vectors.rows() {
            for j in 0..d {
                var[j] += (x[j] - mean[j]).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let mean_var = var.iter().sum::<f64>() / d as f64;
        // Ridge keeps the Wishart scale positive definite even when some
        // exposure is constant (e.g. fully saturated).
        let ridge = (1e-6 * mean_var).max(1e-12);
        let w0_inv = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            var.iter().map(|v| v + ridge),
        ));
        let nu0 = d as f64 + 2.0;
        let ln_det_w0 = -w0_inv.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Self {
            dim: d,
            alpha0: 1.0 / k as f64,
            beta0: 1.0,
            nu0,
            m0: mean,
            w0_inv,
            ln_b0: ln_wishart_norm(ln_det_w0, nu0, d),
        }
    }
}

/// Variational posterior over all `K` components.
struct Posterior {
    nk: Vec<f64>,
    xbar: Vec<DVector<f64>>,
    scatter: Vec<DMatrix<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    nu: Vec<f64>,
    m: Vec<DVector<f64>>,
    w: Vec<DMatrix<f64>>,
    /// Lower Cholesky factor of `W_k^{-1}`.
    w_inv_chol: Vec<DMatrix<f64>>,
    ln_det_w: Vec<f64>,
    e_ln_pi: Vec<f64>,
    e_ln_lambda: Vec<f64>,
}

/// Responsibility-weighted count, mean and scatter of every component.
#[derive(Clone)]
struct Stats {
    nk: Vec<f64>,
    xbar: Vec<DVector<f64>>,
    scatter: Vec<DMatrix<f64>>,
}

impl Stats {
    fn from_resp(data: &Data, resp: &[f64], fallback: &DVector<f64>) -> Self {
        let d = data.columns.len();
        let n = data.rows.len();
        let k = resp.len() / n;
        let mut nk = vec![0.0; k];
        let mut xbar = Vec::with_capacity(k);
        let mut scatter = Vec::with_capacity(k);
        let mut lower = vec![0.0; d * d];
        for (j, r) in resp.chunks_exact(n).enumerate() {
            let (count, sums) = weighted_sums(&data.columns, r);
            nk[j] = count;
            let mean = if count > 0.0 {
                DVector::from_iterator(d, sums.iter().map(|s| s / count))
            } else {
                fallback.clone()
            };
            weighted_scatter(&data.columns, r, mean.as_slice(), &mut lower);
            let norm = if count > 0.0 { count } else { 1.0 };
            scatter.push(DMatrix::from_fn(d, d, |a, b| lower[a.max(b) * d + a.min(b)] / norm));
            xbar.push(mean);
        }
        Self { nk, xbar, scatter }
    }

    /// Statistics with component `drop` pooled into `keep`.
    fn merged(&self, keep: usize, drop: usize, fallback: &DVector<f64>) -> Self {
        let mut out = self.clone();
        let (na, nb) = (self.nk[keep], self.nk[drop]);
        let n = na + nb;
        let mean = (&self.xbar[keep] * na + &self.xbar[drop] * nb) / n;
        let da = &self.xbar[keep] - &mean;
        let db = &self.xbar[drop] - &mean;
        out.scatter[keep] = ((&self.scatter[keep] + &da * da.transpose()) * na
            + (&self.scatter[drop] + &db * db.transpose()) * nb)
            / n;
        out.xbar[keep] = mean;
        out.nk[keep] = n;
        out.nk[drop] = 0.0;
        out.xbar[drop] = fallback.clone();
        out.scatter[drop] = DMatrix::zeros(fallback.len(), fallback.len());
        out
    }
}

impl Posterior {
    fn from_stats(stats: Stats, prior: &Prior) -> Result<Self> {
        let d = prior.dim;
        let k = stats.nk.len();
        let Stats { nk, xbar, scatter } = stats;
        let alpha: Vec<f64> = nk.iter().map(|n| prior.alpha0 + n).collect();
        let beta: Vec<f64> = nk.iter().map(|n| prior.beta0 + n).collect();
        let nu: Vec<f64> = nk.iter().map(|n| prior.nu0 + n).collect();
        let alpha_sum: f64 = alpha.iter().sum();
        let psi_alpha_sum = digamma(alpha_sum);

        let mut m = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        let mut w_inv_chol = Vec::with_capacity(k);
        let mut ln_det_w = Vec::with_capacity(k);
        let mut e_ln_pi = Vec::with_capacity(k);
        let mut e_ln_lambda = Vec::with_capacity(k);
        for j in 0..k {
            m.push((&prior.m0 * prior.beta0 + &xbar[j] * nk[j]) / beta[j]);
            let dm = &xbar[j] - &prior.m0;
            let w_inv = &prior.w0_inv
                + &scatter[j] * nk[j]
                + (&dm * dm.transpose()) * (prior.beta0 * nk[j] / (prior.beta0 + nk[j]));
            let w_inv = (&w_inv + w_inv.transpose()) * 0.5;
            let chol = Cholesky::<f64, Dyn>::new(w_inv).ok_or_else(|| {
                Error::Inference(format!("Wishart scale of component {j} lost definiteness"))
            })?;
            let l = chol.l();
            let ln_det = -2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            w.push(chol.inverse());
            w_inv_chol.push(l);
            ln_det_w.push(ln_det);
            e_ln_pi.push(digamma(alpha[j]) - psi_alpha_sum);
            e_ln_lambda.push(
                (1..=d)
                    .map(|i| digamma((nu[j] + 1.0 - i as f64) / 2.0))
                    .sum::<f64>()
                    + d as f64 * std::f64::consts::LN_2
                    + ln_det,
            );
        }
        Ok(Self {
            nk,
            xbar,
            scatter,
            alpha,
            beta,
            nu,
            m,
            w,
            w_inv_chol,
            ln_det_w,
            e_ln_pi,
            e_ln_lambda,
        })
    }

    fn stats(&self) -> Stats {
        Stats {
            nk: self.nk.clone(),
            xbar: self.xbar.clone(),
            scatter: self.scatter.clone(),
        }
    }

    /// Recomputes responsibilities in place; returns `sum r ln r`.
    fn expectation(&self, data: &Data, resp: &mut [f64]) -> f64 {
        let terms = EStepTerms::new(self, data.rows.dim());
        #[cfg(target_arch = "x86_64")]
        {
            if terms.dim <= x86_estep::MAX_DIM && crate::math::x86::available() {
                // SAFETY: AVX2 and FMA support checked just above.
                return unsafe { x86_estep::expectation(&terms, &data.columns, resp) };
            }
        }
        (0..data.rows.len())
            .map(|i| terms.point_into(&data.columns, i, resp))
            .sum()
    }

    /// Evidence lower bound for the current posterior and the
    /// responsibilities it was computed from.
    fn elbo(&self, prior: &Prior, resp_entropy_term: f64) -> f64 {
        let k = self.nk.len();
        let d = prior.dim as f64;
        let dims = prior.dim;
        let mut bound = 0.0;

        // E[ln p(X | Z, mu, Lambda)] + E[ln p(Z | pi)]
        for j in 0..k {
            let nk = self.nk[j];
            if nk > 0.0 {
                let dm = &self.xbar[j] - &self.m[j];
                let trace_sw = (&self.scatter[j] * &self.w[j]).trace();
                let quad = (dm.transpose() * &self.w[j] * &dm)[(0, 0)];
                bound += 0.5
                    * nk
                    * (self.e_ln_lambda[j]
                        - d / self.beta[j]
                        - self.nu[j] * trace_sw
                        - self.nu[j] * quad
                        - d * LN_2PI);
                bound += nk * self.e_ln_pi[j];
            }
        }

        // E[ln p(pi)] - E[ln q(pi)]
        let sum_e_ln_pi: f64 = self.e_ln_pi.iter().sum();
        bound += ln_dirichlet_norm(&vec![prior.alpha0; k]) + (prior.alpha0 - 1.0) * sum_e_ln_pi;
        bound -= ln_dirichlet_norm(&self.alpha)
            + self
                .alpha
                .iter()
                .zip(&self.e_ln_pi)
                .map(|(a, e)| (a - 1.0) * e)
                .sum::<f64>();

        // E[ln p(mu, Lambda)] - E[ln q(mu, Lambda)]
        for j in 0..k {
            let dm = &self.m[j] - &prior.m0;
            let quad = (dm.transpose() * &self.w[j] * &dm)[(0, 0)];
            let trace = (&prior.w0_inv * &self.w[j]).trace();
            bound += 0.5
                * (d * (prior.beta0 / (2.0 * std::f64::consts::PI)).ln() + self.e_ln_lambda[j]
                    - d * prior.beta0 / self.beta[j]
                    - prior.beta0 * self.nu[j] * quad);
            bound += prior.ln_b0 + 0.5 * (prior.nu0 - d - 1.0) * self.e_ln_lambda[j]
                - 0.5 * self.nu[j] * trace;

            let ln_b = ln_wishart_norm(self.ln_det_w[j], self.nu[j], dims);
            let entropy_lambda =
                -ln_b - 0.5 * (self.nu[j] - d - 1.0) * self.e_ln_lambda[j] + 0.5 * self.nu[j] * d;
            bound -= 0.5 * self.e_ln_lambda[j]
                + 0.5 * d * (self.beta[j] / (2.0 * std::f64::consts::PI)).ln()
                - 0.5 * d
                - entropy_lambda;
        }

        // -E[ln q(Z)]
        bound - resp_entropy_term
    }

    /// Plugs posterior means into a mixture and prunes unused components.
    fn into_model(self, vectors: &LuminanceVectors, config: &VbGmmConfig, d: usize) -> Result<GmmModel> {
        let k = self.nk.len();
        let alpha_sum: f64 = self.alpha.iter().sum();
        let expected_weight: Vec<f64> = self.alpha.iter().map(|a| a / alpha_sum).collect();

        let build = |keep: &[usize]| -> Result<Vec<GmmComponent>> {
            let total: f64 = keep.iter().map(|&j| expected_weight[j]).sum();
            keep.iter()
                .map(|&j| {
                    let l = &self.w_inv_chol[j];
                    let cov = (l * l.transpose()) / (self.nu[j] - d as f64 - 1.0);
                    let cov = (&cov + cov.transpose()) * 0.5;
                    GmmComponent::new(
                        expected_weight[j] / total,
                        self.m[j].iter().copied().collect(),
                        cov,
                    )
                })
                .collect()
        };

        let mut candidates: Vec<usize> = (0..k)
            .filter(|&j| expected_weight[j] >= config.prune_weight)
            .collect();
        if candidates.is_empty() {
            candidates.push(argmax(&expected_weight).0);
        }
        let provisional = GmmModel {
            k_max: config.k,
            components: build(&candidates)?,
        };
        let mut hits = vec![0usize; candidates.len()];
        for x in vectors.rows() {
            hits[provisional.assign(x).component] += 1;
        }
        let keep: Vec<usize> = candidates
            .iter()
            .zip(&hits)
            .filter(|(_, h)| **h > 0)
            .map(|(j, _)| *j)
            .collect();
        GmmModel::new(config.k, build(&keep)?)
    }
}

/// `sum r` and `sum r x_a` over all points.
fn weighted_sums(columns: &[Vec<f64>], r: &[f64]) -> (f64, Vec<f64>) {
    #[cfg(target_arch = "x86_64")]
    {
        if columns.len() <= x86_estep::MAX_DIM && crate::math::x86::available() {
            // SAFETY: AVX2 and FMA support checked just above.
            return unsafe { x86_estep::weighted_sums(columns, r) };
        }
    }
    let count = r.iter().sum();
    let sums = columns.iter().map(|c| c.iter().zip(r).map(|(x, w)| w * x).sum()).collect();
    (count, sums)
}

/// Row-major lower triangle of `sum r (x - mean)(x - mean)^T` into `lower`.
fn weighted_scatter(columns: &[Vec<f64>], r: &[f64], mean: &[f64], lower: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if columns.len() <= x86_estep::MAX_DIM && crate::math::x86::available() {
            // SAFETY: AVX2 and FMA support checked just above.
            return unsafe { x86_estep::weighted_scatter(columns, r, mean, lower) };
        }
    }
    let d = columns.len();
    lower.fill(0.0);
    for a in 0..d {
        for b in 0..=a {
            lower[a * d + b] = (0..r.len())
                .map(|i| r[i] * (columns[a][i] - mean[a]) * (columns[b][i] - mean[b]))
                .sum();
        }
    }
}

/// Responsibilities below this are stored as exact zeros. Their effect on
/// any statistic is far below rounding, and keeping them would fill the
/// M-step with subnormal arithmetic.
const RESP_FLOOR: f64 = 1e-200;

/// Per-component constants of the E-step: `ln rho_k(x) = offset_k -
/// |A_k (x - m_k)|^2` with `A_k = sqrt(nu_k / 2) L_k^{-1}` and `L_k` the
/// Cholesky factor of `W_k^{-1}`.
struct EStepTerms {
    k: usize,
    dim: usize,
    offsets: Vec<f64>,
    means: Vec<f64>,
    /// Row-major `d x d` lower triangles.
    factors: Vec<f64>,
}

impl EStepTerms {
    fn new(post: &Posterior, dim: usize) -> Self {
        let k = post.nk.len();
        let df = dim as f64;
        let mut offsets = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k * dim);
        let mut factors = vec![0.0; k * dim * dim];
        for j in 0..k {
            offsets.push(post.e_ln_pi[j] + 0.5 * post.e_ln_lambda[j] - 0.5 * df * LN_2PI - 0.5 * df / post.beta[j]);
            means.extend(post.m[j].iter());
            let inv = post.w_inv_chol[j]
                .clone()
                .solve_lower_triangular(&DMatrix::identity(dim, dim))
                .expect("Cholesky factor has a positive diagonal");
            let scale = (0.5 * post.nu[j]).sqrt();
            for a in 0..dim {
                for b in 0..=a {
                    factors[j * dim * dim + a * dim + b] = scale * inv[(a, b)];
                }
            }
        }
        Self {
            k,
            dim,
            offsets,
            means,
            factors,
        }
    }

    /// Writes the responsibilities of point `i` into the component-major
    /// `resp`; returns its `sum r ln r`.
    fn point_into(&self, columns: &[Vec<f64>], i: usize, resp: &mut [f64]) -> f64 {
        let n = columns.first().map_or(0, Vec::len);
        let x: Vec<f64> = columns.iter().map(|c| c[i]).collect();
        let mut log_rho = vec![0.0; self.k];
        let mut r = vec![0.0; self.k];
        let entropy = self.point(&x, &mut log_rho, &mut r);
        for (j, v) in r.into_iter().enumerate() {
            resp[j * n + i] = v;
        }
        entropy
    }

    /// Fills `r` with the responsibilities of `x`; returns `sum r ln r`.
    fn point(&self, x: &[f64], log_rho: &mut [f64], r: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut max = f64::NEG_INFINITY;
        for j in 0..self.k {
            let m = &self.means[j * d..(j + 1) * d];
            let f = &self.factors[j * d * d..(j + 1) * d * d];
            let mut q = 0.0;
            for a in 0..d {
                let mut y = 0.0;
                for b in 0..=a {
                    y += f[a * d + b] * (x[b] - m[b]);
                }
                q += y * y;
            }
            log_rho[j] = self.offsets[j] - q;
            max = max.max(log_rho[j]);
        }
        let mut total = 0.0;
        for j in 0..self.k {
            r[j] = exp_nonpositive(log_rho[j] - max);
            total += r[j];
        }
        let ln_total = total.ln();
        let mut entropy = 0.0;
        for j in 0..self.k {
            r[j] /= total;
            if r[j] < RESP_FLOOR {
                r[j] = 0.0;
            }
            entropy += r[j] * (log_rho[j] - max - ln_total);
        }
        entropy
    }
}

/// E-step and M-step sums over four points at a time.
#[cfg(target_arch = "x86_64")]
mod x86_estep {
    use std::arch::x86_64::*;

    use super::{EStepTerms, RESP_FLOOR};
    use crate::math::x86::{exp_nonpositive, to_array};

    pub(super) const MAX_DIM: usize = 8;

    #[target_feature(enable = "avx2,fma")]
    pub(super) fn expectation(terms: &EStepTerms, columns: &[Vec<f64>], resp: &mut [f64]) -> f64 {
        let (k, d) = (terms.k, terms.dim);
        let n = columns.first().map_or(0, Vec::len);
        let mut log_rho = vec![_mm256_setzero_pd(); k];
        let mut acc = _mm256_setzero_pd();
        let floor = _mm256_set1_pd(RESP_FLOOR);
        let mut i = 0;
        while i + 4 <= n {
            let mut x = [_mm256_setzero_pd(); MAX_DIM];
            for a in 0..d {
                // SAFETY: i + 4 <= n, the column length.
                x[a] = unsafe { _mm256_loadu_pd(columns[a].as_ptr().add(i)) };
            }
            let mut max = _mm256_set1_pd(f64::NEG_INFINITY);
            for j in 0..k {
                let m = &terms.means[j * d..(j + 1) * d];
                let f = &terms.factors[j * d * d..(j + 1) * d * d];
                let mut diff = [_mm256_setzero_pd(); MAX_DIM];
                for a in 0..d {
                    diff[a] = _mm256_sub_pd(x[a], _mm256_set1_pd(m[a]));
                }
                let mut q = _mm256_setzero_pd();
                for a in 0..d {
                    let mut y = _mm256_setzero_pd();
                    for b in 0..=a {
                        y = _mm256_fmadd_pd(_mm256_set1_pd(f[a * d + b]), diff[b], y);
                    }
                    q = _mm256_fmadd_pd(y, y, q);
                }
                log_rho[j] = _mm256_sub_pd(_mm256_set1_pd(terms.offsets[j]), q);
                max = _mm256_max_pd(max, log_rho[j]);
            }
            let mut total = _mm256_setzero_pd();
            for lr in log_rho.iter_mut() {
                *lr = _mm256_sub_pd(*lr, max);
                total = _mm256_add_pd(total, exp_nonpositive(*lr));
            }
            let ln_total = _mm256_loadu_pd_array(to_array(total).map(f64::ln));
            let inv_total = _mm256_div_pd(_mm256_set1_pd(1.0), total);
            for (j, lr) in log_rho.iter().enumerate() {
                let r = _mm256_mul_pd(exp_nonpositive(*lr), inv_total);
                let r = _mm256_and_pd(r, _mm256_cmp_pd::<_CMP_GE_OQ>(r, floor));
                acc = _mm256_fmadd_pd(r, _mm256_sub_pd(*lr, ln_total), acc);
                // SAFETY: i + 4 <= n and resp holds k columns of n.
                unsafe { _mm256_storeu_pd(resp.as_mut_ptr().add(j * n + i), r) };
            }
            i += 4;
        }
        let mut entropy = hsum(acc);
        for p in i..n {
            entropy += terms.point_into(columns, p, resp);
        }
        entropy
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) fn weighted_sums(columns: &[Vec<f64>], r: &[f64]) -> (f64, Vec<f64>) {
        let d = columns.len();
        let n = r.len();
        let mut count = _mm256_setzero_pd();
        let mut sums = [_mm256_setzero_pd(); MAX_DIM];
        let mut i = 0;
        while i + 4 <= n {
            // SAFETY: i + 4 <= n, the length of r and of every column.
            let w = unsafe { _mm256_loadu_pd(r.as_ptr().add(i)) };
            count = _mm256_add_pd(count, w);
            for a in 0..d {
                let x = unsafe { _mm256_loadu_pd(columns[a].as_ptr().add(i)) };
                sums[a] = _mm256_fmadd_pd(w, x, sums[a]);
            }
            i += 4;
        }
        let mut total = hsum(count);
        let mut out: Vec<f64> = sums[..d].iter().map(|s| hsum(*s)).collect();
        for p in i..n {
            total += r[p];
            for a in 0..d {
                out[a] += r[p] * columns[a][p];
            }
        }
        (total, out)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) fn weighted_scatter(columns: &[Vec<f64>], r: &[f64], mean: &[f64], lower: &mut [f64]) {
        let d = columns.len();
        let n = r.len();
        let mut acc = [_mm256_setzero_pd(); MAX_DIM * MAX_DIM];
        let mut m = [_mm256_setzero_pd(); MAX_DIM];
        for a in 0..d {
            m[a] = _mm256_set1_pd(mean[a]);
        }
        let mut i = 0;
        while i + 4 <= n {
            // SAFETY: i + 4 <= n, the length of r and of every column.
            let w = unsafe { _mm256_loadu_pd(r.as_ptr().add(i)) };
            let mut diff = [_mm256_setzero_pd(); MAX_DIM];
            for a in 0..d {
                diff[a] = _mm256_sub_pd(unsafe { _mm256_loadu_pd(columns[a].as_ptr().add(i)) }, m[a]);
            }
            for a in 0..d {
                let wa = _mm256_mul_pd(w, diff[a]);
                for b in 0..=a {
                    acc[a * d + b] = _mm256_fmadd_pd(wa, diff[b], acc[a * d + b]);
                }
            }
            i += 4;
        }
        for a in 0..d {
            for b in 0..=a {
                lower[a * d + b] = hsum(acc[a * d + b]);
            }
        }
        for p in i..n {
            for a in 0..d {
                let wa = r[p] * (columns[a][p] - mean[a]);
                for b in 0..=a {
                    lower[a * d + b] += wa * (columns[b][p] - mean[b]);
                }
            }
        }
    }

    #[inline]
    #[target_feature(enable = "avx2,fma")]
    fn hsum(v: __m256d) -> f64 {
        let l = to_array(v);
        (l[0] + l[1]) + (l[2] + l[3])
    }

    #[inline]
    #[target_feature(enable = "avx2,fma")]
    fn _mm256_loadu_pd_array(v: [f64; 4]) -> __m256d {
        _mm256_setr_pd(v[0], v[1], v[2], v[3])
    }
}

/// `ln B(W, nu)` for the Wishart normalizer, given `ln|W|`.
fn ln_wishart_norm(ln_det_w: f64, nu: f64, d: usize) -> f64 {
    let df = d as f64;
    -0.5 * nu * ln_det_w
        - (0.5 * nu * df * std::f64::consts::LN_2
            + 0.25 * df * (df - 1.0) * std::f64::consts::PI.ln()
            + (1..=d)
                .map(|i| ln_gamma((nu + 1.0 - i as f64) / 2.0))
                .sum::<f64>())
}

fn ln_dirichlet_norm(alpha: &[f64]) -> f64 {
    ln_gamma(alpha.iter().sum()) - alpha.iter().map(|a| ln_gamma(*a)).sum::<f64>()
}

/// `|L^{-1} (x - mean)|^2` for lower-triangular `L`.
fn forward_solve_norm_sq(l: &DMatrix<f64>, x: &[f64], mean: &[f64]) -> f64 {
    let d = x.len();
    let mut y = [0.0f64; 16];
    let mut heap;
    let y: &mut [f64] = if d <= 16 {
        &mut y[..d]
    } else {
        heap = vec![0.0; d];
        &mut heap
    };
    let mut norm = 0.0;
    for i in 0..d {
        let mut acc = x[i] - mean[i];
        for j in 0..i {
            acc -= l[(i, j)] * y[j];
        }
        y[i] = acc / l[(i, i)];
        norm += y[i] * y[i];
    }
    norm
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and value of the first maximum; NaN entries are never picked.
fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr_free::gaussian;

    /// Box-Muller normals so the tests need no extra distribution crate.
    mod rand_distr_free {
        use rand::Rng;
        pub fn gaussian(rng: &mut impl Rng) -> f64 {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    fn one_d(weight: f64, mean: f64, var: f64) -> GmmComponent {
        GmmComponent::new(weight, vec![mean], DMatrix::from_element(1, 1, var)).unwrap()
    }

    #[test]
    fn vector_estep_matches_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat: Vec<f64> = (0..203)
            .flat_map(|i| [(i % 3) as f64 + 0.3 * gaussian(&mut rng).abs(), 0.5 * gaussian(&mut rng).abs(), gaussian(&mut rng).abs()])
            .collect();
        let vectors = LuminanceVectors::new(3, flat).unwrap();
        let data = Data::new(&vectors);
        let prior = Prior::from_data(&vectors, 4);
        let k = 4;
        let n = vectors.len();
        let resp: Vec<f64> = (0..n * k).map(|i| if i / n == (i % n) % 3 { 1.0 } else { 0.0 }).collect();
        let post = Posterior::from_stats(Stats::from_resp(&data, &resp, &prior.m0), &prior).unwrap();
        let mut fast = vec![0.0; resp.len()];
        let fast_entropy = post.expectation(&data, &mut fast);
        let terms = EStepTerms::new(&post, 3);
        let mut slow = vec![0.0; resp.len()];
        let slow_entropy: f64 = (0..n).map(|i| terms.point_into(&data.columns, i, &mut slow)).sum();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((fast_entropy - slow_entropy).abs() < 1e-9 * slow_entropy.abs().max(1.0));
    }

    #[test]
    fn single_component_has_unit_responsibility() {
        let m = GmmModel::new(10, vec![one_d(1.0, 0.3, 0.1)]).unwrap();
        assert_eq!(m.responsibilities(&[5.0]), vec![1.0]);
    }

    #[test]
    fn identical_components_split_evenly() {
        let m = GmmModel::new(2, vec![one_d(0.5, 1.0, 2.0), one_d(0.5, 1.0, 2.0)]).unwrap();
        for v in [-3.0, 0.0, 1.0, 17.0] {
            assert_eq!(m.responsibilities(&[v]), vec![0.5, 0.5]);
        }
    }

    #[test]
    fn responsibilities_match_pdf_reference() {
        let m = GmmModel::new(2, vec![one_d(0.5, 0.0, 1.0), one_d(0.5, 4.0, 1.0)]).unwrap();
        let mid = m.responsibilities(&[2.0]);
        assert!((mid[0] - 0.5).abs() < 1e-15);
        let at0 = m.responsibilities(&[0.0]);
        // 1 / (1 + e^-8), from a scripted Gaussian-pdf evaluation
        assert!((at0[0] - 0.999_664_649_869_533_5).abs() < 1e-12);
        assert!((at0[1] - 0.000_335_350_130_466_478).abs() < 1e-12);
        assert_eq!(m.assign(&[0.0]).component, 0);
        assert_eq!(m.assign(&[3.9]).component, 1);
    }

    #[test]
    fn far_outliers_stay_normalized() {
        let m = GmmModel::new(2, vec![one_d(0.5, 0.0, 1e-6), one_d(0.5, 1.0, 1e-6)]).unwrap();
        let r = m.responsibilities(&[1e6]);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(m.assign(&[1e6]).component, 1);
        assert!(!m.assign(&[1e6]).degenerate);
    }

    #[test]
    fn model_validation() {
        assert!(GmmModel::new(2, vec![]).is_err());
        assert!(GmmModel::new(1, vec![one_d(0.5, 0.0, 1.0)]).is_err());
        assert!(GmmModel::new(1, vec![one_d(1.0, 0.0, 1.0), one_d(0.0, 0.0, 1.0)]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]);
        assert!(GmmComponent::new(1.0, vec![0.0, 0.0], asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GmmComponent::new(1.0, vec![0.0, 0.0], indefinite).is_err());
    }

    #[test]
    fn identical_vectors_give_one_component() {
        let v = LuminanceVectors::new(3, [0.1, 0.4, 0.9].repeat(500)).unwrap();
        let fit = fit_vb_gmm(&v, &VbGmmConfig::default()).unwrap();
        assert_eq!(fit.model.len(), 1);
        let mean = fit.model.components()[0].mean();
        for (a, b) in mean.iter().zip([0.1, 0.4, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((fit.model.components()[0].weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_an_inference_error() {
        let v = LuminanceVectors::new(2, vec![0.1, 0.2]).unwrap();
        let err = fit_vb_gmm(&v, &VbGmmConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(LuminanceVectors::new(1, vec![f64::NAN]).is_err());
        let ok = LuminanceVectors::new(1, vec![0.1, 0.2]).unwrap();
        let zero_k = VbGmmConfig {
            k: 0,
            ..Default::default()
        };
        assert!(fit_vb_gmm(&ok, &zero_k).is_err());
    }

    /// 1000 points around each of two centers 10 sigma apart; also returns
    /// the per-cluster sample means, which is where converged EM lands for
    /// clusters this well separated.
    fn two_clusters(seed: u64, sigma: f64) -> (LuminanceVectors, Vec<[f64; 2]>) {
        let centers = [[1.0, 1.0], [1.0 + 10.0 * sigma, 1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut sample_means = Vec::new();
        for c in centers {
            let mut sum = [0.0; 2];
            for _ in 0..1000 {
                let p = [c[0] + sigma * gaussian(&mut rng), c[1] + sigma * gaussian(&mut rng)];
                sum[0] += p[0];
                sum[1] += p[1];
                data.extend(p);
            }
            sample_means.push([sum[0] / 1000.0, sum[1] / 1000.0]);
        }
        (LuminanceVectors::new(2, data).unwrap(), sample_means)
    }

    #[test]
    fn recovers_two_separated_clusters() {
        let sigma = 0.02;
        let (v, means) = two_clusters(7, sigma);
        let fit = fit_vb_gmm(&v, &VbGmmConfig::default()).unwrap();
        assert_eq!(fit.model.len(), 2);
        for c in means {
            let best = fit
                .model
                .components()
                .iter()
                .map(|comp| sq_dist(comp.mean(), &c).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.05 * sigma, "mean off by {} sigma", best / sigma);
        }
    }

    #[test]
    fn elbo_never_decreases() {
        for seed in 0..5 {
            let (v, _) = two_clusters(seed, 0.05);
            let fit = fit_vb_gmm(&v, &VbGmmConfig { seed, ..Default::default() }).unwrap();
            for pair in fit.elbo.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-8 * pair[0].abs(),
                    "ELBO dropped {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn fitting_is_deterministic_per_seed() {
        let (v, _) = two_clusters(3, 0.05);
        let cfg = VbGmmConfig {
            seed: 11,
            ..Default::default()
        };
        let a = fit_vb_gmm(&v, &cfg).unwrap();
        let b = fit_vb_gmm(&v, &cfg).unwrap();
        assert_eq!(a.elbo, b.elbo);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn kmeans_pp_stops_at_distinct_points() {
        let v = LuminanceVectors::new(1, vec![0.1, 0.1, 0.5, 0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seeds = kmeans_plus_plus(&v, 10, &mut rng);
        assert_eq!(seeds.len(), 2);
        assert_ne!(v.row(seeds[0]), v.row(seeds[1]));
    }
}
