//! Shared statistics and sampler oracles for the integration tests.
#![allow(dead_code)]

use bcor_core::model::{
    build_design, gibbs_sweep, posterior_sample, prior_draw, Chain, DesignData, HyperParams, McmcConfig, PosteriorDraw,
    PAIRS,
};
use bcor_core::normal;
use bcor_core::harness::initial_state;
use bcor_core::learners::random_act;
use bcor_core::rmab::{step, History, RmabInstance, TransitionRecord};
use bcor_core::rng::{substream, ENVIRONMENT};
use bcor_core::rng::Stream;
use rand::{Rng, SeedableRng};

/// Mean and its i.i.d. standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Mean and batch-means standard error for an autocorrelated series.
pub fn batch_mean_se(xs: &[f64], n_batches: usize) -> (f64, f64) {
    let size = xs.len() / n_batches;
    let batches: Vec<f64> = (0..n_batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let (m, se) = mean_se(&batches);
    (m, se)
}

pub fn two_sample_z(a: (f64, f64), b: (f64, f64)) -> f64 {
    let den = (a.1 * a.1 + b.1 * b.1).sqrt();
    if den == 0.0 {
        if a.0 == b.0 { 0.0 } else { f64::INFINITY }
    } else {
        (a.0 - b.0) / den
    }
}

/// Every scalar parameter of a draw, labeled.
pub fn flatten(d: &PosteriorDraw) -> Vec<(String, f64)> {
    let mut out = vec![("b0".to_string(), d.b0), ("b1".to_string(), d.b1)];
    for (j, v) in d.mu_beta.iter().enumerate() {
        out.push((format!("mu_beta[{j}]"), *v));
    }
    for (s, a) in PAIRS {
        out.push((format!("var_alpha[{s}{a}]"), d.var_alpha[s][a]));
        for (i, al) in d.alpha.iter().enumerate() {
            out.push((format!("alpha[{i}][{s}{a}]"), al[s][a]));
        }
        for (j, v) in d.beta[s][a].iter().enumerate() {
            out.push((format!("beta[{s}{a}][{j}]"), *v));
        }
        for (j, v) in d.eta[s][a].iter().enumerate() {
            out.push((format!("eta[{s}{a}][{j}]"), *v));
        }
    }
    out
}

/// Fixed design for the joint-distribution test: every arm at every
/// time up to `horizon`, with states and actions drawn once.
pub struct GewekeDesign {
    pub x: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub records: Vec<TransitionRecord>,
}

impl GewekeDesign {
    pub fn new(n: usize, horizon: usize, k: usize, d: usize, rng: &mut Stream) -> Self {
        let x = (0..n).map(|_| (0..k).map(|_| rng.sample(rand_distr::StandardNormal)).collect()).collect();
        let m = (0..horizon).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let mut records = Vec::new();
        for t in 1..=horizon {
            for i in 0..n {
                records.push(TransitionRecord {
                    arm: i,
                    time: t,
                    state: u8::from(rng.random_bool(0.5)),
                    action: u8::from(rng.random_bool(0.5)),
                    next_state: 0,
                });
            }
        }
        Self { x, m, records }
    }

    /// Outcomes drawn from the model given `draw`.
    pub fn simulate(&self, draw: &PosteriorDraw, rng: &mut Stream) -> DesignData {
        let mut h = History::new();
        for r in &self.records {
            let (s, a) = (r.state as usize, r.action as usize);
            let eta = bcor_core::model::linear_predictor(draw, r.arm, &self.x[r.arm], &self.m[r.time - 1], s, a).unwrap();
            let y = rng.random::<f64>() < normal::cdf(eta);
            h.push_record(TransitionRecord { next_state: u8::from(y), ..*r });
        }
        build_design(&h, &self.x, &self.m).unwrap()
    }
}

/// Geweke joint-distribution test. Returns (label, z) for the first and
/// second moments of `labels` (indices into [`flatten`]).
pub fn geweke(
    hyper: &HyperParams,
    design: &GewekeDesign,
    labels: &[usize],
    n_marginal: usize,
    n_successive: usize,
    seed: u64,
) -> Vec<(String, f64)> {
    let mut rng = Stream::seed_from_u64(seed);
    let (n, k, d) = (design.x.len(), design.x[0].len(), design.m[0].len());

    let mut marginal: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for _ in 0..n_marginal {
        let draw = prior_draw(hyper, n, k, d, &mut rng);
        let flat = flatten(&draw);
        for (j, &l) in labels.iter().enumerate() {
            marginal[j].push(flat[l].1);
        }
    }

    let mut chain = Chain::new(prior_draw(hyper, n, k, d, &mut rng));
    let mut successive: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    let names: Vec<String> = flatten(&chain.draw).into_iter().map(|(s, _)| s).collect();
    for _ in 0..n_successive {
        let data = design.simulate(&chain.draw, &mut rng);
        gibbs_sweep(&mut chain, &data, hyper, &mut rng).unwrap();
        let flat = flatten(&chain.draw);
        for (j, &l) in labels.iter().enumerate() {
            successive[j].push(flat[l].1);
        }
    }

    let mut out = Vec::new();
    for (j, &l) in labels.iter().enumerate() {
        for power in [1, 2] {
            let f = |xs: &[f64]| xs.iter().map(|x| x.powi(power)).collect::<Vec<f64>>();
            let a = mean_se(&f(&marginal[j]));
            let b = batch_mean_se(&f(&successive[j]), 50);
            out.push((format!("E[{}^{power}]", names[l]), two_sample_z(a, b)));
        }
    }
    out
}

/// Reduced model: one arm, 20 observations in the passive state-0 bucket,
/// no covariate or time effects.
pub struct ReducedModel {
    pub hyper: HyperParams,
    pub x: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub history: History,
    pub ones: usize,
    pub n_obs: usize,
}

impl ReducedModel {
    pub fn new(n_obs: usize, ones: usize, tau0: f64, sigma0: f64) -> Self {
        let mut history = History::new();
        for t in 1..=n_obs {
            history.push_record(TransitionRecord { arm: 0, time: t, state: 0, action: 0, next_state: u8::from(t <= ones) });
        }
        let hyper = HyperParams { tau0, sigma0, ..HyperParams::default() };
        Self { hyper, x: vec![vec![]], m: vec![vec![]; n_obs], history, ones, n_obs }
    }

    /// Log density of (α, τ²) up to a constant.
    pub fn log_density(&self, alpha: f64, var: f64) -> f64 {
        let (a, b) = (self.hyper.tau0, self.hyper.sigma0);
        let prior = -(a + 1.0) * var.ln() - b / var - 0.5 * var.ln() - 0.5 * alpha * alpha / var;
        let lik = self.ones as f64 * normal::log_cdf(alpha) + (self.n_obs - self.ones) as f64 * normal::log_cdf(-alpha);
        prior + lik
    }

    /// Posterior means and variances of α and τ² by midpoint integration
    /// on a `grid × grid` mesh over α and log τ².
    pub fn grid_moments(&self, grid: usize) -> [(f64, f64); 2] {
        let (alo, ahi) = (-4.0, 4.0);
        let (ulo, uhi) = ((1e-3f64).ln(), 40f64.ln());
        let (da, du) = ((ahi - alo) / grid as f64, (uhi - ulo) / grid as f64);
        let mut logw = Vec::with_capacity(grid * grid);
        for i in 0..grid {
            let alpha = alo + (i as f64 + 0.5) * da;
            for j in 0..grid {
                let u = ulo + (j as f64 + 0.5) * du;
                // Jacobian of τ² = e^u.
                logw.push((alpha, u.exp(), self.log_density(alpha, u.exp()) + u));
            }
        }
        let mx = logw.iter().map(|w| w.2).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut s) = (0.0, [0.0; 4]);
        for &(alpha, var, lw) in &logw {
            let w = (lw - mx).exp();
            z += w;
            s[0] += w * alpha;
            s[1] += w * alpha * alpha;
            s[2] += w * var;
            s[3] += w * var * var;
        }
        let ma = s[0] / z;
        let mv = s[2] / z;
        [(ma, s[1] / z - ma * ma), (mv, s[3] / z - mv * mv)]
    }

    /// Retained (α, τ²) draws of one Gibbs chain.
    pub fn gibbs_draws(&self, n_keep: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = Stream::seed_from_u64(seed);
        let mcmc = McmcConfig { n_warmup: 1000, n_keep: 1, thin: 1, warm_start: true, n_rewarmup: 0 };
        let mut chain = posterior_sample(&self.history, &self.x, &self.m, &self.hyper, &mcmc, &mut rng, None).unwrap();
        let data = build_design(&self.history, &self.x, &self.m).unwrap();
        let (mut alpha, mut var) = (Vec::with_capacity(n_keep), Vec::with_capacity(n_keep));
        for _ in 0..n_keep {
            gibbs_sweep(&mut chain, &data, &self.hyper, &mut rng).unwrap();
            alpha.push(chain.draw.alpha[0][0][0]);
            var.push(chain.draw.var_alpha[0][0]);
        }
        (alpha, var)
    }
}

/// Compare (mean, variance) of a chain against exact values; returns the
/// z-scores of the mean and of the variance under batch-means errors.
pub fn moment_z(xs: &[f64], exact: (f64, f64)) -> (f64, f64) {
    let (m, se_m) = batch_mean_se(xs, 50);
    let sq: Vec<f64> = xs.iter().map(|x| (x - exact.0).powi(2)).collect();
    let (v, se_v) = batch_mean_se(&sq, 50);
    // Variance about the exact mean, corrected for the sample-mean offset.
    let v_hat = v - (m - exact.0).powi(2);
    ((m - exact.0) / se_m, (v_hat - exact.1) / se_v)
}

/// First and second moments of every parameter: `posterior_sample` on an
/// empty history against `prior_draw`. Returns (label, z) pairs.
pub fn prior_at_zero_data(n_draws: usize, n: usize, k: usize, d: usize, seed: u64) -> Vec<(String, f64)> {
    let hyper = HyperParams::default();
    let mcmc = McmcConfig::default();
    let x = vec![vec![0.5; k]; n];
    let m = vec![vec![0.25; d]; 2];
    let mut rng = Stream::seed_from_u64(seed);
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for r in 0..n_draws {
        let p = flatten(&prior_draw(&hyper, n, k, d, &mut rng));
        let q = flatten(&posterior_sample(&History::new(), &x, &m, &hyper, &mcmc, &mut rng, None).unwrap().draw);
        if r == 0 {
            names = p.iter().map(|(s, _)| s.clone()).collect();
            a = vec![Vec::with_capacity(n_draws); p.len()];
            b = vec![Vec::with_capacity(n_draws); p.len()];
        }
        for j in 0..p.len() {
            a[j].push(p[j].1);
            b[j].push(q[j].1);
        }
    }
    let mut out = Vec::new();
    for j in 0..names.len() {
        for power in [1, 2] {
            let f = |xs: &[f64]| xs.iter().map(|x| x.powi(power)).collect::<Vec<f64>>();
            out.push((format!("E[{}^{power}]", names[j]), two_sample_z(mean_se(&f(&a[j])), mean_se(&f(&b[j])))));
        }
    }
    out
}

/// History of a uniformly random policy on `inst` for times `1..upto`.
pub fn random_policy_history(inst: &RmabInstance, seed: u64, upto: usize) -> History {
    let mut env = substream(seed, ENVIRONMENT);
    let mut pick = substream(seed, "test/actions");
    let mut state = initial_state(inst.n_arms, seed);
    let mut h = History::new();
    for t in 1..upto {
        let a = random_act(inst.budget, inst.n_arms, &mut pick).unwrap();
        let next = step(inst, t, &state, &a, &mut env).unwrap();
        h.push_step(t, &state, &a, &next).unwrap();
        state = next;
    }
    h
}
