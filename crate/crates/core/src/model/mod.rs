//! Hierarchical Bayesian probit model of arm transitions.
//!
//! For arm `i` at time `t`,
//!
//! ```text
//! P(1 | s, 0) = Φ(X_i·β⁽ˢ⁰⁾ + M_t·η⁽ˢ⁰⁾ + α_i⁽ˢ⁰⁾)
//! P(1 | s, 1) = Φ(X_i·β⁽ˢ¹⁾ + M_t·η⁽ˢ¹⁾ + α_i⁽ˢ¹⁾ + b₀·α_i⁽⁰⁰⁾ + b₁·α_i⁽¹⁰⁾)
//! ```
//!
//! with priors
//!
//! ```text
//! b₀ ~ N(0, τ²_b0)    b₁ ~ N(0, τ²_b1)    μ_β ~ N(0, τ²_μ I)
//! τ²_α⁽ˢᵃ⁾ ~ Inv-Gamma(τ₀, σ₀)          α_i⁽ˢᵃ⁾ ~ N(0, τ²_α⁽ˢᵃ⁾)
//! β⁽ˢᵃ⁾ ~ N(μ_β, τ²_β⁽ˢᵃ⁾ I)            η⁽ˢᵃ⁾ ~ N(0, τ²_η⁽ˢᵃ⁾ I)
//! ```

mod design;
mod gibbs;

pub use design::{build_design, Bucket, DesignData, Observation};
pub use gibbs::{gibbs_sweep, posterior_sample, sample_chain, Chain, McmcConfig};

use crate::error::{Error, Result};
use crate::normal;
use crate::rmab::StateActionTable;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Per state-action array, indexed `[s][a]`.
pub type PerPair<T> = [[T; 2]; 2];

pub const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// User-specified prior scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Inverse-Gamma shape of the random-effect variances.
    pub tau0: f64,
    /// Inverse-Gamma scale of the random-effect variances.
    pub sigma0: f64,
    pub var_mu: f64,
    pub var_b0: f64,
    pub var_b1: f64,
    pub var_beta: PerPair<f64>,
    pub var_eta: PerPair<f64>,
}

impl Default for HyperParams {
    /// Variances 0.1² for b₀, b₁ and β; 0.3² for μ_β and η;
    /// Inv-Gamma(100, 1) on every random-effect variance.
    fn default() -> Self {
        Self {
            tau0: 100.0,
            sigma0: 1.0,
            var_mu: 0.09,
            var_b0: 0.01,
            var_b1: 0.01,
            var_beta: [[0.01; 2]; 2],
            var_eta: [[0.09; 2]; 2],
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let mut all = vec![self.tau0, self.sigma0, self.var_mu, self.var_b0, self.var_b1];
        for (s, a) in PAIRS {
            all.push(self.var_beta[s][a]);
            all.push(self.var_eta[s][a]);
        }
        if all.iter().all(|&v| v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("hyperparameters must be positive and finite".into()))
        }
    }

    /// Every variance replaced by `v` (the Inverse-Gamma left untouched).
    pub fn with_all_variances(mut self, v: f64) -> Self {
        self.var_mu = v;
        self.var_b0 = v;
        self.var_b1 = v;
        self.var_beta = [[v; 2]; 2];
        self.var_eta = [[v; 2]; 2];
        self
    }
}

/// One joint value of every model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub b0: f64,
    pub b1: f64,
    pub mu_beta: Vec<f64>,
    pub var_alpha: PerPair<f64>,
    /// `alpha[i][s][a]`.
    pub alpha: Vec<PerPair<f64>>,
    pub beta: PerPair<Vec<f64>>,
    pub eta: PerPair<Vec<f64>>,
}

impl PosteriorDraw {
    /// All location parameters zero, random-effect variances `var_alpha`.
    pub fn zeros(n_arms: usize, k: usize, d: usize, var_alpha: f64) -> Self {
        Self {
            b0: 0.0,
            b1: 0.0,
            mu_beta: vec![0.0; k],
            var_alpha: [[var_alpha; 2]; 2],
            alpha: vec![[[0.0; 2]; 2]; n_arms],
            beta: std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; k])),
            eta: std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; d])),
        }
    }

    pub fn n_arms(&self) -> usize {
        self.alpha.len()
    }

    pub fn k(&self) -> usize {
        self.mu_beta.len()
    }

    pub fn d(&self) -> usize {
        self.eta[0][0].len()
    }

    pub fn check_shapes(&self, n_arms: usize, k: usize, d: usize) -> Result<()> {
        let ok = self.alpha.len() == n_arms
            && self.mu_beta.len() == k
            && PAIRS.iter().all(|&(s, a)| self.beta[s][a].len() == k && self.eta[s][a].len() == d);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("draw does not match N={n_arms}, k={k}, d={d}")))
        }
    }
}

fn normal_vec<R: Rng + ?Sized>(mean: &[f64], var: f64, rng: &mut R) -> Vec<f64> {
    let sd = var.sqrt();
    mean.iter().map(|&m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Inverse-Gamma(shape, scale) variate.
pub(crate) fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / scale).expect("valid inverse-gamma parameters");
    1.0 / g.sample(rng)
}

/// Draw every parameter from its prior, hyper-level first.
pub fn prior_draw<R: Rng + ?Sized>(hyper: &HyperParams, n_arms: usize, k: usize, d: usize, rng: &mut R) -> PosteriorDraw {
    let b0 = hyper.var_b0.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let b1 = hyper.var_b1.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mu_beta = normal_vec(&vec![0.0; k], hyper.var_mu, rng);
    let mut var_alpha = [[0.0; 2]; 2];
    for (s, a) in PAIRS {
        var_alpha[s][a] = inv_gamma(hyper.tau0, hyper.sigma0, rng);
    }
    let alpha = (0..n_arms)
        .map(|_| {
            let mut x = [[0.0; 2]; 2];
            for (s, a) in PAIRS {
                x[s][a] = var_alpha[s][a].sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            x
        })
        .collect();
    let mut beta: PerPair<Vec<f64>> = Default::default();
    for (s, a) in PAIRS {
        beta[s][a] = normal_vec(&mu_beta, hyper.var_beta[s][a], rng);
    }
    let mut eta: PerPair<Vec<f64>> = Default::default();
    for (s, a) in PAIRS {
        eta[s][a] = normal_vec(&vec![0.0; d], hyper.var_eta[s][a], rng);
    }
    PosteriorDraw { b0, b1, mu_beta, var_alpha, alpha, beta, eta }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Probit-scale predictor of `P(1 | s, a)` for arm `arm` with covariate row
/// `x` at spline row `m`.
pub fn linear_predictor(draw: &PosteriorDraw, arm: usize, x: &[f64], m: &[f64], s: usize, a: usize) -> Result<f64> {
    if x.len() != draw.k() || m.len() != draw.d() || arm >= draw.n_arms() {
        return Err(Error::ShapeMismatch(format!(
            "predictor inputs k={}, d={}, arm={arm} vs draw k={}, d={}, N={}",
            x.len(),
            m.len(),
            draw.k(),
            draw.d(),
            draw.n_arms()
        )));
    }
    let alpha = &draw.alpha[arm];
    Ok(predictor_with_effects(draw, alpha, x, m, s, a))
}

fn predictor_with_effects(draw: &PosteriorDraw, alpha: &PerPair<f64>, x: &[f64], m: &[f64], s: usize, a: usize) -> f64 {
    let mut v = dot(x, &draw.beta[s][a]) + dot(m, &draw.eta[s][a]) + alpha[s][a];
    if a == 1 {
        v += draw.b0 * alpha[0][0] + draw.b1 * alpha[1][0];
    }
    v
}

/// Plug a draw into the probit link for every arm at 1-based time `t`.
pub fn transitions_from_draw(
    draw: &PosteriorDraw,
    covariates: &[Vec<f64>],
    spline_basis: &[Vec<f64>],
    t: usize,
) -> Result<Vec<StateActionTable>> {
    if t == 0 || t > spline_basis.len() {
        return Err(Error::TimeOutOfRange { t, horizon: spline_basis.len() });
    }
    if covariates.len() != draw.n_arms() {
        return Err(Error::ShapeMismatch(format!("{} covariate rows for {} arms", covariates.len(), draw.n_arms())));
    }
    let m = &spline_basis[t - 1];
    covariates
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut p = [[0.0; 2]; 2];
            for (s, a) in PAIRS {
                p[s][a] = normal::cdf(linear_predictor(draw, i, x, m, s, a)?);
            }
            Ok(p)
        })
        .collect()
}

/// Transition estimate for an arm the model has never seen: fresh random
/// effects from the draw's variances, shared parameters from the draw.
pub fn predict_new_arm<R: Rng + ?Sized>(draw: &PosteriorDraw, x_new: &[f64], m_t: &[f64], rng: &mut R) -> Result<StateActionTable> {
    if x_new.len() != draw.k() || m_t.len() != draw.d() {
        return Err(Error::ShapeMismatch("new-arm covariate or spline row has wrong length".into()));
    }
    let mut alpha = [[0.0; 2]; 2];
    for (s, a) in PAIRS {
        alpha[s][a] = draw.var_alpha[s][a].sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    let mut p = [[0.0; 2]; 2];
    for (s, a) in PAIRS {
        p[s][a] = normal::cdf(predictor_with_effects(draw, &alpha, x_new, m_t, s, a));
    }
    Ok(p)
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * z * z / var
}

fn log_inv_gamma(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Log prior density of a draw.
pub fn log_prior(draw: &PosteriorDraw, hyper: &HyperParams) -> f64 {
    let mut lp = log_normal(draw.b0, 0.0, hyper.var_b0) + log_normal(draw.b1, 0.0, hyper.var_b1);
    lp += draw.mu_beta.iter().map(|&m| log_normal(m, 0.0, hyper.var_mu)).sum::<f64>();
    for (s, a) in PAIRS {
        let va = draw.var_alpha[s][a];
        lp += log_inv_gamma(va, hyper.tau0, hyper.sigma0);
        if va <= 0.0 {
            return f64::NEG_INFINITY;
        }
        lp += draw.alpha.iter().map(|al| log_normal(al[s][a], 0.0, va)).sum::<f64>();
        lp += draw.beta[s][a]
            .iter()
            .zip(&draw.mu_beta)
            .map(|(&b, &m)| log_normal(b, m, hyper.var_beta[s][a]))
            .sum::<f64>();
        lp += draw.eta[s][a].iter().map(|&e| log_normal(e, 0.0, hyper.var_eta[s][a])).sum::<f64>();
    }
    lp
}

/// Probit log likelihood of every observation.
pub fn log_likelihood(draw: &PosteriorDraw, data: &DesignData) -> f64 {
    let mut ll = 0.0;
    for (s, a) in PAIRS {
        for ob in &data.buckets[s][a].obs {
            let eta = predictor_with_effects(
                draw,
                &draw.alpha[ob.arm],
                &data.covariates[ob.arm],
                &data.spline_basis[ob.time - 1],
                s,
                a,
            );
            ll += if ob.next_state { normal::log_cdf(eta) } else { normal::log_cdf(-eta) };
        }
    }
    ll
}

pub fn log_unnormalized_posterior(draw: &PosteriorDraw, data: &DesignData, hyper: &HyperParams) -> f64 {
    let lp = log_prior(draw, hyper);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(draw, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmab::{History, TransitionRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn prior_moments() {
        let hyper = HyperParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<PosteriorDraw> = (0..5000).map(|_| prior_draw(&hyper, 3, 2, 2, &mut rng)).collect();
        let b0: Vec<f64> = draws.iter().map(|d| d.b0).collect();
        let (m, _) = mean_sd(&b0);
        assert!(m.abs() < 3.0 * 0.1 / 5000f64.sqrt(), "b0 mean {m}");
        for (s, a) in PAIRS {
            let va: Vec<f64> = draws.iter().map(|d| d.var_alpha[s][a]).collect();
            let (m, sd) = mean_sd(&va);
            let expect = 1.0 / 99.0;
            assert!((m - expect).abs() < 3.0 * sd / 5000f64.sqrt(), "var_alpha mean {m}");
        }
    }

    #[test]
    fn vanishing_prior_gives_half_probabilities() {
        let hyper = HyperParams { tau0: 1e6, sigma0: 1e-6, ..HyperParams::default() }.with_all_variances(1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draw = prior_draw(&hyper, 4, 2, 3, &mut rng);
        let x = vec![vec![1.0, -2.0]; 4];
        let m = vec![vec![0.2, 0.5, 0.3]; 5];
        for p in transitions_from_draw(&draw, &x, &m, 3).unwrap() {
            for (s, a) in PAIRS {
                assert!((p[s][a] - 0.5).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn predictor_zero_and_coupling() {
        let mut draw = PosteriorDraw::zeros(2, 2, 1, 1.0);
        for (s, a) in PAIRS {
            assert_eq!(linear_predictor(&draw, 1, &[0.3, 0.1], &[1.0], s, a).unwrap(), 0.0);
        }
        draw.alpha[0][0][0] = 1.0;
        draw.b0 = 1.0;
        for s in 0..2 {
            let v = linear_predictor(&draw, 0, &[0.0, 0.0], &[0.0], s, 1).unwrap();
            assert_eq!(v, 1.0);
            assert!((normal::cdf(v) - 0.8413).abs() < 1e-4);
        }
        assert!(linear_predictor(&draw, 0, &[0.0], &[0.0], 0, 0).is_err());
    }

    #[test]
    fn zero_draw_gives_half() {
        let draw = PosteriorDraw::zeros(3, 1, 1, 0.5);
        let p = transitions_from_draw(&draw, &vec![vec![2.0]; 3], &[vec![1.0]], 1).unwrap();
        assert!(p.iter().all(|t| t.iter().flatten().all(|&v| v == 0.5)));
        assert!(transitions_from_draw(&draw, &vec![vec![2.0]; 3], &[vec![1.0]], 2).is_err());
    }

    #[test]
    fn increasing_random_effect_increases_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draw = prior_draw(&HyperParams::default(), 3, 2, 2, &mut rng);
        let x = vec![vec![0.5, -1.0]; 3];
        let m = vec![vec![0.6, 0.4]];
        let base = transitions_from_draw(&draw, &x, &m, 1).unwrap();
        for (s, a) in PAIRS {
            let mut bumped = draw.clone();
            bumped.alpha[1][s][a] += 0.3;
            let p = transitions_from_draw(&bumped, &x, &m, 1).unwrap();
            assert!(p[1][s][a] > base[1][s][a]);
        }
    }

    #[test]
    fn time_effect_enters_through_spline_row() {
        let mut draw = PosteriorDraw::zeros(1, 1, 2, 1.0);
        draw.eta[1][0] = vec![0.4, -0.7];
        draw.beta[1][0] = vec![0.2];
        let x = vec![vec![1.5]];
        let m = vec![vec![1.0, 0.0], vec![0.25, 0.75]];
        let p1 = transitions_from_draw(&draw, &x, &m, 1).unwrap()[0][1][0];
        let p2 = transitions_from_draw(&draw, &x, &m, 2).unwrap()[0][1][0];
        // By hand: 0.3 + 0.4 = 0.7 and 0.3 + 0.1 − 0.525 = −0.125.
        assert!((p1 - normal::cdf(0.7)).abs() < 1e-15);
        assert!((p2 - normal::cdf(-0.125)).abs() < 1e-15);
    }

    #[test]
    fn new_arm_prediction_degenerate_effects() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut draw = PosteriorDraw::zeros(2, 2, 1, 1e-30);
        let p = predict_new_arm(&draw, &[1.0, 2.0], &[1.0], &mut rng).unwrap();
        assert!(p.iter().flatten().all(|&v| (v - 0.5).abs() < 1e-12));
        draw.beta[0][1] = vec![0.3, -0.1];
        draw.eta[0][1] = vec![0.05];
        let p = predict_new_arm(&draw, &[1.0, 2.0], &[1.0], &mut rng).unwrap();
        assert!((p[0][1] - normal::cdf(0.3 - 0.2 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn zero_draw_log_prior_closed_form() {
        let hyper = HyperParams::default();
        let draw = PosteriorDraw::zeros(2, 1, 1, 0.01);
        let data = build_design(&History::new(), &[vec![0.0], vec![0.0]], &[vec![1.0]]).unwrap();
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let ln_n0 = |v: f64| -0.5 * (ln2pi + v.ln());
        let ig = 100.0 * 1f64.ln() - ln_gamma(100.0) - 101.0 * 0.01f64.ln() - 1.0 / 0.01;
        let mut expect = ln_n0(0.01) * 2.0 + ln_n0(0.09);
        expect += 4.0 * (ig + 2.0 * ln_n0(0.01) + ln_n0(0.01) + ln_n0(0.09));
        let got = log_unnormalized_posterior(&draw, &data, &hyper);
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn one_observation_adds_log_cdf() {
        let hyper = HyperParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draw = prior_draw(&hyper, 2, 1, 1, &mut rng);
        let x = vec![vec![0.4], vec![-1.0]];
        let m = vec![vec![1.0], vec![0.5]];
        let empty = build_design(&History::new(), &x, &m).unwrap();
        let mut h = History::new();
        h.push_record(TransitionRecord { arm: 1, time: 2, state: 1, action: 1, next_state: 1 });
        let one = build_design(&h, &x, &m).unwrap();
        let eta = linear_predictor(&draw, 1, &x[1], &m[1], 1, 1).unwrap();
        let diff = log_unnormalized_posterior(&draw, &one, &hyper) - log_unnormalized_posterior(&draw, &empty, &hyper);
        assert!((diff - normal::log_cdf(eta)).abs() < 1e-10);
    }

    #[test]
    fn log_posterior_invariant_to_record_order() {
        let hyper = HyperParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draw = prior_draw(&hyper, 3, 1, 1, &mut rng);
        let x = vec![vec![0.1], vec![0.2], vec![0.3]];
        let m = vec![vec![1.0]; 4];
        let mut recs = Vec::new();
        for t in 1..=3 {
            for i in 0..3 {
                recs.push(TransitionRecord {
                    arm: i,
                    time: t,
                    state: rng.random_range(0..2),
                    action: rng.random_range(0..2),
                    next_state: rng.random_range(0..2),
                });
            }
        }
        let mut h1 = History::new();
        recs.iter().for_each(|r| h1.push_record(*r));
        let mut h2 = History::new();
        recs.iter().rev().for_each(|r| h2.push_record(*r));
        let a = log_unnormalized_posterior(&draw, &build_design(&h1, &x, &m).unwrap(), &hyper);
        let b = log_unnormalized_posterior(&draw, &build_design(&h2, &x, &m).unwrap(), &hyper);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn non_positive_variance_has_zero_density() {
        let mut draw = PosteriorDraw::zeros(1, 0, 0, 0.01);
        draw.var_alpha[1][1] = 0.0;
        assert_eq!(log_prior(&draw, &HyperParams::default()), f64::NEG_INFINITY);
    }
}
