//! Blocked Gibbs sampler with probit latent-variable augmentation.
//!
//! Given a latent `z ~ N(predictor, 1)` per observation, truncated to the
//! sign of the observed next state, every parameter block has a Gaussian or
//! Inverse-Gamma full conditional. The `b·α` products are linear in each
//! factor once the other is held fixed, so they split into two blocks.

use super::{dot, inv_gamma, prior_draw, DesignData, HyperParams, PerPair, PosteriorDraw, PAIRS};
use crate::error::{Error, Result};
use crate::model::build_design;
use crate::normal;
use crate::rmab::History;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Sampler state: a parameter draw plus one latent value per observation,
/// stored bucket by bucket in [`DesignData`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub draw: PosteriorDraw,
    pub latent: PerPair<Vec<f64>>,
}

impl Chain {
    pub fn new(draw: PosteriorDraw) -> Self {
        Self { draw, latent: Default::default() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub n_warmup: usize,
    pub n_keep: usize,
    pub thin: usize,
    /// Continue from the previous timestep's chain when one is available.
    pub warm_start: bool,
    /// Warmup sweeps used instead of `n_warmup` on a warm start.
    pub n_rewarmup: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { n_warmup: 500, n_keep: 1, thin: 1, warm_start: true, n_rewarmup: 100 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_keep == 0 || self.thin == 0 {
            return Err(Error::Config("n_keep and thin must be positive".into()));
        }
        Ok(())
    }
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draw from N(Q⁻¹b, Q⁻¹) given the precision `Q` and `b`.
fn sample_gaussian_canonical<R: Rng + ?Sized>(q: DMatrix<f64>, b: DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let n = b.len();
    let chol = q.cholesky().ok_or_else(|| Error::Numerical("conditional precision not positive definite".into()))?;
    let mean = chol.solve(&b);
    let eps = DVector::from_fn(n, |_, _| std_normal(rng));
    let lt = chol.l().transpose();
    let offset = lt
        .solve_upper_triangular(&eps)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(mean + offset)
}

fn coupling(draw: &PosteriorDraw, i: usize) -> f64 {
    draw.b0 * draw.alpha[i][0][0] + draw.b1 * draw.alpha[i][1][0]
}

/// One full scan over every block, in the order: latents, β, μ_β, η, α,
/// (b₀, b₁), random-effect variances.
pub fn gibbs_sweep<R: Rng + ?Sized>(chain: &mut Chain, data: &DesignData, hyper: &HyperParams, rng: &mut R) -> Result<()> {
    let (n, k, d) = (data.n_arms, data.k(), data.d());
    let horizon = data.spline_basis.len();
    chain.draw.check_shapes(n, k, d)?;
    let x = &data.covariates;
    let m = &data.spline_basis;
    let draw = &mut chain.draw;

    let xb_for = |beta: &[f64]| -> Vec<f64> { x.iter().map(|row| dot(row, beta)).collect() };
    let mh_for = |eta: &[f64]| -> Vec<f64> { m.iter().map(|row| dot(row, eta)).collect() };
    let mut xb: PerPair<Vec<f64>> = Default::default();
    let mut mh: PerPair<Vec<f64>> = Default::default();
    for (s, a) in PAIRS {
        xb[s][a] = xb_for(&draw.beta[s][a]);
        mh[s][a] = mh_for(&draw.eta[s][a]);
    }

    // Latent utilities.
    for (s, a) in PAIRS {
        let obs = &data.buckets[s][a].obs;
        let z = &mut chain.latent[s][a];
        z.resize(obs.len(), 0.0);
        for (j, ob) in obs.iter().enumerate() {
            let mut mean = xb[s][a][ob.arm] + mh[s][a][ob.time - 1] + draw.alpha[ob.arm][s][a];
            if a == 1 {
                mean += coupling(draw, ob.arm);
            }
            z[j] = normal::sample_latent(mean, ob.next_state, rng);
        }
    }
    let z = &chain.latent;

    // Covariate effects: Bayesian regression of the residualized latents.
    if k > 0 {
        for (s, a) in PAIRS {
            let prior_prec = 1.0 / hyper.var_beta[s][a];
            let mut q = DMatrix::<f64>::identity(k, k) * prior_prec;
            let mut b = DVector::from_iterator(k, draw.mu_beta.iter().map(|&mu| mu * prior_prec));
            for (j, ob) in data.buckets[s][a].obs.iter().enumerate() {
                let mut r = z[s][a][j] - mh[s][a][ob.time - 1] - draw.alpha[ob.arm][s][a];
                if a == 1 {
                    r -= coupling(draw, ob.arm);
                }
                let row = &x[ob.arm];
                for p in 0..k {
                    b[p] += row[p] * r;
                    for c in 0..=p {
                        q[(p, c)] += row[p] * row[c];
                    }
                }
            }
            q.fill_upper_triangle_with_lower_triangle();
            let beta = sample_gaussian_canonical(q, b, rng)?;
            draw.beta[s][a] = beta.iter().copied().collect();
            xb[s][a] = xb_for(&draw.beta[s][a]);
        }

        // Shared mean of the four covariate effects.
        let prec = 1.0 / hyper.var_mu + PAIRS.iter().map(|&(s, a)| 1.0 / hyper.var_beta[s][a]).sum::<f64>();
        let sd = prec.sqrt().recip();
        for p in 0..k {
            let num: f64 = PAIRS.iter().map(|&(s, a)| draw.beta[s][a][p] / hyper.var_beta[s][a]).sum();
            draw.mu_beta[p] = num / prec + sd * std_normal(rng);
        }
    }

    // Time effects.
    if d > 0 {
        for (s, a) in PAIRS {
            let mut q = DMatrix::<f64>::identity(d, d) * (1.0 / hyper.var_eta[s][a]);
            let mut b = DVector::<f64>::zeros(d);
            for (j, ob) in data.buckets[s][a].obs.iter().enumerate() {
                let mut r = z[s][a][j] - xb[s][a][ob.arm] - draw.alpha[ob.arm][s][a];
                if a == 1 {
                    r -= coupling(draw, ob.arm);
                }
                let row = &m[ob.time - 1];
                for p in 0..d {
                    b[p] += row[p] * r;
                    for c in 0..=p {
                        q[(p, c)] += row[p] * row[c];
                    }
                }
            }
            q.fill_upper_triangle_with_lower_triangle();
            let eta = sample_gaussian_canonical(q, b, rng)?;
            draw.eta[s][a] = eta.iter().copied().collect();
            mh[s][a] = mh_for(&draw.eta[s][a]);
        }
    }
    debug_assert!(mh.iter().flatten().all(|v| v.len() == horizon));

    // Per-arm sufficient statistics: counts and sums of z − Xβ − Mη.
    let mut cnt: PerPair<Vec<f64>> = Default::default();
    let mut sum: PerPair<Vec<f64>> = Default::default();
    for (s, a) in PAIRS {
        cnt[s][a] = vec![0.0; n];
        sum[s][a] = vec![0.0; n];
        for (j, ob) in data.buckets[s][a].obs.iter().enumerate() {
            cnt[s][a][ob.arm] += 1.0;
            sum[s][a][ob.arm] += z[s][a][j] - xb[s][a][ob.arm] - mh[s][a][ob.time - 1];
        }
    }

    // Active random effects: only their own bucket.
    for s in 0..2 {
        let prior_prec = 1.0 / draw.var_alpha[s][1];
        for i in 0..n {
            let prec = prior_prec + cnt[s][1][i];
            let mean = (sum[s][1][i] - cnt[s][1][i] * coupling(draw, i)) / prec;
            draw.alpha[i][s][1] = mean + std_normal(rng) / prec.sqrt();
        }
    }

    // Passive random effects: coefficient 1 in their own bucket and b_s in
    // both active buckets of the same arm.
    for s in 0..2 {
        let other = 1 - s;
        let (b_own, b_other) = if s == 0 { (draw.b0, draw.b1) } else { (draw.b1, draw.b0) };
        let prior_prec = 1.0 / draw.var_alpha[s][0];
        for i in 0..n {
            let mut prec = prior_prec + cnt[s][0][i];
            let mut num = sum[s][0][i];
            for sa in 0..2 {
                let c = cnt[sa][1][i];
                if c > 0.0 {
                    let resid = sum[sa][1][i] - c * (draw.alpha[i][sa][1] + b_other * draw.alpha[i][other][0]);
                    prec += b_own * b_own * c;
                    num += b_own * resid;
                }
            }
            draw.alpha[i][s][0] = num / prec + std_normal(rng) / prec.sqrt();
        }
    }

    // Within-arm sharing coefficients: regression of active residuals on
    // the arm's passive random effects.
    {
        let mut q = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![1.0 / hyper.var_b0, 1.0 / hyper.var_b1]));
        let mut b = DVector::<f64>::zeros(2);
        for i in 0..n {
            let c = cnt[0][1][i] + cnt[1][1][i];
            if c == 0.0 {
                continue;
            }
            let u = [draw.alpha[i][0][0], draw.alpha[i][1][0]];
            let r: f64 = (0..2).map(|sa| sum[sa][1][i] - cnt[sa][1][i] * draw.alpha[i][sa][1]).sum();
            for p in 0..2 {
                b[p] += u[p] * r;
                for c2 in 0..2 {
                    q[(p, c2)] += c * u[p] * u[c2];
                }
            }
        }
        let bb = sample_gaussian_canonical(q, b, rng)?;
        draw.b0 = bb[0];
        draw.b1 = bb[1];
    }

    // Random-effect variances.
    for (s, a) in PAIRS {
        let ss: f64 = draw.alpha.iter().map(|al| al[s][a] * al[s][a]).sum();
        draw.var_alpha[s][a] = inv_gamma(hyper.tau0 + 0.5 * n as f64, hyper.sigma0 + 0.5 * ss, rng);
    }
    Ok(())
}

/// Run a chain on `data` and return the `n_keep` retained draws together
/// with the final chain state.
///
/// A previous chain is continued (with `n_rewarmup` warmup sweeps) only when
/// `mcmc.warm_start` is set; otherwise the chain starts from a prior draw.
pub fn sample_chain<R: Rng + ?Sized>(
    data: &DesignData,
    hyper: &HyperParams,
    mcmc: &McmcConfig,
    rng: &mut R,
    previous: Option<Chain>,
) -> Result<(Vec<PosteriorDraw>, Chain)> {
    mcmc.validate()?;
    let (mut chain, warmup) = match previous {
        Some(prev) if mcmc.warm_start => (prev, mcmc.n_rewarmup),
        _ => (Chain::new(prior_draw(hyper, data.n_arms, data.k(), data.d(), rng)), mcmc.n_warmup),
    };
    for _ in 0..warmup {
        gibbs_sweep(&mut chain, data, hyper, rng)?;
    }
    let mut kept = Vec::with_capacity(mcmc.n_keep);
    for _ in 0..mcmc.n_keep {
        for _ in 0..mcmc.thin {
            gibbs_sweep(&mut chain, data, hyper, rng)?;
        }
        kept.push(chain.draw.clone());
    }
    Ok((kept, chain))
}

/// Posterior sample given the observed history; `chain.draw` is the final
/// retained state.
pub fn posterior_sample<R: Rng + ?Sized>(
    history: &History,
    covariates: &[Vec<f64>],
    spline_basis: &[Vec<f64>],
    hyper: &HyperParams,
    mcmc: &McmcConfig,
    rng: &mut R,
    previous: Option<Chain>,
) -> Result<Chain> {
    let data = build_design(history, covariates, spline_basis)?;
    let (_, chain) = sample_chain(&data, hyper, mcmc, rng, previous)?;
    Ok(chain)
}
