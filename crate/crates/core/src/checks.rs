//! Quick invariant and oracle checks, run by the `check` subcommand.

use crate::error::Result;
use crate::generate::{gen_instance, CovariateSpec, GenSetting, GenSpec, SplineSpec};
use crate::harness::run_episode;
use crate::learners::{LearnerConfig, LearnerId};
use crate::model::{posterior_sample, prior_draw, transitions_from_draw, HyperParams, McmcConfig, PosteriorDraw};
use crate::rmab::{History, SystemState};
use crate::rng::{substream, Stream};
use crate::whittle::{
    whittle_index_grid_oracle, whittle_index_or_fallback, ArmSnapshot, PolicyOptions, WhittleConfig, WhittlePolicy,
};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn random_snapshot(rng: &mut Stream) -> ArmSnapshot {
    ArmSnapshot::new([[rng.random(), rng.random()], [rng.random(), rng.random()]])
}

fn index_oracle(n_arms: usize, seed: u64) -> Result<CheckResult> {
    let cfg = WhittleConfig::default();
    let step = 1e-4;
    let tol = 2.0 * step + cfg.bs_tol;
    let mut rng = substream(seed, "check/index-oracle");
    let mut worst: f64 = 0.0;
    for _ in 0..n_arms {
        let arm = random_snapshot(&mut rng);
        for s in 0..2 {
            let oracle = whittle_index_grid_oracle(&arm, s, cfg.gamma, step);
            let got = whittle_index_or_fallback(&arm, s, &cfg)?;
            if oracle.crossed {
                worst = worst.max((got - oracle.index).abs());
            }
        }
    }
    Ok(CheckResult::new("whittle-grid-oracle", worst <= tol, format!("{n_arms} arms, max error {worst:.2e} (tol {tol:.1e})")))
}

fn zero_index(n_arms: usize, seed: u64) -> Result<CheckResult> {
    let cfg = WhittleConfig::default();
    let mut rng = substream(seed, "check/zero-index");
    let mut worst: f64 = 0.0;
    for _ in 0..n_arms {
        let (p0, p1): (f64, f64) = (rng.random(), rng.random());
        let arm = ArmSnapshot::new([[p0, p0], [p1, p1]]);
        for s in 0..2 {
            worst = worst.max(whittle_index_or_fallback(&arm, s, &cfg)?.abs());
        }
    }
    Ok(CheckResult::new("zero-index-symmetry", worst <= cfg.bs_tol, format!("{n_arms} arms, max |index| {worst:.2e}")))
}

fn policy_equivalence(seed: u64) -> Result<CheckResult> {
    let mut rng = substream(seed, "check/policy");
    let n = 50;
    let snaps: Vec<ArmSnapshot> = (0..n).map(|_| random_snapshot(&mut rng)).collect();
    let states = SystemState::random(n, &mut rng);
    let mut fast = WhittlePolicy::new(WhittleConfig::default(), PolicyOptions::default())?;
    let mut brute = WhittlePolicy::new(WhittleConfig::default(), PolicyOptions { memoize: false, early_termination: false })?;
    let a = fast.select(&snaps, &states, 5)?;
    let b = brute.select(&snaps, &states, 5)?;
    let sweeps = fast.stats().vi_sweeps;
    let again = fast.select(&snaps, &states, 5)?;
    let passed = a == b && again == a && fast.stats().vi_sweeps == sweeps;
    Ok(CheckResult::new("whittle-policy-equivalence", passed, format!("50 arms, B = 5, {} early skips", fast.stats().early_skips)))
}

fn reward_recursion(seed: u64) -> Result<CheckResult> {
    let mut rng = substream(seed, "check/reward");
    let (n, horizon) = (7, 40);
    let states: Vec<SystemState> = (0..horizon).map(|_| SystemState::random(n, &mut rng)).collect();
    let mut trace = crate::rmab::RewardTrace::new();
    let mut worst: f64 = 0.0;
    for (j, s) in states.iter().enumerate() {
        trace.record_reward(j + 1, s)?;
        let direct = states[..=j].iter().map(|x| x.as_slice().iter().map(|&v| f64::from(v)).sum::<f64>()).sum::<f64>()
            / (j + 1) as f64;
        worst = worst.max((trace.time_avg_reward[j] - direct).abs());
    }
    Ok(CheckResult::new("reward-recursion", worst <= 1e-12, format!("max deviation {worst:.1e}")))
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn prior_at_zero_data(n_draws: usize, seed: u64) -> Result<CheckResult> {
    let hyper = HyperParams::default();
    let mcmc = McmcConfig { n_warmup: 5, ..McmcConfig::default() };
    let (x, m) = (vec![vec![0.3, -0.2]; 3], vec![vec![1.0, 0.0]; 2]);
    let mut rng = substream(seed, "check/prior");
    let stat = |d: &PosteriorDraw| [d.b0, d.mu_beta[0], d.var_alpha[0][1], d.alpha[1][1][0], d.eta[1][1][1]];
    let mut a = vec![Vec::new(); 5];
    let mut b = vec![Vec::new(); 5];
    for _ in 0..n_draws {
        let p = stat(&prior_draw(&hyper, 3, 2, 2, &mut rng));
        let q = stat(&posterior_sample(&History::new(), &x, &m, &hyper, &mcmc, &mut rng, None)?.draw);
        for j in 0..5 {
            a[j].push(p[j]);
            b[j].push(q[j]);
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..5 {
        let ((ma, va), (mb, vb)) = (moments(&a[j]), moments(&b[j]));
        worst = worst.max((ma - mb).abs() / ((va + vb) / n_draws as f64).sqrt());
    }
    Ok(CheckResult::new("prior-at-zero-data", worst < 4.0, format!("{n_draws} draws, max |z| {worst:.2}")))
}

fn generator_consistency(seed: u64) -> Result<CheckResult> {
    let spec = GenSpec {
        n_arms: 12,
        horizon: 10,
        budget: 3,
        covariates: CovariateSpec::base(),
        spline: SplineSpec::default(),
        hyper: HyperParams::default(),
    };
    let mut ok = true;
    for setting in GenSetting::ALL {
        let (inst, draw) = gen_instance(setting, &spec, seed, &mut substream(seed, "check/gen"))?;
        for t in 1..=inst.horizon {
            let p = transitions_from_draw(&draw, &inst.covariates, &inst.spline_basis, t)?;
            ok &= (0..inst.n_arms).all(|i| p[i] == inst.transitions[i][t - 1]);
        }
        if matches!(setting, GenSetting::Stationary | GenSetting::HighlyMisspecified) {
            ok &= inst.is_stationary();
        }
    }
    Ok(CheckResult::new("generator-consistency", ok, "five settings reproduce their tensors".into()))
}

fn oracle_collapse(seed: u64) -> Result<CheckResult> {
    let spec = GenSpec {
        n_arms: 20,
        horizon: 8,
        budget: 3,
        covariates: CovariateSpec::base(),
        spline: SplineSpec::default(),
        hyper: HyperParams::default(),
    };
    let cfg = LearnerConfig::default();
    let mut ok = true;
    for setting in [GenSetting::Stationary, GenSetting::HighlyMisspecified] {
        let inst = Arc::new(gen_instance(setting, &spec, seed, &mut substream(seed, "check/collapse"))?.0);
        let cur = run_episode(LearnerId::OracleWhittleCurrent, &inst, seed, &cfg)?;
        for id in [LearnerId::OracleWhittleTimeavg, LearnerId::OracleWhittleCumavg] {
            let other = run_episode(id, &inst, seed, &cfg)?;
            ok &= other.actions == cur.actions && other.trace == cur.trace;
        }
    }
    Ok(CheckResult::new("stationary-oracle-collapse", ok, "settings c and e".into()))
}

/// Run every check. `scale` multiplies sample sizes (1 is a few seconds).
pub fn run_checks(seed: u64, scale: usize) -> Result<Vec<CheckResult>> {
    let scale = scale.max(1);
    Ok(vec![
        index_oracle(50 * scale, seed)?,
        zero_index(200 * scale, seed)?,
        policy_equivalence(seed)?,
        reward_recursion(seed)?,
        prior_at_zero_data(500 * scale, seed)?,
        generator_consistency(seed)?,
        oracle_collapse(seed)?,
    ])
}
