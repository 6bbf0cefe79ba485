//! Simulated instances: covariates, spline basis and the five generation
//! settings.

mod spline;

pub use spline::{basis_at, gen_spline_basis, SplineSpec};

use crate::error::{Error, Result};
use crate::model::{prior_draw, transitions_from_draw, HyperParams, PosteriorDraw, PAIRS};
use crate::rmab::{validate_instance, InstanceMeta, RmabInstance};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Standard deviation of the random effects in the misspecified setting.
pub const MISSPECIFIED_SD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenSetting {
    #[serde(alias = "a")]
    WellSpecified,
    #[serde(alias = "b")]
    NoWithinArmSharing,
    #[serde(alias = "c")]
    Stationary,
    #[serde(alias = "d")]
    UninformativeCovariates,
    #[serde(alias = "e")]
    HighlyMisspecified,
}

impl GenSetting {
    pub const ALL: [GenSetting; 5] = [
        GenSetting::WellSpecified,
        GenSetting::NoWithinArmSharing,
        GenSetting::Stationary,
        GenSetting::UninformativeCovariates,
        GenSetting::HighlyMisspecified,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GenSetting::WellSpecified => "well_specified",
            GenSetting::NoWithinArmSharing => "no_within_arm_sharing",
            GenSetting::Stationary => "stationary",
            GenSetting::UninformativeCovariates => "uninformative_covariates",
            GenSetting::HighlyMisspecified => "highly_misspecified",
        }
    }

    pub fn letter(self) -> char {
        match self {
            GenSetting::WellSpecified => 'a',
            GenSetting::NoWithinArmSharing => 'b',
            GenSetting::Stationary => 'c',
            GenSetting::UninformativeCovariates => 'd',
            GenSetting::HighlyMisspecified => 'e',
        }
    }
}

impl fmt::Display for GenSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for GenSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenSetting::ALL
            .into_iter()
            .find(|g| g.label() == s || s.len() == 1 && s.starts_with(g.letter()))
            .ok_or_else(|| Error::Config(format!("unknown setting {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    /// `round(N(22, 2²))`, then centered and scaled by the sample sd.
    Age,
    Normal,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub recipe: Vec<CovariateKind>,
}

impl CovariateSpec {
    /// The four-column recipe: age, two normals, one Bernoulli.
    pub fn base() -> Self {
        use CovariateKind::*;
        Self { recipe: vec![Age, Normal, Normal, Bernoulli] }
    }

    /// The base recipe plus one Bernoulli and three normals.
    pub fn extended() -> Self {
        use CovariateKind::*;
        let mut spec = Self::base();
        spec.recipe.extend([Bernoulli, Normal, Normal, Normal]);
        spec
    }

    pub fn for_k(k: usize) -> Result<Self> {
        match k {
            4 => Ok(Self::base()),
            8 => Ok(Self::extended()),
            _ => Err(Error::Config(format!("no standard covariate recipe with k = {k} (use 4 or 8)"))),
        }
    }

    pub fn k(&self) -> usize {
        self.recipe.len()
    }
}

/// `N × k` covariate matrix. Draws are taken row by row in recipe order.
pub fn gen_covariates<R: Rng + ?Sized>(n_arms: usize, spec: &CovariateSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if n_arms < 2 {
        return Err(Error::Config("covariate generation needs at least two arms".into()));
    }
    let age = Normal::<f64>::new(22.0, 2.0).expect("valid normal");
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let mut x: Vec<Vec<f64>> = (0..n_arms)
        .map(|_| {
            spec.recipe
                .iter()
                .map(|kind| match kind {
                    CovariateKind::Age => age.sample(rng).round(),
                    CovariateKind::Normal => rng.sample(StandardNormal),
                    CovariateKind::Bernoulli => f64::from(u8::from(coin.sample(rng))),
                })
                .collect()
        })
        .collect();
    for (j, kind) in spec.recipe.iter().enumerate() {
        if *kind == CovariateKind::Age {
            let n = n_arms as f64;
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            for row in &mut x {
                row[j] = if sd > 0.0 { (row[j] - mean) / sd } else { 0.0 };
            }
        }
    }
    Ok(x)
}

/// Dimensions and ingredients of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n_arms: usize,
    pub horizon: usize,
    pub budget: usize,
    pub covariates: CovariateSpec,
    pub spline: SplineSpec,
    pub hyper: HyperParams,
}

/// Generate an instance together with the parameter draw that produced it.
///
/// Consumption order on `rng`: covariates, then the full prior draw. The
/// setting then zeroes its components, so settings (a)–(d) generated from
/// the same stream share every non-zeroed parameter.
pub fn gen_instance<R: Rng + ?Sized>(
    setting: GenSetting,
    spec: &GenSpec,
    seed: u64,
    rng: &mut R,
) -> Result<(RmabInstance, PosteriorDraw)> {
    if spec.budget == 0 || spec.budget > spec.n_arms {
        return Err(Error::BudgetExceedsArms { budget: spec.budget, n_arms: spec.n_arms });
    }
    spec.hyper.validate()?;
    let x = gen_covariates(spec.n_arms, &spec.covariates, rng)?;
    let m = gen_spline_basis(spec.horizon, &spec.spline)?;
    let (k, d) = (spec.covariates.k(), spec.spline.d);

    let mut draw = prior_draw(&spec.hyper, spec.n_arms, k, d, rng);
    match setting {
        GenSetting::WellSpecified => {}
        GenSetting::NoWithinArmSharing => {
            draw.b0 = 0.0;
            draw.b1 = 0.0;
        }
        GenSetting::Stationary => {
            for (s, a) in PAIRS {
                draw.eta[s][a].fill(0.0);
            }
        }
        GenSetting::UninformativeCovariates => {
            draw.mu_beta.fill(0.0);
            for (s, a) in PAIRS {
                draw.beta[s][a].fill(0.0);
            }
        }
        GenSetting::HighlyMisspecified => {
            let sd = MISSPECIFIED_SD;
            let mut e = PosteriorDraw::zeros(spec.n_arms, k, d, sd * sd);
            for alpha in &mut e.alpha {
                for (s, a) in PAIRS {
                    alpha[s][a] = sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            draw = e;
        }
    }

    let mut transitions = vec![Vec::with_capacity(spec.horizon); spec.n_arms];
    for t in 1..=spec.horizon {
        for (arm, p) in transitions_from_draw(&draw, &x, &m, t)?.into_iter().enumerate() {
            transitions[arm].push(p);
        }
    }
    let inst = RmabInstance {
        n_arms: spec.n_arms,
        horizon: spec.horizon,
        budget: spec.budget,
        k,
        d,
        transitions,
        covariates: x,
        spline_basis: m,
        meta: InstanceMeta { setting: setting.label().to_string(), seed },
    };
    validate_instance(&inst).into_result()?;
    Ok((inst, draw))
}
