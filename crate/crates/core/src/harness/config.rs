use crate::error::{Error, Result};
use crate::generate::{CovariateSpec, GenSetting, GenSpec, SplineSpec};
use crate::learners::{LearnerConfig, LearnerId};
use crate::model::{HyperParams, McmcConfig};
use crate::whittle::{PolicyOptions, WhittleConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Seeds as an explicit list or a contiguous range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { start, count } => (*start..*start + *count).collect(),
        }
    }
}

fn default_center() -> LearnerId {
    LearnerId::Random
}

fn default_ucw_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setting: GenSetting,
    #[serde(alias = "N")]
    pub n_arms: usize,
    #[serde(alias = "T")]
    pub horizon: usize,
    #[serde(alias = "B")]
    pub budget: usize,
    pub k: usize,
    pub d: usize,
    pub seeds: SeedSpec,
    pub learners: Vec<LearnerId>,
    #[serde(default)]
    pub hyper: HyperParams,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub whittle: WhittleConfig,
    #[serde(default)]
    pub policy: PolicyOptions,
    #[serde(default = "default_ucw_c")]
    pub ucw_c: f64,
    /// Learner subtracted in the centered aggregate.
    #[serde(default = "default_center")]
    pub center_on: LearnerId,
    /// Run every seed on this instance file instead of generating one.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.learners.is_empty() {
            return Err(Error::Config("learners must be non-empty".into()));
        }
        if self.seeds.seeds().is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        if self.n_arms == 0 || self.horizon == 0 || self.budget == 0 {
            return Err(Error::Config("n_arms, horizon and budget must be positive".into()));
        }
        if self.budget > self.n_arms {
            return Err(Error::BudgetExceedsArms { budget: self.budget, n_arms: self.n_arms });
        }
        if self.instance.is_none() {
            CovariateSpec::for_k(self.k)?;
            SplineSpec::with_d(self.d).validate()?;
        }
        if !(self.ucw_c > 0.0) {
            return Err(Error::Config("ucw_c must be positive".into()));
        }
        self.hyper.validate()?;
        self.mcmc.validate()?;
        self.whittle.validate()
    }

    pub fn gen_spec(&self) -> Result<GenSpec> {
        Ok(GenSpec {
            n_arms: self.n_arms,
            horizon: self.horizon,
            budget: self.budget,
            covariates: CovariateSpec::for_k(self.k)?,
            spline: SplineSpec::with_d(self.d),
            hyper: self.hyper,
        })
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig { hyper: self.hyper, mcmc: self.mcmc, whittle: self.whittle, policy: self.policy, ucw_c: self.ucw_c }
    }
}
