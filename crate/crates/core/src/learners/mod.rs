//! Sequential decision policies.
//!
//! Every learner sees the covariates, the spline basis and its own observed
//! transitions. Only the oracles are handed the true instance.

mod bcor;
mod count;
mod oracle;

pub use bcor::BcorLearner;
pub use count::{ts_snapshots, ucw_radius, ucw_snapshots, CountTable, RandomLearner, TsLearner, UcwLearner};
pub use oracle::{oracle_summarize, OracleKind, OracleLearner};

use crate::error::{Error, Result};
use crate::model::{HyperParams, McmcConfig};
use crate::rmab::{ActionVector, RmabInstance, StateActionTable, SystemState};
use crate::rng::{learner_stream, Stream};
use crate::whittle::{select_top_b, ArmSnapshot, PolicyOptions, SolverStats, WhittleConfig, WhittlePolicy};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LearnerId {
    #[serde(rename = "bcor-whittle")]
    BcorWhittle,
    #[serde(rename = "bcor-greedy")]
    BcorGreedy,
    #[serde(rename = "ts-whittle")]
    TsWhittle,
    #[serde(rename = "ts-greedy")]
    TsGreedy,
    #[serde(rename = "ucw-whittle")]
    UcwWhittle,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "oracle-whittle-current")]
    OracleWhittleCurrent,
    #[serde(rename = "oracle-whittle-timeavg")]
    OracleWhittleTimeavg,
    #[serde(rename = "oracle-whittle-cumavg")]
    OracleWhittleCumavg,
    #[serde(rename = "oracle-greedy")]
    OracleGreedy,
}

impl LearnerId {
    pub const ALL: [LearnerId; 10] = [
        LearnerId::BcorWhittle,
        LearnerId::BcorGreedy,
        LearnerId::TsWhittle,
        LearnerId::TsGreedy,
        LearnerId::UcwWhittle,
        LearnerId::Random,
        LearnerId::OracleWhittleCurrent,
        LearnerId::OracleWhittleTimeavg,
        LearnerId::OracleWhittleCumavg,
        LearnerId::OracleGreedy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerId::BcorWhittle => "bcor-whittle",
            LearnerId::BcorGreedy => "bcor-greedy",
            LearnerId::TsWhittle => "ts-whittle",
            LearnerId::TsGreedy => "ts-greedy",
            LearnerId::UcwWhittle => "ucw-whittle",
            LearnerId::Random => "random",
            LearnerId::OracleWhittleCurrent => "oracle-whittle-current",
            LearnerId::OracleWhittleTimeavg => "oracle-whittle-timeavg",
            LearnerId::OracleWhittleCumavg => "oracle-whittle-cumavg",
            LearnerId::OracleGreedy => "oracle-greedy",
        }
    }

    pub fn is_oracle(self) -> bool {
        matches!(
            self,
            LearnerId::OracleWhittleCurrent
                | LearnerId::OracleWhittleTimeavg
                | LearnerId::OracleWhittleCumavg
                | LearnerId::OracleGreedy
        )
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| Error::UnknownLearner(s.to_string()))
    }
}

/// How a learner turns transition estimates into actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Whittle,
    Greedy,
}

/// What a non-oracle learner is allowed to see about the environment.
#[derive(Debug, Clone)]
pub struct LearnerContext {
    pub n_arms: usize,
    pub horizon: usize,
    pub budget: usize,
    pub covariates: Arc<Vec<Vec<f64>>>,
    pub spline_basis: Arc<Vec<Vec<f64>>>,
}

impl LearnerContext {
    pub fn from_instance(inst: &RmabInstance) -> Self {
        Self {
            n_arms: inst.n_arms,
            horizon: inst.horizon,
            budget: inst.budget,
            covariates: Arc::new(inst.covariates.clone()),
            spline_basis: Arc::new(inst.spline_basis.clone()),
        }
    }
}

/// Settings shared by every learner in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub hyper: HyperParams,
    pub mcmc: McmcConfig,
    pub whittle: WhittleConfig,
    pub policy: PolicyOptions,
    /// Confidence scale of the optimistic baseline.
    pub ucw_c: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hyper: HyperParams::default(),
            mcmc: McmcConfig::default(),
            whittle: WhittleConfig::default(),
            policy: PolicyOptions::default(),
            ucw_c: 1.0,
        }
    }
}

pub trait Learner: Send {
    fn id(&self) -> LearnerId;

    /// Actions at time `t` given the current state. Must pull exactly the
    /// budget.
    fn act(&mut self, t: usize, state: &SystemState) -> Result<ActionVector>;

    fn observe(&mut self, t: usize, state: &SystemState, actions: &ActionVector, next: &SystemState) -> Result<()>;

    fn solver_stats(&self) -> Option<SolverStats> {
        None
    }
}

/// Uniformly random subset of `budget` arms.
pub fn random_act<R: Rng + ?Sized>(budget: usize, n_arms: usize, rng: &mut R) -> Result<ActionVector> {
    if budget > n_arms {
        return Err(Error::BudgetExceedsArms { budget, n_arms });
    }
    let mut pulled = rand::seq::index::sample(rng, n_arms, budget).into_vec();
    pulled.sort_unstable();
    Ok(ActionVector::from_pulled(n_arms, &pulled))
}

/// Pull the arms with the largest estimated treatment effect
/// `p[s][1] − p[s][0]` at their current state.
pub fn greedy_act(states: &SystemState, estimates: &[StateActionTable], budget: usize) -> Result<ActionVector> {
    if states.len() != estimates.len() {
        return Err(Error::ShapeMismatch(format!("{} states for {} estimates", states.len(), estimates.len())));
    }
    let effects: Vec<f64> = estimates
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = states.get(i);
            p[s][1] - p[s][0]
        })
        .collect();
    select_top_b(&effects, budget)
}

/// Whittle or greedy selection from per-arm estimates.
pub(crate) fn choose(
    kind: PolicyKind,
    policy: &mut WhittlePolicy,
    estimates: &[StateActionTable],
    states: &SystemState,
    budget: usize,
) -> Result<ActionVector> {
    match kind {
        PolicyKind::Whittle => {
            let snaps: Vec<ArmSnapshot> = estimates.iter().map(|&p| ArmSnapshot::new(p)).collect();
            policy.select(&snaps, states, budget)
        }
        PolicyKind::Greedy => greedy_act(states, estimates, budget),
    }
}

/// Build a learner. Only oracle identifiers receive the true instance.
pub fn make_learner(id: LearnerId, inst: &Arc<RmabInstance>, cfg: &LearnerConfig, seed: u64) -> Result<Box<dyn Learner>> {
    let rng: Stream = learner_stream(seed, id.as_str());
    let learner: Box<dyn Learner> = match id {
        LearnerId::BcorWhittle | LearnerId::BcorGreedy => {
            let kind = if id == LearnerId::BcorWhittle { PolicyKind::Whittle } else { PolicyKind::Greedy };
            Box::new(BcorLearner::new(id, LearnerContext::from_instance(inst), cfg, kind, rng)?)
        }
        LearnerId::TsWhittle | LearnerId::TsGreedy => {
            let kind = if id == LearnerId::TsWhittle { PolicyKind::Whittle } else { PolicyKind::Greedy };
            Box::new(TsLearner::new(id, LearnerContext::from_instance(inst), cfg, kind, rng)?)
        }
        LearnerId::UcwWhittle => Box::new(UcwLearner::new(LearnerContext::from_instance(inst), cfg)?),
        LearnerId::Random => Box::new(RandomLearner::new(LearnerContext::from_instance(inst), rng)),
        LearnerId::OracleWhittleCurrent => Box::new(OracleLearner::new(id, Arc::clone(inst), OracleKind::CurrentTime, cfg)?),
        LearnerId::OracleWhittleTimeavg => Box::new(OracleLearner::new(id, Arc::clone(inst), OracleKind::TimeAverage, cfg)?),
        LearnerId::OracleWhittleCumavg => {
            Box::new(OracleLearner::new(id, Arc::clone(inst), OracleKind::CumulativeAverage, cfg)?)
        }
        LearnerId::OracleGreedy => Box::new(OracleLearner::new(id, Arc::clone(inst), OracleKind::Greedy, cfg)?),
    };
    Ok(learner)
}
