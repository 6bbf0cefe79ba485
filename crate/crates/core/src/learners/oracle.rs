//! Policies with access to the true transitions.

use super::{choose, Learner, LearnerConfig, LearnerId, PolicyKind};
use crate::error::Result;
use crate::model::PAIRS;
use crate::rmab::{ActionVector, RmabInstance, StateActionTable, SystemState};
use crate::whittle::{ArmSnapshot, SolverStats, WhittlePolicy};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    CurrentTime,
    TimeAverage,
    CumulativeAverage,
    Greedy,
}

/// Running mean that leaves a constant sequence bit-identical.
fn mean_of(tables: &[StateActionTable]) -> StateActionTable {
    let mut mean = tables[0];
    for (j, p) in tables.iter().enumerate().skip(1) {
        for (s, a) in PAIRS {
            mean[s][a] += (p[s][a] - mean[s][a]) / (j + 1) as f64;
        }
    }
    mean
}

/// True dynamics summarized for the policy at time `t`.
pub fn oracle_summarize(inst: &RmabInstance, t: usize, kind: OracleKind) -> Result<Vec<ArmSnapshot>> {
    inst.check_time(t)?;
    Ok(inst
        .transitions
        .iter()
        .map(|arm| {
            let p = match kind {
                OracleKind::CurrentTime | OracleKind::Greedy => arm[t - 1],
                OracleKind::TimeAverage => mean_of(arm),
                OracleKind::CumulativeAverage => mean_of(&arm[..t]),
            };
            ArmSnapshot::new(p)
        })
        .collect())
}

pub struct OracleLearner {
    id: LearnerId,
    inst: Arc<RmabInstance>,
    kind: OracleKind,
    policy: WhittlePolicy,
}

impl OracleLearner {
    pub fn new(id: LearnerId, inst: Arc<RmabInstance>, kind: OracleKind, cfg: &LearnerConfig) -> Result<Self> {
        Ok(Self { id, inst, kind, policy: WhittlePolicy::new(cfg.whittle, cfg.policy)? })
    }
}

impl Learner for OracleLearner {
    fn id(&self) -> LearnerId {
        self.id
    }

    fn act(&mut self, t: usize, state: &SystemState) -> Result<ActionVector> {
        let snaps = oracle_summarize(&self.inst, t, self.kind)?;
        let kind = if self.kind == OracleKind::Greedy { PolicyKind::Greedy } else { PolicyKind::Whittle };
        let est: Vec<StateActionTable> = snaps.iter().map(|s| s.p).collect();
        choose(kind, &mut self.policy, &est, state, self.inst.budget)
    }

    fn observe(&mut self, _t: usize, _s: &SystemState, _a: &ActionVector, _n: &SystemState) -> Result<()> {
        Ok(())
    }

    fn solver_stats(&self) -> Option<SolverStats> {
        Some(self.policy.stats())
    }
}
