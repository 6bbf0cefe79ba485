//! Count-based baselines: independent Beta-Bernoulli Thompson sampling, the
//! optimistic confidence-bound heuristic, and uniform random pulls.

use super::{choose, random_act, Learner, LearnerConfig, LearnerContext, LearnerId, PolicyKind};
use crate::error::{Error, Result};
use crate::model::PAIRS;
use crate::rmab::{ActionVector, StateActionTable, SystemState};
use crate::rng::Stream;
use crate::whittle::{ArmSnapshot, SolverStats, WhittlePolicy};
use rand::Rng;
use rand_distr::{Beta, Distribution};

/// Per-arm, per-(s, a) transition counts; a success is a move to state 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    successes: Vec<[[u64; 2]; 2]>,
    visits: Vec<[[u64; 2]; 2]>,
}

impl CountTable {
    pub fn new(n_arms: usize) -> Self {
        Self { successes: vec![[[0; 2]; 2]; n_arms], visits: vec![[[0; 2]; 2]; n_arms] }
    }

    pub fn n_arms(&self) -> usize {
        self.visits.len()
    }

    pub fn record(&mut self, arm: usize, s: usize, a: usize, next: usize) {
        self.visits[arm][s][a] += 1;
        self.successes[arm][s][a] += next as u64;
    }

    pub fn record_step(&mut self, state: &SystemState, actions: &ActionVector, next: &SystemState) -> Result<()> {
        let n = self.n_arms();
        if state.len() != n || actions.len() != n || next.len() != n {
            return Err(Error::ShapeMismatch(format!("step vectors do not match {n} arms")));
        }
        for i in 0..n {
            self.record(i, state.get(i), actions.get(i), next.get(i));
        }
        Ok(())
    }

    pub fn successes(&self, arm: usize, s: usize, a: usize) -> u64 {
        self.successes[arm][s][a]
    }

    pub fn failures(&self, arm: usize, s: usize, a: usize) -> u64 {
        self.visits[arm][s][a] - self.successes[arm][s][a]
    }

    pub fn visits(&self, arm: usize, s: usize, a: usize) -> u64 {
        self.visits[arm][s][a]
    }
}

/// One Thompson draw per arm from independent Beta(1 + successes,
/// 1 + failures) posteriors, drawn arm by arm in `(s, a)` order.
pub fn ts_snapshots<R: Rng + ?Sized>(counts: &CountTable, rng: &mut R) -> Vec<StateActionTable> {
    (0..counts.n_arms())
        .map(|i| {
            let mut p = [[0.0; 2]; 2];
            for (s, a) in PAIRS {
                let alpha = 1.0 + counts.successes(i, s, a) as f64;
                let beta = 1.0 + counts.failures(i, s, a) as f64;
                p[s][a] = Beta::new(alpha, beta).expect("positive shape").sample(rng);
            }
            p
        })
        .collect()
}

/// Confidence radius `c·sqrt(log(2·N·T·4) / max(n, 1))`.
pub fn ucw_radius(c: f64, n_arms: usize, horizon: usize, visits: u64) -> f64 {
    let total = (2 * n_arms * horizon * 4) as f64;
    c * (total.ln() / visits.max(1) as f64).sqrt()
}

/// Optimistic snapshots: active probabilities at the upper confidence
/// limit, passive ones at the lower limit.
pub fn ucw_snapshots(counts: &CountTable, c: f64, horizon: usize) -> Vec<StateActionTable> {
    let n = counts.n_arms();
    (0..n)
        .map(|i| {
            let mut p = [[0.0; 2]; 2];
            for (s, a) in PAIRS {
                let visits = counts.visits(i, s, a);
                let p_hat = counts.successes(i, s, a) as f64 / visits.max(1) as f64;
                let r = ucw_radius(c, n, horizon, visits);
                p[s][a] = if a == 1 { (p_hat + r).min(1.0) } else { (p_hat - r).max(0.0) };
            }
            p
        })
        .collect()
}

pub struct TsLearner {
    id: LearnerId,
    ctx: LearnerContext,
    kind: PolicyKind,
    counts: CountTable,
    policy: WhittlePolicy,
    rng: Stream,
}

impl TsLearner {
    pub fn new(id: LearnerId, ctx: LearnerContext, cfg: &LearnerConfig, kind: PolicyKind, rng: Stream) -> Result<Self> {
        let counts = CountTable::new(ctx.n_arms);
        Ok(Self { id, ctx, kind, counts, policy: WhittlePolicy::new(cfg.whittle, cfg.policy)?, rng })
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }
}

impl Learner for TsLearner {
    fn id(&self) -> LearnerId {
        self.id
    }

    fn act(&mut self, _t: usize, state: &SystemState) -> Result<ActionVector> {
        let est = ts_snapshots(&self.counts, &mut self.rng);
        choose(self.kind, &mut self.policy, &est, state, self.ctx.budget)
    }

    fn observe(&mut self, _t: usize, state: &SystemState, actions: &ActionVector, next: &SystemState) -> Result<()> {
        self.counts.record_step(state, actions, next)
    }

    fn solver_stats(&self) -> Option<SolverStats> {
        Some(self.policy.stats())
    }
}

pub struct UcwLearner {
    ctx: LearnerContext,
    c: f64,
    counts: CountTable,
    policy: WhittlePolicy,
}

impl UcwLearner {
    pub fn new(ctx: LearnerContext, cfg: &LearnerConfig) -> Result<Self> {
        if !(cfg.ucw_c > 0.0) {
            return Err(Error::Config(format!("confidence scale must be positive, got {}", cfg.ucw_c)));
        }
        let counts = CountTable::new(ctx.n_arms);
        Ok(Self { ctx, c: cfg.ucw_c, counts, policy: WhittlePolicy::new(cfg.whittle, cfg.policy)? })
    }
}

impl Learner for UcwLearner {
    fn id(&self) -> LearnerId {
        LearnerId::UcwWhittle
    }

    fn act(&mut self, _t: usize, state: &SystemState) -> Result<ActionVector> {
        let snaps: Vec<ArmSnapshot> =
            ucw_snapshots(&self.counts, self.c, self.ctx.horizon).into_iter().map(ArmSnapshot::new).collect();
        self.policy.select(&snaps, state, self.ctx.budget)
    }

    fn observe(&mut self, _t: usize, state: &SystemState, actions: &ActionVector, next: &SystemState) -> Result<()> {
        self.counts.record_step(state, actions, next)
    }

    fn solver_stats(&self) -> Option<SolverStats> {
        Some(self.policy.stats())
    }
}

pub struct RandomLearner {
    ctx: LearnerContext,
    rng: Stream,
}

impl RandomLearner {
    pub fn new(ctx: LearnerContext, rng: Stream) -> Self {
        Self { ctx, rng }
    }
}

impl Learner for RandomLearner {
    fn id(&self) -> LearnerId {
        LearnerId::Random
    }

    fn act(&mut self, _t: usize, _state: &SystemState) -> Result<ActionVector> {
        random_act(self.ctx.budget, self.ctx.n_arms, &mut self.rng)
    }

    fn observe(&mut self, _t: usize, _s: &SystemState, _a: &ActionVector, _n: &SystemState) -> Result<()> {
        Ok(())
    }
}
