//! Environment types, validation, transition simulation and reward accounting.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// `P(next = 1 | s, a)` indexed `[s][a]`. The probability of moving to state 0
/// is always `1 - p[s][a]` and is never stored.
pub type StateActionTable = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub setting: String,
    pub seed: u64,
}

/// A complete restless-bandit environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmabInstance {
    pub n_arms: usize,
    pub horizon: usize,
    pub budget: usize,
    pub k: usize,
    pub d: usize,
    /// `[arm][t - 1][s][a]`.
    pub transitions: Vec<Vec<StateActionTable>>,
    /// `n_arms × k`.
    pub covariates: Vec<Vec<f64>>,
    /// `horizon × d`.
    pub spline_basis: Vec<Vec<f64>>,
    pub meta: InstanceMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ZeroDimension(&'static str),
    BudgetExceedsArms { budget: usize, n_arms: usize },
    TransitionShape { arm: Option<usize>, expected: usize, got: usize },
    ProbabilityOutOfRange { arm: usize, t: usize, s: usize, a: usize, value: f64 },
    CovariateShape { row: Option<usize>, expected: usize, got: usize },
    SplineShape { row: Option<usize>, expected: usize, got: usize },
    NonFinite { what: &'static str, row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension(what) => write!(f, "{what} must be positive"),
            Violation::BudgetExceedsArms { budget, n_arms } => {
                write!(f, "budget exceeds arms ({budget} > {n_arms})")
            }
            Violation::TransitionShape { arm: None, expected, got } => {
                write!(f, "transitions: expected {expected} arms, got {got}")
            }
            Violation::TransitionShape { arm: Some(i), expected, got } => {
                write!(f, "transitions[{i}]: expected {expected} timesteps, got {got}")
            }
            Violation::ProbabilityOutOfRange { arm, t, s, a, value } => {
                write!(f, "transitions[{arm}][{t}][{s}][{a}] = {value} not in [0, 1]")
            }
            Violation::CovariateShape { row: None, expected, got } => {
                write!(f, "covariates: expected {expected} rows, got {got}")
            }
            Violation::CovariateShape { row: Some(r), expected, got } => {
                write!(f, "covariates[{r}]: expected {expected} columns, got {got}")
            }
            Violation::SplineShape { row: None, expected, got } => {
                write!(f, "spline_basis: expected {expected} rows, got {got}")
            }
            Violation::SplineShape { row: Some(r), expected, got } => {
                write!(f, "spline_basis[{r}]: expected {expected} columns, got {got}")
            }
            Violation::NonFinite { what, row, col } => write!(f, "{what}[{row}][{col}] is not finite"),
        }
    }
}

/// Outcome of [`validate_instance`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidInstance(msg.join("; ")))
        }
    }
}

pub fn validate_instance(inst: &RmabInstance) -> ValidationReport {
    let mut v = Vec::new();
    if inst.n_arms == 0 {
        v.push(Violation::ZeroDimension("n_arms"));
    }
    if inst.horizon == 0 {
        v.push(Violation::ZeroDimension("horizon"));
    }
    if inst.budget == 0 {
        v.push(Violation::ZeroDimension("budget"));
    }
    if inst.budget > inst.n_arms {
        v.push(Violation::BudgetExceedsArms { budget: inst.budget, n_arms: inst.n_arms });
    }
    if inst.transitions.len() != inst.n_arms {
        v.push(Violation::TransitionShape { arm: None, expected: inst.n_arms, got: inst.transitions.len() });
    }
    for (i, arm) in inst.transitions.iter().enumerate() {
        if arm.len() != inst.horizon {
            v.push(Violation::TransitionShape { arm: Some(i), expected: inst.horizon, got: arm.len() });
        }
        for (t, table) in arm.iter().enumerate() {
            for s in 0..2 {
                for a in 0..2 {
                    let p = table[s][a];
                    // NaN fails the range check as well.
                    if !(0.0..=1.0).contains(&p) {
                        v.push(Violation::ProbabilityOutOfRange { arm: i, t: t + 1, s, a, value: p });
                    }
                }
            }
        }
    }
    if inst.covariates.len() != inst.n_arms {
        v.push(Violation::CovariateShape { row: None, expected: inst.n_arms, got: inst.covariates.len() });
    }
    for (r, row) in inst.covariates.iter().enumerate() {
        if row.len() != inst.k {
            v.push(Violation::CovariateShape { row: Some(r), expected: inst.k, got: row.len() });
        }
        for (c, x) in row.iter().enumerate() {
            if !x.is_finite() {
                v.push(Violation::NonFinite { what: "covariates", row: r, col: c });
            }
        }
    }
    if inst.spline_basis.len() != inst.horizon {
        v.push(Violation::SplineShape { row: None, expected: inst.horizon, got: inst.spline_basis.len() });
    }
    for (r, row) in inst.spline_basis.iter().enumerate() {
        if row.len() != inst.d {
            v.push(Violation::SplineShape { row: Some(r), expected: inst.d, got: row.len() });
        }
        for (c, x) in row.iter().enumerate() {
            if !x.is_finite() {
                v.push(Violation::NonFinite { what: "spline_basis", row: r, col: c });
            }
        }
    }
    ValidationReport { violations: v }
}

impl RmabInstance {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parse and validate.
    pub fn from_json(s: &str) -> Result<Self> {
        let inst: RmabInstance = serde_json::from_str(s)?;
        validate_instance(&inst).into_result()?;
        Ok(inst)
    }

    /// Transition table of `arm` at 1-based time `t`.
    pub fn table(&self, arm: usize, t: usize) -> &StateActionTable {
        &self.transitions[arm][t - 1]
    }

    pub fn check_time(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            Err(Error::TimeOutOfRange { t, horizon: self.horizon })
        } else {
            Ok(())
        }
    }

    /// True when no transition depends on time.
    pub fn is_stationary(&self) -> bool {
        self.transitions.iter().all(|arm| arm.iter().all(|tab| tab == &arm[0]))
    }
}

/// Binary state of every arm at one timestep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemState(Vec<u8>);

impl SystemState {
    pub fn new(states: Vec<u8>) -> Result<Self> {
        if states.iter().any(|&s| s > 1) {
            return Err(Error::ShapeMismatch("states must be 0 or 1".into()));
        }
        Ok(Self(states))
    }

    pub fn filled(n: usize, value: u8) -> Self {
        assert!(value <= 1);
        Self(vec![value; n])
    }

    /// Each arm starts in state 1 with probability one half.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| u8::from(rng.random_bool(0.5))).collect())
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, arm: usize) -> usize {
        self.0[arm] as usize
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().map(|&s| s as usize).sum()
    }
}

/// Binary action per arm; policies always pull exactly the budget.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionVector(Vec<u8>);

impl ActionVector {
    pub fn new(actions: Vec<u8>) -> Result<Self> {
        if actions.iter().any(|&a| a > 1) {
            return Err(Error::ShapeMismatch("actions must be 0 or 1".into()));
        }
        Ok(Self(actions))
    }

    /// Pull exactly the listed arms.
    pub fn from_pulled(n: usize, pulled: &[usize]) -> Self {
        let mut a = vec![0u8; n];
        for &i in pulled {
            a[i] = 1;
        }
        Self(a)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, arm: usize) -> usize {
        self.0[arm] as usize
    }

    pub fn n_pulled(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn pulled(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &a)| a == 1).map(|(i, _)| i).collect()
    }

    pub fn check_budget(&self, budget: usize) -> Result<()> {
        let pulled = self.n_pulled();
        if pulled != budget {
            Err(Error::BudgetViolation { pulled, budget })
        } else {
            Ok(())
        }
    }
}

/// Advance every arm one step. Uniform draws are consumed in arm order.
pub fn step<R: Rng + ?Sized>(
    inst: &RmabInstance,
    t: usize,
    state: &SystemState,
    actions: &ActionVector,
    rng: &mut R,
) -> Result<SystemState> {
    inst.check_time(t)?;
    if state.len() != inst.n_arms || actions.len() != inst.n_arms {
        return Err(Error::ShapeMismatch(format!(
            "state/action length {}/{} for {} arms",
            state.len(),
            actions.len(),
            inst.n_arms
        )));
    }
    actions.check_budget(inst.budget)?;
    let next = (0..inst.n_arms)
        .map(|i| {
            let p = inst.table(i, t)[state.get(i)][actions.get(i)];
            let u: f64 = rng.random();
            u8::from(u < p)
        })
        .collect();
    Ok(SystemState(next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub arm: usize,
    /// 1-based time of the transition (from `t` to `t + 1`).
    pub time: usize,
    pub state: u8,
    pub action: u8,
    pub next_state: u8,
}

/// Append-only log of observed transitions; the only data learners see.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    records: Vec<TransitionRecord>,
    last_time: usize,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TransitionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of completed timesteps.
    pub fn last_time(&self) -> usize {
        self.last_time
    }

    /// Record one full timestep: `N` records for time `t`.
    pub fn push_step(
        &mut self,
        t: usize,
        state: &SystemState,
        actions: &ActionVector,
        next: &SystemState,
    ) -> Result<()> {
        if t != self.last_time + 1 {
            return Err(Error::TraceGap { expected: self.last_time + 1, got: t });
        }
        if state.len() != actions.len() || state.len() != next.len() {
            return Err(Error::ShapeMismatch("history step vectors differ in length".into()));
        }
        self.records.extend((0..state.len()).map(|i| TransitionRecord {
            arm: i,
            time: t,
            state: state.as_slice()[i],
            action: actions.as_slice()[i],
            next_state: next.as_slice()[i],
        }));
        self.last_time = t;
        Ok(())
    }

    /// Append a single record without the per-step bookkeeping. Used when
    /// assembling synthetic designs; callers own the ordering invariant.
    pub fn push_record(&mut self, rec: TransitionRecord) {
        self.last_time = self.last_time.max(rec.time);
        self.records.push(rec);
    }
}

/// Per-timestep rewards for one episode. Index 0 holds `t = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub step_reward: Vec<usize>,
    pub time_avg_reward: Vec<f64>,
    pub cum_reward: Vec<u64>,
}

impl RewardTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.step_reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_reward.is_empty()
    }

    /// Append the reward of `state` at time `t`; the trace must already
    /// hold `t - 1` entries.
    pub fn record_reward(&mut self, t: usize, state: &SystemState) -> Result<()> {
        let expected = self.len() + 1;
        if t != expected {
            return Err(Error::TraceGap { expected, got: t });
        }
        let r = state.count_ones();
        let prev_avg = self.time_avg_reward.last().copied().unwrap_or(0.0);
        let prev_cum = self.cum_reward.last().copied().unwrap_or(0);
        let tf = t as f64;
        self.step_reward.push(r);
        self.time_avg_reward.push(((tf - 1.0) * prev_avg + r as f64) / tf);
        self.cum_reward.push(prev_cum + r as u64);
        Ok(())
    }
}
