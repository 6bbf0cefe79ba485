//! Whittle indices for two-state arms.
//!
//! The index of an arm in state `s` is the smallest penalty `m` on the
//! active action at which pulling stops being strictly better than idling,
//! under the discounted Bellman system with reward `R(s, a) = s`. It is
//! located by binary search over `m`, solving the penalized MDP by value
//! iteration at every probe.

use crate::error::{Error, Result};
use crate::rmab::{ActionVector, StateActionTable, SystemState};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;

/// Per-arm transition probabilities at one effective time: `p[s][a]` is
/// the probability of moving to state 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSnapshot {
    pub p: StateActionTable,
}

impl ArmSnapshot {
    pub fn new(p: StateActionTable) -> Self {
        Self { p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "WhittleConfigFile")]
pub struct WhittleConfig {
    pub gamma: f64,
    /// Target sup-norm error of the value-iteration fixed point.
    pub vi_tol: f64,
    pub vi_max_iters: usize,
    /// Width of the final binary-search interval.
    pub bs_tol: f64,
    /// Penalty search interval `[lo, hi]`.
    pub bracket: (f64, f64),
}

impl WhittleConfig {
    /// Defaults with the bracket `±(1/(1-γ) + 1)`.
    pub fn with_gamma(gamma: f64) -> Self {
        Self { gamma, bracket: default_bracket(gamma), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if !(self.vi_tol > 0.0 && self.bs_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.vi_max_iters == 0 {
            return Err(Error::Config("vi_max_iters must be positive".into()));
        }
        if !(self.bracket.0 < self.bracket.1) {
            return Err(Error::Config(format!("empty bracket {:?}", self.bracket)));
        }
        Ok(())
    }
}

impl Default for WhittleConfig {
    fn default() -> Self {
        Self { gamma: 0.9, vi_tol: 1e-6, vi_max_iters: 10_000, bs_tol: 1e-4, bracket: default_bracket(0.9) }
    }
}

/// Config-file form: every field optional, and a missing bracket follows
/// the configured discount.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhittleConfigFile {
    gamma: Option<f64>,
    vi_tol: Option<f64>,
    vi_max_iters: Option<usize>,
    bs_tol: Option<f64>,
    bracket: Option<(f64, f64)>,
}

impl From<WhittleConfigFile> for WhittleConfig {
    fn from(f: WhittleConfigFile) -> Self {
        let base = WhittleConfig::with_gamma(f.gamma.unwrap_or(0.9));
        Self {
            gamma: base.gamma,
            vi_tol: f.vi_tol.unwrap_or(base.vi_tol),
            vi_max_iters: f.vi_max_iters.unwrap_or(base.vi_max_iters),
            bs_tol: f.bs_tol.unwrap_or(base.bs_tol),
            bracket: f.bracket.unwrap_or(base.bracket),
        }
    }
}

pub fn default_bracket(gamma: f64) -> (f64, f64) {
    let half = 1.0 / (1.0 - gamma) + 1.0;
    (-half, half)
}

/// Penalized Q and V values of a two-state arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValues {
    pub q: [[f64; 2]; 2],
    pub v: [f64; 2],
    pub sweeps: usize,
}

impl QValues {
    /// `Q(s, 1) − Q(s, 0)`.
    pub fn gap(&self, state: usize) -> f64 {
        self.q[state][1] - self.q[state][0]
    }
}

#[inline]
fn q_values(arm: &ArmSnapshot, penalty: f64, gamma: f64, v: [f64; 2]) -> [[f64; 2]; 2] {
    let mut q = [[0.0; 2]; 2];
    for s in 0..2 {
        for a in 0..2 {
            let p1 = arm.p[s][a];
            q[s][a] = -penalty * a as f64 + s as f64 + gamma * (p1 * v[1] + (1.0 - p1) * v[0]);
        }
    }
    q
}

#[inline]
pub(crate) fn bellman_sweep(arm: &ArmSnapshot, penalty: f64, gamma: f64, v: [f64; 2]) -> [f64; 2] {
    let q = q_values(arm, penalty, gamma, v);
    [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])]
}

/// Solve the penalized Bellman system by value iteration from `V = 0`.
///
/// Stops once the sup-norm change of a sweep is at most
/// `vi_tol·(1−γ)/(2γ)`, which bounds the distance to the true fixed point
/// by `vi_tol`.
pub fn value_iteration(arm: &ArmSnapshot, penalty: f64, cfg: &WhittleConfig) -> Result<QValues> {
    let gamma = cfg.gamma;
    let threshold = cfg.vi_tol * (1.0 - gamma) / (2.0 * gamma);
    let mut v = [0.0; 2];
    let mut residual = f64::INFINITY;
    for sweep in 1..=cfg.vi_max_iters {
        let next = bellman_sweep(arm, penalty, gamma, v);
        residual = (next[0] - v[0]).abs().max((next[1] - v[1]).abs());
        v = next;
        if residual <= threshold {
            let q = q_values(arm, penalty, gamma, v);
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            return Ok(QValues { q, v, sweeps: sweep });
        }
    }
    Err(Error::NonConvergence { iters: cfg.vi_max_iters, residual })
}

/// Exact solution of the penalized system: the optimal value is the
/// pointwise maximum over the four deterministic stationary policies,
/// each evaluated by a 2×2 linear solve.
pub fn exact_q_values(arm: &ArmSnapshot, penalty: f64, gamma: f64) -> QValues {
    let mut best = [f64::NEG_INFINITY; 2];
    for a0 in 0..2 {
        for a1 in 0..2 {
            let (p0, p1) = (arm.p[0][a0], arm.p[1][a1]);
            let r0 = -penalty * a0 as f64;
            let r1 = 1.0 - penalty * a1 as f64;
            // (I − γP) V = r with rows P_s = (1 − p_s, p_s).
            let a11 = 1.0 - gamma * (1.0 - p0);
            let a12 = -gamma * p0;
            let a21 = -gamma * (1.0 - p1);
            let a22 = 1.0 - gamma * p1;
            let det = a11 * a22 - a12 * a21;
            let v0 = (r0 * a22 - a12 * r1) / det;
            let v1 = (a11 * r1 - a21 * r0) / det;
            best[0] = best[0].max(v0);
            best[1] = best[1].max(v1);
        }
    }
    let q = q_values(arm, penalty, gamma, best);
    QValues { q, v: [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])], sweeps: 0 }
}

enum Search {
    Index(f64),
    /// Abandoned: the index is at most this bound.
    BelowCutoff(f64),
    NoSignChange(f64),
}

fn search(
    arm: &ArmSnapshot,
    state: usize,
    cfg: &WhittleConfig,
    cutoff: Option<f64>,
    sweeps: &mut u64,
) -> Result<Search> {
    let mut gap = |m: f64| -> Result<f64> {
        let qv = value_iteration(arm, m, cfg)?;
        *sweeps += qv.sweeps as u64;
        Ok(qv.gap(state))
    };
    let (mut lo, mut hi) = cfg.bracket;
    if gap(lo)? <= 0.0 {
        return Ok(Search::NoSignChange(lo));
    }
    if gap(hi)? > 0.0 {
        return Ok(Search::NoSignChange(hi));
    }
    while hi - lo > cfg.bs_tol {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            if let Some(c) = cutoff {
                if hi < c {
                    return Ok(Search::BelowCutoff(hi));
                }
            }
        }
    }
    Ok(Search::Index(0.5 * (lo + hi)))
}

/// Whittle index by binary search over the configured bracket.
///
/// When the action gap has the same sign at both bracket ends the arm
/// violates the indexability assumption over the bracket; the error carries
/// the endpoint on whose side the gap lies.
pub fn whittle_index(arm: &ArmSnapshot, state: usize, cfg: &WhittleConfig) -> Result<f64> {
    let mut sweeps = 0;
    match search(arm, state, cfg, None, &mut sweeps)? {
        Search::Index(m) => Ok(m),
        Search::NoSignChange(fallback) => {
            Err(Error::NoSignChange { lo: cfg.bracket.0, hi: cfg.bracket.1, fallback })
        }
        Search::BelowCutoff(_) => unreachable!("no cutoff supplied"),
    }
}

/// [`whittle_index`] with the bracket-endpoint fallback applied.
pub fn whittle_index_or_fallback(arm: &ArmSnapshot, state: usize, cfg: &WhittleConfig) -> Result<f64> {
    match whittle_index(arm, state, cfg) {
        Err(Error::NoSignChange { fallback, .. }) => Ok(fallback),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOracle {
    pub index: f64,
    /// False when no grid point satisfied the crossing condition; `index`
    /// is then the upper end of the grid.
    pub crossed: bool,
}

/// Reference index: the smallest point of a uniform grid over the default
/// bracket at which idling is at least as good as pulling, using the exact
/// Bellman solution at every point.
pub fn whittle_index_grid_oracle(arm: &ArmSnapshot, state: usize, gamma: f64, grid_step: f64) -> GridOracle {
    assert!(grid_step > 0.0, "grid_step must be positive");
    let (lo, hi) = default_bracket(gamma);
    let n = ((hi - lo) / grid_step + 1e-9).floor() as usize;
    for j in 0..=n {
        let m = lo + j as f64 * grid_step;
        if exact_q_values(arm, m, gamma).gap(state) <= 0.0 {
            return GridOracle { index: m, crossed: true };
        }
    }
    GridOracle { index: lo + n as f64 * grid_step, crossed: false }
}

fn rank_desc(values: &[f64], a: usize, b: usize) -> Ordering {
    let (x, y) = (values[a], values[b]);
    // NaN ranks last.
    match (x.is_nan(), y.is_nan()) {
        (true, true) => a.cmp(&b),
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => y.partial_cmp(&x).unwrap().then(a.cmp(&b)),
    }
}

/// Pull the `budget` arms with the largest values; ties go to the lower arm
/// index.
pub fn select_top_b(values: &[f64], budget: usize) -> Result<ActionVector> {
    let n = values.len();
    if budget > n {
        return Err(Error::BudgetExceedsArms { budget, n_arms: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rank_desc(values, a, b));
    Ok(ActionVector::from_pulled(n, &order[..budget]))
}

/// Counters for the harness log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    pub vi_sweeps: u64,
    pub index_searches: u64,
    pub memo_hits: u64,
    pub early_skips: u64,
    pub indexability_failures: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct MemoKey {
    p: [[i64; 2]; 2],
    state: u8,
}

#[derive(Debug, Clone, Copy)]
enum MemoEntry {
    Exact(f64),
    UpperBound(f64),
}

fn quantize(p: f64) -> i64 {
    (p * 1e12).round() as i64
}

/// Cache of index results keyed on the snapshot quantized to 12 decimals
/// and the state. Tied to one [`WhittleConfig`].
#[derive(Debug, Clone, Default)]
pub struct IndexMemo {
    entries: HashMap<MemoKey, MemoEntry>,
}

impl IndexMemo {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOptions {
    pub memoize: bool,
    pub early_termination: bool,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self { memoize: true, early_termination: true }
    }
}

/// Whittle index policy: index every arm at its current state and pull the
/// top `budget`.
#[derive(Debug, Clone)]
pub struct WhittlePolicy {
    cfg: WhittleConfig,
    options: PolicyOptions,
    memo: IndexMemo,
    stats: SolverStats,
}

impl WhittlePolicy {
    pub fn new(cfg: WhittleConfig, options: PolicyOptions) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, options, memo: IndexMemo::default(), stats: SolverStats::default() })
    }

    pub fn config(&self) -> &WhittleConfig {
        &self.cfg
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn memo(&self) -> &IndexMemo {
        &self.memo
    }

    /// Index of every arm, computed exactly (no early termination).
    pub fn indices(&mut self, snapshots: &[ArmSnapshot], states: &SystemState) -> Result<Vec<f64>> {
        (0..snapshots.len())
            .map(|i| {
                let v = self.index_with_cutoff(&snapshots[i], states.get(i), None)?;
                Ok(v.expect("no cutoff"))
            })
            .collect()
    }

    fn index_with_cutoff(&mut self, arm: &ArmSnapshot, state: usize, cutoff: Option<f64>) -> Result<Option<f64>> {
        let key = MemoKey {
            p: [[quantize(arm.p[0][0]), quantize(arm.p[0][1])], [quantize(arm.p[1][0]), quantize(arm.p[1][1])]],
            state: state as u8,
        };
        if self.options.memoize {
            match self.memo.entries.get(&key) {
                Some(MemoEntry::Exact(v)) => {
                    self.stats.memo_hits += 1;
                    return Ok(Some(*v));
                }
                Some(MemoEntry::UpperBound(b)) if cutoff.is_some_and(|c| *b < c) => {
                    self.stats.memo_hits += 1;
                    self.stats.early_skips += 1;
                    return Ok(None);
                }
                _ => {}
            }
        }
        self.stats.index_searches += 1;
        let (value, entry) = match search(arm, state, &self.cfg, cutoff, &mut self.stats.vi_sweeps)? {
            Search::Index(m) => (Some(m), MemoEntry::Exact(m)),
            Search::NoSignChange(m) => {
                self.stats.indexability_failures += 1;
                (Some(m), MemoEntry::Exact(m))
            }
            Search::BelowCutoff(b) => {
                self.stats.early_skips += 1;
                (None, MemoEntry::UpperBound(b))
            }
        };
        if self.options.memoize {
            self.memo.entries.insert(key, entry);
        }
        Ok(value)
    }

    /// Choose exactly `budget` arms.
    ///
    /// Arms are processed in index order. With early termination, an arm's
    /// search is abandoned once its upper bound falls strictly below the
    /// current `budget`-th best index; such an arm cannot displace an
    /// earlier arm under the lowest-index tie rule, so the selection equals
    /// the exhaustive one.
    pub fn select(&mut self, snapshots: &[ArmSnapshot], states: &SystemState, budget: usize) -> Result<ActionVector> {
        let n = snapshots.len();
        if budget > n {
            return Err(Error::BudgetExceedsArms { budget, n_arms: n });
        }
        if states.len() != n {
            return Err(Error::ShapeMismatch(format!("{} states for {n} snapshots", states.len())));
        }
        let mut values = vec![f64::NEG_INFINITY; n];
        // Ascending list of the best `budget` indices seen so far.
        let mut top: Vec<f64> = Vec::with_capacity(budget + 1);
        for i in 0..n {
            let cutoff = if self.options.early_termination && budget > 0 && top.len() == budget {
                Some(top[0])
            } else {
                None
            };
            if let Some(v) = self.index_with_cutoff(&snapshots[i], states.get(i), cutoff)? {
                values[i] = v;
                if budget > 0 {
                    let pos = top.partition_point(|&x| x < v);
                    top.insert(pos, v);
                    if top.len() > budget {
                        top.remove(0);
                    }
                }
            }
        }
        select_top_b(&values, budget)
    }
}
