//! Seeded episodes, experiments and their CSV outputs.

mod config;
mod output;

pub use config::{ExperimentConfig, SeedSpec};
pub use output::{
    aggregate, emit_plot_data, format_sig, read_aggregate_csv, read_runs_csv, write_aggregate_csv, write_plot_data,
    write_runs_csv, AggregateRow, RunRecord, AGGREGATE_HEADER, PLOT_HEADER, RUNS_HEADER,
};

use crate::error::{Error, Result};
use crate::generate::gen_instance;
use crate::learners::{make_learner, LearnerConfig, LearnerId};
use crate::rmab::{step, ActionVector, RewardTrace, RmabInstance, SystemState};
use crate::rng::{substream, ENVIRONMENT, INITIAL_STATE, INSTANCE};
use crate::whittle::SolverStats;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trace: RewardTrace,
    /// Actions taken at `t = 1..T-1` (the last state is only scored).
    pub actions: Vec<ActionVector>,
    pub stats: Option<SolverStats>,
}

/// Shared initial state of every learner for `seed`.
pub fn initial_state(n_arms: usize, seed: u64) -> SystemState {
    SystemState::random(n_arms, &mut substream(seed, INITIAL_STATE))
}

/// Run one learner for a full horizon.
///
/// Each timestep scores the current state, then (before the horizon) asks
/// the learner for actions, advances the environment and reports the
/// transition back. The environment stream is derived from `seed` alone, so
/// all learners in a seed face common random numbers.
pub fn run_episode(id: LearnerId, inst: &Arc<RmabInstance>, seed: u64, cfg: &LearnerConfig) -> Result<Episode> {
    let mut learner = make_learner(id, inst, cfg, seed)?;
    let mut env = substream(seed, ENVIRONMENT);
    let mut state = initial_state(inst.n_arms, seed);
    let mut trace = RewardTrace::new();
    let mut actions = Vec::with_capacity(inst.horizon.saturating_sub(1));
    for t in 1..=inst.horizon {
        trace.record_reward(t, &state)?;
        if t == inst.horizon {
            break;
        }
        let a = learner.act(t, &state)?;
        a.check_budget(inst.budget)?;
        let next = step(inst, t, &state, &a, &mut env)?;
        learner.observe(t, &state, &a, &next)?;
        actions.push(a);
        state = next;
    }
    Ok(Episode { trace, actions, stats: learner.solver_stats() })
}

/// Instance for `seed`: loaded (shared by every seed) or generated from the
/// seed's instance stream.
pub fn instance_for_seed(cfg: &ExperimentConfig, seed: u64, loaded: Option<&RmabInstance>) -> Result<RmabInstance> {
    match loaded {
        Some(inst) => Ok(inst.clone()),
        None => {
            let mut rng = substream(seed, INSTANCE);
            Ok(gen_instance(cfg.setting, &cfg.gen_spec()?, seed, &mut rng)?.0)
        }
    }
}

fn records_of(seed: u64, id: LearnerId, trace: &RewardTrace) -> Vec<RunRecord> {
    (0..trace.len())
        .map(|j| RunRecord {
            seed,
            learner: id,
            t: j + 1,
            step_reward: trace.step_reward[j],
            time_avg_reward: trace.time_avg_reward[j],
            cum_reward: trace.cum_reward[j],
        })
        .collect()
}

/// Every configured learner on every seed, sorted by (seed, learner, t).
/// `workers` sizes the thread pool; output does not depend on it.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let loaded = match &cfg.instance {
        Some(path) => {
            let inst = RmabInstance::from_json(&std::fs::read_to_string(path)?)?;
            if inst.n_arms != cfg.n_arms || inst.horizon != cfg.horizon || inst.budget != cfg.budget {
                return Err(Error::Config("instance file dimensions differ from the config".into()));
            }
            Some(inst)
        }
        None => None,
    };
    let lcfg = cfg.learner_config();
    let seeds = cfg.seeds.seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_seed: Result<Vec<Vec<RunRecord>>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let inst = Arc::new(instance_for_seed(cfg, seed, loaded.as_ref())?);
                let per_learner: Result<Vec<Vec<RunRecord>>> = cfg
                    .learners
                    .par_iter()
                    .map(|&id| Ok(records_of(seed, id, &run_episode(id, &inst, seed, &lcfg)?.trace)))
                    .collect();
                Ok(per_learner?.concat())
            })
            .collect()
    });
    let mut records = per_seed?.concat();
    records.sort_by(|a, b| (a.seed, a.learner.as_str(), a.t).cmp(&(b.seed, b.learner.as_str(), b.t)));
    Ok(records)
}
