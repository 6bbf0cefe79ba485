//! Benchmark workloads.

use bcor_core::harness::{initial_state, instance_for_seed};
use bcor_core::learners::{random_act, LearnerConfig};
use bcor_core::rmab::step;
use bcor_core::rng::{substream, ENVIRONMENT};
use bcor_core::{ArmSnapshot, ExperimentConfig, History, RmabInstance, SystemState};
use rand::Rng;

/// `n` arms with uniform random dynamics and random states.
pub fn policy_workload(n: usize, seed: u64) -> (Vec<ArmSnapshot>, SystemState) {
    let mut rng = substream(seed, "bench/policy");
    let snaps = (0..n)
        .map(|_| ArmSnapshot::new([[rng.random(), rng.random()], [rng.random(), rng.random()]]))
        .collect();
    (snaps, SystemState::random(n, &mut rng))
}

/// A well-specified instance and a full random-policy history over its
/// horizon.
pub fn posterior_workload(n: usize, horizon: usize, seed: u64) -> (RmabInstance, History, LearnerConfig) {
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"setting": "a", "N": {n}, "T": {horizon}, "B": 4, "k": 4, "d": 4, "seeds": [{seed}], "learners": ["random"]}}"#
    ))
    .expect("valid benchmark config");
    let inst = instance_for_seed(&cfg, seed, None).expect("instance");
    let mut env = substream(seed, ENVIRONMENT);
    let mut pick = substream(seed, "bench/actions");
    let mut state = initial_state(n, seed);
    let mut history = History::new();
    for t in 1..horizon {
        let a = random_act(inst.budget, n, &mut pick).expect("budget within arms");
        let next = step(&inst, t, &state, &a, &mut env).expect("valid step");
        history.push_step(t, &state, &a, &next).expect("ordered history");
        state = next;
    }
    (inst, history, cfg.learner_config())
}
