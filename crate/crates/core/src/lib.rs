//! Online learning for contextual, non-stationary restless bandits with a
//! hierarchical Bayesian probit model, Thompson sampling and the Whittle
//! index policy.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod error;
pub mod generate;
pub mod harness;
pub mod learners;
pub mod model;
pub mod normal;
pub mod rmab;
pub mod rng;
pub mod whittle;

pub use error::{Error, Result};
pub use generate::{gen_instance, CovariateSpec, GenSetting, GenSpec, SplineSpec};
pub use harness::{aggregate, run_episode, run_experiment, AggregateRow, ExperimentConfig, RunRecord, SeedSpec};
pub use learners::{make_learner, Learner, LearnerConfig, LearnerId};
pub use model::{posterior_sample, HyperParams, McmcConfig, PosteriorDraw};
pub use rmab::{ActionVector, History, RewardTrace, RmabInstance, SystemState};
pub use whittle::{ArmSnapshot, PolicyOptions, WhittleConfig, WhittlePolicy};
