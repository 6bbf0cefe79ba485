//! Posterior sampling learner: one draw from the hierarchical model per
//! timestep, plugged into the Whittle (or greedy) policy.

use super::{choose, random_act, Learner, LearnerConfig, LearnerContext, LearnerId, PolicyKind};
use crate::error::Result;
use crate::model::{posterior_sample, transitions_from_draw, Chain, HyperParams, McmcConfig, PosteriorDraw};
use crate::rmab::{ActionVector, History, SystemState};
use crate::rng::Stream;
use crate::whittle::{SolverStats, WhittlePolicy};

pub struct BcorLearner {
    id: LearnerId,
    ctx: LearnerContext,
    hyper: HyperParams,
    mcmc: McmcConfig,
    kind: PolicyKind,
    policy: WhittlePolicy,
    history: History,
    chain: Option<Chain>,
    rng: Stream,
}

impl BcorLearner {
    pub fn new(id: LearnerId, ctx: LearnerContext, cfg: &LearnerConfig, kind: PolicyKind, rng: Stream) -> Result<Self> {
        cfg.hyper.validate()?;
        cfg.mcmc.validate()?;
        Ok(Self {
            id,
            ctx,
            hyper: cfg.hyper,
            mcmc: cfg.mcmc,
            kind,
            policy: WhittlePolicy::new(cfg.whittle, cfg.policy)?,
            history: History::new(),
            chain: None,
            rng,
        })
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Most recent posterior draw, if any.
    pub fn last_draw(&self) -> Option<&PosteriorDraw> {
        self.chain.as_ref().map(|c| &c.draw)
    }

    /// Act on a fixed draw.
    pub fn act_on_draw(&mut self, draw: &PosteriorDraw, t: usize, state: &SystemState) -> Result<ActionVector> {
        let est = transitions_from_draw(draw, &self.ctx.covariates, &self.ctx.spline_basis, t)?;
        choose(self.kind, &mut self.policy, &est, state, self.ctx.budget)
    }
}

impl Learner for BcorLearner {
    fn id(&self) -> LearnerId {
        self.id
    }

    fn act(&mut self, t: usize, state: &SystemState) -> Result<ActionVector> {
        if self.history.is_empty() {
            return random_act(self.ctx.budget, self.ctx.n_arms, &mut self.rng);
        }
        let chain = posterior_sample(
            &self.history,
            &self.ctx.covariates,
            &self.ctx.spline_basis,
            &self.hyper,
            &self.mcmc,
            &mut self.rng,
            self.chain.take(),
        )?;
        let draw = chain.draw.clone();
        self.chain = Some(chain);
        self.act_on_draw(&draw, t, state)
    }

    fn observe(&mut self, t: usize, state: &SystemState, actions: &ActionVector, next: &SystemState) -> Result<()> {
        self.history.push_step(t, state, actions, next)
    }

    fn solver_stats(&self) -> Option<SolverStats> {
        Some(self.policy.stats())
    }
}
