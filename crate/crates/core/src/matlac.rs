//! Two-level actor-critic from multiple advisors, tabular softmax version.
//!
//! Actors are logits over own actions (low) and over advisors (high) and
//! see only the state. Critics are keyed by state and the other agents'
//! joint action, like the Q-learning variant. The advisor to follow is
//! sampled from the high-level actor rather than chosen by vote.

use std::hash::Hash;

use rand::distributions::{Distribution, WeightedIndex};
use rand::RngCore;

use crate::advisors::{Advisor, AdvisorId};
use crate::error::{Error, Result};
use crate::game::{ActionId, Environment, StateId};
use crate::learner::{
    decide_with_branches, hash_of, ActionSource, AgentLearner, Decision, DecisionView, Transition,
};
use crate::schedule::{ExplorationPolicy, LearningRateSchedule, VisitCounters};
use crate::tables::{argmax, render_checkpoint, QTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Own actions; bootstraps from the best next action.
    Low,
    /// Advisors; bootstraps from the followed advisor at the next state.
    High,
}

/// TD target for a critic. `choice_next` is the followed advisor for the
/// high level and ignored for the low level.
#[allow(clippy::too_many_arguments)]
pub fn critic_target(
    level: Level,
    critic: &QTable,
    r: f64,
    s_next: StateId,
    others_next: usize,
    choice_next: usize,
    gamma: f64,
    terminal: bool,
) -> f64 {
    if terminal {
        return r;
    }
    match level {
        Level::Low => r + gamma * critic.max(s_next, others_next),
        Level::High => r + gamma * critic.get(s_next, others_next, choice_next),
    }
}

/// `y` minus the policy-weighted mean of the critic row.
pub fn advantage(y: f64, policy: &[f64], q_row: &[f64]) -> f64 {
    y - policy.iter().zip(q_row).map(|(p, q)| p * q).sum::<f64>()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Gradient ascent on `advantage * log pi(chosen)` for softmax logits.
pub fn actor_update(logits: &mut [f64], chosen: usize, advantage: f64, rate: f64) {
    let pi = softmax(logits);
    for (b, l) in logits.iter_mut().enumerate() {
        let indicator = if b == chosen { 1.0 } else { 0.0 };
        *l += rate * advantage * (indicator - pi[b]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatlacConfig {
    pub exploration: ExplorationPolicy,
    pub critic_rate: LearningRateSchedule,
    pub actor_rate: f64,
    pub discount: f64,
}

impl Default for MatlacConfig {
    fn default() -> Self {
        MatlacConfig {
            exploration: ExplorationPolicy::default(),
            critic_rate: LearningRateSchedule::Constant(0.1),
            actor_rate: 0.01,
            discount: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Matlac {
    config: MatlacConfig,
    actor_low: QTable,
    actor_high: QTable,
    critic_low: QTable,
    critic_high: QTable,
    counters: VisitCounters,
}

fn sample(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    WeightedIndex::new(probs)
        .map(|w| w.sample(rng))
        .unwrap_or(0)
}

impl Matlac {
    pub fn new(
        env: &dyn Environment,
        agent: usize,
        num_advisors: usize,
        config: MatlacConfig,
    ) -> Result<Self> {
        config.exploration.validate()?;
        config.critic_rate.validate()?;
        if config.actor_rate.is_nan() || config.actor_rate <= 0.0 {
            return Err(Error::config(format!(
                "actor rate {} must be positive",
                config.actor_rate
            )));
        }
        let states = env.num_states();
        let others = env.joint_space().others_count(agent);
        let n = env.action_space_sizes()[agent];
        Ok(Matlac {
            config,
            actor_low: QTable::new(states, 1, n)?,
            actor_high: QTable::new(states, 1, num_advisors)?,
            critic_low: QTable::new(states, others, n)?,
            critic_high: QTable::new(states, others, num_advisors)?,
            counters: VisitCounters::new(states, states * others * n),
        })
    }

    pub fn low_policy(&self, s: StateId) -> Vec<f64> {
        softmax(self.actor_low.row(s, 0))
    }

    pub fn high_policy(&self, s: StateId) -> Vec<f64> {
        softmax(self.actor_high.row(s, 0))
    }

    pub fn critic_low(&self) -> &QTable {
        &self.critic_low
    }

    pub fn critic_high(&self) -> &QTable {
        &self.critic_high
    }

    pub fn actor_low(&self) -> &QTable {
        &self.actor_low
    }

    pub fn actor_high(&self) -> &QTable {
        &self.actor_high
    }

    fn step_level(&mut self, level: Level, t: &Transition<'_>, choice: usize, alpha: f64) {
        let gamma = self.config.discount;
        let (critic, actor) = match level {
            Level::Low => (&mut self.critic_low, &mut self.actor_low),
            Level::High => (&mut self.critic_high, &mut self.actor_high),
        };
        let y = critic_target(
            level,
            critic,
            t.reward,
            t.next_state,
            t.next_others,
            choice,
            gamma,
            t.terminal,
        );
        let q = critic.get(t.state, t.others, choice);
        critic.set(t.state, t.others, choice, q + alpha * (y - q));
        let pi = softmax(actor.row(t.state, 0));
        let a = advantage(y, &pi, critic.row(t.state, t.others));
        actor_update(actor.row_mut(t.state, 0), choice, a, self.config.actor_rate);
    }
}

impl AgentLearner for Matlac {
    fn name(&self) -> &str {
        "matlac"
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let s = view.context.state;
        if !view.training {
            return Ok(Decision::own(argmax(self.actor_low.row(s, 0))));
        }
        self.counters.visit_state(s);
        let high = self.high_policy(s);
        let low = self.low_policy(s);
        decide_with_branches(
            view,
            advisors,
            rng,
            self.config.exploration.epsilon,
            self.config.exploration.eta,
            |_, rng| Ok::<AdvisorId, Error>(sample(&high, rng)),
            |rng| sample(&low, rng),
        )
    }

    fn learn(&mut self, t: &Transition<'_>) -> Result<()> {
        let pair = self.critic_low.row_index(t.state, t.others) * self.critic_low.width() + t.action;
        let alpha = self.config.critic_rate.rate(self.counters.visit_pair(pair));
        self.step_level(Level::Low, t, t.action, alpha);
        if let ActionSource::Advisor(ad) = t.source {
            self.step_level(Level::High, t, ad, alpha);
        }
        Ok(())
    }

    fn low_value(&self, s: StateId, others: usize, a: ActionId) -> f64 {
        self.critic_low.get(s, others, a)
    }

    fn keys_joint_actions(&self) -> bool {
        true
    }

    fn checkpoint(&self) -> String {
        let mut e = Vec::new();
        self.actor_low.write_entries("ACTOR_LOW", &mut e);
        self.actor_high.write_entries("ACTOR_HIGH", &mut e);
        self.critic_low.write_entries("CRITIC_LOW", &mut e);
        self.critic_high.write_entries("CRITIC_HIGH", &mut e);
        render_checkpoint(e)
    }

    fn fingerprint(&self) -> u64 {
        hash_of(|h| {
            self.actor_low.hash_bits(h);
            self.actor_high.hash_bits(h);
            self.critic_low.hash_bits(h);
            self.critic_high.hash_bits(h);
            self.counters.hash(h);
        })
    }
}
