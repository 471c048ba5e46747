//! Exploration, advisor-reuse and learning-rate schedules plus visit counters.

use crate::error::{Error, Result};
use crate::game::StateId;

/// Linearly decaying probability of deferring to the advisors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprSchedule {
    pub initial: f64,
    /// Episodes until the probability reaches 0.
    pub horizon: usize,
}

impl PprSchedule {
    pub fn new(initial: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&initial) {
            return Err(Error::config(format!("ppr initial {initial} not in [0, 1]")));
        }
        Ok(PprSchedule { initial, horizon })
    }

    /// Never defer to advisors.
    pub fn off() -> Self {
        PprSchedule { initial: 0.0, horizon: 0 }
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        ppr_epsilon(self, episode)
    }
}

pub fn ppr_epsilon(schedule: &PprSchedule, episode: usize) -> f64 {
    if schedule.horizon == 0 {
        return 0.0;
    }
    let frac = 1.0 - episode as f64 / schedule.horizon as f64;
    (schedule.initial * frac.max(0.0)).clamp(0.0, 1.0)
}

/// Random-action threshold `epsilon` and ensemble-vs-random-advisor split `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationPolicy {
    pub epsilon: f64,
    pub eta: f64,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        ExplorationPolicy { epsilon: 0.95, eta: 0.9 }
    }
}

impl ExplorationPolicy {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.epsilon) {
            problems.push(format!("epsilon {} not in [0, 1]", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            problems.push(format!("eta {} not in [0, 1]", self.eta));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRateSchedule {
    Constant(f64),
    /// `count^-omega`, omega in (1/2, 1).
    Polynomial(f64),
    /// `1 / count`.
    Linear,
}

impl LearningRateSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningRateSchedule::Constant(a) if !(0.0..=1.0).contains(&a) => {
                Err(Error::config(format!("constant learning rate {a} not in [0, 1]")))
            }
            LearningRateSchedule::Polynomial(w) if !(w > 0.5 && w < 1.0) => Err(Error::config(
                format!("polynomial exponent {w} not in (1/2, 1)"),
            )),
            _ => Ok(()),
        }
    }

    /// Rate for a pair visited `count` times, the current visit included.
    /// Assumes a validated schedule.
    pub fn rate(&self, count: u64) -> f64 {
        let n = count.max(1) as f64;
        match *self {
            LearningRateSchedule::Constant(a) => a,
            LearningRateSchedule::Polynomial(w) => n.powf(-w),
            LearningRateSchedule::Linear => 1.0 / n,
        }
    }
}

pub fn learning_rate(schedule: &LearningRateSchedule, pair_count: u64) -> Result<f64> {
    schedule.validate()?;
    if pair_count == 0 {
        return Err(Error::contract("pair count must include the current visit"));
    }
    Ok(schedule.rate(pair_count))
}

/// State visit counts and per-(state, joint action) counts for one agent.
///
/// Pairs are addressed by a caller-chosen dense index so the counter can
/// follow whatever keying the agent's tables use.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisitCounters {
    mu: Vec<u64>,
    pairs: Vec<u64>,
}

impl VisitCounters {
    pub fn new(num_states: usize, num_pairs: usize) -> Self {
        VisitCounters {
            mu: vec![0; num_states],
            pairs: vec![0; num_pairs],
        }
    }

    pub fn visit_state(&mut self, s: StateId) -> u64 {
        self.mu[s] += 1;
        self.mu[s]
    }

    pub fn mu(&self, s: StateId) -> u64 {
        self.mu[s]
    }

    pub fn visit_pair(&mut self, pair: usize) -> u64 {
        self.pairs[pair] += 1;
        self.pairs[pair]
    }

    pub fn pair_count(&self, pair: usize) -> u64 {
        self.pairs[pair]
    }
}
