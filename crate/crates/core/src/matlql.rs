//! Tabular two-level Q-learning from multiple advisors.
//!
//! Each agent keeps `lowQ(s, a^-j, a)` (own actions, control update) and
//! `highQ(s, a^-j, ad)` (advisors, evaluation update). While the reuse
//! probability is positive the agent may defer to its advisors, picking
//! among their recommendations by a visit-weighted vote.

use std::hash::Hash;

use rand::RngCore;

use crate::advisors::{Advisor, AdvisorId};
use crate::error::{Error, Result};
use crate::game::{ActionId, Environment, StateId};
use crate::learner::{
    credited, decide_with_branches, hash_of, AgentLearner, Decision, DecisionView, Transition,
    UpdateKind, UpdateRecord,
};
use crate::schedule::{ExplorationPolicy, LearningRateSchedule, VisitCounters};
use crate::tables::{render_checkpoint, HighQTable, LowQTable};

pub use crate::schedule::{learning_rate, ppr_epsilon};

/// The shared part of a temporal-difference update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdSample {
    pub state: StateId,
    pub others: usize,
    pub reward: f64,
    pub next_state: StateId,
    pub next_others: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub terminal: bool,
}

/// Evaluation update for the advisor `ad` that was followed: the target
/// bootstraps from the same advisor's value at the next state.
pub fn update_high_q(table: &mut HighQTable, ad: AdvisorId, td: &TdSample) -> f64 {
    let target = if td.terminal {
        td.reward
    } else {
        td.reward + td.gamma * table.get(td.next_state, td.next_others, ad)
    };
    let q = table.get(td.state, td.others, ad);
    let v = q + td.alpha * (target - q);
    table.set(td.state, td.others, ad, v);
    v
}

/// Control update for own action `a`: the target bootstraps from the best
/// own action at the next state given the others' next joint action.
pub fn update_low_q(table: &mut LowQTable, a: ActionId, td: &TdSample) -> f64 {
    let target = if td.terminal {
        td.reward
    } else {
        td.reward + td.gamma * table.max(td.next_state, td.next_others)
    };
    let q = table.get(td.state, td.others, a);
    let v = q + td.alpha * (target - q);
    table.set(td.state, td.others, a, v);
    v
}

/// Recommender with the highest estimate, lowest id on ties.
fn strongest(row: &[f64], recommenders: &[AdvisorId]) -> Result<AdvisorId> {
    let mut sorted = recommenders.to_vec();
    sorted.sort_unstable();
    let mut best = *sorted.first().ok_or(Error::UndefinedVote)?;
    for &k in &sorted[1..] {
        if row[k] > row[best] {
            best = k;
        }
    }
    Ok(best)
}

fn vote(row: &[f64], recommenders: &[AdvisorId], mu: u64) -> Result<f64> {
    if mu == 0 {
        return Err(Error::contract("state visit count must be at least 1 before a vote"));
    }
    let best = strongest(row, recommenders)?;
    let mut v = row[best];
    let mut seen_best = false;
    for &k in recommenders {
        if k == best && !seen_best {
            seen_best = true;
            continue;
        }
        v += row[k] / mu as f64;
    }
    Ok(v)
}

/// Value of voting for the action that `recommenders` all suggested: the
/// strongest recommender's estimate plus every other recommender's estimate
/// divided by the state visit count.
pub fn value_of_vote(
    high: &HighQTable,
    s: StateId,
    others: usize,
    recommenders: &[AdvisorId],
    mu_s: u64,
) -> Result<f64> {
    vote(high.row(s, others), recommenders, mu_s)
}

fn select_by_vote(row: &[f64], advice: &[ActionId], mu: u64) -> Result<(ActionId, AdvisorId)> {
    let mut actions: Vec<ActionId> = advice.to_vec();
    actions.sort_unstable();
    actions.dedup();
    let mut best: Option<(f64, ActionId, Vec<AdvisorId>)> = None;
    for a in actions {
        let recs: Vec<AdvisorId> = (0..advice.len()).filter(|&k| advice[k] == a).collect();
        let v = vote(row, &recs, mu)?;
        if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
            best = Some((v, a, recs));
        }
    }
    let (_, action, recs) = best.ok_or(Error::UndefinedVote)?;
    Ok((action, strongest(row, &recs)?))
}

/// Ensemble choice among advisor recommendations (`advice[k]` is advisor
/// `k`'s action). Returns the winning action and the advisor credited with
/// it.
pub fn select_advisor_action(
    high: &HighQTable,
    s: StateId,
    others: usize,
    advice: &[ActionId],
    mu_s: u64,
) -> Result<(ActionId, AdvisorId)> {
    select_by_vote(high.row(s, others), advice, mu_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaTlqlConfig {
    pub exploration: ExplorationPolicy,
    pub rate: LearningRateSchedule,
    pub discount: f64,
    /// Credit every advisor that recommended the executed action, not only
    /// the one that was followed.
    pub credit_concurring: bool,
}

impl Default for MaTlqlConfig {
    fn default() -> Self {
        MaTlqlConfig {
            exploration: ExplorationPolicy::default(),
            rate: LearningRateSchedule::Constant(0.1),
            discount: 0.9,
            credit_concurring: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaTlql {
    config: MaTlqlConfig,
    low: LowQTable,
    high: HighQTable,
    counters: VisitCounters,
    log: Option<Vec<UpdateRecord>>,
}

impl MaTlql {
    pub fn new(
        env: &dyn Environment,
        agent: usize,
        num_advisors: usize,
        config: MaTlqlConfig,
    ) -> Result<Self> {
        config.exploration.validate()?;
        config.rate.validate()?;
        let states = env.num_states();
        let others = env.joint_space().others_count(agent);
        let n = env.action_space_sizes()[agent];
        let low = LowQTable::new(states, others, n)?;
        Ok(MaTlql {
            high: HighQTable::new(states, others, num_advisors)?,
            counters: VisitCounters::new(states, states * others * n),
            low,
            config,
            log: None,
        })
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn low(&self) -> &LowQTable {
        &self.low
    }

    pub fn high(&self) -> &HighQTable {
        &self.high
    }

    pub fn low_mut(&mut self) -> &mut LowQTable {
        &mut self.low
    }

    pub fn counters(&self) -> &VisitCounters {
        &self.counters
    }

    fn record(&mut self, kind: UpdateKind, s: StateId, o: usize, key: usize, value: f64) {
        if let Some(log) = &mut self.log {
            log.push(UpdateRecord { kind, state: s, others: o, key, value });
        }
    }
}

impl AgentLearner for MaTlql {
    fn name(&self) -> &str {
        "matlql"
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let s = view.context.state;
        let o = view.others;
        if !view.training {
            return Ok(Decision::own(self.low.argmax(s, o)));
        }
        let mu = self.counters.visit_state(s);
        let high = &self.high;
        let low = &self.low;
        decide_with_branches(
            view,
            advisors,
            rng,
            self.config.exploration.epsilon,
            self.config.exploration.eta,
            |advice, _| Ok(select_advisor_action(high, s, o, advice, mu)?.1),
            |_| low.argmax(s, o),
        )
    }

    fn learn(&mut self, t: &Transition<'_>) -> Result<()> {
        let pair = self.low.row_index(t.state, t.others) * self.low.width() + t.action;
        let alpha = self.config.rate.rate(self.counters.visit_pair(pair));
        let td = TdSample {
            state: t.state,
            others: t.others,
            reward: t.reward,
            next_state: t.next_state,
            next_others: t.next_others,
            alpha,
            gamma: self.config.discount,
            terminal: t.terminal,
        };
        let v = update_low_q(&mut self.low, t.action, &td);
        self.record(UpdateKind::Control, t.state, t.others, t.action, v);
        for ad in credited(t, self.config.credit_concurring) {
            let v = update_high_q(&mut self.high, ad, &td);
            self.record(UpdateKind::Evaluation, t.state, t.others, ad, v);
        }
        Ok(())
    }

    fn low_value(&self, s: StateId, others: usize, a: ActionId) -> f64 {
        self.low.get(s, others, a)
    }

    fn keys_joint_actions(&self) -> bool {
        true
    }

    fn checkpoint(&self) -> String {
        let mut e = Vec::new();
        self.low.write_entries("LOW", &mut e);
        self.high.write_entries("HIGH", &mut e);
        render_checkpoint(e)
    }

    fn fingerprint(&self) -> u64 {
        hash_of(|h| {
            self.low.hash_bits(h);
            self.high.hash_bits(h);
            self.counters.hash(h);
        })
    }

    fn update_log(&self) -> &[UpdateRecord] {
        self.log.as_deref().unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn td(s: StateId, r: f64, s2: StateId, terminal: bool) -> TdSample {
        TdSample {
            state: s,
            others: 0,
            reward: r,
            next_state: s2,
            next_others: 0,
            alpha: 0.1,
            gamma: 0.9,
            terminal,
        }
    }

    #[test]
    fn evaluation_update_examples() {
        // state 1 = S2, 3 = S4, 0 = S1; advisor 1 = A2
        let mut h = HighQTable::new(6, 1, 2).unwrap();
        h.set(1, 0, 1, 0.1);
        let v = update_high_q(&mut h, 1, &td(1, -1.0, 3, true));
        assert!((v - -0.01).abs() < 1e-15);
        h.set(0, 0, 1, 0.009);
        let v = update_high_q(&mut h, 1, &td(0, 0.0, 1, false));
        assert!((v - 0.0072).abs() < 1e-15);
        let mut z = HighQTable::new(3, 1, 2).unwrap();
        assert_eq!(update_high_q(&mut z, 0, &td(0, 0.0, 1, false)), 0.0);
    }

    #[test]
    fn control_update_examples() {
        let mut l = LowQTable::new(6, 1, 2).unwrap();
        let v = update_low_q(&mut l, 0, &td(1, 1.0, 5, true));
        assert!((v - 0.1).abs() < 1e-15);
        l.set(0, 0, 0, 0.009);
        let v = update_low_q(&mut l, 0, &td(0, 0.0, 1, false));
        assert!((v - 0.0171).abs() < 1e-15);
        let before = l.get(0, 0, 0);
        let mut frozen = td(0, 5.0, 1, false);
        frozen.alpha = 0.0;
        assert_eq!(update_low_q(&mut l, 0, &frozen), before);
    }

    fn table_with(values: &[f64]) -> HighQTable {
        let mut h = HighQTable::new(1, 1, values.len()).unwrap();
        h.row_mut(0, 0).copy_from_slice(values);
        h
    }

    #[test]
    fn vote_examples() {
        let h = table_with(&[0.3]);
        assert_eq!(value_of_vote(&h, 0, 0, &[0], 1).unwrap(), 0.3);
        let h = table_with(&[0.5, 0.3]);
        assert!((value_of_vote(&h, 0, 0, &[0, 1], 2).unwrap() - 0.65).abs() < 1e-15);
        let h = table_with(&[0.5, 0.3, 0.2]);
        let v = value_of_vote(&h, 0, 0, &[0, 1, 2], 1_000_000).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
        assert!(matches!(value_of_vote(&h, 0, 0, &[], 3), Err(Error::UndefinedVote)));
    }

    #[test]
    fn tied_maxima_leave_exactly_one_term_unweighted() {
        let h = table_with(&[0.4, 0.4, 0.4]);
        let v = value_of_vote(&h, 0, 0, &[2, 0, 1], 4).unwrap();
        assert!((v - (0.4 + 0.1 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn crowd_then_individual() {
        // advisors 0..3 recommend action 1 with 0.1 each, advisor 3 recommends action 0 with 0.25
        let h = table_with(&[0.1, 0.1, 0.1, 0.25]);
        let advice = [1, 1, 1, 0];
        assert_eq!(select_advisor_action(&h, 0, 0, &advice, 1).unwrap(), (1, 0));
        assert_eq!(select_advisor_action(&h, 0, 0, &advice, 100).unwrap(), (0, 3));
        let unanimous = [1, 1, 1, 1];
        for mu in [1, 10, 1000] {
            assert_eq!(select_advisor_action(&h, 0, 0, &unanimous, mu).unwrap().0, 1);
        }
    }

    proptest! {
        #[test]
        fn single_recommender_vote_is_its_estimate(
            vals in proptest::collection::vec(-10.0f64..10.0, 1..6),
            k in 0usize..6,
            mu in 1u64..1000,
        ) {
            let k = k % vals.len();
            let h = table_with(&vals);
            prop_assert_eq!(value_of_vote(&h, 0, 0, &[k], mu).unwrap(), vals[k]);
        }

        #[test]
        fn shifting_equal_groups_keeps_the_winner(
            vals in proptest::collection::vec(-5.0f64..5.0, 4),
            c in -3.0f64..3.0,
            mu in 1u64..50,
        ) {
            // two groups of two
            let advice = [0, 1, 0, 1];
            let h = table_with(&vals);
            let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
            let hs = table_with(&shifted);
            let a = select_advisor_action(&h, 0, 0, &advice, mu).unwrap().0;
            let b = select_advisor_action(&hs, 0, 0, &advice, mu).unwrap().0;
            // exact ties can flip under rounding; only compare clear winners
            let gap = {
                let v0 = value_of_vote(&h, 0, 0, &[0, 2], mu).unwrap();
                let v1 = value_of_vote(&h, 0, 0, &[1, 3], mu).unwrap();
                (v0 - v1).abs()
            };
            prop_assume!(gap > 1e-9);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn evaluation_ignores_low_table(
            low_vals in proptest::collection::vec(-10.0f64..10.0, 8),
            q in -5.0f64..5.0,
            q_next in -5.0f64..5.0,
            r in -1.0f64..1.0,
        ) {
            let mut high_a = HighQTable::new(2, 2, 2).unwrap();
            high_a.set(0, 1, 1, q);
            high_a.set(1, 0, 1, q_next);
            let mut high_b = high_a.clone();
            let mut low = LowQTable::new(2, 2, 2).unwrap();
            let sample = TdSample { state: 0, others: 1, reward: r, next_state: 1, next_others: 0, alpha: 0.3, gamma: 0.9, terminal: false };
            let va = update_high_q(&mut high_a, 1, &sample);
            for (i, v) in low_vals.iter().enumerate() {
                low.set(i / 4, (i / 2) % 2, i % 2, *v);
            }
            let vb = update_high_q(&mut high_b, 1, &sample);
            prop_assert_eq!(va.to_bits(), vb.to_bits());
        }

        #[test]
        fn terminal_target_is_the_reward(q in -10.0f64..10.0, r in -1.0f64..1.0, alpha in 0.0f64..1.0, nxt in -10.0f64..10.0) {
            let mut low = LowQTable::new(2, 1, 2).unwrap();
            low.set(0, 0, 0, q);
            low.set(1, 0, 1, nxt);
            let mut high = HighQTable::new(2, 1, 1).unwrap();
            high.set(0, 0, 0, q);
            high.set(1, 0, 0, nxt);
            let sample = TdSample { state: 0, others: 0, reward: r, next_state: 1, next_others: 0, alpha, gamma: 0.9, terminal: true };
            let expect = (1.0 - alpha) * q + alpha * r;
            prop_assert!((update_low_q(&mut low, 0, &sample) - expect).abs() <= 1e-12);
            prop_assert!((update_high_q(&mut high, 0, &sample) - expect).abs() <= 1e-12);
        }
    }
}
