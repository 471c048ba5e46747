//! Comparison learners: two-level Q-learning with synchronized advisor
//! values, the component ablations between it and the full method,
//! independent Q-learning (optionally executing a weighted-random advisor
//! vote) and scripted opponents.

use std::hash::Hash;

use rand::{Rng, RngCore};

use crate::advisors::{AdviceContext, Advisor, AdvisorId};
use crate::error::{Error, Result};
use crate::game::{ActionId, Environment, StateId};
use crate::learner::{
    credited, decide_with_branches, hash_of, ActionSource, AgentLearner, Decision, DecisionView,
    Transition, UpdateKind, UpdateRecord,
};
use crate::matlql::{select_advisor_action, update_high_q, update_low_q, MaTlqlConfig, TdSample};
use crate::schedule::{ExplorationPolicy, LearningRateSchedule, VisitCounters};
use crate::tables::{argmax, render_checkpoint, HighQTable, LowQTable, QTable};

/// Copy the executed action's value into every credited advisor's entry and
/// refresh the extra last entry with the best own-action value.
pub fn tlql_sync(
    low: &LowQTable,
    high: &mut HighQTable,
    s: StateId,
    others: usize,
    executed: ActionId,
    followed: &[AdvisorId],
) {
    let v = low.get(s, others, executed);
    for &ad in followed {
        high.set(s, others, ad, v);
    }
    let rl = high.width() - 1;
    high.set(s, others, rl, low.max(s, others));
}

/// Single-agent Bellman update on a `(state, action)` table.
#[allow(clippy::too_many_arguments)]
pub fn independent_q_update(
    table: &mut QTable,
    s: StateId,
    a: ActionId,
    r: f64,
    s_next: StateId,
    alpha: f64,
    gamma: f64,
    terminal: bool,
) -> f64 {
    let target = if terminal { r } else { r + gamma * table.max(s_next, 0) };
    let q = table.get(s, 0, a);
    let v = q + alpha * (target - q);
    table.set(s, 0, a, v);
    v
}

/// Advisor drawn uniformly, so each action comes up in proportion to the
/// number of advisors recommending it.
fn uniform_advisor(advice: &[ActionId], rng: &mut dyn RngCore) -> Result<AdvisorId> {
    if advice.is_empty() {
        return Err(Error::UndefinedVote);
    }
    Ok(rng.gen_range(0..advice.len()))
}

pub fn weighted_random_advisor_action(
    advice: &[ActionId],
    rng: &mut dyn RngCore,
) -> Result<ActionId> {
    Ok(advice[uniform_advisor(advice, rng)?])
}

/// Which of the full method's components are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AblationFlags {
    /// Key tables by the other agents' joint action.
    pub joint_action: bool,
    /// Pick advisors by the visit-weighted vote instead of plain argmax.
    pub ensemble: bool,
    /// Evaluate advisors with their own TD update instead of synchronizing.
    pub advisor_eval: bool,
}

impl AblationFlags {
    pub const ALL: AblationFlags = AblationFlags {
        joint_action: true,
        ensemble: true,
        advisor_eval: true,
    };
    pub const NONE: AblationFlags = AblationFlags {
        joint_action: false,
        ensemble: false,
        advisor_eval: false,
    };
}

fn recorder(log: &mut Option<Vec<UpdateRecord>>, rec: UpdateRecord) {
    if let Some(l) = log {
        l.push(rec);
    }
}

/// Two-level learner with each component behind a flag.
#[derive(Debug, Clone)]
pub struct AblationLearner {
    flags: AblationFlags,
    config: MaTlqlConfig,
    low: LowQTable,
    high: HighQTable,
    counters: VisitCounters,
    num_advisors: usize,
    log: Option<Vec<UpdateRecord>>,
}

pub fn build_ablation_learner(
    flags: AblationFlags,
    env: &dyn Environment,
    agent: usize,
    num_advisors: usize,
    config: MaTlqlConfig,
) -> Result<AblationLearner> {
    config.exploration.validate()?;
    config.rate.validate()?;
    let states = env.num_states();
    let others = if flags.joint_action {
        env.joint_space().others_count(agent)
    } else {
        1
    };
    let n = env.action_space_sizes()[agent];
    let width = num_advisors + usize::from(!flags.advisor_eval);
    Ok(AblationLearner {
        flags,
        config,
        low: LowQTable::new(states, others, n)?,
        high: HighQTable::new(states, others, width)?,
        counters: VisitCounters::new(states, states * others * n),
        num_advisors,
        log: None,
    })
}

impl AblationLearner {
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn flags(&self) -> AblationFlags {
        self.flags
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

    fn key(&self, others: usize) -> usize {
        if self.flags.joint_action {
            others
        } else {
            0
        }
    }
}

impl AgentLearner for AblationLearner {
    fn name(&self) -> &str {
        "ablation"
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let s = view.context.state;
        let o = self.key(view.others);
        if !view.training {
            return Ok(Decision::own(self.low.argmax(s, o)));
        }
        let mu = self.counters.visit_state(s);
        let (high, low, k) = (&self.high, &self.low, self.num_advisors);
        let ensemble = self.flags.ensemble;
        decide_with_branches(
            view,
            advisors,
            rng,
            self.config.exploration.epsilon,
            self.config.exploration.eta,
            |advice, _| {
                if ensemble {
                    Ok(select_advisor_action(high, s, o, advice, mu)?.1)
                } else {
                    Ok(argmax(&high.row(s, o)[..k]))
                }
            },
            |_| low.argmax(s, o),
        )
    }

    fn learn(&mut self, t: &Transition<'_>) -> Result<()> {
        let (o, o_next) = (self.key(t.others), self.key(t.next_others));
        let pair = self.low.row_index(t.state, o) * self.low.width() + t.action;
        let alpha = self.config.rate.rate(self.counters.visit_pair(pair));
        let td = TdSample {
            state: t.state,
            others: o,
            reward: t.reward,
            next_state: t.next_state,
            next_others: o_next,
            alpha,
            gamma: self.config.discount,
            terminal: t.terminal,
        };
        let v = update_low_q(&mut self.low, t.action, &td);
        let rec = |kind, key, value| UpdateRecord { kind, state: t.state, others: o, key, value };
        recorder(&mut self.log, rec(UpdateKind::Control, t.action, v));
        let credit = credited(t, self.config.credit_concurring);
        if self.flags.advisor_eval {
            for ad in credit {
                let v = update_high_q(&mut self.high, ad, &td);
                recorder(&mut self.log, rec(UpdateKind::Evaluation, ad, v));
            }
        } else {
            tlql_sync(&self.low, &mut self.high, t.state, o, t.action, &credit);
            for ad in credit.into_iter().chain([self.num_advisors]) {
                let v = self.high.get(t.state, o, ad);
                recorder(&mut self.log, rec(UpdateKind::Sync, ad, v));
            }
        }
        Ok(())
    }

    fn low_value(&self, s: StateId, others: usize, a: ActionId) -> f64 {
        self.low.get(s, self.key(others), a)
    }

    fn keys_joint_actions(&self) -> bool {
        self.flags.joint_action
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

/// Two-level Q-learning with synchronized advisor values. Tables are keyed
/// by own state and action only; the last high-level entry mirrors the
/// learner's own greedy value.
#[derive(Debug, Clone)]
pub struct Tlql {
    config: MaTlqlConfig,
    low: QTable,
    high: QTable,
    counters: VisitCounters,
    num_advisors: usize,
    log: Option<Vec<UpdateRecord>>,
}

impl Tlql {
    pub fn new(
        env: &dyn Environment,
        agent: usize,
        num_advisors: usize,
        config: MaTlqlConfig,
    ) -> Result<Self> {
        config.exploration.validate()?;
        config.rate.validate()?;
        let states = env.num_states();
        let n = env.action_space_sizes()[agent];
        Ok(Tlql {
            config,
            low: QTable::new(states, 1, n)?,
            high: QTable::new(states, 1, num_advisors + 1)?,
            counters: VisitCounters::new(states, states * n),
            num_advisors,
            log: None,
        })
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn low(&self) -> &QTable {
        &self.low
    }

    pub fn high(&self) -> &QTable {
        &self.high
    }

    /// Greedy-value entry of the high-level table.
    pub fn rl_value(&self, s: StateId) -> f64 {
        self.high.get(s, 0, self.num_advisors)
    }
}

impl AgentLearner for Tlql {
    fn name(&self) -> &str {
        "tlql"
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let s = view.context.state;
        if !view.training {
            return Ok(Decision::own(self.low.argmax(s, 0)));
        }
        self.counters.visit_state(s);
        let (high, low, k) = (&self.high, &self.low, self.num_advisors);
        decide_with_branches(
            view,
            advisors,
            rng,
            self.config.exploration.epsilon,
            self.config.exploration.eta,
            |_, _| Ok(argmax(&high.row(s, 0)[..k])),
            |_| low.argmax(s, 0),
        )
    }

    fn learn(&mut self, t: &Transition<'_>) -> Result<()> {
        let (s, a) = (t.state, t.action);
        let n = self.low.width();
        let alpha = self.config.rate.rate(self.counters.visit_pair(s * n + a));
        let v = independent_q_update(
            &mut self.low,
            s,
            a,
            t.reward,
            t.next_state,
            alpha,
            self.config.discount,
            t.terminal,
        );
        recorder(
            &mut self.log,
            UpdateRecord { kind: UpdateKind::Control, state: s, others: 0, key: a, value: v },
        );
        let followed: Vec<AdvisorId> = match t.source {
            ActionSource::Advisor(_) if self.config.credit_concurring => {
                (0..t.advice.len()).filter(|&k| t.advice[k] == a).collect()
            }
            ActionSource::Advisor(ad) => vec![ad],
            _ => Vec::new(),
        };
        let best = self.low.max(s, 0);
        for ad in followed.into_iter().chain([self.num_advisors]) {
            let value = if ad == self.num_advisors { best } else { v };
            self.high.set(s, 0, ad, value);
            recorder(
                &mut self.log,
                UpdateRecord { kind: UpdateKind::Sync, state: s, others: 0, key: ad, value },
            );
        }
        Ok(())
    }

    fn low_value(&self, s: StateId, _others: usize, a: ActionId) -> f64 {
        self.low.get(s, 0, a)
    }

    fn keys_joint_actions(&self) -> bool {
        false
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependentQConfig {
    pub exploration: ExplorationPolicy,
    pub rate: LearningRateSchedule,
    pub discount: f64,
    /// While reusing advice, execute a weighted-random advisor vote.
    pub weighted_advice: bool,
}

impl Default for IndependentQConfig {
    fn default() -> Self {
        IndependentQConfig {
            exploration: ExplorationPolicy::default(),
            rate: LearningRateSchedule::Constant(0.1),
            discount: 0.9,
            weighted_advice: false,
        }
    }
}

/// Q-learning on own state and action, ignoring the other agents.
#[derive(Debug, Clone)]
pub struct IndependentQ {
    config: IndependentQConfig,
    table: QTable,
    counters: VisitCounters,
}

impl IndependentQ {
    pub fn new(env: &dyn Environment, agent: usize, config: IndependentQConfig) -> Result<Self> {
        config.exploration.validate()?;
        config.rate.validate()?;
        let states = env.num_states();
        let n = env.action_space_sizes()[agent];
        Ok(IndependentQ {
            config,
            table: QTable::new(states, 1, n)?,
            counters: VisitCounters::new(states, states * n),
        })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }
}

impl AgentLearner for IndependentQ {
    fn name(&self) -> &str {
        if self.config.weighted_advice {
            "weighted-advisor"
        } else {
            "independent-q"
        }
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let s = view.context.state;
        if !view.training {
            return Ok(Decision::own(self.table.argmax(s, 0)));
        }
        let mut view = *view;
        if !self.config.weighted_advice {
            view.eps_prime = 0.0;
        }
        let table = &self.table;
        decide_with_branches(
            &view,
            advisors,
            rng,
            self.config.exploration.epsilon,
            1.0,
            |advice, rng| uniform_advisor(advice, rng),
            |_| table.argmax(s, 0),
        )
    }

    fn learn(&mut self, t: &Transition<'_>) -> Result<()> {
        let n = self.table.width();
        let alpha = self
            .config
            .rate
            .rate(self.counters.visit_pair(t.state * n + t.action));
        independent_q_update(
            &mut self.table,
            t.state,
            t.action,
            t.reward,
            t.next_state,
            alpha,
            self.config.discount,
            t.terminal,
        );
        Ok(())
    }

    fn low_value(&self, s: StateId, _others: usize, a: ActionId) -> f64 {
        self.table.get(s, 0, a)
    }

    fn keys_joint_actions(&self) -> bool {
        false
    }

    fn checkpoint(&self) -> String {
        let mut e = Vec::new();
        self.table.write_entries("LOW", &mut e);
        render_checkpoint(e)
    }

    fn fingerprint(&self) -> u64 {
        hash_of(|h| {
            self.table.hash_bits(h);
            self.counters.hash(h);
        })
    }
}

/// Non-learning agent that plays a scripted policy in every phase.
pub struct FixedOpponent {
    policy: Box<dyn Advisor>,
}

impl FixedOpponent {
    pub fn new(policy: Box<dyn Advisor>) -> Self {
        FixedOpponent { policy }
    }

    pub fn act(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
        self.policy.recommend(ctx, rng)
    }
}

impl AgentLearner for FixedOpponent {
    fn name(&self) -> &str {
        "fixed-opponent"
    }

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        _advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        Ok(Decision::own(self.act(&view.context, rng)))
    }

    fn learn(&mut self, _t: &Transition<'_>) -> Result<()> {
        Ok(())
    }

    fn low_value(&self, _s: StateId, _others: usize, _a: ActionId) -> f64 {
        0.0
    }

    fn keys_joint_actions(&self) -> bool {
        false
    }

    fn checkpoint(&self) -> String {
        String::new()
    }

    fn fingerprint(&self) -> u64 {
        0
    }
}
