//! Runs learners against an environment, one joint step at a time.
//!
//! Targets need the other agents' joint action at the next state. In
//! `Observed` mode that is the joint action they actually play there, so a
//! transition is held back one step and applied once it is known. In
//! `Equilibrium` mode it is the pure joint action at the next state that is
//! a best response for every agent under the current tables (the one with
//! the highest summed value), falling back to the observed one when no such
//! joint action exists.
//!
//! `Previous` keys tables by the other agents' previous joint action instead
//! of their current one: the key at a state is what they played one step
//! earlier (all zeros at the start of an episode), so the same key is used
//! to act and to learn, and the successor key is the joint action just
//! executed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::advisors::{AdviceContext, Advisor, AdvisorTransition};
use crate::error::Result;
use crate::game::{ActionId, Environment, GridLayout, JointAction, JointActionSpace, StateId};
use crate::learner::{ActionSource, AgentLearner, Decision, DecisionView, Transition};
use crate::schedule::PprSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OthersMode {
    Observed,
    Equilibrium,
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Training,
    Execution,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Training => "train",
            Phase::Execution => "exec",
        }
    }
}

pub struct AgentSlot {
    pub learner: Box<dyn AgentLearner>,
    pub advisors: Vec<Box<dyn Advisor>>,
}

impl AgentSlot {
    pub fn new(learner: Box<dyn AgentLearner>, advisors: Vec<Box<dyn Advisor>>) -> Self {
        AgentSlot { learner, advisors }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentEpisode {
    pub ret: f64,
    pub win: bool,
    pub opportunities: u64,
    /// Times each advisor was followed.
    pub selections: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub phase: Phase,
    /// Zero-based index within the phase.
    pub episode: usize,
    pub eps_prime: f64,
    pub steps: usize,
    pub agents: Vec<AgentEpisode>,
}

struct Pending {
    state: StateId,
    others: usize,
    decision: Decision,
    reward: f64,
    next_state: StateId,
}

struct Episode {
    state: StateId,
    phase: Phase,
    eps_prime: f64,
    steps: usize,
    agents: Vec<AgentEpisode>,
}

pub struct Trainer {
    env: Box<dyn Environment>,
    slots: Vec<AgentSlot>,
    ppr: PprSchedule,
    mode: OthersMode,
    space: JointActionSpace,
    /// `(others key, own action)` per agent for every joint index.
    joint_keys: Vec<Vec<(usize, ActionId)>>,
    layout: Option<GridLayout>,
    env_rng: ChaCha8Rng,
    agent_rng: ChaCha8Rng,
    last_joint: Vec<ActionId>,
    pending: Vec<Option<Pending>>,
    current: Option<Episode>,
    completed: [usize; 2],
    total_steps: u64,
}

/// Independent environment and agent streams for one seed.
pub fn seeded_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(1);
    let mut agents = ChaCha8Rng::seed_from_u64(seed);
    agents.set_stream(2);
    (env, agents)
}

impl Trainer {
    pub fn new(
        env: Box<dyn Environment>,
        slots: Vec<AgentSlot>,
        ppr: PprSchedule,
        mode: OthersMode,
        seed: u64,
    ) -> Self {
        let n = env.num_agents();
        assert_eq!(slots.len(), n, "one learner per agent");
        let (env_rng, agent_rng) = seeded_streams(seed);
        let space = env.joint_space();
        let joint_keys = space
            .iter()
            .map(|ja| (0..n).map(|j| (space.others_index(&ja, j), ja.0[j])).collect())
            .collect();
        Trainer {
            space,
            joint_keys,
            layout: env.grid(),
            env,
            slots,
            ppr,
            mode,
            env_rng,
            agent_rng,
            last_joint: vec![0; n],
            pending: (0..n).map(|_| None).collect(),
            current: None,
            completed: [0, 0],
            total_steps: 0,
        }
    }

    /// Restart both random streams, e.g. for the execution phase.
    pub fn reseed(&mut self, seed: u64) {
        let (e, a) = seeded_streams(seed);
        self.env_rng = e;
        self.agent_rng = a;
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn slots(&self) -> &[AgentSlot] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [AgentSlot] {
        &mut self.slots
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn episodes_completed(&self, phase: Phase) -> usize {
        self.completed[phase as usize]
    }

    pub fn fingerprints(&self) -> Vec<u64> {
        self.slots.iter().map(|s| s.learner.fingerprint()).collect()
    }

    fn observed_others(&self, j: usize) -> usize {
        self.space
            .others_index(&JointAction(self.last_joint.clone()), j)
    }

    /// Pure joint action at `s` that is a best response for every agent,
    /// highest summed value first, lowest index on ties.
    pub fn equilibrium(&self, s: StateId) -> Option<JointAction> {
        self.equilibrium_index(s).map(|i| self.space.decode(i))
    }

    fn equilibrium_index(&self, s: StateId) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, keys) in self.joint_keys.iter().enumerate() {
            let mut total = 0.0;
            let mut stable = true;
            for ((slot, &(o, own)), &n) in self.slots.iter().zip(keys).zip(self.space.sizes()) {
                let v = slot.learner.low_value(s, o, own);
                let beaten = (0..n).any(|a| slot.learner.low_value(s, o, a) > v);
                if beaten {
                    stable = false;
                    break;
                }
                total += v;
            }
            if stable && best.is_none_or(|(b, _)| total > b) {
                best = Some((total, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn others_at(&self, s: StateId, j: usize) -> usize {
        match self.mode {
            OthersMode::Observed | OthersMode::Previous => self.observed_others(j),
            OthersMode::Equilibrium => match self.equilibrium_index(s) {
                Some(i) => self.joint_keys[i][j].0,
                None => self.observed_others(j),
            },
        }
    }

    fn begin(&mut self, phase: Phase) {
        // an abandoned episode's held-back updates have no valid successor
        self.pending.iter_mut().for_each(|p| *p = None);
        if self.mode == OthersMode::Previous {
            self.last_joint.iter_mut().for_each(|a| *a = 0);
        }
        let state = self.env.reset(&mut self.env_rng);
        let eps_prime = match phase {
            Phase::Training => self.ppr.epsilon(self.completed[0]),
            Phase::Execution => 0.0,
        };
        let agents = self
            .slots
            .iter()
            .map(|s| AgentEpisode {
                ret: 0.0,
                win: false,
                opportunities: 0,
                selections: vec![0; s.advisors.len()],
            })
            .collect();
        self.current = Some(Episode { state, phase, eps_prime, steps: 0, agents });
    }

    fn apply(&mut self, j: usize, p: &Pending, terminal: bool, next_others: usize) -> Result<()> {
        let t = Transition {
            state: p.state,
            others: p.others,
            action: p.decision.action,
            source: p.decision.source,
            advice: &p.decision.advice,
            reward: p.reward,
            next_state: p.next_state,
            terminal,
            next_others,
        };
        self.slots[j].learner.learn(&t)
    }

    /// Advance one joint step, starting an episode in `phase` if none is
    /// running. Returns the finished episode when this step ends it.
    pub fn step(&mut self, phase: Phase) -> Result<Option<EpisodeRecord>> {
        if self.current.as_ref().is_none_or(|e| e.phase != phase) {
            self.begin(phase);
        }
        let (s, eps_prime) = {
            let e = self.current.as_ref().expect("episode started");
            (e.state, e.eps_prime)
        };
        let training = phase == Phase::Training;
        let n = self.slots.len();

        let eq = match self.mode {
            OthersMode::Equilibrium => self.equilibrium_index(s),
            _ => None,
        };
        let others: Vec<usize> = match eq {
            Some(i) => self.joint_keys[i].iter().map(|k| k.0).collect(),
            None => (0..n).map(|j| self.observed_others(j)).collect(),
        };
        let mut decisions = Vec::with_capacity(n);
        for (j, &o) in others.iter().enumerate() {
            let context = AdviceContext {
                agent: j,
                state: s,
                num_actions: self.space.sizes()[j],
                last_joint: &self.last_joint,
                space: &self.space,
                layout: self.layout.as_ref(),
            };
            let view = DecisionView { context, others: o, eps_prime, training };
            let slot = &mut self.slots[j];
            let d = slot
                .learner
                .decide(&view, &mut slot.advisors, &mut self.agent_rng as &mut dyn RngCore)?;
            decisions.push(d);
        }
        let joint = JointAction(decisions.iter().map(|d| d.action).collect());

        // transitions waiting for this joint action
        for j in 0..n {
            if let Some(p) = self.pending[j].take() {
                let o = self.space.others_index(&joint, j);
                self.apply(j, &p, false, o)?;
            }
        }

        let out = self.env.step(s, &joint, &mut self.env_rng)?;
        self.total_steps += 1;
        self.last_joint = joint.0.clone();

        for (j, d) in decisions.into_iter().enumerate() {
            let e = self.current.as_mut().expect("episode");
            let rec = &mut e.agents[j];
            rec.ret += out.rewards[j];
            if d.opportunity {
                rec.opportunities += 1;
                if let ActionSource::Advisor(k) = d.source {
                    rec.selections[k] += 1;
                }
            }
            if !training {
                continue;
            }
            let at = AdvisorTransition {
                state: s,
                action: d.action,
                reward: out.rewards[j],
                next_state: out.next_state,
                terminal: out.terminal,
            };
            for adv in self.slots[j].advisors.iter_mut() {
                adv.observe(&at);
            }
            // tables are updated at the joint action actually executed,
            // or at the acting key when keyed by previous actions
            let key = match self.mode {
                OthersMode::Previous => others[j],
                _ => self.space.others_index(&JointAction(self.last_joint.clone()), j),
            };
            let p = Pending {
                state: s,
                others: key,
                decision: d,
                reward: out.rewards[j],
                next_state: out.next_state,
            };
            let defer = !out.terminal
                && n > 1
                && self.mode == OthersMode::Observed
                && self.slots[j].learner.keys_joint_actions();
            if defer {
                self.pending[j] = Some(p);
            } else {
                let o = if out.terminal { 0 } else { self.others_at(out.next_state, j) };
                self.apply(j, &p, out.terminal, o)?;
            }
        }

        let e = self.current.as_mut().expect("episode");
        e.steps += 1;
        e.state = out.next_state;
        if !out.terminal {
            return Ok(None);
        }
        let mut e = self.current.take().expect("episode");
        for (j, rec) in e.agents.iter_mut().enumerate() {
            rec.win = self.env.is_win(j, &out);
        }
        let index = self.completed[phase as usize];
        self.completed[phase as usize] += 1;
        Ok(Some(EpisodeRecord {
            phase,
            episode: index,
            eps_prime: e.eps_prime,
            steps: e.steps,
            agents: e.agents,
        }))
    }

    pub fn run_episode(&mut self, phase: Phase) -> Result<EpisodeRecord> {
        loop {
            if let Some(r) = self.step(phase)? {
                return Ok(r);
            }
        }
    }
}
