//! Stochastic-game abstraction and the desk-scale environments.
//!
//! Every environment is an enumerable N-agent stochastic game: states are
//! small integer indices, each agent has a finite action set, and a step
//! consumes a joint action and emits per-agent rewards. Joint actions are
//! enumerated in mixed-radix order with agent 0 as the most significant
//! digit, which is the canonical order used by tables, oracles and the
//! covering-time estimator.

mod grid;
mod matrix;
mod toy;

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

pub use grid::{Cell, GridLayout, GridMode, GridMove, Gridworld, GridworldSpec};
pub use matrix::{MatrixGame, MatrixGameSpec};
pub use toy::{ToyAction, ToyAdvisorGrid, ToyState};

pub type StateId = usize;
pub type ActionId = usize;
pub type AgentId = usize;

/// One action index per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(pub Vec<ActionId>);

impl JointAction {
    pub fn new(actions: Vec<ActionId>) -> Self {
        JointAction(actions)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ActionId] {
        &self.0
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateId,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

/// One branch of an environment's exact transition model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub probability: f64,
    pub next_state: StateId,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

/// Mixed-radix indexing over the joint action space of N agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActionSpace {
    sizes: Vec<usize>,
}

impl JointActionSpace {
    pub fn new(sizes: Vec<usize>) -> Self {
        JointActionSpace { sizes }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_agents(&self) -> usize {
        self.sizes.len()
    }

    /// Product of all action-set sizes.
    pub fn num_joint(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Number of joint actions of every agent except `agent`; 1 for N = 1.
    pub fn others_count(&self, agent: AgentId) -> usize {
        self.sizes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != agent)
            .map(|(_, n)| *n)
            .product()
    }

    pub fn validate(&self, joint: &JointAction) -> Result<()> {
        if joint.len() != self.sizes.len() {
            return Err(Error::contract(format!(
                "joint action {joint} has arity {}, environment has {} agents",
                joint.len(),
                self.sizes.len()
            )));
        }
        for (j, (&a, &n)) in joint.0.iter().zip(&self.sizes).enumerate() {
            if a >= n {
                return Err(Error::contract(format!(
                    "agent {j} action {a} out of range (|A| = {n})"
                )));
            }
        }
        Ok(())
    }

    pub fn index(&self, joint: &JointAction) -> usize {
        joint
            .0
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn decode(&self, mut index: usize) -> JointAction {
        let mut actions = vec![0; self.sizes.len()];
        for (slot, &n) in actions.iter_mut().zip(&self.sizes).rev() {
            *slot = index % n;
            index /= n;
        }
        JointAction(actions)
    }

    /// Index of `a^{-j}`, the joint action of every agent but `agent`.
    pub fn others_index(&self, joint: &JointAction, agent: AgentId) -> usize {
        joint
            .0
            .iter()
            .zip(&self.sizes)
            .enumerate()
            .filter(|(i, _)| *i != agent)
            .fold(0, |acc, (_, (&a, &n))| acc * n + a)
    }

    /// Rebuild a full joint action from `a^{-j}` and agent `agent`'s own action.
    pub fn compose(&self, agent: AgentId, mut others: usize, own: ActionId) -> JointAction {
        let mut actions = vec![0; self.sizes.len()];
        for (i, &n) in self.sizes.iter().enumerate().rev() {
            if i == agent {
                actions[i] = own;
            } else {
                actions[i] = others % n;
                others /= n;
            }
        }
        JointAction(actions)
    }

    pub fn iter(&self) -> impl Iterator<Item = JointAction> + '_ {
        (0..self.num_joint()).map(|i| self.decode(i))
    }
}

/// An enumerable N-agent stochastic game.
///
/// `step` must be a pure function of the state, the joint action, the RNG
/// stream and the number of steps taken since the last `reset` (used only
/// for the horizon cap).
pub trait Environment: Send {
    fn num_agents(&self) -> usize;
    fn num_states(&self) -> usize;
    fn action_space_sizes(&self) -> &[usize];
    fn discount(&self) -> f64;
    /// Per-agent bound on the magnitude of any emitted reward.
    fn reward_bound(&self) -> &[f64];
    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId;
    fn step(
        &mut self,
        state: StateId,
        joint: &JointAction,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome>;
    fn is_terminal(&self, state: StateId) -> bool;

    /// States from which stepping is legal. Defaults to every non-terminal state.
    fn is_active(&self, state: StateId) -> bool {
        !self.is_terminal(state)
    }

    /// Episode step cap, if any.
    fn horizon(&self) -> Option<usize>;

    fn is_win(&self, _agent: AgentId, _outcome: &StepOutcome) -> bool {
        false
    }

    /// Exact transition distribution, when the environment can enumerate it.
    /// The horizon cap is not part of the model.
    fn model(&self, _state: StateId, _joint: &JointAction) -> Option<Vec<ModelOutcome>> {
        None
    }

    fn grid(&self) -> Option<GridLayout> {
        None
    }

    fn joint_space(&self) -> JointActionSpace {
        JointActionSpace::new(self.action_space_sizes().to_vec())
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn num_agents(&self) -> usize {
        (**self).num_agents()
    }
    fn num_states(&self) -> usize {
        (**self).num_states()
    }
    fn action_space_sizes(&self) -> &[usize] {
        (**self).action_space_sizes()
    }
    fn discount(&self) -> f64 {
        (**self).discount()
    }
    fn reward_bound(&self) -> &[f64] {
        (**self).reward_bound()
    }
    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId {
        (**self).reset(rng)
    }
    fn step(
        &mut self,
        state: StateId,
        joint: &JointAction,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome> {
        (**self).step(state, joint, rng)
    }
    fn is_terminal(&self, state: StateId) -> bool {
        (**self).is_terminal(state)
    }
    fn is_active(&self, state: StateId) -> bool {
        (**self).is_active(state)
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn is_win(&self, agent: AgentId, outcome: &StepOutcome) -> bool {
        (**self).is_win(agent, outcome)
    }
    fn model(&self, state: StateId, joint: &JointAction) -> Option<Vec<ModelOutcome>> {
        (**self).model(state, joint)
    }
    fn grid(&self) -> Option<GridLayout> {
        (**self).grid()
    }
}

/// Every (state, joint action) pair in canonical order: states ascending,
/// joint actions in mixed-radix order within each state.
pub fn enumerate_state_joint_actions<E: Environment + ?Sized>(
    env: &E,
) -> Vec<(StateId, JointAction)> {
    let space = env.joint_space();
    (0..env.num_states())
        .flat_map(|s| space.iter().map(move |ja| (s, ja)))
        .collect()
}
