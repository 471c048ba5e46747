//! Six-state, single-agent grid used to contrast synchronization-based and
//! evaluation-based advisor values.
//!
//! ```text
//!   S1 --R--> S2 --R--> G (+1)
//!   |D        |D
//!   v         v
//!   S3 (-1)   S4 (-1)       S5 (unreachable)
//! ```

use rand::RngCore;

use super::{ActionId, AgentId, Environment, JointAction, ModelOutcome, StateId, StepOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyState {
    S1 = 0,
    S2 = 1,
    S3 = 2,
    S4 = 3,
    S5 = 4,
    G = 5,
}

impl ToyState {
    pub const ALL: [ToyState; 6] = [
        ToyState::S1,
        ToyState::S2,
        ToyState::S3,
        ToyState::S4,
        ToyState::S5,
        ToyState::G,
    ];

    pub fn id(self) -> StateId {
        self as StateId
    }

    pub fn from_id(id: StateId) -> Option<Self> {
        ToyState::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ToyState::S1 => "S1",
            ToyState::S2 => "S2",
            ToyState::S3 => "S3",
            ToyState::S4 => "S4",
            ToyState::S5 => "S5",
            ToyState::G => "G",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyAction {
    Right = 0,
    Down = 1,
}

impl ToyAction {
    pub fn id(self) -> ActionId {
        self as ActionId
    }
}

#[derive(Debug, Clone)]
pub struct ToyAdvisorGrid {
    discount: f64,
    horizon: usize,
    steps: usize,
    sizes: [usize; 1],
    bound: [f64; 1],
}

impl Default for ToyAdvisorGrid {
    fn default() -> Self {
        ToyAdvisorGrid::new(0.9, 10)
    }
}

impl ToyAdvisorGrid {
    pub fn new(discount: f64, horizon: usize) -> Self {
        ToyAdvisorGrid {
            discount,
            horizon,
            steps: 0,
            sizes: [2],
            bound: [1.0],
        }
    }

    /// Deterministic transition table. `None` for states that cannot be stepped from.
    fn transition(state: StateId, action: ActionId) -> Option<(ToyState, f64)> {
        use ToyAction::*;
        use ToyState::*;
        let s = ToyState::from_id(state)?;
        let a = match action {
            0 => Right,
            1 => Down,
            _ => return None,
        };
        match (s, a) {
            (S1, Right) => Some((S2, 0.0)),
            (S1, Down) => Some((S3, -1.0)),
            (S2, Right) => Some((G, 1.0)),
            (S2, Down) => Some((S4, -1.0)),
            _ => None,
        }
    }

    /// Single step without horizon bookkeeping.
    pub fn toy_grid_step(state: StateId, action: ActionId) -> Result<StepOutcome> {
        if action > 1 {
            return Err(Error::contract(format!("toy grid action {action} not in {{R, D}}")));
        }
        let (next, reward) = Self::transition(state, action).ok_or_else(|| {
            let name = ToyState::from_id(state).map(|s| s.name()).unwrap_or("?");
            Error::contract(format!("cannot step from toy grid state {name} ({state})"))
        })?;
        Ok(StepOutcome {
            next_state: next.id(),
            rewards: vec![reward],
            terminal: matches!(next, ToyState::S3 | ToyState::S4 | ToyState::G),
        })
    }
}

impl Environment for ToyAdvisorGrid {
    fn num_agents(&self) -> usize {
        1
    }

    fn num_states(&self) -> usize {
        6
    }

    fn action_space_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_bound(&self) -> &[f64] {
        &self.bound
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> StateId {
        self.steps = 0;
        ToyState::S1.id()
    }

    fn step(
        &mut self,
        state: StateId,
        joint: &JointAction,
        _rng: &mut dyn RngCore,
    ) -> Result<StepOutcome> {
        self.joint_space().validate(joint)?;
        let mut out = Self::toy_grid_step(state, joint.0[0])?;
        self.steps += 1;
        if self.steps >= self.horizon {
            out.terminal = true;
        }
        Ok(out)
    }

    fn is_terminal(&self, state: StateId) -> bool {
        matches!(
            ToyState::from_id(state),
            Some(ToyState::S3 | ToyState::S4 | ToyState::G)
        )
    }

    fn is_active(&self, state: StateId) -> bool {
        matches!(ToyState::from_id(state), Some(ToyState::S1 | ToyState::S2))
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn is_win(&self, _agent: AgentId, outcome: &StepOutcome) -> bool {
        outcome.next_state == ToyState::G.id()
    }

    fn model(&self, state: StateId, joint: &JointAction) -> Option<Vec<ModelOutcome>> {
        let out = Self::toy_grid_step(state, *joint.0.first()?).ok()?;
        Some(vec![ModelOutcome {
            probability: 1.0,
            next_state: out.next_state,
            rewards: out.rewards,
            terminal: out.terminal,
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use ToyAction::*;
    use ToyState::*;

    #[test]
    fn transition_table_exhaustive() {
        let table = [
            (S1, Right, S2, 0.0, false),
            (S1, Down, S3, -1.0, true),
            (S2, Right, G, 1.0, true),
            (S2, Down, S4, -1.0, true),
        ];
        for (s, a, next, r, terminal) in table {
            let out = ToyAdvisorGrid::toy_grid_step(s.id(), a.id()).unwrap();
            assert_eq!(out.next_state, next.id(), "{s:?} {a:?}");
            assert_eq!(out.rewards, vec![r]);
            assert_eq!(out.terminal, terminal);
        }
    }

    #[test]
    fn stepping_from_terminal_or_s5_is_an_error() {
        for s in [S3, S4, S5, G] {
            for a in [Right, Down] {
                assert!(matches!(
                    ToyAdvisorGrid::toy_grid_step(s.id(), a.id()),
                    Err(Error::Contract(_))
                ));
            }
        }
    }

    #[test]
    fn s5_is_never_reached() {
        let mut env = ToyAdvisorGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for first in [Right, Down] {
            for second in [Right, Down] {
                let s = env.reset(&mut rng);
                let o = env.step(s, &JointAction(vec![first.id()]), &mut rng).unwrap();
                assert_ne!(o.next_state, S5.id());
                if !o.terminal {
                    let o2 = env
                        .step(o.next_state, &JointAction(vec![second.id()]), &mut rng)
                        .unwrap();
                    assert_ne!(o2.next_state, S5.id());
                }
            }
        }
    }

    #[test]
    fn win_only_at_goal() {
        let env = ToyAdvisorGrid::default();
        let g = ToyAdvisorGrid::toy_grid_step(S2.id(), Right.id()).unwrap();
        let l = ToyAdvisorGrid::toy_grid_step(S2.id(), Down.id()).unwrap();
        assert!(env.is_win(0, &g));
        assert!(!env.is_win(0, &l));
    }
}
