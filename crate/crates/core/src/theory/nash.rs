//! Nash Q values for games whose stage games have a global optimum
//! (identical interest) or a pure saddle point (two-player zero sum).

use crate::error::{Error, Result};
use crate::game::{Environment, JointAction, JointActionSpace, ModelOutcome, StateId};
use crate::learner::AgentLearner;

/// Stop once a sweep moves no entry by this much.
pub const SWEEP_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    IdenticalInterest,
    ZeroSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashQSolution {
    space: JointActionSpace,
    /// `(others key, own action)` per agent for every joint index.
    keys: Vec<Vec<(usize, usize)>>,
    /// `q[agent][state][joint_index]`; zero at inactive states.
    pub q: Vec<Vec<Vec<f64>>>,
    /// `v[agent][state]`; zero at inactive and terminal states.
    pub v: Vec<Vec<f64>>,
    /// Pure equilibrium joint action per active state.
    pub stage_policy: Vec<Option<JointAction>>,
    pub sweeps: usize,
}

impl NashQSolution {
    pub fn q_value(&self, agent: usize, s: StateId, joint: &JointAction) -> f64 {
        self.q[agent][s][self.space.index(joint)]
    }

    pub fn joint_space(&self) -> &JointActionSpace {
        &self.space
    }

    /// Sup-norm distance between agent `agent`'s own-action estimates and
    /// its Nash Q values over every active state and joint action.
    pub fn sup_error(&self, env: &dyn Environment, agent: usize, learner: &dyn AgentLearner) -> f64 {
        let mut worst: f64 = 0.0;
        for s in (0..env.num_states()).filter(|&s| env.is_active(s)) {
            for (keys, q) in self.keys.iter().zip(&self.q[agent][s]) {
                let (o, own) = keys[agent];
                worst = worst.max((learner.low_value(s, o, own) - q).abs());
            }
        }
        worst
    }
}

type Model = Vec<Vec<Vec<ModelOutcome>>>;

fn collect_model(env: &dyn Environment, space: &JointActionSpace) -> Result<Model> {
    let mut model = Vec::with_capacity(env.num_states());
    for s in 0..env.num_states() {
        if !env.is_active(s) {
            model.push(Vec::new());
            continue;
        }
        let mut row = Vec::with_capacity(space.num_joint());
        for ja in space.iter() {
            let outcomes = env.model(s, &ja).ok_or_else(|| {
                Error::StructureMismatch(format!(
                    "no transition model at state {s} for joint action {ja}"
                ))
            })?;
            row.push(outcomes);
        }
        model.push(row);
    }
    Ok(model)
}

fn check_structure(model: &Model, kind: OracleKind, n: usize) -> Result<()> {
    if kind == OracleKind::ZeroSum && n != 2 {
        return Err(Error::StructureMismatch(format!(
            "zero-sum oracle needs 2 agents, game has {n}"
        )));
    }
    for (s, row) in model.iter().enumerate() {
        for o in row.iter().flatten() {
            let r = &o.rewards;
            let ok = match kind {
                OracleKind::IdenticalInterest => r.iter().all(|x| *x == r[0]),
                OracleKind::ZeroSum => r[0] == -r[1],
            };
            if !ok {
                let what = match kind {
                    OracleKind::IdenticalInterest => "rewards differ across agents",
                    OracleKind::ZeroSum => "rewards do not sum to zero",
                };
                return Err(Error::StructureMismatch(format!("state {s}: {what}: {r:?}")));
            }
        }
    }
    Ok(())
}

/// Value of one stage game given agent 0's Q row; ties go to the lowest
/// joint index.
fn stage_value(
    kind: OracleKind,
    q0: &[f64],
    space: &JointActionSpace,
    s: StateId,
) -> Result<(f64, usize)> {
    match kind {
        OracleKind::IdenticalInterest => {
            let i = crate::tables::argmax(q0);
            Ok((q0[i], i))
        }
        OracleKind::ZeroSum => {
            // agent 0 maximizes, agent 1 minimizes
            let (rows, cols) = (space.sizes()[0], space.sizes()[1]);
            for a in 0..rows {
                for b in 0..cols {
                    let x = q0[a * cols + b];
                    let row_min = (0..cols).all(|c| q0[a * cols + c] >= x);
                    let col_max = (0..rows).all(|r| q0[r * cols + b] <= x);
                    if row_min && col_max {
                        return Ok((x, a * cols + b));
                    }
                }
            }
            Err(Error::NoPureSaddle { state: s })
        }
    }
}

struct Sweep {
    q: Vec<Vec<Vec<f64>>>,
    v: Vec<Vec<f64>>,
    policy: Vec<Option<usize>>,
}

fn backup(model: &Model, v: &[Vec<f64>], gamma: f64, n: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|j| {
            model
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|outs| {
                            outs.iter()
                                .map(|o| {
                                    let cont = if o.terminal { 0.0 } else { v[j][o.next_state] };
                                    o.probability * (o.rewards[j] + gamma * cont)
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn sweep(
    model: &Model,
    v: &[Vec<f64>],
    gamma: f64,
    kind: OracleKind,
    space: &JointActionSpace,
) -> Result<Sweep> {
    let n = space.num_agents();
    let q = backup(model, v, gamma, n);
    let mut next_v = vec![vec![0.0; model.len()]; n];
    let mut policy = vec![None; model.len()];
    for s in (0..model.len()).filter(|&s| !model[s].is_empty()) {
        let (_, i) = stage_value(kind, &q[0][s], space, s)?;
        for j in 0..n {
            next_v[j][s] = q[j][s][i];
        }
        policy[s] = Some(i);
    }
    Ok(Sweep { q, v: next_v, policy })
}

fn sup_change(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Value iteration on the joint-action Bellman operator, with the stage
/// game solved by its global optimum or its pure saddle point.
pub fn nash_q_oracle(env: &dyn Environment, kind: OracleKind) -> Result<NashQSolution> {
    let space = env.joint_space();
    let n = space.num_agents();
    let model = collect_model(env, &space)?;
    check_structure(&model, kind, n)?;
    let gamma = env.discount();
    let mut v = vec![vec![0.0; model.len()]; n];
    let mut prev: Option<Vec<Vec<Vec<f64>>>> = None;
    for sweeps in 1..=MAX_SWEEPS {
        let next = sweep(&model, &v, gamma, kind, &space)?;
        let done = prev
            .as_ref()
            .is_some_and(|p| sup_change(p, &next.q) < SWEEP_TOLERANCE);
        if done {
            let keys = space
                .iter()
                .map(|ja| (0..n).map(|j| (space.others_index(&ja, j), ja.0[j])).collect())
                .collect();
            return Ok(NashQSolution {
                keys,
                stage_policy: next.policy.iter().map(|p| p.map(|i| space.decode(i))).collect(),
                space,
                q: next.q,
                v: next.v,
                sweeps,
            });
        }
        v = next.v;
        prev = Some(next.q);
    }
    Err(Error::NotConverged { iterations: MAX_SWEEPS })
}

/// Largest change one more sweep would make to a solution's Q values.
pub fn bellman_residual(
    env: &dyn Environment,
    kind: OracleKind,
    solution: &NashQSolution,
) -> Result<f64> {
    let space = env.joint_space();
    let model = collect_model(env, &space)?;
    let next = sweep(&model, &solution.v, env.discount(), kind, &space)?;
    Ok(sup_change(&solution.q, &next.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MatrixGame, MatrixGameSpec, ToyAdvisorGrid, ToyState};
    use proptest::prelude::*;

    fn single(sizes: Vec<usize>, table: &[[f64; 2]]) -> MatrixGame {
        MatrixGame::single_state(sizes.clone(), |ja| {
            let i = JointActionSpace::new(sizes.clone()).index(ja);
            table[i].to_vec()
        })
        .unwrap()
    }

    #[test]
    fn geometric_value_of_single_state_optimum() {
        let g = single(vec![2, 2], &[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.5]]);
        let sol = nash_q_oracle(&g, OracleKind::IdenticalInterest).unwrap();
        assert!((sol.v[0][0] - 10.0).abs() < 1e-10);
        assert!((sol.q_value(1, 0, &JointAction(vec![0, 0])) - 10.0).abs() < 1e-10);
        // off-optimum entries: own reward now, then the optimum forever
        assert!((sol.q_value(0, 0, &JointAction(vec![1, 1])) - (0.5 + 9.0)).abs() < 1e-10);
        assert_eq!(sol.stage_policy[0], Some(JointAction(vec![0, 0])));
    }

    #[test]
    fn matching_pennies_has_no_saddle() {
        let g = single(vec![2, 2], &[[1.0, -1.0], [-1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]]);
        assert!(matches!(
            nash_q_oracle(&g, OracleKind::ZeroSum),
            Err(Error::NoPureSaddle { state: 0 })
        ));
    }

    #[test]
    fn zero_sum_saddle_value() {
        // row minima 1 and 2, column maxima 4 and 2: saddle at (1, 1)
        let g = single(vec![2, 2], &[[3.0, -3.0], [1.0, -1.0], [4.0, -4.0], [2.0, -2.0]])
            .with_discount(0.5);
        let sol = nash_q_oracle(&g, OracleKind::ZeroSum).unwrap();
        assert!((sol.v[0][0] - 4.0).abs() < 1e-10);
        assert!((sol.v[1][0] + 4.0).abs() < 1e-10);
        assert_eq!(sol.stage_policy[0], Some(JointAction(vec![1, 1])));
    }

    #[test]
    fn kind_must_match_rewards() {
        let coord = single(vec![2, 2], &[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(
            nash_q_oracle(&coord, OracleKind::ZeroSum),
            Err(Error::StructureMismatch(_))
        ));
        let zs = single(vec![2, 2], &[[1.0, -1.0], [0.0, 0.0], [0.0, 0.0], [1.0, -1.0]]);
        assert!(matches!(
            nash_q_oracle(&zs, OracleKind::IdenticalInterest),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn toy_grid_backward_induction() {
        let toy = ToyAdvisorGrid::default();
        let sol = nash_q_oracle(&toy, OracleKind::IdenticalInterest).unwrap();
        let q = |s: ToyState, a: usize| sol.q_value(0, s.id(), &JointAction(vec![a]));
        assert!((q(ToyState::S1, 0) - 0.9).abs() < 1e-12);
        assert!((q(ToyState::S2, 0) - 1.0).abs() < 1e-12);
        assert!((q(ToyState::S1, 1) + 1.0).abs() < 1e-12);
        assert!((q(ToyState::S2, 1) + 1.0).abs() < 1e-12);
    }

    /// Independent solver: the joint action treated as one action, values
    /// read straight from the game spec.
    fn joint_mdp_q(spec: &MatrixGameSpec) -> Vec<Vec<f64>> {
        let states = spec.payoffs.len();
        let q_of = |v: &[f64]| -> Vec<Vec<f64>> {
            (0..states)
                .map(|s| {
                    spec.successors[s]
                        .iter()
                        .zip(&spec.payoffs[s])
                        .map(|(dist, r)| {
                            dist.iter().map(|&(t, p)| p * (r[0] + spec.discount * v[t])).sum()
                        })
                        .collect()
                })
                .collect()
        };
        let mut v = vec![0.0; states];
        for _ in 0..2000 {
            v = q_of(&v)
                .iter()
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
        }
        q_of(&v)
    }

    fn random_identical_game() -> impl Strategy<Value = MatrixGameSpec> {
        (1usize..4, 1usize..3, 1usize..4).prop_flat_map(|(states, a0, a1)| {
            let k = a0 * a1;
            (
                proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, k), states),
                proptest::collection::vec(
                    proptest::collection::vec((0..states, 0..states, 0.0f64..1.0), k),
                    states,
                ),
                0.0f64..0.95,
            )
                .prop_map(move |(rewards, succ, discount)| MatrixGameSpec {
                    action_sizes: vec![a0, a1],
                    payoffs: rewards
                        .into_iter()
                        .map(|row| row.into_iter().map(|r| vec![r, r]).collect())
                        .collect(),
                    successors: succ
                        .into_iter()
                        .map(|row| {
                            row.into_iter()
                                .map(|(s1, s2, p)| vec![(s1, p), (s2, 1.0 - p)])
                                .collect()
                        })
                        .collect(),
                    horizon: None,
                    discount,
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identical_interest_matches_joint_mdp(spec in random_identical_game()) {
            let game = MatrixGame::new(spec.clone()).unwrap();
            let sol = nash_q_oracle(&game, OracleKind::IdenticalInterest).unwrap();
            let brute = joint_mdp_q(&spec);
            for (s, row) in brute.iter().enumerate() {
                for (i, b) in row.iter().enumerate() {
                    prop_assert!((sol.q[0][s][i] - b).abs() < 1e-9);
                    prop_assert_eq!(sol.q[0][s][i], sol.q[1][s][i]);
                }
            }
        }

        #[test]
        fn solution_is_a_fixed_point(spec in random_identical_game()) {
            let game = MatrixGame::new(spec).unwrap();
            let sol = nash_q_oracle(&game, OracleKind::IdenticalInterest).unwrap();
            let r = bellman_residual(&game, OracleKind::IdenticalInterest, &sol).unwrap();
            prop_assert!(r <= 1e-10, "residual {r}");
        }
    }
}
