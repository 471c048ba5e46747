//! Repeated matrix games and small multi-state chains of stage games.
//!
//! Plain-text tensor format, one line per joint action:
//!
//! ```text
//! # identical-interest coordination game
//! 0 0 : 1 1
//! 0 1 : 0 0
//! 1 0 : 0 0
//! 1 1 : 0 0
//! ```
//!
//! Multi-state chains add optional directives: `states K`, `horizon H|none`,
//! `discount G`, a `state k` line opening the section for state `k`, and
//! `next a1 .. aN : s'` (or `: s'1 p1 s'2 p2 ...`) successor lines. Joint
//! actions without a `next` line loop on their own state.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, RngCore};

use super::{
    Environment, JointAction, JointActionSpace, ModelOutcome, StateId,
    StepOutcome,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSpec {
    pub action_sizes: Vec<usize>,
    /// `payoffs[state][joint_index][agent]`
    pub payoffs: Vec<Vec<Vec<f64>>>,
    /// `successors[state][joint_index]` = list of `(next_state, probability)`
    pub successors: Vec<Vec<Vec<(StateId, f64)>>>,
    pub horizon: Option<usize>,
    pub discount: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixGame {
    spec: MatrixGameSpec,
    space: JointActionSpace,
    bound: Vec<f64>,
    steps: usize,
}

impl MatrixGame {
    pub fn new(spec: MatrixGameSpec) -> Result<Self> {
        let space = JointActionSpace::new(spec.action_sizes.clone());
        let n = spec.action_sizes.len();
        let k = space.num_joint();
        let mut problems = Vec::new();
        if n == 0 || spec.action_sizes.contains(&0) {
            problems.push("every agent needs at least one action".to_string());
        }
        if spec.payoffs.is_empty() {
            problems.push("at least one state is required".to_string());
        }
        if spec.successors.len() != spec.payoffs.len() {
            problems.push(format!(
                "{} payoff states but {} successor states",
                spec.payoffs.len(),
                spec.successors.len()
            ));
        }
        if !(0.0..1.0).contains(&spec.discount) {
            problems.push(format!("discount {} not in [0, 1)", spec.discount));
        }
        let states = spec.payoffs.len();
        for (s, tensor) in spec.payoffs.iter().enumerate() {
            if tensor.len() != k {
                problems.push(format!("state {s}: {} payoff rows, expected {k}", tensor.len()));
            }
            for (i, row) in tensor.iter().enumerate() {
                if row.len() != n {
                    problems.push(format!(
                        "state {s} joint {}: {} rewards, expected {n}",
                        space.decode(i),
                        row.len()
                    ));
                }
            }
        }
        for (s, table) in spec.successors.iter().enumerate() {
            if table.len() != k {
                problems.push(format!("state {s}: {} successor rows, expected {k}", table.len()));
            }
            for (i, dist) in table.iter().enumerate() {
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                if dist.is_empty() || (total - 1.0).abs() > 1e-9 || dist.iter().any(|(_, p)| *p < 0.0)
                {
                    problems.push(format!(
                        "state {s} joint {}: successor probabilities must be non-negative and sum to 1",
                        space.decode(i)
                    ));
                }
                if let Some((bad, _)) = dist.iter().find(|(t, _)| *t >= states) {
                    problems.push(format!("state {s}: successor {bad} out of range"));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let mut bound = vec![0.0f64; n];
        for row in spec.payoffs.iter().flatten() {
            for (b, r) in bound.iter_mut().zip(row) {
                *b = b.max(r.abs());
            }
        }
        Ok(MatrixGame {
            spec,
            space,
            bound,
            steps: 0,
        })
    }

    /// Single-state repeated game with the default horizon of 100 steps.
    pub fn single_state(
        action_sizes: Vec<usize>,
        payoff: impl Fn(&JointAction) -> Vec<f64>,
    ) -> Result<Self> {
        let space = JointActionSpace::new(action_sizes.clone());
        let tensor: Vec<Vec<f64>> = space.iter().map(|ja| payoff(&ja)).collect();
        let k = tensor.len();
        MatrixGame::new(MatrixGameSpec {
            action_sizes,
            payoffs: vec![tensor],
            successors: vec![vec![vec![(0, 1.0)]; k]],
            horizon: Some(100),
            discount: 0.9,
        })
    }

    pub fn with_horizon(mut self, horizon: Option<usize>) -> Self {
        self.spec.horizon = horizon;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.spec.discount = discount;
        self
    }

    pub fn spec(&self) -> &MatrixGameSpec {
        &self.spec
    }

    pub fn payoff(&self, state: StateId, joint: &JointAction) -> &[f64] {
        &self.spec.payoffs[state][self.space.index(joint)]
    }

    /// All agents receive the same reward for every state and joint action.
    pub fn is_identical_interest(&self) -> bool {
        self.spec
            .payoffs
            .iter()
            .flatten()
            .all(|row| row.iter().all(|r| *r == row[0]))
    }

    pub fn is_zero_sum(&self) -> bool {
        self.spec.action_sizes.len() == 2
            && self
                .spec
                .payoffs
                .iter()
                .flatten()
                .all(|row| row[0] + row[1] == 0.0)
    }

    pub fn matrix_game_step(
        &mut self,
        state: StateId,
        joint: &JointAction,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome> {
        self.space.validate(joint)?;
        if state >= self.spec.payoffs.len() {
            return Err(Error::contract(format!("state {state} out of range")));
        }
        let idx = self.space.index(joint);
        let dist = &self.spec.successors[state][idx];
        let next = if dist.len() == 1 {
            dist[0].0
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = dist[dist.len() - 1].0;
            for (t, p) in dist {
                acc += p;
                if u < acc {
                    pick = *t;
                    break;
                }
            }
            pick
        };
        self.steps += 1;
        Ok(StepOutcome {
            next_state: next,
            rewards: self.spec.payoffs[state][idx].clone(),
            terminal: self.spec.horizon.is_some_and(|h| self.steps >= h),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        MatrixGame::new(parse_tensor_text(text, origin)?)
    }

    /// Render in the plain-text tensor format; `parse` inverts it.
    pub fn to_tensor_text(&self) -> String {
        let spec = &self.spec;
        let mut out = String::new();
        let multi = spec.payoffs.len() > 1;
        let _ = writeln!(out, "actions {}", join(&spec.action_sizes));
        if multi {
            let _ = writeln!(out, "states {}", spec.payoffs.len());
        }
        match spec.horizon {
            Some(h) => {
                let _ = writeln!(out, "horizon {h}");
            }
            None => out.push_str("horizon none\n"),
        }
        let _ = writeln!(out, "discount {:?}", spec.discount);
        for (s, tensor) in spec.payoffs.iter().enumerate() {
            if multi {
                let _ = writeln!(out, "state {s}");
            }
            for (i, row) in tensor.iter().enumerate() {
                let ja = self.space.decode(i);
                let rs: Vec<String> = row.iter().map(|r| format!("{r:?}")).collect();
                let _ = writeln!(out, "{} : {}", join(&ja.0), rs.join(" "));
            }
            for (i, dist) in spec.successors[s].iter().enumerate() {
                if dist.len() == 1 && dist[0].0 == s {
                    continue;
                }
                let ja = self.space.decode(i);
                let parts: Vec<String> = dist.iter().map(|(t, p)| format!("{t} {p:?}")).collect();
                let _ = writeln!(out, "next {} : {}", join(&ja.0), parts.join(" "));
            }
        }
        out
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_tensor_text(text: &str, origin: &str) -> Result<MatrixGameSpec> {
    struct Line {
        state: usize,
        actions: Vec<usize>,
        values: Vec<String>,
        next: bool,
        lineno: usize,
    }
    let mut declared_states: Option<usize> = None;
    let mut declared_actions: Option<Vec<usize>> = None;
    let mut horizon = Some(100);
    let mut discount = 0.9;
    let mut current = 0usize;
    let mut lines = Vec::new();
    let loc = |n: usize| format!("{origin}:{n}");

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        let number = |w: &str| -> Result<usize> {
            w.parse::<usize>()
                .map_err(|_| Error::parse(loc(lineno), format!("expected integer, found `{w}`")))
        };
        match head {
            "states" => declared_states = Some(number(rest.first().copied().unwrap_or(""))?),
            "actions" => {
                declared_actions = Some(rest.iter().map(|w| number(w)).collect::<Result<_>>()?)
            }
            "horizon" => {
                horizon = match rest.first().copied() {
                    Some("none") => None,
                    Some(w) => Some(number(w)?),
                    None => return Err(Error::parse(loc(lineno), "horizon needs a value")),
                }
            }
            "discount" => {
                discount = rest
                    .first()
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::parse(loc(lineno), "discount needs a number"))?
            }
            "state" => current = number(rest.first().copied().unwrap_or(""))?,
            _ => {
                let (next, body) = match line.strip_prefix("next") {
                    Some(b) => (true, b),
                    None => (false, line),
                };
                let (lhs, rhs) = body
                    .split_once(':')
                    .ok_or_else(|| Error::parse(loc(lineno), "expected `a1 .. aN : values`"))?;
                let actions = lhs
                    .split_whitespace()
                    .map(number)
                    .collect::<Result<Vec<_>>>()?;
                if actions.is_empty() {
                    return Err(Error::parse(loc(lineno), "missing joint action"));
                }
                lines.push(Line {
                    state: current,
                    actions,
                    values: rhs.split_whitespace().map(str::to_string).collect(),
                    next,
                    lineno,
                });
            }
        }
    }

    let arity = declared_actions
        .as_ref()
        .map(|a| a.len())
        .or_else(|| lines.first().map(|l| l.actions.len()))
        .ok_or_else(|| Error::parse(origin, "no payoff lines"))?;
    let sizes = match declared_actions {
        Some(a) => a,
        None => {
            let mut sizes = vec![0usize; arity];
            for l in &lines {
                for (s, a) in sizes.iter_mut().zip(&l.actions) {
                    *s = (*s).max(a + 1);
                }
            }
            sizes
        }
    };
    let states = declared_states.unwrap_or_else(|| lines.iter().map(|l| l.state + 1).max().unwrap_or(1));
    let space = JointActionSpace::new(sizes.clone());
    let k = space.num_joint();
    let mut payoffs: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; states];
    let mut successors: Vec<Vec<Vec<(StateId, f64)>>> =
        (0..states).map(|s| vec![vec![(s, 1.0)]; k]).collect();

    for l in lines {
        let ja = JointAction(l.actions);
        space
            .validate(&ja)
            .map_err(|e| Error::parse(loc(l.lineno), e.to_string()))?;
        if l.state >= states {
            return Err(Error::parse(loc(l.lineno), format!("state {} out of range", l.state)));
        }
        let idx = space.index(&ja);
        if l.next {
            let dist = match l.values.len() {
                1 => vec![(parse_num::<usize>(&l.values[0], &loc(l.lineno))?, 1.0)],
                n if n >= 2 && n % 2 == 0 => l
                    .values
                    .chunks(2)
                    .map(|c| {
                        Ok((
                            parse_num::<usize>(&c[0], &loc(l.lineno))?,
                            parse_num::<f64>(&c[1], &loc(l.lineno))?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?,
                _ => {
                    return Err(Error::parse(
                        loc(l.lineno),
                        "successor list must be `s'` or pairs `s' p`",
                    ))
                }
            };
            successors[l.state][idx] = dist;
        } else {
            if l.values.len() != arity {
                return Err(Error::parse(
                    loc(l.lineno),
                    format!("expected {arity} rewards, found {}", l.values.len()),
                ));
            }
            let rs = l
                .values
                .iter()
                .map(|v| parse_num::<f64>(v, &loc(l.lineno)))
                .collect::<Result<Vec<_>>>()?;
            payoffs[l.state][idx] = Some(rs);
        }
    }

    let mut missing = Vec::new();
    let payoffs = payoffs
        .into_iter()
        .enumerate()
        .map(|(s, t)| {
            t.into_iter()
                .enumerate()
                .map(|(i, row)| {
                    row.unwrap_or_else(|| {
                        missing.push(format!("state {s} joint {}", space.decode(i)));
                        vec![0.0; arity]
                    })
                })
                .collect()
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::parse(origin, format!("missing payoffs for {}", missing.join(", "))));
    }
    Ok(MatrixGameSpec {
        action_sizes: sizes,
        payoffs,
        successors,
        horizon,
        discount,
    })
}

fn parse_num<T: std::str::FromStr>(w: &str, location: &str) -> Result<T> {
    w.parse::<T>()
        .map_err(|_| Error::parse(location, format!("cannot parse `{w}`")))
}

impl Environment for MatrixGame {
    fn num_agents(&self) -> usize {
        self.spec.action_sizes.len()
    }

    fn num_states(&self) -> usize {
        self.spec.payoffs.len()
    }

    fn action_space_sizes(&self) -> &[usize] {
        &self.spec.action_sizes
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn reward_bound(&self) -> &[f64] {
        &self.bound
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> StateId {
        self.steps = 0;
        0
    }

    fn step(
        &mut self,
        state: StateId,
        joint: &JointAction,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome> {
        self.matrix_game_step(state, joint, rng)
    }

    fn is_terminal(&self, _state: StateId) -> bool {
        false
    }

    fn horizon(&self) -> Option<usize> {
        self.spec.horizon
    }

    fn model(&self, state: StateId, joint: &JointAction) -> Option<Vec<ModelOutcome>> {
        if state >= self.num_states() || self.space.validate(joint).is_err() {
            return None;
        }
        let idx = self.space.index(joint);
        Some(
            self.spec.successors[state][idx]
                .iter()
                .map(|&(t, p)| ModelOutcome {
                    probability: p,
                    next_state: t,
                    rewards: self.spec.payoffs[state][idx].clone(),
                    terminal: false,
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coordination() -> MatrixGame {
        MatrixGame::single_state(vec![2, 2], |ja| {
            if ja.0 == [0, 0] {
                vec![1.0, 1.0]
            } else {
                vec![0.0, 0.0]
            }
        })
        .unwrap()
    }

    #[test]
    fn identical_interest_lookup() {
        let mut g = coordination();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = g.reset(&mut rng);
        let o = g.step(s, &JointAction(vec![0, 0]), &mut rng).unwrap();
        assert_eq!(o, StepOutcome { next_state: 0, rewards: vec![1.0, 1.0], terminal: false });
        assert!(g.is_identical_interest());
    }

    #[test]
    fn zero_sum_rewards_cancel() {
        let mut g = MatrixGame::single_state(vec![2, 2], |ja| {
            let r = if ja.0[0] == ja.0[1] { 1.0 } else { -1.0 };
            vec![r, -r]
        })
        .unwrap();
        assert!(g.is_zero_sum());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = g.reset(&mut rng);
        for i in 0..50 {
            let ja = JointAction(vec![i % 2, (i / 2) % 2]);
            let o = g.step(s, &ja, &mut rng).unwrap();
            assert_eq!(o.rewards[0] + o.rewards[1], 0.0);
        }
    }

    #[test]
    fn horizon_marks_terminal() {
        let mut g = coordination();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = g.reset(&mut rng);
        for t in 1..=100 {
            let o = g.step(s, &JointAction(vec![1, 1]), &mut rng).unwrap();
            assert_eq!(o.terminal, t == 100, "step {t}");
        }
    }

    #[test]
    fn arity_mismatch_is_contract_violation() {
        let mut g = coordination();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            g.step(0, &JointAction(vec![0]), &mut rng),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn parses_minimal_tensor_file() {
        let text = "0 0 : 1 1\n0 1 : 0 0\n1 0 : 0 0\n1 1 : 0.5 0.5\n";
        let g = MatrixGame::parse(text, "inline").unwrap();
        assert_eq!(g.action_space_sizes(), &[2, 2]);
        assert_eq!(g.payoff(0, &JointAction(vec![1, 1])), &[0.5, 0.5]);
        assert_eq!(g.horizon(), Some(100));
    }

    #[test]
    fn parses_multi_state_chain_and_roundtrips() {
        let text = "\
states 2
horizon none
discount 0.8
state 0
0 : 1
1 : 0
next 1 : 1 0.25 0 0.75
state 1
0 : -1
1 : 2
next 0 : 0
";
        let g = MatrixGame::parse(text, "inline").unwrap();
        assert_eq!(g.num_states(), 2);
        assert_eq!(g.horizon(), None);
        assert_eq!(g.discount(), 0.8);
        assert_eq!(g.spec().successors[0][1], vec![(1, 0.25), (0, 0.75)]);
        assert_eq!(g.spec().successors[1][1], vec![(1, 1.0)]);
        assert_eq!(g.reward_bound(), &[2.0]);
        let again = MatrixGame::parse(&g.to_tensor_text(), "roundtrip").unwrap();
        assert_eq!(again.spec(), g.spec());
    }

    #[test]
    fn missing_payoff_rows_are_reported() {
        let err = MatrixGame::parse("0 0 : 1 1\n1 1 : 0 0\n", "inline").unwrap_err();
        assert!(err.to_string().contains("missing payoffs"), "{err}");
    }

    #[test]
    fn stochastic_successor_frequencies() {
        let text = "actions 1\nhorizon none\n0 : 0\nnext 0 : 0 0.3 1 0.7\nstate 1\n0 : 0\nnext 0 : 0\n";
        let mut g = MatrixGame::parse(text, "inline").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| g.step(0, &JointAction(vec![0]), &mut rng).unwrap().next_state == 1)
            .count();
        let p = hits as f64 / n as f64;
        let sigma = (0.7f64 * 0.3 / n as f64).sqrt();
        assert!((p - 0.7).abs() < 4.0 * sigma, "p = {p}");
    }
}
