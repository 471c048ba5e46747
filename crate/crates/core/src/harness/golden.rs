//! Five scripted steps on the toy grid, replayed through MA-TLQL and vanilla
//! TLQL, with every table entry checked against hand-computed values.
//!
//! Both advisors recommend Right everywhere except at t = 4, where the
//! second one recommends Down and is followed. Rate 0.1, discount 0.9, every
//! concurring advisor is credited.

use std::fmt;

use crate::error::Result;
use crate::game::{ActionId, ToyAction, ToyAdvisorGrid, ToyState};
use crate::learner::{ActionSource, AgentLearner, Transition};
use crate::matlql::{MaTlql, MaTlqlConfig};
use crate::baselines::Tlql;
use crate::schedule::LearningRateSchedule;
use crate::tables::QTable;

pub const GOLDEN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub step: usize,
    pub learner: &'static str,
    pub table: &'static str,
    /// e.g. `S2,R` or `S1,A2`.
    pub key: String,
    pub expected: f64,
    pub actual: f64,
}

impl GoldenCheck {
    pub fn ok(&self) -> bool {
        (self.expected - self.actual).abs() <= GOLDEN_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenReport {
    pub checks: Vec<GoldenCheck>,
    /// MA-TLQL ends with highQ(S1,A1) > highQ(S1,A2).
    pub ma_separates: bool,
    /// TLQL ends with highQ(S1,A1) == highQ(S1,A2).
    pub tlql_ties: bool,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.ma_separates && self.tlql_ties && self.checks.iter().all(GoldenCheck::ok)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &GoldenCheck> {
        self.checks.iter().filter(|c| !c.ok())
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "t={} {:<6} {}({}) expected {:+.6} actual {:+.17e} {}",
                c.step,
                c.learner,
                c.table,
                c.key,
                c.expected,
                c.actual,
                if c.ok() { "ok" } else { "MISMATCH" }
            )?;
        }
        writeln!(
            f,
            "matlql highQ(S1,A1) > highQ(S1,A2): {}",
            if self.ma_separates { "ok" } else { "MISMATCH" }
        )?;
        writeln!(
            f,
            "tlql   highQ(S1,A1) = highQ(S1,A2): {}",
            if self.tlql_ties { "ok" } else { "MISMATCH" }
        )?;
        write!(f, "golden trace {}", if self.passed() { "PASSED" } else { "FAILED" })
    }
}

struct Step {
    state: ToyState,
    action: ToyAction,
    followed: usize,
    advice: [ToyAction; 2],
}

/// Expected `[S1,R; S1,D; S2,R; S2,D]` after each step.
const LOW: [[f64; 4]; 5] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.1, 0.0],
    [0.009, 0.0, 0.1, 0.0],
    [0.009, 0.0, 0.1, -0.1],
    [0.0171, 0.0, 0.1, -0.1],
];

/// Expected `[S1,A1; S1,A2; S2,A1; S2,A2]` after each step.
const MA_HIGH: [[f64; 4]; 5] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.1, 0.1],
    [0.009, 0.009, 0.1, 0.1],
    [0.009, 0.009, 0.1, -0.01],
    [0.0171, 0.0072, 0.1, -0.01],
];

const TLQL_HIGH: [[f64; 4]; 5] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.1, 0.1],
    [0.009, 0.009, 0.1, 0.1],
    [0.009, 0.009, 0.1, -0.1],
    [0.0171, 0.0171, 0.1, -0.1],
];

fn script() -> [Step; 5] {
    use ToyAction::*;
    use ToyState::*;
    [
        Step { state: S1, action: Right, followed: 0, advice: [Right, Right] },
        Step { state: S2, action: Right, followed: 0, advice: [Right, Right] },
        Step { state: S1, action: Right, followed: 0, advice: [Right, Right] },
        Step { state: S2, action: Down, followed: 1, advice: [Right, Down] },
        Step { state: S1, action: Right, followed: 0, advice: [Right, Right] },
    ]
}

fn action_name(a: usize) -> &'static str {
    if a == ToyAction::Right.id() {
        "R"
    } else {
        "D"
    }
}

fn compare(
    checks: &mut Vec<GoldenCheck>,
    step: usize,
    learner: &'static str,
    table: &'static str,
    q: &QTable,
    expected: &[f64; 4],
    label: fn(usize) -> String,
) {
    for (i, &want) in expected.iter().enumerate() {
        let state = if i < 2 { ToyState::S1 } else { ToyState::S2 };
        let k = i % 2;
        checks.push(GoldenCheck {
            step,
            learner,
            table,
            key: format!("{},{}", state.name(), label(k)),
            expected: want,
            actual: q.get(state.id(), 0, k),
        });
    }
}

pub fn golden_trace() -> Result<GoldenReport> {
    let env = ToyAdvisorGrid::default();
    let config = MaTlqlConfig {
        rate: LearningRateSchedule::Constant(0.1),
        discount: 0.9,
        credit_concurring: true,
        ..MaTlqlConfig::default()
    };
    let mut ma = MaTlql::new(&env, 0, 2, config)?;
    let mut tl = Tlql::new(&env, 0, 2, config)?;
    let mut checks = Vec::new();
    let low_label: fn(usize) -> String = |k| action_name(k).to_string();
    let high_label: fn(usize) -> String = |k| format!("A{}", k + 1);
    for (i, step) in script().iter().enumerate() {
        let out = ToyAdvisorGrid::toy_grid_step(step.state.id(), step.action.id())?;
        let advice: Vec<ActionId> = step.advice.iter().map(|a| a.id()).collect();
        let t = Transition {
            state: step.state.id(),
            others: 0,
            action: step.action.id(),
            source: ActionSource::Advisor(step.followed),
            advice: &advice,
            reward: out.rewards[0],
            next_state: out.next_state,
            terminal: out.terminal,
            next_others: 0,
        };
        ma.learn(&t)?;
        tl.learn(&t)?;
        let n = i + 1;
        compare(&mut checks, n, "matlql", "lowQ", ma.low(), &LOW[i], low_label);
        compare(&mut checks, n, "matlql", "highQ", ma.high(), &MA_HIGH[i], high_label);
        compare(&mut checks, n, "tlql", "lowQ", tl.low(), &LOW[i], low_label);
        compare(&mut checks, n, "tlql", "highQ", tl.high(), &TLQL_HIGH[i], high_label);
    }
    let s1 = ToyState::S1.id();
    Ok(GoldenReport {
        checks,
        ma_separates: ma.high().get(s1, 0, 0) > ma.high().get(s1, 0, 1),
        tlql_ties: tl.high().get(s1, 0, 0) == tl.high().get(s1, 0, 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_matches() {
        let r = golden_trace().unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 5 * 16);
        assert_eq!(r.mismatches().count(), 0);
    }

    #[test]
    fn report_names_a_mismatch() {
        let mut r = golden_trace().unwrap();
        r.checks[7].actual += 1e-9;
        assert!(!r.passed());
        let text = r.to_string();
        assert!(text.contains("MISMATCH"));
        assert!(text.contains("t=1 matlql highQ(S2,A2)"), "{text}");
    }
}
