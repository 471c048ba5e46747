//! Action recommenders that an agent may defer to.
//!
//! An advisor descriptor is a kind followed by `key=value` parameters:
//!
//! ```text
//! always action=1
//! uniform-random
//! greedy-toward radius=3
//! avoid
//! noisy-optimal p=0.9 base=greedy-toward
//! noisy-optimal p=0.8 action=0
//! q-snapshot path=advisor.ckpt
//! learning alpha=0.1 init=warm.ckpt
//! ```
//!
//! Rule advisors outside their radius recommend a uniform-random action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::game::{
    ActionId, AgentId, Environment, GridLayout, GridMove, JointAction, JointActionSpace, StateId,
};
use crate::tables::{argmax, covered_states, parse_checkpoint, CheckpointEntry, QTable};

pub type AdvisorId = usize;

/// What an advisor may look at when asked for a recommendation.
#[derive(Debug, Clone, Copy)]
pub struct AdviceContext<'a> {
    pub agent: AgentId,
    pub state: StateId,
    pub num_actions: usize,
    /// Joint action most recently executed in the environment.
    pub last_joint: &'a [ActionId],
    pub space: &'a JointActionSpace,
    pub layout: Option<&'a GridLayout>,
}

/// The advised agent's own transition, fed to learning advisors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvisorTransition {
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: StateId,
    pub terminal: bool,
}

pub trait Advisor: Send {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId;

    fn observe(&mut self, _t: &AdvisorTransition) {}

    fn is_learning(&self) -> bool {
        false
    }

    /// Recommendations that fell back to a random action for lack of knowledge.
    fn fallbacks(&self) -> u64 {
        0
    }
}

fn uniform(ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
    rng.gen_range(0..ctx.num_actions)
}

#[derive(Debug, Clone)]
pub struct AlwaysAdvisor(pub ActionId);

impl Advisor for AlwaysAdvisor {
    fn recommend(&mut self, _ctx: &AdviceContext<'_>, _rng: &mut dyn RngCore) -> ActionId {
        self.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct UniformAdvisor;

impl Advisor for UniformAdvisor {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
        uniform(ctx, rng)
    }
}

/// Grid rule: approach (or flee) the agent's target body.
#[derive(Debug, Clone)]
pub struct GridRuleAdvisor {
    pub flee: bool,
    /// Expertise radius in Manhattan distance; `None` means everywhere.
    pub radius: Option<usize>,
}

impl GridRuleAdvisor {
    fn rule(&self, layout: &GridLayout, agent: AgentId, state: StateId) -> Option<GridMove> {
        let pos = layout.positions(state)?;
        let me = pos[agent];
        let target = pos[layout.target_of(agent)];
        let dist = me.manhattan(target);
        if self.radius.is_some_and(|r| dist > r) {
            return None;
        }
        if self.flee {
            let best = GridMove::ALL
                .iter()
                .copied()
                .max_by(|a, b| {
                    let da = layout.apply(me, *a).manhattan(target);
                    let db = layout.apply(me, *b).manhattan(target);
                    // reversed index order so ties go to the lowest move
                    da.cmp(&db).then((*b as usize).cmp(&(*a as usize)))
                })
                .unwrap_or(GridMove::Stay);
            return Some(best);
        }
        let dx = target.x as i64 - me.x as i64;
        let dy = target.y as i64 - me.y as i64;
        let horizontal = if dx > 0 { GridMove::Right } else { GridMove::Left };
        let vertical = if dy > 0 { GridMove::Down } else { GridMove::Up };
        Some(if dx == 0 && dy == 0 {
            GridMove::Stay
        } else if dx.abs() > dy.abs() {
            horizontal
        } else {
            vertical
        })
    }
}

impl Advisor for GridRuleAdvisor {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
        let layout = ctx.layout.expect("grid advisors are only built for grid environments");
        match layout.positions(ctx.state) {
            None => GridMove::Stay as ActionId,
            Some(_) => match self.rule(layout, ctx.agent, ctx.state) {
                Some(m) => m as ActionId,
                None => uniform(ctx, rng),
            },
        }
    }
}

/// Follows `base` with probability `p`, otherwise a uniform-random action.
pub struct NoisyAdvisor {
    pub p: f64,
    pub base: Box<dyn Advisor>,
}

impl Advisor for NoisyAdvisor {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
        let u: f64 = rng.gen();
        if u < self.p {
            self.base.recommend(ctx, rng)
        } else {
            uniform(ctx, rng)
        }
    }
}

/// Greedy advice from a frozen own-action value table.
#[derive(Debug, Clone)]
pub struct SnapshotAdvisor {
    rows: BTreeMap<(StateId, usize), Vec<f64>>,
    covered: BTreeSet<StateId>,
    fallbacks: u64,
}

impl SnapshotAdvisor {
    /// Build from `LOW` checkpoint entries. States absent from the entries
    /// are unknown to the advisor.
    pub fn from_entries(entries: &[CheckpointEntry], width: usize) -> Result<Self> {
        let mut rows: BTreeMap<(StateId, usize), Vec<f64>> = BTreeMap::new();
        for e in entries.iter().filter(|e| e.tag == "LOW") {
            if e.choice >= width {
                return Err(Error::config(format!(
                    "snapshot action {} outside action space of size {width}",
                    e.choice
                )));
            }
            rows.entry((e.state, e.others)).or_insert_with(|| vec![0.0; width])[e.choice] =
                e.value;
        }
        Ok(SnapshotAdvisor {
            covered: covered_states(entries, "LOW"),
            rows,
            fallbacks: 0,
        })
    }

    /// Snapshot over explicitly listed states (values may be all zero).
    pub fn from_rows(rows: Vec<((StateId, usize), Vec<f64>)>) -> Self {
        let covered = rows.iter().map(|((s, _), _)| *s).collect();
        SnapshotAdvisor {
            rows: rows.into_iter().collect(),
            covered,
            fallbacks: 0,
        }
    }

    pub fn load(path: &std::path::Path, width: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = parse_checkpoint(&text, &path.display().to_string())?;
        Self::from_entries(&entries, width)
    }

    /// Greedy action given the assumed others' key, or `None` for an unknown state.
    pub fn greedy(&self, state: StateId, others: usize) -> Option<ActionId> {
        if !self.covered.contains(&state) {
            return None;
        }
        let row = self
            .rows
            .get(&(state, others))
            .or_else(|| self.rows.get(&(state, 0)));
        Some(row.map(|r| argmax(r)).unwrap_or(0))
    }
}

impl Advisor for SnapshotAdvisor {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, rng: &mut dyn RngCore) -> ActionId {
        let others = if ctx.last_joint.len() == ctx.space.num_agents() {
            ctx.space
                .others_index(&JointAction(ctx.last_joint.to_vec()), ctx.agent)
        } else {
            0
        };
        match self.greedy(ctx.state, others) {
            Some(a) if a < ctx.num_actions => a,
            _ => {
                self.fallbacks += 1;
                uniform(ctx, rng)
            }
        }
    }

    fn fallbacks(&self) -> u64 {
        self.fallbacks
    }
}

/// An independent Q-learner that keeps training while it advises.
#[derive(Debug, Clone)]
pub struct LearningAdvisor {
    table: QTable,
    alpha: f64,
    gamma: f64,
}

impl LearningAdvisor {
    pub fn new(num_states: usize, num_actions: usize, alpha: f64, gamma: f64) -> Result<Self> {
        Ok(LearningAdvisor {
            table: QTable::new(num_states, 1, num_actions)?,
            alpha,
            gamma,
        })
    }

    pub fn with_initial(mut self, entries: &[CheckpointEntry]) -> Result<Self> {
        let own: Vec<CheckpointEntry> = entries
            .iter()
            .filter(|e| e.tag == "LOW")
            .map(|e| CheckpointEntry { others: 0, ..e.clone() })
            .collect();
        self.table.load_entries("LOW", &own)?;
        Ok(self)
    }

    pub fn value(&self, s: StateId, a: ActionId) -> f64 {
        self.table.get(s, 0, a)
    }
}

impl Advisor for LearningAdvisor {
    fn recommend(&mut self, ctx: &AdviceContext<'_>, _rng: &mut dyn RngCore) -> ActionId {
        self.table.argmax(ctx.state, 0)
    }

    fn observe(&mut self, t: &AdvisorTransition) {
        let target = if t.terminal {
            t.reward
        } else {
            t.reward + self.gamma * self.table.max(t.next_state, 0)
        };
        let q = self.table.get(t.state, 0, t.action);
        self.table.set(t.state, 0, t.action, q + self.alpha * (target - q));
    }

    fn is_learning(&self) -> bool {
        true
    }
}

/// Parsed advisor descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum AdvisorSpec {
    Always(ActionId),
    UniformRandom,
    GreedyToward { radius: Option<usize> },
    Avoid { radius: Option<usize> },
    NoisyOptimal { p: f64, base: Box<AdvisorSpec> },
    QSnapshot { path: PathBuf },
    Learning { alpha: f64, init: Option<PathBuf> },
}

impl fmt::Display for AdvisorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let radius = |r: &Option<usize>| r.map(|r| format!(" radius={r}")).unwrap_or_default();
        match self {
            AdvisorSpec::Always(a) => write!(f, "always action={a}"),
            AdvisorSpec::UniformRandom => write!(f, "uniform-random"),
            AdvisorSpec::GreedyToward { radius: r } => write!(f, "greedy-toward{}", radius(r)),
            AdvisorSpec::Avoid { radius: r } => write!(f, "avoid{}", radius(r)),
            AdvisorSpec::NoisyOptimal { p, base } => match base.as_ref() {
                AdvisorSpec::Always(a) => write!(f, "noisy-optimal p={p} action={a}"),
                other => write!(f, "noisy-optimal p={p} base={other}"),
            },
            AdvisorSpec::QSnapshot { path } => write!(f, "q-snapshot path={}", path.display()),
            AdvisorSpec::Learning { alpha, init } => {
                write!(f, "learning alpha={alpha}")?;
                if let Some(p) = init {
                    write!(f, " init={}", p.display())?;
                }
                Ok(())
            }
        }
    }
}

impl AdvisorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = text.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::config("empty advisor descriptor"))?;
        let mut params = BTreeMap::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| {
                Error::config(format!("advisor parameter `{w}` is not key=value"))
            })?;
            params.insert(k.to_string(), v.to_string());
        }
        let bad = |k: &str, v: &str| Error::config(format!("advisor {kind}: bad {k} `{v}`"));
        let num = |k: &str| -> Result<Option<f64>> {
            params
                .get(k)
                .map(|v| v.parse::<f64>().map_err(|_| bad(k, v)))
                .transpose()
        };
        let int = |k: &str| -> Result<Option<usize>> {
            params
                .get(k)
                .map(|v| v.parse::<usize>().map_err(|_| bad(k, v)))
                .transpose()
        };
        let allowed: &[&str] = match kind {
            "always" => &["action"],
            "uniform-random" => &[],
            "greedy-toward" | "avoid" => &["radius"],
            "noisy-optimal" => &["p", "action", "base", "radius"],
            "q-snapshot" => &["path"],
            "learning" => &["alpha", "init"],
            _ => return Err(Error::config(format!("unknown advisor kind `{kind}`"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("advisor {kind}: unknown parameter `{k}`")));
        }
        let spec = match kind {
            "always" => AdvisorSpec::Always(
                int("action")?.ok_or_else(|| Error::config("always: missing action"))?,
            ),
            "uniform-random" => AdvisorSpec::UniformRandom,
            "greedy-toward" => AdvisorSpec::GreedyToward { radius: int("radius")? },
            "avoid" => AdvisorSpec::Avoid { radius: int("radius")? },
            "noisy-optimal" => {
                let p = num("p")?.ok_or_else(|| Error::config("noisy-optimal: missing p"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("p", &p.to_string()));
                }
                let base = match (int("action")?, params.get("base")) {
                    (Some(a), None) => AdvisorSpec::Always(a),
                    (None, Some(b)) => {
                        let mut inner = b.clone();
                        if let Some(r) = params.get("radius") {
                            inner.push_str(&format!(" radius={r}"));
                        }
                        let inner = AdvisorSpec::parse(&inner)?;
                        if matches!(inner, AdvisorSpec::NoisyOptimal { .. }) {
                            return Err(Error::config("noisy-optimal: base cannot be noisy"));
                        }
                        inner
                    }
                    _ => {
                        return Err(Error::config(
                            "noisy-optimal: give exactly one of action= or base=",
                        ))
                    }
                };
                AdvisorSpec::NoisyOptimal { p, base: Box::new(base) }
            }
            "q-snapshot" => AdvisorSpec::QSnapshot {
                path: params
                    .get("path")
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::config("q-snapshot: missing path"))?,
            },
            "learning" => AdvisorSpec::Learning {
                alpha: num("alpha")?.unwrap_or(0.1),
                init: params.get("init").map(PathBuf::from),
            },
            _ => unreachable!(),
        };
        Ok(spec)
    }

    pub fn needs_grid(&self) -> bool {
        match self {
            AdvisorSpec::GreedyToward { .. } | AdvisorSpec::Avoid { .. } => true,
            AdvisorSpec::NoisyOptimal { base, .. } => base.needs_grid(),
            _ => false,
        }
    }
}

/// Instantiate an advisor for `agent` in `env`.
pub fn build_advisor(
    spec: &AdvisorSpec,
    agent: AgentId,
    env: &dyn Environment,
) -> Result<Box<dyn Advisor>> {
    let num_actions = env.action_space_sizes()[agent];
    if spec.needs_grid() && env.grid().is_none() {
        return Err(Error::config(format!(
            "advisor `{spec}` needs grid geometry but the environment is not a gridworld"
        )));
    }
    Ok(match spec {
        AdvisorSpec::Always(a) => {
            if *a >= num_actions {
                return Err(Error::config(format!(
                    "advisor `{spec}`: action {a} outside 0..{num_actions}"
                )));
            }
            Box::new(AlwaysAdvisor(*a))
        }
        AdvisorSpec::UniformRandom => Box::new(UniformAdvisor),
        AdvisorSpec::GreedyToward { radius } => Box::new(GridRuleAdvisor {
            flee: false,
            radius: *radius,
        }),
        AdvisorSpec::Avoid { radius } => Box::new(GridRuleAdvisor {
            flee: true,
            radius: *radius,
        }),
        AdvisorSpec::NoisyOptimal { p, base } => Box::new(NoisyAdvisor {
            p: *p,
            base: build_advisor(base, agent, env)?,
        }),
        AdvisorSpec::QSnapshot { path } => Box::new(SnapshotAdvisor::load(path, num_actions)?),
        AdvisorSpec::Learning { alpha, init } => {
            let adv = LearningAdvisor::new(env.num_states(), num_actions, *alpha, env.discount())?;
            match init {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    let entries = parse_checkpoint(&text, &path.display().to_string())?;
                    Box::new(adv.with_initial(&entries)?)
                }
                None => Box::new(adv),
            }
        }
    })
}
