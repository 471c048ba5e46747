//! Flat `key = value` experiment configuration.
//!
//! ```text
//! name = duel
//! env = duel width=4 height=4 horizon=30
//! seeds = 1-30
//! train_episodes = 500
//! exec_episodes = 100
//! rate = constant 0.1
//! epsilon = 0.1
//! agent.0.algorithm = matlql
//! agent.0.advisor = noisy-optimal p=0.9 base=greedy-toward
//! agent.0.advisor = uniform-random
//! agent.1.algorithm = fixed-opponent
//! agent.1.policy = uniform-random
//! arm.full.agent.0.algorithm = matlql
//! arm.iq.agent.0.algorithm = independent-q
//! compare = full iq
//! compare.window = 1-500
//! ```
//!
//! Keys under `arm.<label>.` override the base keys for that arm, and the
//! arms run in order of first mention; without any the config runs a single
//! arm named `default`. Repeated keys are only
//! allowed for `agent.<j>.advisor` and `compare`. Hyperparameter keys
//! (`gamma`, `rate`, `epsilon`, `eta`, `actor_rate`, `credit`) apply to every
//! agent unless given as `agent.<j>.<key>`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::advisors::AdvisorSpec;
use crate::baselines::AblationFlags;
use crate::error::{Error, Result};
use crate::game::{Environment, GridworldSpec, MatrixGame, ToyAdvisorGrid};
use crate::schedule::{ExplorationPolicy, LearningRateSchedule, PprSchedule};
use crate::trainer::OthersMode;

pub const DEFAULT_ARM: &str = "default";

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    MaTlql,
    Matlac,
    Tlql,
    /// `tlql+JA+EM+AE` style component selection.
    Ablation(AblationFlags),
    IndependentQ,
    WeightedAdvisor,
    FixedOpponent,
}

impl Algorithm {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "matlql" => Algorithm::MaTlql,
            "matlac" => Algorithm::Matlac,
            "tlql" => Algorithm::Tlql,
            "independent-q" => Algorithm::IndependentQ,
            "weighted-advisor" => Algorithm::WeightedAdvisor,
            "fixed-opponent" => Algorithm::FixedOpponent,
            t if t.starts_with("tlql+") => {
                let mut flags = AblationFlags::NONE;
                for part in t["tlql+".len()..].split('+') {
                    let slot = match part {
                        "JA" => &mut flags.joint_action,
                        "EM" => &mut flags.ensemble,
                        "AE" => &mut flags.advisor_eval,
                        _ => return Err(Error::config(format!("unknown component `{part}` in `{t}`"))),
                    };
                    if *slot {
                        return Err(Error::config(format!("component `{part}` repeated in `{t}`")));
                    }
                    *slot = true;
                }
                Algorithm::Ablation(flags)
            }
            _ => return Err(Error::config(format!("unknown algorithm `{text}`"))),
        })
    }

    /// Whether the algorithm can take the advisor branch.
    pub fn uses_advisors(&self) -> bool {
        !matches!(self, Algorithm::IndependentQ | Algorithm::FixedOpponent)
    }
}

#[derive(Debug, Clone)]
pub enum EnvSpec {
    Toy { discount: f64, horizon: usize },
    Matrix(MatrixGame),
    Grid(GridworldSpec),
}

impl EnvSpec {
    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvSpec::Toy { discount, horizon } => Box::new(ToyAdvisorGrid::new(*discount, *horizon)),
            EnvSpec::Matrix(g) => Box::new(g.clone()),
            EnvSpec::Grid(spec) => Box::new(crate::game::Gridworld::new(spec.clone())?),
        })
    }

    fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut words = text.split_whitespace();
        let kind = words.next().ok_or_else(|| Error::config("env: empty descriptor"))?;
        let mut params = BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::config(format!("env parameter `{w}` is not key=value")))?;
            params.insert(k, v);
        }
        let allowed: &[&str] = match kind {
            "toy" => &["horizon", "discount"],
            "matrix" => &["path", "horizon", "discount"],
            "duel" => &["width", "height", "horizon", "discount", "step_reward", "event_reward"],
            "pursuit" => &[
                "width", "height", "pursuers", "capture", "horizon", "discount", "step_reward",
                "event_reward",
            ],
            _ => return Err(Error::config(format!("unknown environment `{kind}`"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(k)) {
            return Err(Error::config(format!("env {kind}: unknown parameter `{k}`")));
        }
        let num = |k: &str| -> Result<Option<f64>> {
            params
                .get(k)
                .map(|v| v.parse().map_err(|_| Error::config(format!("env {kind}: bad {k} `{v}`"))))
                .transpose()
        };
        let int = |k: &str| -> Result<Option<usize>> {
            params
                .get(k)
                .map(|v| v.parse().map_err(|_| Error::config(format!("env {kind}: bad {k} `{v}`"))))
                .transpose()
        };
        let discount = num("discount")?;
        if let Some(g) = discount {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::config(format!("env {kind}: discount {g} not in [0, 1)")));
            }
        }
        Ok(match kind {
            "toy" => EnvSpec::Toy {
                discount: discount.unwrap_or(0.9),
                horizon: int("horizon")?.unwrap_or(10),
            },
            "matrix" => {
                let path = params
                    .get("path")
                    .ok_or_else(|| Error::config("env matrix: missing path"))?;
                let mut game = MatrixGame::load(&base_dir.join(path))?;
                if let Some(h) = params.get("horizon") {
                    let h = match *h {
                        "none" => None,
                        v => Some(v.parse().map_err(|_| {
                            Error::config(format!("env matrix: bad horizon `{v}`"))
                        })?),
                    };
                    game = game.with_horizon(h);
                }
                if let Some(g) = discount {
                    game = game.with_discount(g);
                }
                EnvSpec::Matrix(game)
            }
            _ => {
                let width = int("width")?.unwrap_or(5);
                let height = int("height")?.unwrap_or(5);
                let mut spec = if kind == "duel" {
                    GridworldSpec::duel(width, height)
                } else {
                    GridworldSpec::pursuit(width, height, int("pursuers")?.unwrap_or(2))
                };
                if let Some(c) = int("capture")? {
                    spec.capture_size = c;
                }
                if let Some(h) = int("horizon")? {
                    spec.horizon = h;
                }
                if let Some(g) = discount {
                    spec.discount = g;
                }
                if let Some(r) = num("step_reward")? {
                    spec.step_reward = r;
                }
                if let Some(r) = num("event_reward")? {
                    spec.event_reward = r;
                }
                // validate now so errors surface at load time
                crate::game::Gridworld::new(spec.clone())?;
                EnvSpec::Grid(spec)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    /// Defaults to the environment's discount.
    pub gamma: Option<f64>,
    pub rate: LearningRateSchedule,
    pub exploration: ExplorationPolicy,
    pub actor_rate: f64,
    pub credit_concurring: bool,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            gamma: None,
            rate: LearningRateSchedule::Constant(0.01),
            exploration: ExplorationPolicy::default(),
            actor_rate: 0.01,
            credit_concurring: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub advisors: Vec<AdvisorSpec>,
    /// Scripted policy of a fixed opponent.
    pub policy: Option<AdvisorSpec>,
    pub hyper: Hyper,
}

#[derive(Debug, Clone)]
pub struct ArmConfig {
    pub label: String,
    pub env: EnvSpec,
    pub agents: Vec<AgentConfig>,
    pub ppr: PprSchedule,
    pub others_mode: OthersMode,
}

/// Welch comparison of two arms for one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub agent: usize,
    /// Inclusive 1-based training-episode window for the return metric.
    pub window: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    /// Execution phase of seed `s` runs on seed `s + offset`.
    pub exec_seed_offset: u64,
    pub train_episodes: usize,
    pub exec_episodes: usize,
    pub smoothing_window: usize,
    /// Write each learner's final tables next to its metrics.
    pub checkpoints: bool,
    pub arms: Vec<ArmConfig>,
    pub comparisons: Vec<Comparison>,
}

const HYPER_KEYS: [&str; 6] = ["gamma", "rate", "epsilon", "eta", "actor_rate", "credit"];

fn parse_rate(v: &str) -> Result<LearningRateSchedule> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::config(format!("rate: bad number `{s}`")))
    };
    let r = match parts.as_slice() {
        ["constant", a] => LearningRateSchedule::Constant(num(a)?),
        ["polynomial", w] => LearningRateSchedule::Polynomial(num(w)?),
        ["linear"] => LearningRateSchedule::Linear,
        _ => {
            return Err(Error::config(format!(
                "rate `{v}`: expected `constant A`, `polynomial W` or `linear`"
            )))
        }
    };
    r.validate()?;
    Ok(r)
}

fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::config(format!("seeds: bad entry `{part}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(Error::config("seeds: empty list"));
    }
    Ok(out)
}

fn parse_window(v: &str) -> Result<(usize, usize)> {
    let bad = || Error::config(format!("compare.window `{v}`: expected `FIRST-LAST`"));
    let (a, b) = v.split_once('-').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("expected a boolean, got `{v}`"))),
    }
}

/// Anchor relative file paths inside an advisor descriptor at `base_dir`.
fn resolve_paths(spec: AdvisorSpec, base_dir: &Path) -> AdvisorSpec {
    match spec {
        AdvisorSpec::QSnapshot { path } => AdvisorSpec::QSnapshot { path: base_dir.join(path) },
        AdvisorSpec::Learning { alpha, init } => AdvisorSpec::Learning {
            alpha,
            init: init.map(|p| base_dir.join(p)),
        },
        AdvisorSpec::NoisyOptimal { p, base } => AdvisorSpec::NoisyOptimal {
            p,
            base: Box::new(resolve_paths(*base, base_dir)),
        },
        other => other,
    }
}

/// One `key = value` line with its origin.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Keys = BTreeMap<String, Vec<Entry>>;

fn repeatable(key: &str) -> bool {
    key == "compare" || (key.starts_with("agent.") && key.ends_with(".advisor"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), &dir)
    }

    /// Parse config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let mut base: Keys = BTreeMap::new();
        let mut arms: BTreeMap<String, Keys> = BTreeMap::new();
        let mut arm_order: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("{origin}:{}", i + 1), "expected `key = value`"))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            let entry = Entry { value: v, line: i + 1 };
            let (target, key) = match k.strip_prefix("arm.").and_then(|r| r.split_once('.')) {
                Some((label, rest)) => {
                    if !arm_order.iter().any(|l| l == label) {
                        arm_order.push(label.to_string());
                    }
                    (arms.entry(label.to_string()).or_default(), rest.to_string())
                }
                None => (&mut base, k),
            };
            let slot = target.entry(key.clone()).or_default();
            if !slot.is_empty() && !repeatable(&key) {
                return Err(Error::parse(
                    format!("{origin}:{}", i + 1),
                    format!("key `{key}` given twice (first on line {})", slot[0].line),
                ));
            }
            slot.push(entry);
        }
        Builder { base: &base, errors: Vec::new(), used: Default::default() }
            .build(&arms, &arm_order, base_dir)
    }
}

struct Builder<'a> {
    base: &'a Keys,
    errors: Vec<String>,
    used: std::collections::BTreeSet<String>,
}

impl Builder<'_> {
    fn note<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Config(v)) => {
                self.errors.extend(v);
                None
            }
            Err(e) => {
                self.errors.push(e.to_string());
                None
            }
        }
    }

    fn get<'k>(&mut self, keys: &'k Keys, key: &str) -> Option<&'k str> {
        let v = keys.get(key).map(|e| e[0].value.as_str());
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn num<T: std::str::FromStr>(&mut self, keys: &Keys, key: &str, default: T) -> T {
        match self.get(keys, key) {
            None => default,
            Some(v) => match v.parse() {
                Ok(x) => x,
                Err(_) => {
                    self.errors.push(format!("{key}: cannot parse `{v}`"));
                    default
                }
            },
        }
    }

    fn build(
        mut self,
        arm_keys: &BTreeMap<String, Keys>,
        arm_order: &[String],
        base_dir: &Path,
    ) -> Result<ExperimentConfig> {
        let base = self.base;
        let name = self.get(base, "name").unwrap_or("experiment").to_string();
        let seeds = match self.get(base, "seeds") {
            Some(v) => self.note(parse_seeds(v)).unwrap_or_default(),
            None => (1..=30).collect(),
        };
        let exec_seed_offset = self.num(base, "exec_seed_offset", 30u64);
        let train_episodes = self.num(base, "train_episodes", 100usize);
        let exec_episodes = self.num(base, "exec_episodes", 0usize);
        let smoothing_window = self.num(base, "smoothing_window", 100usize);
        if smoothing_window == 0 {
            self.errors.push("smoothing_window must be positive".into());
        }
        let checkpoints = match self.get(base, "checkpoints") {
            Some(v) => self.note(parse_bool(v)).unwrap_or(false),
            None => false,
        };

        let labels: Vec<String> = if arm_order.is_empty() {
            vec![DEFAULT_ARM.to_string()]
        } else {
            arm_order.to_vec()
        };
        let mut arms = Vec::new();
        for label in &labels {
            let mut merged = base.clone();
            if let Some(over) = arm_keys.get(label) {
                for (k, v) in over {
                    merged.insert(k.clone(), v.clone());
                }
            }
            if let Some(arm) = self.arm(label, &merged, train_episodes, base_dir) {
                arms.push(arm);
            }
        }

        let mut comparisons = Vec::new();
        let window = match self.get(base, "compare.window") {
            Some(v) => self.note(parse_window(v)).unwrap_or((1, train_episodes.max(1))),
            None => (1, train_episodes.max(1)),
        };
        let agent = self.num(base, "compare.agent", 0usize);
        for e in base.get("compare").into_iter().flatten() {
            self.used.insert("compare".into());
            let parts: Vec<&str> = e.value.split_whitespace().collect();
            match parts.as_slice() {
                [a, b] => {
                    for l in [a, b] {
                        if !labels.iter().any(|x| x == l) {
                            self.errors.push(format!("compare: unknown arm `{l}`"));
                        }
                    }
                    comparisons.push(Comparison { a: a.to_string(), b: b.to_string(), agent, window });
                }
                _ => self.errors.push(format!("compare `{}`: expected two arm labels", e.value)),
            }
        }
        if !comparisons.is_empty() && seeds.len() < 2 {
            self.errors.push("compare needs at least two seeds".into());
        }
        if window.1 > train_episodes && !comparisons.is_empty() {
            self.errors.push(format!(
                "compare.window ends at {} but only {train_episodes} training episodes run",
                window.1
            ));
        }

        for k in base.keys().chain(arm_keys.values().flat_map(|m| m.keys())) {
            if !self.used.contains(k) {
                self.errors.push(format!("unknown key `{k}`"));
            }
        }
        if !self.errors.is_empty() {
            self.errors.dedup();
            return Err(Error::Config(self.errors));
        }
        Ok(ExperimentConfig {
            name,
            seeds,
            exec_seed_offset,
            train_episodes,
            exec_episodes,
            smoothing_window,
            checkpoints,
            arms,
            comparisons,
        })
    }

    fn hyper(&mut self, keys: &Keys, prefix: &str, mut h: Hyper) -> Hyper {
        for key in HYPER_KEYS {
            let full = format!("{prefix}{key}");
            let Some(v) = self.get(keys, &full) else { continue };
            let ctx = |e: Error| match e {
                Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{full}: {m}")).collect()),
                e => e,
            };
            let parsed: Result<()> = (|| {
                let f = |v: &str| {
                    v.parse::<f64>()
                        .map_err(|_| Error::config(format!("cannot parse `{v}`")))
                };
                match key {
                    "gamma" => {
                        let g = f(v)?;
                        if !(0.0..1.0).contains(&g) {
                            return Err(Error::config(format!("{g} not in [0, 1)")));
                        }
                        h.gamma = Some(g);
                    }
                    "rate" => h.rate = parse_rate(v)?,
                    "epsilon" => h.exploration.epsilon = f(v)?,
                    "eta" => h.exploration.eta = f(v)?,
                    "actor_rate" => h.actor_rate = f(v)?,
                    "credit" => {
                        h.credit_concurring = match v {
                            "followed" => false,
                            "concurring" => true,
                            _ => return Err(Error::config(format!("`{v}`: expected followed or concurring"))),
                        }
                    }
                    _ => unreachable!(),
                }
                Ok(())
            })();
            self.note(parsed.map_err(ctx));
        }
        let checked = h.exploration.validate();
        self.note(checked);
        if !(h.actor_rate > 0.0) {
            self.errors.push(format!("{prefix}actor_rate {} must be positive", h.actor_rate));
        }
        h
    }

    fn arm(
        &mut self,
        label: &str,
        keys: &Keys,
        train_episodes: usize,
        base_dir: &Path,
    ) -> Option<ArmConfig> {
        let env_text = match self.get(keys, "env") {
            Some(v) => v.to_string(),
            None => {
                self.errors.push(format!("arm {label}: missing `env`"));
                return None;
            }
        };
        let env = self.note(EnvSpec::parse(&env_text, base_dir))?;
        let built = self.note(env.build())?;
        let n = built.num_agents();

        let initial = self.num(keys, "ppr.initial", 1.0f64);
        let horizon = self.num(keys, "ppr.horizon", train_episodes);
        let ppr = self.note(PprSchedule::new(initial, horizon)).unwrap_or_else(PprSchedule::off);
        let others_mode = match self.get(keys, "others") {
            None | Some("observed") => OthersMode::Observed,
            Some("equilibrium") => OthersMode::Equilibrium,
            Some("previous") => OthersMode::Previous,
            Some(v) => {
                self.errors.push(format!("others `{v}`: expected observed, equilibrium or previous"));
                OthersMode::Observed
            }
        };
        let shared = self.hyper(keys, "", Hyper::default());

        let mut agents = Vec::with_capacity(n);
        for j in 0..n {
            let p = format!("agent.{j}.");
            let algorithm = match self.get(keys, &format!("{p}algorithm")) {
                Some(v) => self.note(Algorithm::parse(v)),
                None => {
                    self.errors.push(format!("arm {label}: missing `{p}algorithm`"));
                    None
                }
            };
            let mut advisors = Vec::new();
            for e in keys.get(&format!("{p}advisor")).into_iter().flatten() {
                self.used.insert(format!("{p}advisor"));
                if let Some(a) = self.note(AdvisorSpec::parse(&e.value)) {
                    advisors.push(resolve_paths(a, base_dir));
                }
            }
            let policy = match self.get(keys, &format!("{p}policy")) {
                Some(v) => self.note(AdvisorSpec::parse(v)).map(|a| resolve_paths(a, base_dir)),
                None => None,
            };
            let hyper = self.hyper(keys, &p, shared.clone());
            let Some(algorithm) = algorithm else { continue };
            match &algorithm {
                Algorithm::FixedOpponent if policy.is_none() => {
                    self.errors.push(format!("arm {label}: fixed opponent {j} needs `{p}policy`"))
                }
                a if a.uses_advisors() && advisors.is_empty() && ppr.initial > 0.0 => {
                    self.errors.push(format!(
                        "arm {label}: agent {j} can defer to advisors (ppr.initial > 0) but has none"
                    ))
                }
                Algorithm::WeightedAdvisor if advisors.is_empty() => {
                    self.errors.push(format!("arm {label}: weighted-advisor agent {j} needs advisors"))
                }
                _ => {}
            }
            for spec in advisors.iter().chain(policy.iter()) {
                if spec.needs_grid() && built.grid().is_none() {
                    self.errors.push(format!(
                        "arm {label}: advisor `{spec}` needs a gridworld environment"
                    ));
                }
            }
            agents.push(AgentConfig { algorithm, advisors, policy, hyper });
        }
        for k in keys.keys() {
            if let Some(rest) = k.strip_prefix("agent.") {
                let idx = rest.split('.').next().and_then(|i| i.parse::<usize>().ok());
                if idx.is_none_or(|i| i >= n) {
                    self.errors.push(format!("arm {label}: `{k}` names an agent the environment lacks ({n} agents)"));
                    self.used.insert(k.clone());
                }
            }
        }
        if agents.len() != n {
            return None;
        }
        Some(ArmConfig { label: label.to_string(), env, agents, ppr, others_mode })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC_EXAMPLE: &str = "
name = duel
env = duel width=4 height=4 horizon=30
seeds = 1-30
train_episodes = 500
exec_episodes = 100
rate = constant 0.1
epsilon = 0.1
agent.0.algorithm = matlql
agent.0.advisor = noisy-optimal p=0.9 base=greedy-toward
agent.0.advisor = uniform-random
agent.1.algorithm = fixed-opponent
agent.1.policy = uniform-random
arm.full.agent.0.algorithm = matlql
arm.iq.agent.0.algorithm = independent-q
compare = full iq
compare.window = 1-500
";

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, "test.cfg", Path::new("/cfg"))
    }

    fn errors(text: &str) -> Vec<String> {
        match parse(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn documented_example_parses() {
        let c = parse(DOC_EXAMPLE).unwrap();
        assert_eq!(c.seeds, (1..=30).collect::<Vec<_>>());
        let labels: Vec<&str> = c.arms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, ["full", "iq"]);
        assert_eq!(c.arms[1].agents[0].algorithm, Algorithm::IndependentQ);
        assert_eq!(c.arms[0].agents[0].advisors.len(), 2);
        assert_eq!(c.arms[0].agents[0].hyper.rate, LearningRateSchedule::Constant(0.1));
        assert_eq!(c.arms[0].ppr, PprSchedule::new(1.0, 500).unwrap());
        assert_eq!(c.comparisons, [Comparison { a: "full".into(), b: "iq".into(), agent: 0, window: (1, 500) }]);
    }

    #[test]
    fn single_arm_without_overrides() {
        let c = parse("env = toy\nppr.initial = 0\nagent.0.algorithm = independent-q\nseeds = 2, 5-6").unwrap();
        assert_eq!(c.arms.len(), 1);
        assert_eq!(c.arms[0].label, DEFAULT_ARM);
        assert_eq!(c.seeds, [2, 5, 6]);
    }

    #[test]
    fn every_problem_is_reported_at_once() {
        let e = errors("env = toy\nrate = polynomial 0.3\nagent.0.algorithm = matlql\nbogus = 1\nagent.3.eta = 0.1");
        assert!(e.iter().any(|m| m.contains("rate")), "{e:?}");
        assert!(e.iter().any(|m| m.contains("unknown key `bogus`")), "{e:?}");
        assert!(e.iter().any(|m| m.contains("has none")), "{e:?}");
        assert!(e.iter().any(|m| m.contains("agent.3.eta")), "{e:?}");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        match parse("env = toy\n\nenv = toy") {
            Err(Error::Parse { location, message }) => {
                assert_eq!(location, "test.cfg:3");
                assert!(message.contains("line 1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comparison_checks() {
        let base = "env = toy\nppr.initial = 0\nagent.0.algorithm = tlql\narm.a.agent.0.algorithm = tlql\narm.b.agent.0.algorithm = independent-q\n";
        let e = errors(&format!("{base}seeds = 4\ncompare = a b"));
        assert!(e.iter().any(|m| m.contains("two seeds")), "{e:?}");
        let e = errors(&format!("{base}compare = a c\ncompare.window = 1-500"));
        assert!(e.iter().any(|m| m.contains("unknown arm `c`")), "{e:?}");
        assert!(e.iter().any(|m| m.contains("compare.window ends at 500")), "{e:?}");
    }

    #[test]
    fn ablation_components() {
        assert_eq!(
            Algorithm::parse("tlql+JA+AE").unwrap(),
            Algorithm::Ablation(AblationFlags { joint_action: true, ensemble: false, advisor_eval: true })
        );
        assert!(Algorithm::parse("tlql+JA+JA").is_err());
        assert!(Algorithm::parse("tlql+XY").is_err());
    }

    #[test]
    fn relative_paths_anchor_at_the_config() {
        let c = parse("env = pursuit width=4 height=4\nagent.0.algorithm = matlql\nagent.0.advisor = q-snapshot path=snap.txt\nagent.1.algorithm = matlql\nagent.1.advisor = uniform-random").unwrap();
        assert_eq!(c.arms[0].agents[0].advisors[0], AdvisorSpec::QSnapshot { path: "/cfg/snap.txt".into() });
    }

    #[test]
    fn grid_advisors_need_a_grid() {
        let e = errors("env = toy\nagent.0.algorithm = matlql\nagent.0.advisor = greedy-toward");
        assert!(e.iter().any(|m| m.contains("needs a gridworld")), "{e:?}");
    }
}

