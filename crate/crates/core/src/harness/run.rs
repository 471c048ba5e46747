//! Two-phase experiment runs: train with advisors, then execute frozen.

use rayon::prelude::*;

use super::config::{Algorithm, AgentConfig, ArmConfig, ExperimentConfig};
use super::metrics::{records_from_episode, MetricsRecord};
use crate::advisors::build_advisor;
use crate::baselines::{build_ablation_learner, FixedOpponent, IndependentQ, IndependentQConfig, Tlql};
use crate::error::{Error, Result};
use crate::game::Environment;
use crate::learner::AgentLearner;
use crate::matlac::{Matlac, MatlacConfig};
use crate::matlql::{MaTlql, MaTlqlConfig};
use crate::trainer::{AgentSlot, Phase, Trainer};

/// Output of one (arm, seed) task.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub arm: String,
    pub seed: u64,
    pub train: Vec<MetricsRecord>,
    pub exec: Vec<MetricsRecord>,
    /// Final checkpoint text per agent, when requested.
    pub checkpoints: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    /// Arm-major, seeds in config order.
    pub runs: Vec<SeedRun>,
}

impl ExperimentRun {
    pub fn arm_runs<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a SeedRun> + 'a {
        self.runs.iter().filter(move |r| r.arm == label)
    }
}

fn build_learner(
    agent: usize,
    cfg: &AgentConfig,
    env: &dyn Environment,
) -> Result<Box<dyn AgentLearner>> {
    let h = &cfg.hyper;
    let discount = h.gamma.unwrap_or_else(|| env.discount());
    let k = cfg.advisors.len();
    let two_level = MaTlqlConfig {
        exploration: h.exploration,
        rate: h.rate,
        discount,
        credit_concurring: h.credit_concurring,
    };
    let iq = |weighted_advice| IndependentQConfig {
        exploration: h.exploration,
        rate: h.rate,
        discount,
        weighted_advice,
    };
    Ok(match &cfg.algorithm {
        Algorithm::MaTlql => Box::new(MaTlql::new(env, agent, k, two_level)?),
        Algorithm::Tlql => Box::new(Tlql::new(env, agent, k, two_level)?),
        Algorithm::Ablation(flags) => {
            Box::new(build_ablation_learner(*flags, env, agent, k, two_level)?)
        }
        Algorithm::Matlac => Box::new(Matlac::new(
            env,
            agent,
            k,
            MatlacConfig {
                exploration: h.exploration,
                critic_rate: h.rate,
                actor_rate: h.actor_rate,
                discount,
            },
        )?),
        Algorithm::IndependentQ => Box::new(IndependentQ::new(env, agent, iq(false))?),
        Algorithm::WeightedAdvisor => Box::new(IndependentQ::new(env, agent, iq(true))?),
        Algorithm::FixedOpponent => {
            let spec = cfg
                .policy
                .as_ref()
                .ok_or_else(|| Error::config(format!("fixed opponent {agent} has no policy")))?;
            Box::new(FixedOpponent::new(build_advisor(spec, agent, env)?))
        }
    })
}

/// Fresh learners and advisors for every agent of an arm.
pub fn build_slots(arm: &ArmConfig, env: &dyn Environment) -> Result<Vec<AgentSlot>> {
    arm.agents
        .iter()
        .enumerate()
        .map(|(j, cfg)| {
            let learner = build_learner(j, cfg, env)?;
            let advisors = cfg
                .advisors
                .iter()
                .map(|spec| build_advisor(spec, j, env))
                .collect::<Result<_>>()?;
            Ok(AgentSlot::new(learner, advisors))
        })
        .collect()
}

pub fn build_trainer(arm: &ArmConfig, seed: u64) -> Result<Trainer> {
    let env = arm.env.build()?;
    let slots = build_slots(arm, env.as_ref())?;
    Ok(Trainer::new(env, slots, arm.ppr, arm.others_mode, seed))
}

/// Widest advisor set of the arm, used as the CSV column count.
pub fn advisor_width(arm: &ArmConfig) -> usize {
    arm.agents.iter().map(|a| a.advisors.len()).max().unwrap_or(0)
}

pub fn run_seed(config: &ExperimentConfig, arm: &ArmConfig, seed: u64) -> Result<SeedRun> {
    let width = advisor_width(arm);
    let mut trainer = build_trainer(arm, seed)?;
    let mut train = Vec::with_capacity(config.train_episodes * arm.agents.len());
    for _ in 0..config.train_episodes {
        let ep = trainer.run_episode(Phase::Training)?;
        train.extend(records_from_episode(seed, &ep, width));
    }
    let mut exec = Vec::with_capacity(config.exec_episodes * arm.agents.len());
    if config.exec_episodes > 0 {
        trainer.reseed(seed + config.exec_seed_offset);
        let before = trainer.fingerprints();
        for _ in 0..config.exec_episodes {
            let ep = trainer.run_episode(Phase::Execution)?;
            exec.extend(records_from_episode(seed, &ep, width));
        }
        if trainer.fingerprints() != before {
            return Err(Error::contract(format!(
                "arm {} seed {seed}: learner state changed during execution",
                arm.label
            )));
        }
        if exec.iter().any(|r| r.opportunities > 0) {
            return Err(Error::contract(format!(
                "arm {} seed {seed}: advisors consulted during execution",
                arm.label
            )));
        }
    }
    let checkpoints = if config.checkpoints {
        trainer.slots().iter().map(|s| s.learner.checkpoint()).collect()
    } else {
        Vec::new()
    };
    Ok(SeedRun { arm: arm.label.clone(), seed, train, exec, checkpoints })
}

/// Every (arm, seed) pair runs as an independent task; results come back in
/// arm-major, seed-list order regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let tasks: Vec<(&ArmConfig, u64)> = config
        .arms
        .iter()
        .flat_map(|a| config.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let runs = tasks
        .into_par_iter()
        .map(|(arm, seed)| run_seed(config, arm, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentRun { config: config.clone(), runs })
}
