//! The interface every per-agent learner implements, and the branch logic
//! shared by the advisor-aware learners.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use rand::{Rng, RngCore};

use crate::advisors::{AdviceContext, Advisor, AdvisorId};
use crate::error::{Error, Result};
use crate::game::{ActionId, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionSource {
    Advisor(AdvisorId),
    Random,
    /// The agent's own policy.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub action: ActionId,
    pub source: ActionSource,
    /// The advisor branch was taken, so the advisors were consulted.
    pub opportunity: bool,
    /// Recommendations indexed by advisor; empty unless consulted.
    pub advice: Vec<ActionId>,
}

impl Decision {
    pub fn own(action: ActionId) -> Self {
        Decision {
            action,
            source: ActionSource::Greedy,
            opportunity: false,
            advice: Vec::new(),
        }
    }
}

/// Everything a learner sees when choosing an action.
#[derive(Debug, Clone, Copy)]
pub struct DecisionView<'a> {
    pub context: AdviceContext<'a>,
    /// Key of the other agents' joint action assumed at this state.
    pub others: usize,
    pub eps_prime: f64,
    /// False during the execution phase: no exploration, no advisors.
    pub training: bool,
}

/// One step from a single agent's point of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<'a> {
    pub state: StateId,
    pub others: usize,
    pub action: ActionId,
    pub source: ActionSource,
    pub advice: &'a [ActionId],
    pub reward: f64,
    pub next_state: StateId,
    pub terminal: bool,
    /// Key of the other agents' joint action at the next state.
    pub next_others: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Control,
    Evaluation,
    Sync,
}

/// A logged table write, used to compare learners step by step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    pub kind: UpdateKind,
    pub state: StateId,
    pub others: usize,
    pub key: usize,
    pub value: f64,
}

pub trait AgentLearner: Send {
    fn name(&self) -> &str;

    fn decide(
        &mut self,
        view: &DecisionView<'_>,
        advisors: &mut [Box<dyn Advisor>],
        rng: &mut dyn RngCore,
    ) -> Result<Decision>;

    fn learn(&mut self, t: &Transition<'_>) -> Result<()>;

    /// Own-action value estimate used for greedy play and oracle comparison.
    fn low_value(&self, s: StateId, others: usize, a: ActionId) -> f64;

    /// Whether tables are keyed by the other agents' joint action.
    fn keys_joint_actions(&self) -> bool;

    fn checkpoint(&self) -> String;

    /// Hash of every table bit and counter.
    fn fingerprint(&self) -> u64;

    fn update_log(&self) -> &[UpdateRecord] {
        &[]
    }
}

pub(crate) fn hash_of(f: impl FnOnce(&mut DefaultHasher)) -> u64 {
    let mut h = DefaultHasher::new();
    f(&mut h);
    h.finish()
}

/// Branch thresholds for one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchParams {
    pub eps_prime: f64,
    pub epsilon: f64,
    pub eta: f64,
}

/// Branch selection on pre-drawn uniforms `u` and `u_prime`.
///
/// `u < eps_prime` defers to an advisor: the `preferred` one when
/// `u_prime < eta`, otherwise a uniformly drawn one. `eps_prime <= u <
/// max(epsilon, eps_prime)` plays a uniform-random action. Anything else
/// plays `greedy`.
#[allow(clippy::too_many_arguments)]
pub fn select_action(
    params: &BranchParams,
    u: f64,
    u_prime: f64,
    advice: &[ActionId],
    num_actions: usize,
    preferred: impl FnOnce(&[ActionId], &mut dyn RngCore) -> Result<AdvisorId>,
    greedy: impl FnOnce(&mut dyn RngCore) -> ActionId,
    rng: &mut dyn RngCore,
) -> Result<(ActionId, ActionSource)> {
    if u < params.eps_prime {
        if advice.is_empty() {
            return Err(Error::config("advisor branch taken but the agent has no advisors"));
        }
        let ad = if u_prime < params.eta {
            preferred(advice, rng)?
        } else {
            rng.gen_range(0..advice.len())
        };
        Ok((advice[ad], ActionSource::Advisor(ad)))
    } else if u < params.epsilon.max(params.eps_prime) {
        Ok((rng.gen_range(0..num_actions), ActionSource::Random))
    } else {
        Ok((greedy(rng), ActionSource::Greedy))
    }
}

/// Draw the branch uniforms, consult advisors if needed and select.
///
/// Random draws happen in a fixed order: `u`, then (advisor branch only)
/// each advisor's recommendation, then `u_prime`, then whatever the chosen
/// branch needs.
pub(crate) fn decide_with_branches(
    view: &DecisionView<'_>,
    advisors: &mut [Box<dyn Advisor>],
    rng: &mut dyn RngCore,
    epsilon: f64,
    eta: f64,
    preferred: impl FnOnce(&[ActionId], &mut dyn RngCore) -> Result<AdvisorId>,
    greedy: impl FnOnce(&mut dyn RngCore) -> ActionId,
) -> Result<Decision> {
    let u: f64 = rng.gen();
    let opportunity = u < view.eps_prime;
    let mut advice = Vec::new();
    let mut u_prime = 1.0;
    if opportunity {
        advice = advisors
            .iter_mut()
            .map(|a| a.recommend(&view.context, rng))
            .collect();
        u_prime = rng.gen();
    }
    let params = BranchParams {
        eps_prime: view.eps_prime,
        epsilon,
        eta,
    };
    let (action, source) = select_action(
        &params,
        u,
        u_prime,
        &advice,
        view.context.num_actions,
        preferred,
        greedy,
        rng,
    )?;
    Ok(Decision {
        action,
        source,
        opportunity,
        advice,
    })
}

/// Advisors credited for a step: the followed one, or with `concurring`
/// every advisor whose recommendation equals the executed action.
pub(crate) fn credited(t: &Transition<'_>, concurring: bool) -> Vec<AdvisorId> {
    match t.source {
        ActionSource::Advisor(_) if concurring => t
            .advice
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == t.action)
            .map(|(k, _)| k)
            .collect(),
        ActionSource::Advisor(ad) => vec![ad],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pick_first(_: &[ActionId], _: &mut dyn RngCore) -> Result<AdvisorId> {
        Ok(0)
    }

    #[test]
    fn branch_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = |eps_prime, epsilon| BranchParams { eps_prime, epsilon, eta: 0.9 };
        let run = |params: BranchParams, u: f64, rng: &mut ChaCha8Rng| {
            select_action(&params, u, 0.0, &[1, 0], 2, pick_first, |_| 1, rng)
                .unwrap()
                .1
        };
        // full reuse: advisor branch for every u < 1
        for u in [0.0, 0.5, 0.999] {
            assert_eq!(run(p(1.0, 0.0), u, &mut rng), ActionSource::Advisor(0));
        }
        assert_eq!(run(p(0.0, 0.0), 0.0, &mut rng), ActionSource::Greedy);
        assert_eq!(run(p(0.0, 0.1), 0.05, &mut rng), ActionSource::Random);
        assert_eq!(run(p(0.0, 0.1), 0.5, &mut rng), ActionSource::Greedy);
    }

    #[test]
    fn empty_advisor_set_in_advisor_branch_is_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = BranchParams { eps_prime: 1.0, epsilon: 0.0, eta: 0.9 };
        let r = select_action(&params, 0.3, 0.0, &[], 2, pick_first, |_| 0, &mut rng);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn random_advisor_when_u_prime_exceeds_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = BranchParams { eps_prime: 1.0, epsilon: 0.0, eta: 0.0 };
        let mut seen = [0usize; 3];
        for _ in 0..3000 {
            let (_, src) =
                select_action(&params, 0.0, 0.5, &[0, 1, 2], 3, pick_first, |_| 0, &mut rng)
                    .unwrap();
            if let ActionSource::Advisor(k) = src {
                seen[k] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c > 800), "{seen:?}");
    }
}
