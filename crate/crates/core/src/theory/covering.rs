//! Monte Carlo estimate of the covering time: steps until every active
//! (state, joint action) pair has been visited.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{Environment, JointAction, StateId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringEstimate {
    /// Longest trial, used as the empirical covering time.
    pub max: usize,
    pub trials: Vec<usize>,
}

impl CoveringEstimate {
    pub fn mean(&self) -> f64 {
        self.trials.iter().sum::<usize>() as f64 / self.trials.len() as f64
    }
}

/// Trial `i` draws from stream `i` of `seed`, so the first `k` trials are
/// the same whatever the total count. Episodes restart on termination and
/// the clock keeps running.
pub fn estimate_covering_time(
    env: &mut dyn Environment,
    policy: &mut dyn FnMut(StateId, &mut dyn RngCore) -> JointAction,
    trials: usize,
    step_cap: usize,
    seed: u64,
) -> Result<CoveringEstimate> {
    if trials == 0 {
        return Err(Error::config("covering time needs at least one trial"));
    }
    let space = env.joint_space();
    let k = space.num_joint();
    let active: Vec<bool> = (0..env.num_states()).map(|s| env.is_active(s)).collect();
    let targets = active.iter().filter(|&&a| a).count() * k;
    let mut lengths = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut seen = vec![false; env.num_states() * k];
        let mut remaining = targets;
        let mut state = env.reset(&mut rng);
        let mut steps = 0;
        while remaining > 0 {
            if steps == step_cap {
                let unvisited = seen
                    .iter()
                    .enumerate()
                    .filter(|&(i, v)| !v && active[i / k])
                    .map(|(i, _)| (i / k, space.decode(i % k).0))
                    .collect();
                return Err(Error::Unreachable { unvisited });
            }
            let ja = policy(state, &mut rng);
            let slot = state * k + space.index(&ja);
            if !seen[slot] {
                seen[slot] = true;
                remaining -= 1;
            }
            let out = env.step(state, &ja, &mut rng)?;
            steps += 1;
            state = if out.terminal { env.reset(&mut rng) } else { out.next_state };
        }
        lengths.push(steps);
    }
    Ok(CoveringEstimate {
        max: lengths.iter().copied().max().unwrap_or(0),
        trials: lengths,
    })
}
