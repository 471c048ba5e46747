//! Ground truth for small games and the theory-side calculators: Nash Q
//! values, covering time, the contraction iteration count, convergence-time
//! bound expressions and empirical convergence time.

mod bounds;
mod covering;
mod nash;

pub use bounds::{
    d_sequence, iterations_for_accuracy, linear_rate_bound, ln_linear_rate_bound,
    ln_polynomial_rate_bound, polynomial_rate_bound, BoundInputs, PSI_MAX,
};
pub use covering::{estimate_covering_time, CoveringEstimate};
pub use nash::{bellman_residual, nash_q_oracle, NashQSolution, OracleKind, MAX_SWEEPS};

use crate::error::Result;
use crate::game::Environment;
use crate::trainer::{Phase, Trainer};

/// Confirmation window of `10 |S| prod|A|` steps.
pub fn convergence_window(env: &dyn Environment) -> usize {
    10 * env.num_states() * env.joint_space().num_joint()
}

/// First index `t` such that `errors[t..t + window]` all lie within `eps`.
/// `errors[t]` is the sup-norm error after `t` steps. `None` when the run
/// never settles, including when it ends before a window completes.
pub fn measure_convergence_time(errors: &[f64], eps: f64, window: usize) -> Option<usize> {
    let window = window.max(1);
    let mut run = 0;
    for (t, &e) in errors.iter().enumerate() {
        if e <= eps {
            run += 1;
            if run == window {
                return Some(t + 1 - window);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Train for `steps` joint steps, recording every agent's sup-norm error
/// against `oracle` before the first step and after each one.
pub fn track_errors(
    trainer: &mut Trainer,
    oracle: &NashQSolution,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = trainer.slots().len();
    let mut out = vec![Vec::with_capacity(steps + 1); n];
    let record = |t: &Trainer, out: &mut Vec<Vec<f64>>| {
        for (j, series) in out.iter_mut().enumerate() {
            series.push(oracle.sup_error(t.env(), j, t.slots()[j].learner.as_ref()));
        }
    };
    record(trainer, &mut out);
    for _ in 0..steps {
        trainer.step(Phase::Training)?;
        record(trainer, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_time_examples() {
        assert_eq!(measure_convergence_time(&[0.0; 5], 0.1, 5), Some(0));
        assert_eq!(measure_convergence_time(&[0.0; 4], 0.1, 5), None);
        let e = [1.0, 0.05, 0.2, 0.05, 0.05, 0.05, 0.3];
        assert_eq!(measure_convergence_time(&e, 0.1, 3), Some(3));
        assert_eq!(measure_convergence_time(&e, 0.1, 4), None);
        // a band twice the largest error always holds
        assert_eq!(measure_convergence_time(&e, 2.0, 7), Some(0));
    }
}
