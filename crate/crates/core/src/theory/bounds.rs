//! Contraction iteration count and the order-of-magnitude convergence-time
//! expressions for polynomial and linear learning rates.
//!
//! The bound expressions carry unstated asymptotic constants, taken as 1
//! here, so the values are only meaningful for comparison and monotonicity.
//! Both are evaluated in log space; the `ln_` variants are the ones to
//! compare because the linear-rate value overflows `f64` quickly.

use crate::error::{Error, Result};

/// Largest linear-rate constant the bound admits.
pub const PSI_MAX: f64 = 0.712;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Covering time in steps.
    pub covering_time: f64,
    pub q_max: f64,
    pub state_count: f64,
    /// Product of every agent's action-set size.
    pub action_product: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub omega: f64,
    pub psi: f64,
}

impl BoundInputs {
    pub fn beta(&self) -> f64 {
        (1.0 - self.gamma) / 2.0
    }

    fn validate_common(&self) -> Result<()> {
        let mut bad = Vec::new();
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        if !(self.covering_time > 0.0) {
            bad.push(format!("covering time {} must be positive", self.covering_time));
        }
        if !(self.q_max > 0.0) {
            bad.push(format!("Q_max {} must be positive", self.q_max));
        }
        if !(self.state_count >= 1.0) || !(self.action_product >= 1.0) {
            bad.push("state count and action product must be at least 1".to_string());
        }
        if !open01(self.delta) {
            bad.push(format!("delta {} not in (0, 1)", self.delta));
        }
        if !open01(self.epsilon) {
            bad.push(format!("epsilon {} not in (0, 1)", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            bad.push(format!("gamma {} not in [0, 1)", self.gamma));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// `ln` of `|S| * prod|A| * Q_max / (delta * beta * epsilon * extra)`.
    fn log_term(&self, extra: f64) -> Result<f64> {
        let inner = self.state_count * self.action_product * self.q_max
            / (self.delta * self.beta() * self.epsilon * extra);
        let l = inner.ln();
        if l.is_nan() || l <= 0.0 {
            return Err(Error::Domain(format!(
                "log term ln({inner}) is not positive"
            )));
        }
        Ok(l)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Natural log of the polynomial-rate expression
/// `(L^(1+3w) Q^2 ln(..) / (b^2 e^2))^(1-w) / L + ((L/b ln(Q/e) + 1) / 2)^(1/(1-w))`.
pub fn ln_polynomial_rate_bound(x: &BoundInputs) -> Result<f64> {
    x.validate_common()?;
    if !(x.omega > 0.5 && x.omega < 1.0) {
        return Err(Error::config(format!("omega {} not in (1/2, 1)", x.omega)));
    }
    let (l, b, e, w) = (x.covering_time, x.beta(), x.epsilon, x.omega);
    let first = (1.0 - w)
        * ((1.0 + 3.0 * w) * l.ln() + 2.0 * x.q_max.ln() + x.log_term(1.0)?.ln()
            - 2.0 * b.ln()
            - 2.0 * e.ln())
        - l.ln();
    let base = (l / b * (x.q_max / e).ln() + 1.0) / 2.0;
    if !(base > 0.0) {
        return Err(Error::Domain(format!("second-term base {base} is not positive")));
    }
    let second = base.ln() / (1.0 - w);
    Ok(log_add_exp(first, second))
}

pub fn polynomial_rate_bound(x: &BoundInputs) -> Result<f64> {
    ln_polynomial_rate_bound(x).map(f64::exp)
}

/// Natural log of the linear-rate expression
/// `(L + psi L + 1)^((1/b) ln(Q/e)) Q^2 ln(..) / (b^2 e^2 psi^2)`.
pub fn ln_linear_rate_bound(x: &BoundInputs) -> Result<f64> {
    x.validate_common()?;
    if !(x.psi > 0.0 && x.psi <= PSI_MAX) {
        return Err(Error::config(format!("psi {} not in (0, {PSI_MAX}]", x.psi)));
    }
    let (l, b, e, p) = (x.covering_time, x.beta(), x.epsilon, x.psi);
    let exponent = (x.q_max / e).ln() / b;
    Ok(exponent * (l + p * l + 1.0).ln() + 2.0 * x.q_max.ln() + x.log_term(p)?.ln()
        - 2.0 * b.ln()
        - 2.0 * e.ln()
        - 2.0 * p.ln())
}

pub fn linear_rate_bound(x: &BoundInputs) -> Result<f64> {
    ln_linear_rate_bound(x).map(f64::exp)
}

/// Smallest `m` with `(1/beta) ln(Q_max/eps) <= m`; zero once `eps >= Q_max`.
pub fn iterations_for_accuracy(q_max: f64, beta: f64, eps: f64) -> Result<u64> {
    if !(q_max > 0.0 && beta > 0.0 && beta <= 1.0 && eps > 0.0) {
        return Err(Error::Domain(format!(
            "need Q_max > 0, beta in (0, 1], eps > 0; got {q_max}, {beta}, {eps}"
        )));
    }
    if eps >= q_max {
        return Ok(0);
    }
    Ok(((q_max / eps).ln() / beta).ceil() as u64)
}

/// `D_1 = Q_max`, `D_{k+1} = (1 - beta) D_k`, first `len` terms.
pub fn d_sequence(q_max: f64, beta: f64, len: usize) -> Vec<f64> {
    std::iter::successors(Some(q_max), |d| Some((1.0 - beta) * d))
        .take(len)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> BoundInputs {
        BoundInputs {
            covering_time: 10.0,
            q_max: 10.0,
            state_count: 6.0,
            action_product: 2.0,
            delta: 0.1,
            epsilon: 0.1,
            gamma: 0.9,
            omega: 0.77,
            psi: PSI_MAX,
        }
    }

    #[test]
    fn iteration_count() {
        assert_eq!(iterations_for_accuracy(10.0, 0.05, 0.1).unwrap(), 93);
        assert_eq!(iterations_for_accuracy(10.0, 0.05, 10.0).unwrap(), 0);
        assert_eq!(iterations_for_accuracy(10.0, 0.05, 20.0).unwrap(), 0);
        assert!(iterations_for_accuracy(10.0, 0.0, 0.1).is_err());
        assert_eq!(d_sequence(10.0, 0.5, 4), vec![10.0, 5.0, 2.5, 1.25]);
        // D after m contractions is within eps
        let m = iterations_for_accuracy(10.0, 0.05, 0.1).unwrap() as usize;
        let d = d_sequence(10.0, 0.05, m + 1);
        assert!(d[m] <= 0.1);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn frozen_reference_values() {
        // 40-digit evaluation of both expressions at the reference inputs
        let poly = polynomial_rate_bound(&reference()).unwrap();
        assert!((poly / 381_397_706_814.589_053_23 - 1.0).abs() < 1e-12, "{poly}");
        let lin = ln_linear_rate_bound(&reference()).unwrap();
        assert!((lin - 285.250_031_486_530_568).abs() < 1e-10, "{lin}");
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let bad_psi = BoundInputs { psi: 0.8, ..reference() };
        assert!(matches!(linear_rate_bound(&bad_psi), Err(Error::Config(_))));
        let bad_omega = BoundInputs { omega: 0.5, ..reference() };
        assert!(matches!(polynomial_rate_bound(&bad_omega), Err(Error::Config(_))));
        let bad_delta = BoundInputs { delta: 1.0, ..reference() };
        assert!(polynomial_rate_bound(&bad_delta).is_err());
        // Q_max below eps leaves the log term non-positive
        let tiny = BoundInputs { q_max: 1e-6, ..reference() };
        assert!(matches!(polynomial_rate_bound(&tiny), Err(Error::Domain(_))));
    }

    #[test]
    fn vanishing_psi_blows_up() {
        // the psi^-2 factor takes over once the base stops shrinking
        let ln_at = |psi| ln_linear_rate_bound(&BoundInputs { psi, ..reference() }).unwrap();
        let mut prev = ln_at(1e-8);
        for psi in [1e-16, 1e-64, 1e-128] {
            let v = ln_at(psi);
            assert!(v > prev);
            prev = v;
        }
        let at = |psi| linear_rate_bound(&BoundInputs { psi, ..reference() }).unwrap();
        assert_eq!(at(1e-200), f64::INFINITY);
    }

    #[test]
    fn agent_count_enters_only_through_the_action_product() {
        let mut prev = f64::NEG_INFINITY;
        for n in 1..8 {
            let x = BoundInputs { action_product: 5f64.powi(n), ..reference() };
            let v = ln_polynomial_rate_bound(&x).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    fn inputs() -> impl Strategy<Value = BoundInputs> {
        (
            (2.0f64..1000.0, 1.0f64..100.0, 1u32..1000, 1u32..1000),
            (0.001f64..0.999, -4.0f64..-1.0, 0.5f64..0.99),
            (0.51f64..0.9, 0.05f64..PSI_MAX),
        )
            .prop_map(|((l, q, s, a), (delta, log_eps, gamma), (omega, psi))| BoundInputs {
                covering_time: l,
                q_max: q,
                state_count: s as f64,
                action_product: a as f64,
                delta,
                epsilon: 10f64.powf(log_eps),
                gamma,
                omega,
                psi,
            })
    }

    proptest! {
        #[test]
        fn halving_epsilon_never_decreases_either_bound(x in inputs()) {
            let half = BoundInputs { epsilon: x.epsilon / 2.0, ..x };
            prop_assert!(ln_polynomial_rate_bound(&half).unwrap() >= ln_polynomial_rate_bound(&x).unwrap());
            prop_assert!(ln_linear_rate_bound(&half).unwrap() >= ln_linear_rate_bound(&x).unwrap());
        }

        #[test]
        fn linear_bound_grows_with_covering_time(x in inputs(), extra in 0.1f64..100.0) {
            let longer = BoundInputs { covering_time: x.covering_time + extra, ..x };
            prop_assert!(ln_linear_rate_bound(&longer).unwrap() > ln_linear_rate_bound(&x).unwrap());
        }

        #[test]
        fn linear_bound_exceeds_polynomial(x in inputs()) {
            prop_assert!(ln_linear_rate_bound(&x).unwrap() > ln_polynomial_rate_bound(&x).unwrap());
        }

        #[test]
        fn calculators_are_pure(x in inputs()) {
            prop_assert_eq!(
                ln_polynomial_rate_bound(&x).unwrap().to_bits(),
                ln_polynomial_rate_bound(&x).unwrap().to_bits()
            );
            prop_assert_eq!(
                ln_linear_rate_bound(&x).unwrap().to_bits(),
                ln_linear_rate_bound(&x).unwrap().to_bits()
            );
        }
    }
}
