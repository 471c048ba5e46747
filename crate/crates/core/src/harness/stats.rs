//! Sample statistics and the unpaired two-sided Welch t-test.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom; NaN when both variances vanish.
    pub df: f64,
    pub p: f64,
    /// Both samples are constant with different means.
    pub degenerate: bool,
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Domain(format!(
            "Welch test needs two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            WelchResult { t: 0.0, df: f64::NAN, p: 1.0, degenerate: false }
        } else {
            let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
            WelchResult { t, df: f64::NAN, p: 0.0, degenerate: true }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let p = regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0);
    Ok(WelchResult { t, df, p, degenerate: false })
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};
    use statrs::function::beta::beta_reg;
    use statrs::function::gamma::ln_gamma as ref_ln_gamma;

    fn reference_p(t: f64, df: f64) -> f64 {
        let d = StudentsT::new(0.0, 1.0, df).unwrap();
        2.0 * d.cdf(-t.abs())
    }

    #[test]
    fn shifted_samples_match_reference() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t + 1.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        assert!((r.p - reference_p(r.t, r.df)).abs() < 1e-6, "{}", r.p);
        assert!((r.p - 0.346_593_507_087_3).abs() < 1e-9);
    }

    #[test]
    fn identical_and_degenerate_samples() {
        let a = [0.3, 1.2, -0.7, 2.2];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let r = welch_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((r.p, r.degenerate), (1.0, false));
        let r = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!((r.p, r.degenerate), (0.0, true));
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn special_functions_match_reference() {
        for x in [0.1, 0.5, 1.0, 1.5, 2.5, 7.0, 33.3, 150.0] {
            assert!((ln_gamma(x) - ref_ln_gamma(x)).abs() < 1e-10 * (1.0 + ref_ln_gamma(x).abs()));
        }
        for &(x, a, b) in &[(0.2, 0.5, 0.5), (0.9, 4.0, 0.5), (0.01, 30.0, 0.5), (0.7, 2.0, 3.0)] {
            assert!((regularized_incomplete_beta(x, a, b) - beta_reg(a, b, x)).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn p_matches_reference(
            a in proptest::collection::vec(-10.0f64..10.0, 2..40),
            b in proptest::collection::vec(-10.0f64..10.0, 2..40),
        ) {
            let r = welch_t_test(&a, &b).unwrap();
            prop_assume!(!r.df.is_nan());
            prop_assert!((0.0..=1.0).contains(&r.p));
            prop_assert!((r.p - reference_p(r.t, r.df)).abs() < 1e-6);
        }

        #[test]
        fn scale_invariance(
            a in proptest::collection::vec(-10.0f64..10.0, 2..20),
            b in proptest::collection::vec(-10.0f64..10.0, 2..20),
            c in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        ) {
            let r = welch_t_test(&a, &b).unwrap();
            prop_assume!(!r.df.is_nan());
            let sa: Vec<f64> = a.iter().map(|x| x * c).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * c).collect();
            let s = welch_t_test(&sa, &sb).unwrap();
            prop_assert!((s.t - r.t * c.signum()).abs() < 1e-9 * (1.0 + r.t.abs()));
            prop_assert!((s.p - r.p).abs() < 1e-9);
        }
    }
}
