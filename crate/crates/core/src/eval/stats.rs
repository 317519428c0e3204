//! Student-t tail probabilities and the paired t-test.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Which tail(s) the p-value covers. `Greater` tests mean(a - b) > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p: f64,
    /// Set when the differences have zero variance but non-zero mean; `t` is
    /// infinite and `p` is reported as 0.
    pub degenerate: bool,
}

/// Sample mean and (n - 1) standard deviation. A single value has std 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Paired t-test over per-split scores, `d = a - b`, `df = n - 1`.
pub fn paired_t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewSamples(a.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let df = n - 1;
    let (mean, sd) = mean_std(&d);
    if sd == 0.0 {
        if mean == 0.0 {
            return Ok(TTest {
                t: 0.0,
                df,
                p: 1.0,
                degenerate: false,
            });
        }
        let t = mean.signum() * f64::INFINITY;
        let p = match alternative {
            Alternative::TwoSided => 0.0,
            Alternative::Greater => f64::from(u8::from(t < 0.0)),
            Alternative::Less => f64::from(u8::from(t > 0.0)),
        };
        return Ok(TTest {
            t,
            df,
            p,
            degenerate: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let two = student_t_two_sided(t, df as f64);
    let p = match alternative {
        Alternative::TwoSided => two,
        Alternative::Greater if t > 0.0 => two / 2.0,
        Alternative::Greater => 1.0 - two / 2.0,
        Alternative::Less if t < 0.0 => two / 2.0,
        Alternative::Less => 1.0 - two / 2.0,
    };
    Ok(TTest {
        t,
        df,
        p,
        degenerate: false,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom,
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, n = 9) of `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` via Lentz's continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
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
    for m in 1..=1000 {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.8, 0.7, 0.9];
        let r = paired_t_test(&a, &a, Alternative::TwoSided).unwrap();
        assert_eq!((r.t, r.p, r.degenerate), (0.0, 1.0, false));
    }

    #[test]
    fn worked_example() {
        let a = [0.80, 0.81, 0.79, 0.82, 0.80];
        let b = [0.78, 0.79, 0.78, 0.80, 0.79];
        let r = paired_t_test(&a, &b, Alternative::TwoSided).unwrap();
        assert_eq!(r.df, 4);
        assert!((r.t - 6.531972647421823).abs() < 1e-9, "{}", r.t);
    }

    #[test]
    fn sign_flip_negates_t() {
        let a = [0.8, 0.82, 0.79, 0.85];
        let b = [0.78, 0.8, 0.8, 0.81];
        let x = paired_t_test(&a, &b, Alternative::TwoSided).unwrap();
        let y = paired_t_test(&b, &a, Alternative::TwoSided).unwrap();
        assert!((x.t + y.t).abs() < 1e-12);
        assert!((x.p - y.p).abs() < 1e-15);
        let g = paired_t_test(&a, &b, Alternative::Greater).unwrap();
        let l = paired_t_test(&a, &b, Alternative::Less).unwrap();
        assert!((g.p + l.p - 1.0).abs() < 1e-12);
        assert!((2.0 * g.p - x.p).abs() < 1e-12);
    }

    #[test]
    fn constant_nonzero_difference_is_flagged() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, 1.5, 2.5];
        let r = paired_t_test(&a, &b, Alternative::TwoSided).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
    }

    #[test]
    fn length_errors() {
        assert!(paired_t_test(&[1.0], &[1.0], Alternative::TwoSided).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0], Alternative::TwoSided).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[0.7, 0.8, 0.9, 0.8, 0.8]);
        assert!((m - 0.8).abs() < 1e-12);
        assert!((s - 0.005f64.sqrt()).abs() < 1e-12);
    }
}
