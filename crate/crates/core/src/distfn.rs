//! Distribution functions of the reference laws used by the tests: standard
//! normal, chi-square and F.
//!
//! Tail probabilities come from the regularized incomplete gamma and beta
//! functions (power series below the usual switchover, Lentz continued
//! fractions above it). Quantiles are found by bisection on the CDF followed
//! by safeguarded Newton steps.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_ITER: usize = 20_000;
const TINY: f64 = 1e-300;

/// Reference distribution of a test statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefDistribution {
    Normal,
    ChiSquare { df: f64 },
    F { df1: f64, df2: f64 },
}

impl RefDistribution {
    pub fn chi_square(df: f64) -> Result<Self> {
        let d = RefDistribution::ChiSquare { df };
        d.validate()?;
        Ok(d)
    }

    pub fn f(df1: f64, df2: f64) -> Result<Self> {
        let d = RefDistribution::F { df1, df2 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |df: f64| df.is_finite() && df > 0.0;
        match *self {
            RefDistribution::Normal => Ok(()),
            RefDistribution::ChiSquare { df } if ok(df) => Ok(()),
            RefDistribution::F { df1, df2 } if ok(df1) && ok(df2) => Ok(()),
            other => Err(Error::domain(format!("invalid degrees of freedom in {other:?}"))),
        }
    }

    /// Degrees of freedom as `(df1, df2)`; `None` for the normal law.
    pub fn degrees_of_freedom(&self) -> Option<(f64, Option<f64>)> {
        match *self {
            RefDistribution::Normal => None,
            RefDistribution::ChiSquare { df } => Some((df, None)),
            RefDistribution::F { df1, df2 } => Some((df1, Some(df2))),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(Error::domain("cdf at NaN"));
        }
        let p = match *self {
            RefDistribution::Normal => normal_cdf(x),
            RefDistribution::ChiSquare { df } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_p(0.5 * df, 0.5 * x)?
                }
            }
            RefDistribution::F { df1, df2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = df1 * x;
                    beta_reg(0.5 * df1, 0.5 * df2, z / (z + df2))?
                }
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Upper-tail probability `P(X >= x)`; for continuous laws identical to `1 - cdf`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(Error::domain("survival at NaN"));
        }
        let p = match *self {
            RefDistribution::Normal => normal_cdf(-x),
            RefDistribution::ChiSquare { df } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_q(0.5 * df, 0.5 * x)?
                }
            }
            RefDistribution::F { df1, df2 } => {
                if x <= 0.0 {
                    1.0
                } else {
                    beta_reg(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x))?
                }
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// The `p`-quantile, `0 < p < 1`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile probability {p} outside (0,1)")));
        }
        match *self {
            RefDistribution::Normal => normal_quantile(p),
            _ => invert_positive(|x| self.cdf(x), |x| self.survival(x), |x| self.density(x), p),
        }
    }

    fn density(&self, x: f64) -> f64 {
        match *self {
            RefDistribution::Normal => normal_density(x),
            RefDistribution::ChiSquare { df } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let k = 0.5 * df;
                ((k - 1.0) * x.ln() - 0.5 * x - k * 2f64.ln() - ln_gamma(k)).exp()
            }
            RefDistribution::F { df1, df2 } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (a, b) = (0.5 * df1, 0.5 * df2);
                let ln = a * (df1 / df2).ln() + (a - 1.0) * x.ln()
                    - (a + b) * (1.0 + df1 * x / df2).ln()
                    - ln_beta(a, b);
                ln.exp()
            }
        }
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    // Phi(x) = erfc(-x/sqrt 2)/2 and erfc(z) = Q(1/2, z^2) for z >= 0.
    let half_tail = 0.5 * gamma_q(0.5, 0.5 * x * x).unwrap_or(0.0);
    let p = if x < 0.0 { half_tail } else { 1.0 - half_tail };
    p.clamp(0.0, 1.0)
}

pub(crate) fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normal quantile at {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Rational starting point (Acklam), then Halley steps on the exact CDF.
    let mut x = acklam(p);
    for _ in 0..3 {
        // Phi(x) - p, evaluated in the smaller tail to avoid cancellation.
        let err = if x < 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_cdf(-x)
        };
        let dens = normal_density(x);
        if dens <= 0.0 {
            break;
        }
        let u = err / dens;
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;
    let tail = |q: f64| {
        ((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]
    };
    let tail_den = |q: f64| (((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0;
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        tail(q) / tail_den(q)
    } else if p > 1.0 - LOW {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -tail(q) / tail_den(q)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Solves `cdf(x) = p` on `(0, inf)` for a continuous law with positive support.
fn invert_positive(
    cdf: impl Fn(f64) -> Result<f64>,
    survival: impl Fn(f64) -> Result<f64>,
    density: impl Fn(f64) -> f64,
    p: f64,
) -> Result<f64> {
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    // Residual, increasing in x.
    let residual = |x: f64| -> Result<f64> {
        if upper {
            Ok(target - survival(x)?)
        } else {
            Ok(cdf(x)? - target)
        }
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while residual(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::Numeric("quantile bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-3 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let r = residual(x)?;
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = density(x);
        let mut next = if d > 0.0 { x - r / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
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
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub(crate) fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        Ok(1.0 - gamma_continued_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub(crate) fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_series(a, x)?)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum * (-x + a * x.ln() - ln_gamma(a)).exp());
        }
    }
    Err(Error::Numeric(format!("incomplete gamma series failed at a={a}, x={x}")))
}

fn gamma_continued_fraction(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok((-x + a * x.ln() - ln_gamma(a)).exp() * h);
        }
    }
    Err(Error::Numeric(format!("incomplete gamma fraction failed at a={a}, x={x}")))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub(crate) fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_continued_fraction(b, a, 1.0 - x)? / b)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
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
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!("incomplete beta fraction failed at a={a}, b={b}, x={x}")))
}

/// Student t upper tail `P(T >= t)`; used for cross-checking the F law.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn t_survival(t: f64, df: f64) -> Result<f64> {
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t))?;
    Ok(if t >= 0.0 { tail } else { 1.0 - tail })
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("t quantile at {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (target, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };
    // Bisection on the upper tail over t >= 0.
    let (mut lo, mut hi) = (0.0, 1.0);
    while t_survival(hi, df)? > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if t_survival(mid, df)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(sign * 0.5 * (lo + hi))
}
