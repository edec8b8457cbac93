//! Real special functions: log-Gamma, reciprocal Gamma, digamma and the Gauss
//! hypergeometric function on `[0, 1)`.
//!
//! Gamma uses the g = 7, 9-term Lanczos sum. Near the zeros of `ln Γ` at 1 and 2
//! a zeta-series expansion keeps the relative error small. `rgamma` is entire and
//! returns exact zeros at the non-positive integers, which is what the eigenvalue
//! quantization relies on.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lanczos sum A(x) and shift t = x + g - 1/2, valid for x >= 1/2.
fn lanczos_parts(x: f64) -> (f64, f64) {
    let xm = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (xm + i as f64);
    }
    (sum, xm + LANCZOS_G + 0.5)
}

/// `sin(pi x)` with exact zeros at the integers.
pub(crate) fn sinpi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        (PI * (-1.0 - r)).sin()
    } else {
        (PI * r).sin()
    }
}

fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

/// `zeta(k) - 1` for k = 2..=ZETA_TERMS+1, by Euler-Maclaurin with N = 10.
fn zeta_minus_one() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_2j / (2j)!
        const BERN: [f64; 6] = [
            1.0 / 12.0,
            -1.0 / 720.0,
            1.0 / 30_240.0,
            -1.0 / 1_209_600.0,
            1.0 / 47_900_160.0,
            -691.0 / 1_307_674_368_000.0,
        ];
        let big_n = 10.0_f64;
        (2..ZETA_TERMS + 2)
            .map(|k| {
                let s = k as f64;
                let mut acc = 0.0;
                for n in (2..10).rev() {
                    acc += (n as f64).powf(-s);
                }
                acc += big_n.powf(1.0 - s) / (s - 1.0) + 0.5 * big_n.powf(-s);
                // rising factorial s (s+1) ... (s + 2j - 2)
                let mut rising = s;
                let mut pow = big_n.powf(-s - 1.0);
                for (j, b) in BERN.iter().enumerate() {
                    acc += b * rising * pow;
                    rising *= (s + 2.0 * j as f64 + 1.0) * (s + 2.0 * j as f64 + 2.0);
                    pow /= big_n * big_n;
                }
                acc
            })
            .collect()
    })
}
const ZETA_TERMS: usize = 40;

/// `ln Γ(1 + eps)` for |eps| <= 1/2.
fn ln_gamma_1p(eps: f64) -> f64 {
    let table = zeta_minus_one();
    let mut sum = 0.0;
    let mut pow = eps * eps;
    for (i, z) in table.iter().enumerate() {
        let k = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * z * pow / k;
        pow *= eps;
    }
    eps * (1.0 - EULER_GAMMA) - eps.ln_1p() + sum
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1 - x) = π / sin(π x)
        (PI / sinpi(x)).ln() - ln_gamma_pos(1.0 - x)
    } else if x <= 1.5 {
        ln_gamma_1p(x - 1.0)
    } else if x <= 2.5 {
        let eps = x - 2.0;
        ln_gamma_1p(eps) + eps.ln_1p()
    } else {
        let (sum, t) = lanczos_parts(x);
        LN_SQRT_2PI + (x - 0.5) * t.ln() - t + sum.ln()
    }
}

/// Reciprocal Gamma function, 1/Γ(x). Entire; exactly zero at 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.5 {
        let (sum, t) = lanczos_parts(x);
        (t - (x - 0.5) * t.ln() - LN_SQRT_2PI).exp() / sum
    } else {
        // 1/Γ(x) = Γ(1 - x) sin(π x) / π
        let s = sinpi(x);
        if s == 0.0 {
            return 0.0;
        }
        s / (PI * rgamma(1.0 - x))
    }
}

/// Γ(x); infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    1.0 / rgamma(x)
}

/// Digamma ψ(x) = Γ'(x)/Γ(x). NaN at the poles.
pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return digamma(1.0 - x) - PI * cospi(x) / sinpi(x);
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    let series = x2
        * (1.0 / 12.0
            - x2 * (1.0 / 120.0
                - x2 * (1.0 / 252.0
                    - x2 * (1.0 / 240.0
                        - x2 * (1.0 / 132.0 - x2 * (691.0 / 32_760.0 - x2 / 12.0))))));
    acc + x.ln() - 0.5 / x - series
}

/// Parameters (a, b; c) of the Gauss hypergeometric function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Parameters of the eigenvalue problem of the linearized generator at `lambda`.
    pub fn eigen(lambda: f64, p: f64) -> Self {
        Self {
            a: 0.5 * (lambda - 2.0),
            b: 0.5 * (lambda + (p + 3.0) / (p - 1.0)),
            c: 0.5,
        }
    }

    fn ordered(self) -> Self {
        if self.a <= self.b {
            self
        } else {
            Self { a: self.b, b: self.a, c: self.c }
        }
    }
}

const MAX_TERMS: usize = 500;
const SERIES_TOL: f64 = 1e-16;
const DEGENERATE_WINDOW: f64 = 1e-6;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Taylor series around z = 0. Terminates on its own when `a` or `b` is a
/// non-positive integer.
fn taylor(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let k = n as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        let k1 = k + 1.0;
        let ratio = ((a + k1) * (b + k1) / ((c + k1) * (k1 + 1.0)) * z).abs();
        if ratio < 1.0 && term.abs() <= SERIES_TOL * (1.0 - ratio) * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(format!(
        "2F1({a}, {b}; {c}; {z}) series exceeded {MAX_TERMS} terms"
    )))
}

/// ₂F₁(a, b; c; z) for real parameters and z in [0, 1).
///
/// Direct series for z <= 1/2, the z -> 1 - z connection formula above that. When
/// c - a - b lies within 1e-6 of an integer the logarithmic limit formula is used.
pub fn hyp2f1(params: HypParams, z: f64) -> Result<f64> {
    check_args(params, z)?;
    let HypParams { a, b, c } = params.ordered();
    if z == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) || z <= 0.5 {
        return taylor(a, b, c, z);
    }
    connection(a, b, c, z)
}

/// The direct Taylor series alone (z <= 1/2 or terminating parameters).
pub fn hyp2f1_series(params: HypParams, z: f64) -> Result<f64> {
    check_args(params, z)?;
    let HypParams { a, b, c } = params.ordered();
    taylor(a, b, c, z)
}

/// The z -> 1 - z connection formula alone, for any z in (0, 1).
pub fn hyp2f1_connection(params: HypParams, z: f64) -> Result<f64> {
    check_args(params, z)?;
    let HypParams { a, b, c } = params.ordered();
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return taylor(a, b, c, z);
    }
    connection(a, b, c, z)
}

fn check_args(params: HypParams, z: f64) -> Result<()> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(format!("hyp2f1 requires z in [0, 1), got {z}")));
    }
    if is_nonpositive_integer(params.c) {
        return Err(Error::domain(format!(
            "hyp2f1 requires c not a non-positive integer, got c = {}",
            params.c
        )));
    }
    Ok(())
}

fn connection(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let s = c - a - b;
    let m = s.round();
    if (s - m).abs() < DEGENERATE_WINDOW {
        return degenerate(a, b, c, m as i64, z);
    }
    let w = 1.0 - z;
    let first = if is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b) {
        0.0
    } else {
        gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b) * taylor(a, b, 1.0 - s, w)?
    };
    let second = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b)
        * w.powf(s)
        * taylor(c - a, c - b, 1.0 + s, w)?;
    Ok(first + second)
}

/// Connection formula when c = a + b + m for an integer m.
fn degenerate(a: f64, b: f64, c: f64, m: i64, z: f64) -> Result<f64> {
    let w = 1.0 - z;
    if m < 0 {
        // Euler: F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z) flips the sign of m.
        let (a2, b2) = (c - a, c - b);
        let inner = if is_nonpositive_integer(a2) || is_nonpositive_integer(b2) {
            taylor(a2, b2, c, z)?
        } else {
            degenerate(a2.min(b2), a2.max(b2), c, -m, z)?
        };
        return Ok(w.powi(m as i32) * inner);
    }
    let ln_w = w.ln();
    let gamma_c = gamma(a + b + m as f64);
    if m == 0 {
        let pref = gamma_c * rgamma(a) * rgamma(b);
        let mut coef = 1.0;
        let mut sum = 0.0;
        for n in 0..MAX_TERMS {
            let k = n as f64;
            let bracket = 2.0 * digamma(k + 1.0) - digamma(a + k) - digamma(b + k) - ln_w;
            let term = coef * bracket;
            sum += term;
            if n > 2 && term.abs() <= SERIES_TOL * sum.abs() {
                return Ok(pref * sum);
            }
            coef *= (a + k) * (b + k) / ((k + 1.0) * (k + 1.0)) * w;
        }
        return Err(Error::NonConvergence(format!(
            "2F1({a}, {b}; {c}; {z}) logarithmic series exceeded {MAX_TERMS} terms"
        )));
    }

    let mf = m as f64;
    // finite part
    let mut finite = 0.0;
    let mut coef = 1.0;
    for n in 0..m {
        let k = n as f64;
        finite += coef;
        coef *= (a + k) * (b + k) / ((k + 1.0) * (1.0 - mf + k)) * w;
    }
    let gamma_m: f64 = (1..m).map(|k| k as f64).product();
    finite *= gamma_m * gamma_c * rgamma(a + mf) * rgamma(b + mf);

    // logarithmic part
    let m_fact: f64 = gamma_m * mf;
    let mut coef = 1.0 / m_fact;
    let mut sum = 0.0;
    let mut converged = false;
    for n in 0..MAX_TERMS {
        let k = n as f64;
        let bracket = ln_w - digamma(k + 1.0) - digamma(k + mf + 1.0)
            + digamma(a + k + mf)
            + digamma(b + k + mf);
        let term = coef * bracket;
        sum += term;
        if n > 2 && term.abs() <= SERIES_TOL * sum.abs() {
            converged = true;
            break;
        }
        coef *= (a + mf + k) * (b + mf + k) / ((k + 1.0) * (k + mf + 1.0)) * w;
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "2F1({a}, {b}; {c}; {z}) logarithmic series exceeded {MAX_TERMS} terms"
        )));
    }
    let log_part = (-w).powi(m as i32) * gamma_c * rgamma(a) * rgamma(b) * sum;
    Ok(finite - log_part)
}
