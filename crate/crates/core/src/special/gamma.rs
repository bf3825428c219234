//! Upper incomplete gamma function and the generalized exponential integral
//! for real, possibly negative, orders.

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Complete gamma function for real arguments (poles at non-positive integers).
pub fn gamma(a: f64) -> f64 {
    statrs::function::gamma::gamma(a)
}

/// Γ(a, x) = ∫ₓ^∞ t^(a−1) e^(−t) dt for real `a` and `x > 0`.
///
/// ```
/// use emf_sg::special::upper_incomplete_gamma;
/// let g = upper_incomplete_gamma(1.0, 2.0).unwrap();
/// assert!((g - (-2.0f64).exp()).abs() < 1e-15);
/// ```
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(upper_incomplete_gamma_scaled(a, x)? * (-x).exp())
}

/// eˣ·Γ(a, x), finite for large `x` where Γ(a, x) itself underflows.
pub fn upper_incomplete_gamma_scaled(a: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || !a.is_finite() {
        return domain(format!("incomplete gamma needs finite a and x > 0 (a={a}, x={x})"));
    }
    if x > 1.0 && x > a + 1.0 {
        return Ok(x.powf(a) * continued_fraction(a, x));
    }
    if a > 0.0 {
        return Ok((gamma(a) - lower_series(a, x)) * x.exp());
    }
    // a <= 0 and x <= 1: step down from an order in (0, 1] (or from E1 when a
    // is an integer) with Γ(s−1, x) = (Γ(s, x) − x^(s−1) e^(−x)) / (s−1).
    let steps = (-a.floor()) as i32;
    let s0 = a + steps as f64;
    let mut g = if s0 == 0.0 {
        e1_series(x)
    } else {
        gamma(s0) - lower_series(s0, x)
    };
    let ex = (-x).exp();
    let mut s = s0;
    for _ in 0..steps {
        s -= 1.0;
        g = (g - x.powf(s) * ex) / s;
    }
    Ok(g * x.exp())
}

/// γ(a, x) by its power series; valid for a > 0.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

/// Modified Lentz evaluation of the continued fraction for eˣ x^(−a) Γ(a, x).
fn continued_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// E₁(x) = Γ(0, x) by its convergent series, for x ≤ 1.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Generalized exponential integral Eₙ(x) = ∫₁^∞ e^(−xt) t^(−n) dt for real `n`, `x > 0`.
///
/// ```
/// use emf_sg::special::exp_integral_en;
/// // E₋₁(1) = 2/e
/// assert!((exp_integral_en(-1.0, 1.0).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-14);
/// ```
pub fn exp_integral_en(n: f64, x: f64) -> Result<f64> {
    Ok(exp_integral_en_scaled(n, x)? * (-x).exp())
}

/// eˣ·Eₙ(x).
pub fn exp_integral_en_scaled(n: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("E_n needs x > 0 (got {x})"));
    }
    Ok(x.powf(n - 1.0) * upper_incomplete_gamma_scaled(1.0 - n, x)?)
}
