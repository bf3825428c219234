//! Characteristic-function inversion:
//! F(t) = 1/2 − (1/π) ∫₀^∞ Im[φ(q) e^(−jqt)] / q dq.
//!
//! The half-line is covered by dyadic panels [q₀2ᵏ, q₀2ᵏ⁺¹], each handed to
//! the adaptive Gauss–Kronrod driver (cut into quarter-period pieces when it
//! spans several oscillations). The first stretch [0, q₀] is approximated by
//! q₀ times the integrand at q₀. Far out, where e^(−jqt) has turned many times,
//! integration proceeds by half periods and the alternating partial sums are
//! extrapolated with Wynn's ε-algorithm.
//!
//! All q-valued policy knobs are expressed in units of 1/scale, where the scale
//! is the magnitude of the thresholds (or a hint supplied with the CF), so
//! the same defaults serve variables measured in watts or in unit-free ratios.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{MetricCurve, Monotonicity};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, Tolerance};
use crate::Complex;

/// A characteristic function q ↦ E[e^(jqX)] of a real random variable.
pub struct CharacteristicFn<'a> {
    pub label: String,
    /// Typical magnitude of X, used to place the q grid. Optional.
    pub scale_hint: Option<f64>,
    eval: Box<dyn Fn(f64) -> Result<Complex> + Send + Sync + 'a>,
}

impl<'a> CharacteristicFn<'a> {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> Result<Complex> + Send + Sync + 'a) -> Self {
        Self {
            label: label.into(),
            scale_hint: None,
            eval: Box::new(eval),
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale_hint = (scale.is_finite() && scale > 0.0).then_some(scale);
        self
    }

    pub fn eval(&self, q: f64) -> Result<Complex> {
        (self.eval)(q)
    }
}

/// Tolerances and limits of the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraturePolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Start of the first dyadic panel, in units of 1/scale.
    pub q_min: f64,
    /// Upper end beyond which the integral is declared non-convergent, in units of 1/scale.
    pub q_max_cap: f64,
    /// Bisections allowed per sub-panel batch.
    pub max_subdivisions: usize,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            q_min: 1e-8,
            q_max_cap: 1e12,
            max_subdivisions: 2_000,
        }
    }
}

impl QuadraturePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.q_min > 0.0 && self.q_max_cap > self.q_min) {
            return Err(Error::Config("quadrature tolerances and q range must be positive".into()));
        }
        Ok(())
    }
}

/// Scales describing a vector integrand on the half-line.
#[derive(Debug, Clone)]
pub struct HalfLineScales {
    /// q grid starts at `q_min / coarse` (largest magnitude in play).
    pub coarse: f64,
    /// Termination is allowed once q ≥ 1 / `fine` (smallest magnitude in play).
    pub fine: f64,
    /// Oscillation rate in q of each component (0 for a non-oscillating one).
    pub rates: Vec<f64>,
}

/// Dyadic panels switch to half-period steps once a panel start covers this many radians.
const TAIL_SWITCH: f64 = 8.0 * PI;
/// Partial sums kept for the ε-table.
const WYNN_WINDOW: usize = 40;

struct Integrand<'g, G> {
    g: &'g G,
    dim: usize,
    failure: RefCell<Option<Error>>,
}

impl<G: Fn(f64) -> Result<Vec<f64>>> Integrand<'_, G> {
    fn eval(&self, q: f64, idx: &[usize]) -> Vec<f64> {
        if self.failure.borrow().is_some() {
            return vec![0.0; idx.len()];
        }
        match (self.g)(q) {
            Ok(v) if idx.len() == self.dim => v,
            Ok(v) => idx.iter().map(|&i| v[i]).collect(),
            Err(e) => {
                *self.failure.borrow_mut() = Some(e);
                vec![0.0; idx.len()]
            }
        }
    }

    /// Adaptive integral of the `idx` components over consecutive `points`.
    fn integrate(&self, idx: &[usize], points: &[f64], tol: Tolerance, policy: &QuadraturePolicy) -> Result<Vec<f64>> {
        let q = adaptive(|q| self.eval(q, idx), points, tol, policy.max_subdivisions);
        if let Some(e) = self.failure.borrow_mut().take() {
            return Err(e);
        }
        q.map(|q| q.value).map_err(|e| match e {
            Error::NonConvergence { achieved, estimate, .. } => Error::NonConvergence {
                context: format!("Gil-Pelaez panel [{:e}, {:e}]", points[0], points[points.len() - 1]),
                estimate,
                achieved,
            },
            other => other,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn target(policy: &QuadraturePolicy, total: &[f64]) -> f64 {
    policy.abs_tol.max(policy.rel_tol * max_abs(total))
}

fn cap_error(total: &[f64], last: &[f64]) -> Error {
    Error::NonConvergence {
        context: "Gil-Pelaez tail did not decay before q_max_cap".into(),
        estimate: max_abs(total),
        achieved: max_abs(last),
    }
}

/// Wynn ε-algorithm: limit estimate of a sequence of partial sums.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let mut best = s[s.len() - 1];
    let mut prev = vec![0.0; s.len() + 1];
    let mut cur = s.to_vec();
    let mut column = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let e = prev[i + 1] + 1.0 / d;
            if d == 0.0 || !e.is_finite() {
                return best;
            }
            next.push(e);
        }
        column += 1;
        prev = cur;
        cur = next;
        if column % 2 == 0 {
            best = cur[cur.len() - 1];
        }
    }
    best
}

/// ∫₀^∞ g(q) dq for a vector-valued integrand that is bounded at 0 and decays
/// (possibly while oscillating) as q → ∞. Components share the q nodes as long
/// as they are integrated together.
///
/// The integral starts on dyadic panels. Once a panel start exceeds a few
/// periods of the fastest component, components oscillating at a common rate
/// continue on half-period intervals, and the partial sums of that alternating
/// series are accelerated with Wynn's ε-algorithm.
pub fn half_line_integral<G>(g: G, dim: usize, scales: HalfLineScales, policy: &QuadraturePolicy) -> Result<Vec<f64>>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    assert_eq!(scales.rates.len(), dim, "one rate per component");
    let f = Integrand {
        g: &g,
        dim,
        failure: RefCell::new(None),
    };
    let all: Vec<usize> = (0..dim).collect();
    let q0 = policy.q_min / scales.coarse;
    let mut total: Vec<f64> = f.eval(q0, &all).iter().map(|v| v * q0).collect();
    if let Some(e) = f.failure.borrow_mut().take() {
        return Err(e);
    }
    let max_rate = scales.rates.iter().fold(0.0f64, |m, r| m.max(*r));
    let switch = (max_rate > 0.0).then(|| TAIL_SWITCH / max_rate);
    let a = match dyadic(&f, &all, q0, &mut total, max_rate, switch, &scales, policy)? {
        None => return Ok(total),
        Some(a) => a,
    };

    let mut rates: Vec<f64> = scales.rates.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    for rate in rates {
        let idx: Vec<usize> = (0..dim).filter(|&i| scales.rates[i] == rate).collect();
        let mut sub: Vec<f64> = idx.iter().map(|&i| total[i]).collect();
        if rate > 0.0 {
            tail(&f, &idx, a, &mut sub, rate, &scales, policy)?;
        } else {
            dyadic(&f, &idx, a, &mut sub, 0.0, None, &scales, policy)?;
        }
        for (&i, v) in idx.iter().zip(sub) {
            total[i] = v;
        }
    }
    Ok(total)
}

/// Dyadic panels from `a` on. Returns `None` once the `idx` components have
/// converged, or `Some(q)` when q reaches `switch` first.
#[allow(clippy::too_many_arguments)]
fn dyadic<G: Fn(f64) -> Result<Vec<f64>>>(
    f: &Integrand<'_, G>,
    idx: &[usize],
    mut a: f64,
    total: &mut [f64],
    rate: f64,
    switch: Option<f64>,
    scales: &HalfLineScales,
    policy: &QuadraturePolicy,
) -> Result<Option<f64>> {
    const BATCH: usize = 256;
    let q_stop = 1.0 / scales.fine;
    let q_cap = policy.q_max_cap / scales.fine;
    let quarter = FRAC_PI_2 / rate.max(f64::MIN_POSITIVE);
    let mut quiet = 0;
    loop {
        if switch.is_some_and(|s| a >= s) {
            return Ok(Some(a));
        }
        let b = 2.0 * a;
        let target = target(policy, total);
        let pieces = ((b - a) / quarter).ceil().max(1.0) as usize;
        let width = (b - a) / pieces as f64;
        let mut panel = vec![0.0; idx.len()];
        let mut start = 0;
        while start < pieces {
            let end = (start + BATCH).min(pieces);
            let points: Vec<f64> = (start..=end).map(|k| a + k as f64 * width).collect();
            let tol = Tolerance::new(0.05 * target * (end - start) as f64 / pieces as f64, 0.1 * policy.rel_tol);
            for (p, v) in panel.iter_mut().zip(f.integrate(idx, &points, tol, policy)?) {
                *p += v;
            }
            start = end;
        }
        for (t, p) in total.iter_mut().zip(&panel) {
            *t += p;
        }
        if max_abs(&panel) < target && b >= q_stop {
            quiet += 1;
            if quiet >= 3 {
                return Ok(None);
            }
        } else {
            quiet = 0;
        }
        if b >= q_cap {
            return Err(cap_error(total, &panel));
        }
        a = b;
    }
}

/// Half-period steps of width π/`rate` from `a` on, with ε-acceleration of
/// the partial sums. `total` holds the integral over [0, a] on entry.
fn tail<G: Fn(f64) -> Result<Vec<f64>>>(
    f: &Integrand<'_, G>,
    idx: &[usize],
    a: f64,
    total: &mut [f64],
    rate: f64,
    scales: &HalfLineScales,
    policy: &QuadraturePolicy,
) -> Result<()> {
    let n = idx.len();
    let q_stop = 1.0 / scales.fine;
    let q_cap = policy.q_max_cap / scales.fine;
    let half = PI / rate;
    let mut x = (a / half).ceil() * half;
    if x > a {
        let tol = Tolerance::new(0.01 * target(policy, total), 0.1 * policy.rel_tol);
        for (t, v) in total.iter_mut().zip(f.integrate(idx, &[a, x], tol, policy)?) {
            *t += v;
        }
    }
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut running = total.to_vec();
    let mut estimate = running.clone();
    let (mut steady, mut tiny) = (0, 0);
    loop {
        let target = target(policy, &estimate);
        let tol = Tolerance::new(0.01 * target, 0.1 * policy.rel_tol);
        let term = f.integrate(idx, &[x, x + half], tol, policy)?;
        x += half;
        let mut change = 0.0f64;
        for c in 0..n {
            running[c] += term[c];
            let s = &mut sums[c];
            s.push(running[c]);
            if s.len() > WYNN_WINDOW {
                s.remove(0);
            }
            let e = if s.len() >= 3 { wynn_epsilon(s) } else { running[c] };
            change = change.max((e - estimate[c]).abs());
            estimate[c] = e;
        }
        steady = if sums[0].len() >= 6 && change < 0.5 * target { steady + 1 } else { 0 };
        tiny = if max_abs(&term) < 0.01 * target && x >= q_stop { tiny + 1 } else { 0 };
        if tiny >= 3 {
            total.copy_from_slice(&running);
            return Ok(());
        }
        if steady >= 2 {
            total.copy_from_slice(&estimate);
            return Ok(());
        }
        if x >= q_cap {
            return Err(cap_error(&estimate, &term));
        }
    }
}

/// Raw (unclamped) Gil-Pelaez CDF values of `cf` at a cluster of thresholds that
/// share every φ evaluation.
fn invert_cluster(cf: &CharacteristicFn<'_>, ts: &[f64], policy: &QuadraturePolicy) -> Result<Vec<f64>> {
    let t_max = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let t_min = ts.iter().filter(|t| **t != 0.0).fold(f64::INFINITY, |m, t| m.min(t.abs()));
    let hint = cf.scale_hint;
    let coarse = match hint {
        Some(h) => h.max(t_max),
        None if t_max > 0.0 => t_max,
        None => 1.0,
    };
    let fine = match hint {
        Some(h) => h.min(t_min),
        None if t_min.is_finite() => t_min,
        None => 1.0,
    };
    let scales = HalfLineScales {
        coarse,
        fine,
        rates: ts.iter().map(|t| t.abs()).collect(),
    };
    let g = |q: f64| -> Result<Vec<f64>> {
        let phi = cf.eval(q)?;
        Ok(ts.iter().map(|&t| (phi * Complex::from_polar(1.0, -q * t)).im / q).collect())
    };
    let integral = half_line_integral(g, ts.len(), scales, policy)?;
    Ok(integral.iter().map(|i| 0.5 - i / PI).collect())
}

/// Group thresholds into runs whose magnitudes differ by at most a factor 4.
fn clusters(ts: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=ts.len() {
        let close = k < ts.len() && {
            let (a, b) = (ts[start].abs(), ts[k].abs());
            ts[start].signum() == ts[k].signum() && a > 0.0 && b > 0.0 && a.max(b) <= 4.0 * a.min(b)
        };
        if !close {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Raw CDF values, before clamping; exposed for callers that assemble their own curves.
pub fn cdf_values_raw(cf: &CharacteristicFn<'_>, thresholds: &[f64], policy: &QuadraturePolicy) -> Result<Vec<f64>> {
    let groups = clusters(thresholds);
    let parts: Vec<Result<Vec<f64>>> = groups
        .par_iter()
        .map(|r| invert_cluster(cf, &thresholds[r.clone()], policy))
        .collect();
    let mut out = Vec::with_capacity(thresholds.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// CDF of the variable behind `cf` at `t`, clamped to [0, 1].
///
/// ```
/// use emf_sg::gilpelaez::{cdf_from_cf, CharacteristicFn, QuadraturePolicy};
/// use emf_sg::Complex;
/// let exp1 = CharacteristicFn::new("exp(1)", |q| Ok(Complex::new(1.0, -q).inv()));
/// let f = cdf_from_cf(&exp1, 1.0, &QuadraturePolicy::default()).unwrap();
/// assert!((f - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
/// ```
pub fn cdf_from_cf(cf: &CharacteristicFn<'_>, t: f64, policy: &QuadraturePolicy) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("threshold must be finite (got {t})")));
    }
    Ok(invert_cluster(cf, &[t], policy)?[0].clamp(0.0, 1.0))
}

/// CDF curve at ascending thresholds, sharing φ samples within clusters.
pub fn cdf_curve_from_cf(cf: &CharacteristicFn<'_>, thresholds: &[f64], policy: &QuadraturePolicy) -> Result<MetricCurve> {
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("thresholds must be finite".into()));
    }
    let raw = cdf_values_raw(cf, thresholds, policy)?;
    let mut curve = MetricCurve::probability(
        &cf.label,
        "threshold",
        thresholds.to_vec(),
        raw,
        Monotonicity::NonDecreasing,
        policy.abs_tol.max(10.0 * policy.rel_tol),
    )?;
    let slack = 2.0 * policy.rel_tol + 2.0 * policy.abs_tol;
    let violation = curve.monotonicity_violation();
    if violation > slack {
        curve
            .warnings
            .push(format!("{}: CDF decreases by {violation:e} on the grid", cf.label));
    }
    Ok(curve)
}
