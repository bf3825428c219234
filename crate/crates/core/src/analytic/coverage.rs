//! SINR coverage of the typical link in both directions, conditioned on the
//! serving distance r₀ and averaged over it.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{g_bracket, Analytic};
use crate::curve::{MetricCurve, Monotonicity};
use crate::error::{Error, Result};
use crate::geometry::{interferer_intensity, serving_distance_cdf, serving_distance_mass};
use crate::quadrature::{adaptive, Tolerance};
use crate::Complex;

impl Analytic {
    fn y_z(&self, x: f64) -> f64 {
        (x * x + self.p.z * self.p.z).sqrt()
    }

    /// Nodes `(r₀, w)` for E[h(R₀)] over 0 ≤ R₀ ≤ τ, split at r_m where the
    /// UE power law has a kink.
    pub(crate) fn outer_nodes(&self) -> Vec<(f64, f64)> {
        let (r_m, tau) = (self.power_kink(), self.p.tau);
        let mut nodes = self.serving_nodes(0.0, r_m);
        nodes.extend(self.serving_nodes(r_m, tau));
        nodes
    }

    /// ln E[exp(jwI^d) | r₀] for the DL interference from active BSs beyond r₀,
    /// at complex `w` with Im w ≥ 0.
    pub(crate) fn ln_cf_dl_interference(&self, w: Complex, r0: f64) -> Result<Complex> {
        let p = &self.p;
        if r0 >= p.tau {
            return Ok(Complex::new(0.0, 0.0));
        }
        let c = Complex::i() * w * (p.p_d / self.d.kappa_d);
        Ok(g_bracket(c, self.y_z(r0), self.y_z(p.tau), p.alpha)? * (2.0 * PI * self.d.lambda_r))
    }

    /// E[exp(jqI^d) | r₀].
    pub fn cf_dl_interference(&self, q: f64, r0: f64) -> Result<Complex> {
        self.check_r0(r0)?;
        Ok(self.ln_cf_dl_interference(Complex::new(q, 0.0), r0)?.exp())
    }

    /// E[exp(−sI^d) | r₀].
    pub fn laplace_dl_interference(&self, s: f64, r0: f64) -> Result<f64> {
        self.check_r0(r0)?;
        Ok(self.ln_cf_dl_interference(Complex::new(0.0, s), r0)?.re.exp())
    }

    fn check_r0(&self, r0: f64) -> Result<()> {
        if !(r0 >= 0.0 && r0 <= self.p.tau) {
            return Err(Error::Domain(format!("serving distance {r0} m outside [0, tau]")));
        }
        Ok(())
    }

    /// E[exp(−sI^u) | r₀] for the UL interference at the typical BS.
    ///
    /// Interferers form an inhomogeneous PPP beyond r₀; each one's own serving
    /// distance is drawn from the serving law truncated to its distance r
    /// from the typical BS.
    pub fn laplace_ul_interference(&self, s: f64, r0: f64) -> Result<f64> {
        self.check_r0(r0)?;
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("Laplace argument must be non-negative (got {s})")));
        }
        let p = &self.p;
        if s == 0.0 || r0 >= p.tau || self.d.lambda_r == 0.0 {
            return Ok(1.0);
        }
        let (r_m, lb, lr) = (self.power_kink(), p.lambda_b, self.d.lambda_r);
        let hit = |x: f64| x / (1.0 + x);
        let integrand = |r: f64| -> f64 {
            let f_r = serving_distance_cdf(r, lb);
            if f_r == 0.0 {
                return 0.0;
            }
            let gain = s * p.g_b * p.l_u(r);
            let mut e = 0.0;
            for (v, w) in self.serving_nodes(0.0, r.min(r_m)) {
                e += w * hit(gain * p.ue_tx_power(v));
            }
            if r > r_m {
                e += serving_distance_mass(r_m, r, lb) * hit(gain * p.p_u_max);
            }
            e / f_r * interferer_intensity(r, lr) * r
        };
        let pts = self.radial_breaks(r0);
        let q = adaptive(integrand, &pts, Tolerance::new(1e-11, 1e-9), 1_000)?;
        Ok((-2.0 * PI * q.value).exp())
    }

    /// Breakpoints for radial integrals over [r₀, τ]: geometric above the cell
    /// scale plus r_m.
    fn radial_breaks(&self, r0: f64) -> Vec<f64> {
        let tau = self.p.tau;
        let cell = (PI * self.p.lambda_b).sqrt().recip();
        let mut pts = vec![r0];
        let mut x = (cell / 16.0).max(r0 * 2.0);
        while x < tau {
            pts.push(x);
            x *= 2.0;
        }
        let kink = self.power_kink();
        if kink > r0 && kink < tau {
            pts.push(kink);
        }
        pts.push(tau);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        pts
    }

    /// P[SINR^u > t | R₀ = r₀].
    pub fn coverage_ul_given(&self, t: f64, r0: f64) -> Result<f64> {
        let s = t / self.p.s_bar_ul(r0, r0);
        Ok((-s * self.p.noise_ul).exp() * self.laplace_ul_interference(s, r0)?)
    }

    /// P[SINR^d > t | R₀ = r₀].
    pub fn coverage_dl_given(&self, t: f64, r0: f64) -> Result<f64> {
        let s = t / self.p.s_bar_dl(r0);
        Ok((-s * self.p.noise_dl).exp() * self.laplace_dl_interference(s, r0)?)
    }

    fn coverage_curve(
        &self,
        name: &str,
        thresholds: &[f64],
        given: impl Fn(f64, f64) -> Result<f64> + Sync,
    ) -> Result<MetricCurve> {
        if thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Domain("SINR thresholds must be positive and finite".into()));
        }
        let nodes = self.outer_nodes();
        let jobs: Vec<(usize, f64, f64, f64)> = thresholds
            .iter()
            .enumerate()
            .flat_map(|(i, t)| nodes.iter().map(move |(r, w)| (i, *t, *r, *w)))
            .collect();
        let vals: Vec<f64> = jobs.par_iter().map(|(_, t, r, _)| given(*t, *r)).collect::<Result<_>>()?;
        let mut raw = vec![0.0; thresholds.len()];
        for ((i, _, _, w), v) in jobs.iter().zip(&vals) {
            raw[*i] += w * v;
        }
        MetricCurve::probability(
            name,
            "sinr",
            thresholds.to_vec(),
            raw,
            Monotonicity::NonIncreasing,
            self.opts.policy.abs_tol.max(10.0 * self.opts.policy.rel_tol),
        )
    }

    /// UL coverage P[SINR^u > t] at each threshold (linear, ascending).
    pub fn coverage_ul(&self, thresholds: &[f64]) -> Result<MetricCurve> {
        self.coverage_curve("coverage-ul", thresholds, |t, r| self.coverage_ul_given(t, r))
    }

    /// DL coverage P[SINR^d > t] at each threshold (linear, ascending).
    pub fn coverage_dl(&self, thresholds: &[f64]) -> Result<MetricCurve> {
        self.coverage_curve("coverage-dl", thresholds, |t, r| self.coverage_dl_given(t, r))
    }
}
