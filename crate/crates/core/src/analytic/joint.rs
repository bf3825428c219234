//! Joint exposure/coverage probabilities.
//!
//! `joint_uec` multiplies the UL coverage and UL exposure marginals. The
//! three-way metric needs, for each serving distance r₀,
//!
//! M(r₀) = P[S + I + U < Tₑ, S > T_d (I + N) | r₀]
//!
//! where S is the serving DL power (exponential with mean S̄), I the DL
//! interference and U the UL exposure. Given I, the event S > T_d(I+N) has
//! probability e^(−T_d(I+N)/S̄) and, by memorylessness, S − T_d(I+N) is again
//! exponential with mean S̄. Hence M is the mass that the tilted measure
//! e^(−T_d(I+N)/S̄) dP assigns to {S' + U + (1+T_d) I < Tₑ − T_d N}, which has
//! Fourier transform
//!
//! Ψ(q) = e^(−T_d N/S̄) · φ_I((1+T_d) q + j T_d/S̄) · φ_U(q) / (1 − j q S̄)
//!
//! and is inverted like any CDF.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Analytic, ExposureLink};
use crate::error::{Error, Result};
use crate::gilpelaez::{half_line_integral, HalfLineScales, QuadraturePolicy};
use crate::Complex;

/// Inputs of M for a batch of serving distances sharing one φ_U.
pub(crate) struct MBatch<'a> {
    /// Mean serving DL power per node.
    pub s_bar: Vec<f64>,
    /// ln φ_I(w | node k) at complex w with Im w ≥ 0.
    pub ln_cf_interference: &'a (dyn Fn(Complex, usize) -> Result<Complex> + Sync),
    /// ln φ_U(q) at real q.
    pub ln_cf_ul: &'a (dyn Fn(f64) -> Result<Complex> + Sync),
    pub noise: f64,
    pub t_exp: f64,
    pub t_cov_dl: f64,
    /// Typical exposure magnitude, to place the q grid.
    pub scale: f64,
}

/// M for every node of the batch (before clamping).
pub(crate) fn m_values(batch: &MBatch<'_>, policy: &QuadraturePolicy) -> Result<Vec<f64>> {
    let k_len = batch.s_bar.len();
    let td = batch.t_cov_dl;
    let c0 = batch.t_exp - td * batch.noise;
    if !(c0 > 0.0) || k_len == 0 {
        return Ok(vec![0.0; k_len]);
    }
    let tilt = |k: usize| td / batch.s_bar[k];
    let mass: Vec<f64> = (0..k_len)
        .map(|k| {
            let ln = (batch.ln_cf_interference)(Complex::new(0.0, tilt(k)), k)?;
            Ok((ln.re - tilt(k) * batch.noise).exp())
        })
        .collect::<Result<_>>()?;
    let integrand = |q: f64| -> Result<Vec<f64>> {
        let ln_u = (batch.ln_cf_ul)(q)?;
        let rot = Complex::new(0.0, -q * c0);
        (0..k_len)
            .map(|k| {
                if mass[k] == 0.0 {
                    return Ok(0.0);
                }
                let w = Complex::new((1.0 + td) * q, tilt(k));
                let ln = (batch.ln_cf_interference)(w, k)? + ln_u + rot - tilt(k) * batch.noise;
                let psi = ln.exp() / Complex::new(1.0, -q * batch.s_bar[k]);
                Ok(psi.im / q)
            })
            .collect()
    };
    let scales = HalfLineScales {
        coarse: c0.max(batch.scale),
        fine: c0.min(batch.scale),
        rates: vec![c0; k_len],
    };
    let integral = half_line_integral(integrand, k_len, scales, policy)?;
    Ok(mass.iter().zip(&integral).map(|(m, i)| 0.5 * m - i / PI).collect())
}

impl Analytic {
    /// P[SINR^u > t_cov_ul] · P[P^u < t_exp], with each factor clamped to [0, 1].
    pub fn joint_uec(&self, t_cov_ul: f64, t_exp: f64) -> Result<f64> {
        let (cov, exp) = self.joint_uec_factors(t_cov_ul, t_exp)?;
        Ok(cov * exp)
    }

    /// The two marginals whose product is [`Analytic::joint_uec`].
    pub fn joint_uec_factors(&self, t_cov_ul: f64, t_exp: f64) -> Result<(f64, f64)> {
        let cov = self.coverage_ul(&[t_cov_ul])?.values[0];
        let exp = self.cdf_exposure(ExposureLink::Ul, &[t_exp])?.values[0];
        Ok((cov, exp))
    }

    /// Unclamped P[SINR^u > T_u, P^d + P^u < Tₑ, SINR^d > T_d].
    pub(crate) fn joint_emp_udc_raw(&self, t_cov_ul: f64, t_exp: f64, t_cov_dl: f64) -> Result<f64> {
        if !(t_cov_ul > 0.0 && t_cov_dl > 0.0) || t_exp.is_nan() {
            return Err(Error::Domain("joint thresholds must be positive".into()));
        }
        if t_exp <= 0.0 {
            return Ok(0.0);
        }
        let p = &self.p;
        let nodes = self.outer_nodes();
        let cov_ul: Vec<f64> = nodes
            .par_iter()
            .map(|(r, _)| self.coverage_ul_given(t_cov_ul, *r))
            .collect::<Result<_>>()?;
        let kept: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].1 * cov_ul[k] > 1e-16).collect();
        let r0: Vec<f64> = kept.iter().map(|&k| nodes[k].0).collect();
        let ln_i = |w: Complex, k: usize| self.ln_cf_dl_interference(w, r0[k]);
        let ln_u = |q: f64| self.ln_cf_ul_exposure(Complex::new(q, 0.0));
        let batch = MBatch {
            s_bar: r0.iter().map(|r| p.s_bar_dl(*r)).collect(),
            ln_cf_interference: &ln_i,
            ln_cf_ul: &ln_u,
            noise: p.noise_dl,
            t_exp,
            t_cov_dl,
            scale: self.mean_dl_exposure_ppp(),
        };
        let m = m_values(&batch, &self.opts.policy)?;
        Ok(kept.iter().zip(&m).map(|(&k, m)| nodes[k].1 * cov_ul[k] * m).sum())
    }

    /// Joint probability of UL coverage, DL coverage and total exposure below `t_exp`.
    pub fn joint_emp_udc(&self, t_cov_ul: f64, t_exp: f64, t_cov_dl: f64) -> Result<f64> {
        Ok(self.joint_emp_udc_raw(t_cov_ul, t_exp, t_cov_dl)?.clamp(0.0, 1.0))
    }

    /// CDF of the DL (or total) exposure with the serving BS placed at R₀ and
    /// the other active BSs as a PPP beyond R₀, averaged over R₀.
    pub(crate) fn cdf_exposure_given_serving(&self, with_ul: bool, thresholds: &[f64]) -> Result<Vec<f64>> {
        let nodes = self.outer_nodes();
        let r0: Vec<f64> = nodes.iter().map(|(r, _)| *r).collect();
        let ln_i = |w: Complex, k: usize| self.ln_cf_dl_interference(w, r0[k]);
        let ln_u = |q: f64| {
            if with_ul {
                self.ln_cf_ul_exposure(Complex::new(q, 0.0))
            } else {
                Ok(Complex::new(0.0, 0.0))
            }
        };
        let scale = self.mean_dl_exposure_ppp();
        thresholds
            .par_iter()
            .map(|&t_exp| {
                let batch = MBatch {
                    s_bar: r0.iter().map(|r| self.p.s_bar_dl(*r)).collect(),
                    ln_cf_interference: &ln_i,
                    ln_cf_ul: &ln_u,
                    noise: 0.0,
                    t_exp,
                    t_cov_dl: 0.0,
                    scale,
                };
                let m = m_values(&batch, &self.opts.policy)?;
                Ok(nodes.iter().zip(&m).map(|((_, w), m)| w * m).sum())
            })
            .collect()
    }

    /// P[SINR^u > T_u, SINR^d > T_d], both links covered at once.
    pub fn joint_coverage(&self, t_cov_ul: f64, t_cov_dl: f64) -> Result<f64> {
        if !(t_cov_ul > 0.0 && t_cov_dl > 0.0) {
            return Err(Error::Domain("coverage thresholds must be positive".into()));
        }
        let nodes = self.outer_nodes();
        let terms: Vec<f64> = nodes
            .par_iter()
            .map(|(r, w)| Ok(w * self.coverage_ul_given(t_cov_ul, *r)? * self.coverage_dl_given(t_cov_dl, *r)?))
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum())
    }

    /// Unclamped P[P^d + P^u < Tₑ | SINR^u > T_u, SINR^d > T_d].
    pub(crate) fn conditional_emp_udc_raw(&self, t_exp: f64, t_cov_ul: f64, t_cov_dl: f64) -> Result<f64> {
        let both = self.joint_coverage(t_cov_ul, t_cov_dl)?;
        if !(both > 0.0) {
            return Err(Error::NullEvent(format!("joint coverage vanishes ({both:e})")));
        }
        Ok(self.joint_emp_udc_raw(t_cov_ul, t_exp, t_cov_dl)? / both)
    }

    /// Total exposure CDF conditioned on both links being covered.
    pub fn conditional_emp_udc(&self, t_exp: f64, t_cov_ul: f64, t_cov_dl: f64) -> Result<f64> {
        Ok(self.conditional_emp_udc_raw(t_exp, t_cov_ul, t_cov_dl)?.clamp(0.0, 1.0))
    }

    /// The joint divided by the product of the two coverage marginals, as if UL
    /// and DL coverage were independent. Both depend on the serving distance, so
    /// this ratio can exceed one.
    pub fn conditional_emp_udc_independent(&self, t_exp: f64, t_cov_ul: f64, t_cov_dl: f64) -> Result<f64> {
        let fu = self.coverage_ul(&[t_cov_ul])?.values[0];
        let fd = self.coverage_dl(&[t_cov_dl])?.values[0];
        if !(fu * fd > 0.0) {
            return Err(Error::NullEvent(format!(
                "coverage marginals vanish (UL {fu:e}, DL {fd:e})"
            )));
        }
        Ok(self.joint_emp_udc_raw(t_cov_ul, t_exp, t_cov_dl)? / (fu * fd))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AnalyticOptions;
    use crate::quadrature::{adaptive, Tolerance};
    use crate::units::{dbm_to_watts, NetworkParams};

    /// I ~ Exp(mean μ_I), U ~ Exp(mean μ_U): compare M against a direct double integral.
    #[test]
    fn m_matches_direct_integral_for_exponential_parts() {
        let (mu_i, mu_u, noise) = (0.7, 0.4, 0.05);
        let ln_exp = |w: Complex, mu: f64| -(Complex::new(1.0, 0.0) - Complex::i() * w * mu).ln();
        let ln_i = move |w: Complex, _k: usize| Ok(ln_exp(w, mu_i));
        let ln_u = move |q: f64| Ok(ln_exp(Complex::new(q, 0.0), mu_u));
        let s_bar = vec![0.5, 2.0, 8.0];
        let policy = QuadraturePolicy { rel_tol: 1e-9, abs_tol: 1e-11, ..Default::default() };
        for (te, td) in [(3.0, 1.0), (1.0, 0.2), (6.0, 3.0), (0.3, 10.0)] {
            let batch = MBatch {
                s_bar: s_bar.clone(),
                ln_cf_interference: &ln_i,
                ln_cf_ul: &ln_u,
                noise,
                t_exp: te,
                t_cov_dl: td,
                scale: 1.0,
            };
            let m = m_values(&batch, &policy).unwrap();
            for (k, sb) in s_bar.iter().enumerate() {
                let c0 = te - td * noise;
                let inner = |i: f64| {
                    let room = c0 - (1.0 + td) * i;
                    if room <= 0.0 {
                        return 0.0;
                    }
                    let f_u = |u: f64| (-u / mu_u).exp() / mu_u * (-(-(room - u) / sb).exp_m1());
                    let pu = adaptive(f_u, &[0.0, room], Tolerance::new(1e-15, 1e-12), 200).unwrap().value;
                    (-i / mu_i).exp() / mu_i * (-td * (i + noise) / sb).exp() * pu
                };
                let want = adaptive(inner, &[0.0, c0 / (1.0 + td)], Tolerance::new(1e-14, 1e-11), 400)
                    .unwrap()
                    .value;
                assert!((m[k] - want).abs() < 1e-7, "te={te} td={td} s̄={sb}: {} vs {want}", m[k]);
            }
        }
    }

    #[test]
    fn m_vanishes_when_thresholds_conflict() {
        let ln_i = |_w: Complex, _k: usize| Ok(Complex::new(0.0, 0.0));
        let ln_u = |_q: f64| Ok(Complex::new(0.0, 0.0));
        let batch = MBatch {
            s_bar: vec![1.0],
            ln_cf_interference: &ln_i,
            ln_cf_ul: &ln_u,
            noise: 1.0,
            t_exp: 0.5,
            t_cov_dl: 1.0,
            scale: 1.0,
        };
        assert_eq!(m_values(&batch, &QuadraturePolicy::default()).unwrap(), vec![0.0]);
    }

    #[test]
    fn joint_bounds_and_limits() {
        let a = Analytic::new(&NetworkParams::default(), AnalyticOptions::default()).unwrap();
        let (tu, td, te) = (1.0, 2.0, dbm_to_watts(-40.0));
        let g = a.joint_emp_udc_raw(tu, te, td).unwrap();
        let fu = a.coverage_ul(&[tu]).unwrap().values[0];
        let fd = a.coverage_dl(&[td]).unwrap().values[0];
        assert!(g >= -1e-6 && g <= fu.min(fd) + 1e-6, "g={g} fu={fu} fd={fd}");
        // t_exp → ∞ and t_cov_dl → 0 collapses to the UL coverage.
        let collapsed = a.joint_emp_udc_raw(tu, 1e6, 1e-9).unwrap();
        assert!((collapsed - fu).abs() < 1e-5, "{collapsed} vs {fu}");
        assert_eq!(a.joint_emp_udc(tu, 0.0, td).unwrap(), 0.0);
        let h_lo = a.conditional_emp_udc_raw(dbm_to_watts(-50.0), tu, td).unwrap();
        let h_hi = a.conditional_emp_udc_raw(dbm_to_watts(-30.0), tu, td).unwrap();
        assert!(h_lo <= h_hi + 1e-6 && h_hi <= 1.0 + 1e-5, "{h_lo} {h_hi}");
        let both = a.joint_coverage(tu, td).unwrap();
        assert!((a.joint_emp_udc_raw(tu, 1e6, td).unwrap() - both).abs() < 1e-6);
        // Serving distance couples the two links.
        assert!(both > fu * fd);
        let ind = a.conditional_emp_udc_independent(dbm_to_watts(-30.0), tu, td).unwrap();
        assert!((ind * fu * fd - h_hi * both).abs() < 1e-6);
    }

    #[test]
    fn serving_conditioned_exposure_cdf() {
        let opts = AnalyticOptions { dl_exposure: crate::analytic::DlExposureModel::ServingConditioned, ..Default::default() };
        let a = Analytic::new(&NetworkParams::default(), opts).unwrap();
        let ts: Vec<f64> = [-50.0, -40.0, -30.0].iter().map(|d| dbm_to_watts(*d)).collect();
        let dl = a.cdf_exposure(ExposureLink::Dl, &ts).unwrap();
        let tot = a.cdf_exposure(ExposureLink::Total, &ts).unwrap();
        assert!(dl.is_valid(1e-9) && tot.is_valid(1e-9), "{dl:?} {tot:?}");
        for (d, t) in dl.values.iter().zip(&tot.values) {
            assert!(t <= &(d + 1e-6));
        }
        // Vanishing coverage thresholds turn the joint into the same event.
        let joint = a.joint_emp_udc_raw(1e-12, ts[1], 1e-12).unwrap();
        assert!((joint - tot.values[1]).abs() < 1e-5, "{joint} {}", tot.values[1]);
        // The UL law is unaffected by the DL model.
        let ppp = Analytic::new(&NetworkParams::default(), AnalyticOptions::default()).unwrap();
        let ul = [dbm_to_watts(-70.0)];
        assert_eq!(a.cdf_exposure(ExposureLink::Ul, &ul).unwrap().values, ppp.cdf_exposure(ExposureLink::Ul, &ul).unwrap().values);
    }

    #[test]
    fn uec_is_product_of_marginals() {
        let a = Analytic::new(&NetworkParams::default(), AnalyticOptions::default()).unwrap();
        let (tc, te) = (1.0, dbm_to_watts(-50.0));
        let (c, e) = a.joint_uec_factors(tc, te).unwrap();
        assert_eq!(a.joint_uec(tc, te).unwrap(), c * e);
    }
}
