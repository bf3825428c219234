//! Exposure at the typical UE: DL power from active BSs, UL power from the
//! other UEs, and their sum.

use std::f64::consts::PI;

use serde::Serialize;

use super::{g_bracket, Analytic, CapMass, DlExposureModel};
use crate::curve::{MetricCurve, Monotonicity};
use crate::error::{Error, Result};
use crate::geometry::serving_distance_mass;
use crate::gilpelaez::{cdf_curve_from_cf, cdf_from_cf, CharacteristicFn};
use crate::special::exp_integral_en_scaled;
use crate::units::BETA;
use crate::Complex;

/// Which exposure sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureLink {
    Ul,
    Dl,
    Total,
}

impl ExposureLink {
    pub fn name(self) -> &'static str {
        match self {
            ExposureLink::Ul => "cdf-exposure-ul",
            ExposureLink::Dl => "cdf-exposure-dl",
            ExposureLink::Total => "cdf-exposure-total",
        }
    }
}

impl Analytic {
    fn y_dl(&self, x: f64) -> f64 {
        (x * x + self.p.z * self.p.z).sqrt()
    }

    /// Mean DL exposure from a PPP of active BSs on the annulus lo ≤ ρ ≤ τ.
    fn mean_dl_ppp_from(&self, lo: f64) -> f64 {
        let p = &self.p;
        if lo >= p.tau {
            return 0.0;
        }
        let bracket = |x: f64| p.l_d(x) * (x * x + p.z * p.z);
        p.p_d * 2.0 * PI * self.d.lambda_r * (bracket(lo) - bracket(p.tau)) / (p.alpha - 2.0)
    }

    /// Mean DL exposure with every active BS, the serving one included, on the
    /// annulus r_e ≤ ρ ≤ τ of a PPP.
    pub(crate) fn mean_dl_exposure_ppp(&self) -> f64 {
        self.mean_dl_ppp_from(self.p.r_e)
    }

    /// Mean DL exposure under the configured [`DlExposureModel`].
    pub fn mean_dl_exposure(&self) -> Result<f64> {
        Ok(match self.opts.dl_exposure {
            DlExposureModel::Ppp => self.mean_dl_exposure_ppp(),
            DlExposureModel::ServingConditioned => self
                .outer_nodes()
                .iter()
                .map(|&(r0, w)| w * (self.p.s_bar_dl(r0) + self.mean_dl_ppp_from(r0)))
                .sum(),
        })
    }

    /// E[P(R) 1{R ≤ r_m}] over the serving distance, in closed form through
    /// the generalized exponential integral of order −αε/2.
    fn fpc_power_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(hi > lo) {
            return Ok(0.0);
        }
        let p = &self.p;
        let k = BETA * p.lambda_b * PI;
        let n = -0.5 * p.alpha * p.epsilon;
        let ku_eps = self.d.kappa_u.powf(p.epsilon);
        // P₀βλπ e^(βλπz²) · l^(−ε)(x)(x²+z²) E_n(βλπ(x²+z²)), with e^(βλπz²)E_n(t) = e^(−βλπx²)·eᵗE_n(t).
        let h = |x: f64| -> Result<f64> {
            let y2 = x * x + p.z * p.z;
            let t = k * y2;
            if t == 0.0 {
                // y^(2+αε) E_n(k y²) → Γ(1 + αε/2) k^(n−1) as y → 0
                return Ok(p.p_u_0 * ku_eps * crate::special::gamma(1.0 - n) * k.powf(n));
            }
            let l_neg_eps = ku_eps * y2.powf(0.5 * p.alpha * p.epsilon);
            Ok(p.p_u_0 * k * (-k * x * x).exp() * l_neg_eps * y2 * exp_integral_en_scaled(n, t)?)
        };
        Ok(h(lo)? - h(hi)?)
    }

    /// Mean transmit power of an interfering UE, E[min(P₀l^(−ε)(R), P_max)].
    pub fn mean_ue_power(&self) -> Result<f64> {
        let r_m = self.power_kink();
        Ok(self.fpc_power_mass(0.0, r_m)? + self.p.p_u_max * serving_distance_mass(r_m, self.p.tau, self.p.lambda_b))
    }

    /// Mean UL exposure from every other UE outside the exclusion disk.
    pub fn mean_ul_exposure(&self) -> Result<f64> {
        let p = &self.p;
        let r_m = self.d.r_m;
        let power = match self.opts.cap_mass {
            CapMass::BeyondRm => self.mean_ue_power()?,
            CapMass::WithinRm => {
                self.fpc_power_mass(p.r_e, r_m)? + p.p_u_max * serving_distance_mass(p.r_e, r_m, p.lambda_b)
            }
        };
        let bracket = |x: f64| p.l_u_tilde(x) * x * x;
        Ok(2.0 * PI * p.lambda_u * (bracket(p.r_e) - bracket(p.tau)) / (p.alpha - 2.0) * power)
    }

    /// ln of the DL exposure CF at complex argument `w` (Im w ≥ 0).
    pub(crate) fn ln_cf_dl_exposure(&self, w: Complex) -> Result<Complex> {
        let p = &self.p;
        let c = Complex::i() * w * (p.p_d / self.d.kappa_d);
        Ok(g_bracket(c, self.y_dl(p.r_e), self.y_dl(p.tau), p.alpha)? * (2.0 * PI * self.d.lambda_r))
    }

    /// ln of the UL exposure CF at complex argument `w` (Im w ≥ 0).
    pub(crate) fn ln_cf_ul_exposure(&self, w: Complex) -> Result<Complex> {
        let p = &self.p;
        let r_m = self.power_kink();
        let c_of = |power: f64| Complex::i() * w * (power / self.d.kappa_u);
        let mut acc = g_bracket(c_of(p.p_u_max), p.r_e, p.tau, p.alpha)?
            * serving_distance_mass(r_m, p.tau, p.lambda_b);
        for (v, wt) in self.serving_nodes(0.0, r_m) {
            acc += g_bracket(c_of(p.ue_tx_power(v)), p.r_e, p.tau, p.alpha)? * wt;
        }
        Ok(acc * (2.0 * PI * p.lambda_u))
    }

    /// E[exp(jqP^d)].
    pub fn cf_dl_exposure(&self, q: f64) -> Result<Complex> {
        Ok(self.ln_cf_dl_exposure(Complex::new(q, 0.0))?.exp())
    }

    /// E[exp(jqP^u)].
    pub fn cf_ul_exposure(&self, q: f64) -> Result<Complex> {
        Ok(self.ln_cf_ul_exposure(Complex::new(q, 0.0))?.exp())
    }

    /// E[exp(jq(P^d + P^u))] with the two sums independent.
    pub fn cf_total_exposure(&self, q: f64) -> Result<Complex> {
        let w = Complex::new(q, 0.0);
        Ok((self.ln_cf_dl_exposure(w)? + self.ln_cf_ul_exposure(w)?).exp())
    }

    /// Exposure produced by a neighbour at the typical inter-UE spacing; the
    /// UL CF starts to decay on this scale.
    fn ul_scale(&self) -> Result<f64> {
        let spacing = (PI * self.p.lambda_u).sqrt().recip().max(self.p.r_e);
        Ok(self.mean_ue_power()? * self.p.l_u_tilde(spacing))
    }

    /// The characteristic function of `link`'s exposure, ready for inversion.
    pub fn exposure_cf(&self, link: ExposureLink) -> Result<CharacteristicFn<'_>> {
        Ok(match link {
            ExposureLink::Dl => {
                CharacteristicFn::new(link.name(), move |q| self.cf_dl_exposure(q)).with_scale(self.mean_dl_exposure_ppp())
            }
            ExposureLink::Ul => {
                CharacteristicFn::new(link.name(), move |q| self.cf_ul_exposure(q)).with_scale(self.ul_scale()?)
            }
            ExposureLink::Total => CharacteristicFn::new(link.name(), move |q| self.cf_total_exposure(q))
                .with_scale(self.mean_dl_exposure_ppp()),
        })
    }

    /// P[exposure < t] at each threshold (W, ascending).
    pub fn cdf_exposure(&self, link: ExposureLink, thresholds: &[f64]) -> Result<MetricCurve> {
        if thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Domain("exposure thresholds must be positive".into()));
        }
        if self.opts.dl_exposure == DlExposureModel::ServingConditioned && link != ExposureLink::Ul {
            let raw = self.cdf_exposure_given_serving(link == ExposureLink::Total, thresholds)?;
            let tol = self.opts.policy.abs_tol.max(10.0 * self.opts.policy.rel_tol);
            return MetricCurve::probability(link.name(), "exposure_w", thresholds.to_vec(), raw, Monotonicity::NonDecreasing, tol);
        }
        let mut curve = cdf_curve_from_cf(&self.exposure_cf(link)?, thresholds, &self.opts.policy)?;
        curve.axis_label = "exposure_w".into();
        Ok(curve)
    }

    /// Exposure level below which a fraction `prob` of the typical UEs lie.
    pub fn exposure_quantile(&self, link: ExposureLink, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1) (got {prob})")));
        }
        let cf = self.exposure_cf(link)?;
        let policy = self.opts.policy;
        let f = |t: f64| cdf_from_cf(&cf, t, &policy);
        let start = cf.scale_hint.unwrap_or(1.0);
        let (mut lo, mut hi) = (start, start);
        while f(lo)? > prob {
            lo /= 10.0;
            if lo < start * 1e-30 {
                return Err(Error::Domain(format!("{}: no quantile bracket below {lo:e}", link.name())));
            }
        }
        while f(hi)? < prob {
            hi *= 10.0;
            if hi > start * 1e30 {
                return Err(Error::Domain(format!("{}: no quantile bracket above {hi:e}", link.name())));
            }
        }
        while hi / lo > 1.0 + 1e-5 {
            let mid = (lo * hi).sqrt();
            if f(mid)? < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}
