//! Closed-form and semi-closed-form network metrics: exposure means and CDFs,
//! coverage probabilities, and the joint exposure/coverage probabilities.
//!
//! Everything hangs off [`Analytic`], which validates a [`NetworkParams`] once
//! and caches the derived constants.

mod coverage;
mod exposure;
mod joint;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::gilpelaez::QuadraturePolicy;
use crate::quadrature::gauss_legendre;
use crate::special::hyp2f1_one_b_minus_one;
use crate::units::{DerivedParams, NetworkParams, BETA};
use crate::Complex;

pub use exposure::ExposureLink;

/// Which cap-mass factor multiplies the maximum power in the mean UL exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapMass {
    /// Probability that a UE is served from beyond r_m, P[r_m < R ≤ τ].
    #[default]
    BeyondRm,
    /// P[r_e < R ≤ r_m], kept for comparison.
    WithinRm,
}

/// Law of the DL exposure used by the exposure CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DlExposureModel {
    /// Active BSs form a PPP around the typical UE, from r_e outwards.
    #[default]
    Ppp,
    /// The serving BS sits at the serving distance R₀ and the rest form a PPP
    /// beyond R₀. Closer to a type-II network, where the scheduled UE tends to
    /// lie near its BS.
    ServingConditioned,
}

/// Numerical knobs of the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticOptions {
    /// Policy for every characteristic-function inversion.
    pub policy: QuadraturePolicy,
    pub cap_mass: CapMass,
    /// Gauss–Legendre nodes per panel for expectations over a serving distance.
    pub serving_nodes: usize,
    pub dl_exposure: DlExposureModel,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self {
            policy: QuadraturePolicy::default(),
            cap_mass: CapMass::default(),
            serving_nodes: 6,
            dl_exposure: DlExposureModel::default(),
        }
    }
}

/// Analytic evaluator for one network configuration.
#[derive(Debug, Clone)]
pub struct Analytic {
    p: NetworkParams,
    d: DerivedParams,
    opts: AnalyticOptions,
}

impl Analytic {
    pub fn new(params: &NetworkParams, opts: AnalyticOptions) -> Result<Self> {
        params.validate()?;
        opts.policy.validate()?;
        Ok(Self {
            p: params.clone(),
            d: params.derived(),
            opts,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.p
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.d
    }

    pub fn options(&self) -> &AnalyticOptions {
        &self.opts
    }

    /// Serving distance at which FPC power reaches the cap, without the
    /// clamping to [r_e, τ] applied to r_m: 0 when every UE is capped.
    pub(crate) fn power_kink(&self) -> f64 {
        let p = &self.p;
        if p.epsilon == 0.0 {
            return if p.p_u_0 > p.p_u_max { 0.0 } else { p.tau };
        }
        let base = p.p_u_0 * self.d.kappa_u.powf(p.epsilon);
        let w = (p.p_u_max / base).powf(2.0 / (p.alpha * p.epsilon)) - p.z * p.z;
        w.max(0.0).sqrt().min(p.tau)
    }

    /// `(v, w)` pairs with Σ w·h(v) ≈ ∫_lo^hi f_R0(v) h(v) dv.
    fn serving_nodes(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        serving_nodes(self.p.lambda_b, lo, hi, self.opts.serving_nodes)
    }
}

/// Quadrature rule for ∫_lo^hi f_R0(v) h(v) dv with f_R0 the serving-distance density.
///
/// In the scaled distance u = v·√(βλπ) the density is 2u·e^(−u²), an entire
/// function, so fixed Gauss–Legendre panels of width below one are accurate.
/// Mass beyond u = 6.5 (about e^(−42)) is dropped.
pub(crate) fn serving_nodes(lambda_b: f64, lo: f64, hi: f64, per_panel: usize) -> Vec<(f64, f64)> {
    const CUTS: [f64; 8] = [0.6, 1.2, 1.8, 2.4, 3.0, 3.8, 4.8, 6.5];
    let k = (BETA * lambda_b * PI).sqrt();
    let (u_lo, u_hi) = (lo * k, (hi * k).min(CUTS[7]));
    if !(u_hi > u_lo) {
        return Vec::new();
    }
    let mut pts = vec![u_lo];
    pts.extend(CUTS.iter().copied().filter(|c| *c > u_lo && *c < u_hi));
    pts.push(u_hi);
    let rule = gauss_legendre(per_panel);
    let mut out = Vec::with_capacity(per_panel * (pts.len() - 1));
    for w in pts.windows(2) {
        for (u, wt) in rule.on(w[0], w[1]) {
            out.push((u / k, wt * 2.0 * u * (-u * u).exp()));
        }
    }
    out
}

/// G(c, y) = y²/2 · (₂F₁(1, −2/α; 1−2/α; c y^(−α)) − 1), an antiderivative of
/// y·(1/(1 − c y^(−α)) − 1) in y. Returns G(c, y_hi) − G(c, y_lo).
pub(crate) fn g_bracket(c: Complex, y_lo: f64, y_hi: f64, alpha: f64) -> Result<Complex> {
    let b = -2.0 / alpha;
    let g = |y: f64| -> Result<Complex> { Ok(hyp2f1_one_b_minus_one(b, c * y.powf(-alpha))? * (0.5 * y * y)) };
    Ok(g(y_hi)? - g(y_lo)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{serving_distance_mass, serving_distance_pdf};
    use crate::quadrature::{integrate, Tolerance};

    #[test]
    fn serving_nodes_integrate_moments() {
        let lb = 1e-5;
        let nodes = serving_nodes(lb, 0.0, 30_000.0, 6);
        let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((mass - 1.0).abs() < 1e-10);
        // E[R²] = 1/(βλπ)
        let m2: f64 = nodes.iter().map(|(v, w)| w * v * v).sum();
        assert!((m2 * BETA * lb * PI - 1.0).abs() < 1e-9, "{m2}");
        let sub = serving_nodes(lb, 40.0, 120.0, 6);
        let m: f64 = sub.iter().map(|(_, w)| w).sum();
        assert!((m - serving_distance_mass(40.0, 120.0, lb)).abs() < 1e-12);
        let h = |v: f64| (v * v + 1089.0).powf(0.65);
        let want = integrate(|v| serving_distance_pdf(v, lb) * h(v), 0.0, 500.0, Tolerance::new(1e-14, 1e-12))
            .unwrap();
        let got: f64 = serving_nodes(lb, 0.0, 500.0, 6).iter().map(|(v, w)| w * h(*v)).sum();
        assert!((got - want).abs() < 1e-7 * want, "{got} {want}");
    }

    #[test]
    fn g_bracket_is_antiderivative() {
        let alpha = 3.25;
        for c in [Complex::new(0.0, 3.0e4), Complex::new(-2.0e5, 0.0), Complex::new(-10.0, 4e3)] {
            let (a, b) = (12.0, 900.0);
            let f = |y: f64, part: fn(Complex) -> f64| {
                let w = c * y.powf(-alpha);
                part((Complex::new(1.0, 0.0) - w).inv() - 1.0) * y
            };
            let tol = Tolerance::new(1e-14, 1e-12);
            let re = integrate(|y| f(y, |z| z.re), a, b, tol).unwrap();
            let im = integrate(|y| f(y, |z| z.im), a, b, tol).unwrap();
            let got = g_bracket(c, a, b, alpha).unwrap();
            assert!((got - Complex::new(re, im)).norm() < 1e-9 * got.norm().max(1.0), "{c}: {got} vs {re} {im}");
        }
    }
}
