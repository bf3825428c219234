//! Network parameters, derived constants and unit conversions.
//!
//! Everything is stored in SI linear units: metres, watts, hertz, m⁻².
//! Decibel values only appear at the config/CLI boundary.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Correction factor of the serving-distance law.
pub const BETA: f64 = 1.3;
/// Shape constant of the Crofton-cell probability.
pub const GAMMA_CELL: f64 = 3.5;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Per-km² to per-m².
pub fn per_km2(d: f64) -> f64 {
    d * 1e-6
}

/// Per-m² to per-km².
pub fn to_per_km2(d: f64) -> f64 {
    d * 1e6
}

/// Free-space path-loss intercept κ = (4πf/c)².
pub fn kappa(freq_hz: f64) -> f64 {
    (4.0 * PI * freq_hz / SPEED_OF_LIGHT).powi(2)
}

/// Crofton-cell probability ν and active density λʳ = λᵇ(1−ν).
///
/// ```
/// let (nu, lr) = emf_sg::units::active_density(1.0, 10.0).unwrap();
/// assert!((nu - 8.87e-3).abs() < 1e-5);
/// assert!((lr - (1.0 - nu)).abs() < 1e-15);
/// ```
pub fn active_density(lambda_b: f64, lambda_u: f64) -> Result<(f64, f64)> {
    if !(lambda_b > 0.0) || !(lambda_u >= 0.0) {
        return domain(format!(
            "densities must satisfy lambda_b > 0, lambda_u >= 0 (got {lambda_b}, {lambda_u})"
        ));
    }
    let delta = lambda_u / lambda_b;
    let nu = (GAMMA_CELL / (GAMMA_CELL + delta)).powf(GAMMA_CELL);
    Ok((nu, lambda_b * (1.0 - nu)))
}

/// Which of the three path-gain laws to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// UE to the typical BS, with antenna height offset.
    UplinkToBs,
    /// UE to the typical UE, no height offset.
    UplinkToUe,
    /// BS to the typical UE.
    Downlink,
}

/// How the maximum-power radius was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapRegime {
    /// Cap reached at a finite radius inside the network.
    Interior,
    /// Cap never reached inside the disk; r_m is set to τ.
    NeverCapped,
    /// Every UE transmits at maximum power; r_m is set to r_e.
    AlwaysCapped,
}

/// Physical and topological configuration of one network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkParams {
    pub f_u: f64,
    pub f_d: f64,
    pub bandwidth: f64,
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub alpha: f64,
    pub z: f64,
    pub p_d: f64,
    pub p_u_max: f64,
    pub epsilon: f64,
    /// Open-loop UL power; [`NetworkParams::with_open_loop`] recomputes it.
    pub p_u_0: f64,
    pub g_b: f64,
    pub noise_ul: f64,
    pub noise_dl: f64,
    pub tau: f64,
    pub r_e: f64,
    pub snr_cell_edge: f64,
}

impl Default for NetworkParams {
    /// Macro-cell configuration at 10 BS/km² with ten UEs per BS.
    fn default() -> Self {
        Self {
            f_u: 2.56e9,
            f_d: 2.68e9,
            bandwidth: 20e6,
            lambda_b: per_km2(10.0),
            lambda_u: per_km2(100.0),
            alpha: 3.25,
            z: 33.0,
            p_d: dbm_to_watts(66.0),
            p_u_max: dbm_to_watts(23.0),
            epsilon: 0.4,
            p_u_0: 0.0,
            g_b: 1.0,
            noise_ul: dbm_to_watts(-95.4),
            noise_dl: dbm_to_watts(-95.4),
            tau: 30_000.0,
            r_e: 0.3,
            snr_cell_edge: 3.0,
        }
        .with_open_loop()
    }
}

/// Constants derived from [`NetworkParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    pub kappa_u: f64,
    pub kappa_d: f64,
    pub delta: f64,
    pub nu: f64,
    pub lambda_r: f64,
    pub r_m: f64,
    pub cap_regime: CapRegime,
    pub beta: f64,
    pub gamma: f64,
}

impl NetworkParams {
    /// Copy with `p_u_0` set by [`open_loop_power`].
    pub fn with_open_loop(mut self) -> Self {
        self.p_u_0 = open_loop_power(&self);
        self
    }

    pub fn kappa_u(&self) -> f64 {
        kappa(self.f_u)
    }

    pub fn kappa_d(&self) -> f64 {
        kappa(self.f_d)
    }

    /// Check the model's standing assumptions.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f_u, self.f_d, self.bandwidth, self.lambda_b, self.lambda_u, self.alpha, self.z,
            self.p_d, self.p_u_max, self.epsilon, self.p_u_0, self.g_b, self.noise_ul,
            self.noise_dl, self.tau, self.r_e, self.snr_cell_edge,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("all network parameters must be finite".into()));
        }
        let fail = |m: String| Err(Error::Config(m));
        if !(self.alpha > 2.0) {
            return fail(format!("alpha must exceed 2 (got {})", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(format!("epsilon must lie in [0, 1] (got {})", self.epsilon));
        }
        if !(self.lambda_b > 0.0) {
            return fail("lambda_b must be positive".into());
        }
        if self.lambda_u < self.lambda_b {
            return fail(format!(
                "lambda_u ({:.4} /km2) must be at least lambda_b ({:.4} /km2)",
                to_per_km2(self.lambda_u),
                to_per_km2(self.lambda_b)
            ));
        }
        let r_min = self.kappa_u().min(self.kappa_d()).powf(-1.0 / self.alpha);
        if self.r_e < r_min {
            return fail(format!("r_e = {} m is inside the far-field limit {r_min:.4} m", self.r_e));
        }
        if !(self.tau > self.r_e) {
            return fail("tau must exceed r_e".into());
        }
        if self.f_u <= 0.0 || self.f_d <= 0.0 || self.p_d < 0.0 || self.p_u_max <= 0.0 {
            return fail("frequencies and powers must be positive".into());
        }
        if self.noise_ul < 0.0 || self.noise_dl < 0.0 || self.g_b <= 0.0 || self.z < 0.0 {
            return fail("noise, BS gain and height offset must be non-negative".into());
        }
        if !(self.p_u_0 > 0.0) {
            return fail("open-loop power p_u_0 must be positive".into());
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedParams {
        let (nu, lambda_r) = active_density(self.lambda_b, self.lambda_u)
            .unwrap_or((1.0, 0.0));
        let (r_m, cap_regime) = max_power_radius(self);
        DerivedParams {
            kappa_u: self.kappa_u(),
            kappa_d: self.kappa_d(),
            delta: self.lambda_u / self.lambda_b,
            nu,
            lambda_r,
            r_m,
            cap_regime,
            beta: BETA,
            gamma: GAMMA_CELL,
        }
    }

    /// Path gain for `link` at `distance` metres.
    pub fn path_gain(&self, link: Link, distance: f64) -> Result<f64> {
        if !(distance >= 0.0) {
            return domain(format!("distance must be non-negative (got {distance})"));
        }
        Ok(match link {
            Link::UplinkToBs => self.l_u(distance),
            Link::Downlink => self.l_d(distance),
            Link::UplinkToUe => {
                if distance < self.r_e {
                    return domain(format!(
                        "UE-to-UE distance {distance} m is inside the exclusion radius {} m",
                        self.r_e
                    ));
                }
                self.l_u_tilde(distance)
            }
        })
    }

    /// κᵤ⁻¹ (D² + z²)^(−α/2)
    #[inline]
    pub fn l_u(&self, d: f64) -> f64 {
        (d * d + self.z * self.z).powf(-0.5 * self.alpha) / self.kappa_u()
    }

    /// κᵤ⁻¹ D^(−α), unchecked.
    #[inline]
    pub fn l_u_tilde(&self, d: f64) -> f64 {
        d.powf(-self.alpha) / self.kappa_u()
    }

    /// κ_d⁻¹ (ρ² + z²)^(−α/2)
    #[inline]
    pub fn l_d(&self, rho: f64) -> f64 {
        (rho * rho + self.z * self.z).powf(-0.5 * self.alpha) / self.kappa_d()
    }

    /// FPC transmit power min(P₀ l^(−ε), P_max) of a UE at serving distance `d`.
    #[inline]
    pub fn ue_tx_power(&self, d: f64) -> f64 {
        let uncapped = self.p_u_0
            * self.kappa_u().powf(self.epsilon)
            * (d * d + self.z * self.z).powf(0.5 * self.alpha * self.epsilon);
        uncapped.min(self.p_u_max)
    }

    /// Mean received UL power P(r₁) G_b l^u(r₂).
    #[inline]
    pub fn s_bar_ul(&self, r1: f64, r2: f64) -> f64 {
        self.ue_tx_power(r1) * self.g_b * self.l_u(r2)
    }

    /// Mean received DL power P_d l^d(ρ).
    #[inline]
    pub fn s_bar_dl(&self, rho: f64) -> f64 {
        self.p_d * self.l_d(rho)
    }

    /// Power density seen by an isotropic receiver for exposure power `p` on `link`.
    pub fn exposure_to_ipd(&self, p: f64, link: Link) -> f64 {
        let k = match link {
            Link::Downlink => self.kappa_d(),
            Link::UplinkToBs | Link::UplinkToUe => self.kappa_u(),
        };
        k / (4.0 * PI) * p
    }
}

/// Radius beyond which UEs transmit at maximum power, clamped to [r_e, τ].
pub fn max_power_radius(p: &NetworkParams) -> (f64, CapRegime) {
    let ku = p.kappa_u();
    let base = p.p_u_0 * ku.powf(p.epsilon);
    if p.epsilon == 0.0 {
        return if base > p.p_u_max {
            (p.r_e, CapRegime::AlwaysCapped)
        } else {
            (p.tau, CapRegime::NeverCapped)
        };
    }
    let w = (p.p_u_max / base).powf(2.0 / (p.alpha * p.epsilon)) - p.z * p.z;
    if !(w > p.r_e * p.r_e) {
        return (p.r_e, CapRegime::AlwaysCapped);
    }
    let r = w.sqrt();
    if r >= p.tau {
        (p.tau, CapRegime::NeverCapped)
    } else {
        (r, CapRegime::Interior)
    }
}

/// P₀ = SNR_cell·N_u·κᵤ^(1−ε)·(1/(16λᵇ) + z²)^((1−ε)α/2): the open-loop power that
/// gives a UE at distance 1/(4√λᵇ) the target mean SNR.
pub fn open_loop_power(p: &NetworkParams) -> f64 {
    let one_m_eps = 1.0 - p.epsilon;
    p.snr_cell_edge
        * p.noise_ul
        * p.kappa_u().powf(one_m_eps)
        * (1.0 / (16.0 * p.lambda_b) + p.z * p.z).powf(one_m_eps * p.alpha / 2.0)
}

/// RMS electric field strength (V/m) for an incident power density (W/m²).
pub fn ipd_to_efield(s: f64) -> f64 {
    (120.0 * PI * s).sqrt()
}
