//! TOML run configuration with four sections: `[network]`, `[quadrature]`,
//! `[mc]` and `[sweep]`. Every key is optional; absent keys keep the defaults
//! of [`NetworkParams`], [`AnalyticOptions`], [`McOptions`] and [`SweepSection`].
//!
//! ```
//! use emf_sg::config::Config;
//!
//! let cfg = Config::from_toml_str(r#"
//! [network]
//! lambda_b_per_km2 = 5.0
//! lambda_u_per_km2 = 50.0
//! p_d_dbm = 60.0
//!
//! [mc]
//! realizations = 1000
//! seed = 7
//! "#).unwrap();
//! let p = cfg.network_params().unwrap();
//! assert!((p.lambda_b - 5e-6).abs() < 1e-18);
//! assert_eq!(cfg.mc.seed, 7);
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticOptions, CapMass, DlExposureModel};
use crate::error::{Error, Result};
use crate::gilpelaez::QuadraturePolicy;
use crate::scenarios::{log_grid, Engine, ScenarioKind};
use crate::simulate::McOptions;
use crate::units::{db_to_linear, dbm_to_watts, per_km2, NetworkParams};

/// `[network]`: physical parameters, in the units named by each key's suffix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub f_u_hz: Option<f64>,
    pub f_d_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub lambda_b_per_km2: Option<f64>,
    pub lambda_u_per_km2: Option<f64>,
    pub alpha: Option<f64>,
    pub z_m: Option<f64>,
    pub p_d_dbm: Option<f64>,
    pub p_u_max_dbm: Option<f64>,
    pub epsilon: Option<f64>,
    /// Overrides the open-loop power otherwise derived from `snr_cell_edge`.
    pub p_u_0_dbm: Option<f64>,
    pub g_b_db: Option<f64>,
    /// Noise power of both links.
    pub noise_dbm: Option<f64>,
    pub noise_ul_dbm: Option<f64>,
    pub noise_dl_dbm: Option<f64>,
    pub tau_m: Option<f64>,
    pub r_e_m: Option<f64>,
    /// Linear target SNR at the cell edge.
    pub snr_cell_edge: Option<f64>,
}

impl NetworkSection {
    /// Apply the section on top of `base`, recomputing the open-loop power
    /// unless it is given explicitly.
    pub fn apply(&self, base: &NetworkParams) -> NetworkParams {
        let mut p = base.clone();
        let set = |slot: &mut f64, v: Option<f64>, f: fn(f64) -> f64| {
            if let Some(v) = v {
                *slot = f(v);
            }
        };
        let id = |x| x;
        set(&mut p.f_u, self.f_u_hz, id);
        set(&mut p.f_d, self.f_d_hz, id);
        set(&mut p.bandwidth, self.bandwidth_hz, id);
        set(&mut p.lambda_b, self.lambda_b_per_km2, per_km2);
        set(&mut p.lambda_u, self.lambda_u_per_km2, per_km2);
        set(&mut p.alpha, self.alpha, id);
        set(&mut p.z, self.z_m, id);
        set(&mut p.p_d, self.p_d_dbm, dbm_to_watts);
        set(&mut p.p_u_max, self.p_u_max_dbm, dbm_to_watts);
        set(&mut p.epsilon, self.epsilon, id);
        set(&mut p.g_b, self.g_b_db, db_to_linear);
        set(&mut p.noise_ul, self.noise_dbm, dbm_to_watts);
        set(&mut p.noise_dl, self.noise_dbm, dbm_to_watts);
        set(&mut p.noise_ul, self.noise_ul_dbm, dbm_to_watts);
        set(&mut p.noise_dl, self.noise_dl_dbm, dbm_to_watts);
        set(&mut p.tau, self.tau_m, id);
        set(&mut p.r_e, self.r_e_m, id);
        set(&mut p.snr_cell_edge, self.snr_cell_edge, id);
        match self.p_u_0_dbm {
            Some(v) => p.p_u_0 = dbm_to_watts(v),
            None => p = p.with_open_loop(),
        }
        p
    }
}

/// `[quadrature]`: tolerances of the characteristic-function inversion and
/// the analytic model variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub q_min: f64,
    pub q_max_cap: f64,
    pub max_subdivisions: usize,
    pub serving_nodes: usize,
    pub cap_mass: CapMass,
    pub dl_exposure: DlExposureModel,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let o = AnalyticOptions::default();
        Self {
            rel_tol: o.policy.rel_tol,
            abs_tol: o.policy.abs_tol,
            q_min: o.policy.q_min,
            q_max_cap: o.policy.q_max_cap,
            max_subdivisions: o.policy.max_subdivisions,
            serving_nodes: o.serving_nodes,
            cap_mass: o.cap_mass,
            dl_exposure: o.dl_exposure,
        }
    }
}

impl QuadratureSection {
    pub fn options(&self) -> Result<AnalyticOptions> {
        let policy = QuadraturePolicy {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            q_min: self.q_min,
            q_max_cap: self.q_max_cap,
            max_subdivisions: self.max_subdivisions,
        };
        policy.validate()?;
        if self.serving_nodes < 2 || self.max_subdivisions == 0 {
            return Err(Error::Config("quadrature.serving_nodes must be at least 2 and max_subdivisions positive".into()));
        }
        Ok(AnalyticOptions {
            policy,
            cap_mass: self.cap_mass,
            serving_nodes: self.serving_nodes,
            dl_exposure: self.dl_exposure,
        })
    }
}

/// `[sweep]`: densification study and density grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub scenario: ScenarioKind,
    pub engine: Engine,
    /// Explicit grid (per km²); overrides the decade range below.
    pub densities_per_km2: Option<Vec<f64>>,
    /// Decade range as powers of ten, e.g. `[-1, 5]`. Defaults to the scenario's span.
    pub decades: Option<[i32; 2]>,
    pub per_decade: u32,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::A,
            engine: Engine::Analytic,
            densities_per_km2: None,
            decades: None,
            per_decade: 20,
        }
    }
}

impl SweepSection {
    /// Density grid in m⁻².
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(d) = &self.densities_per_km2 {
            if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) || d.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config("sweep.densities_per_km2 must be positive and strictly increasing".into()));
            }
            return Ok(d.iter().map(|x| per_km2(*x)).collect());
        }
        let [lo, hi] = self.decades.unwrap_or(match self.scenario {
            ScenarioKind::A => [-1, 5],
            ScenarioKind::B => [0, 6],
        });
        if hi <= lo || self.per_decade == 0 {
            return Err(Error::Config("sweep.decades must be increasing and per_decade positive".into()));
        }
        Ok(log_grid(lo, hi, self.per_decade))
    }
}

/// A complete run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub network: NetworkSection,
    pub quadrature: QuadratureSection,
    pub mc: McOptions,
    pub sweep: SweepSection,
}

impl Config {
    /// Parse TOML; errors carry the line and key at fault.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Resolved and validated network parameters.
    pub fn network_params(&self) -> Result<NetworkParams> {
        let p = self.network.apply(&NetworkParams::default());
        p.validate()?;
        Ok(p)
    }

    pub fn analytic_options(&self) -> Result<AnalyticOptions> {
        self.quadrature.options()
    }

    pub fn mc_options(&self) -> Result<McOptions> {
        self.mc.validate()?;
        Ok(self.mc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c.network_params().unwrap(), NetworkParams::default());
        assert_eq!(c.analytic_options().unwrap(), AnalyticOptions::default());
        assert_eq!(c.mc_options().unwrap(), McOptions::default());
        assert_eq!(c.sweep.grid().unwrap().len(), 121);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Config::from_toml_str("[network]\nalpha = 3.0\nlamda_b_per_km2 = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("lamda_b_per_km2") && err.contains("line 3"), "{err}");
        assert!(Config::from_toml_str("[netwrk]\n").is_err());
    }

    #[test]
    fn model_choices_and_grid() {
        let c = Config::from_toml_str(
            "[quadrature]\ncap_mass = \"within-rm\"\ndl_exposure = \"serving-conditioned\"\n\
             [mc]\nnear_field = \"exclude\"\nfading = \"independent\"\n\
             [sweep]\nscenario = \"b\"\nengine = \"both\"\ndensities_per_km2 = [1.0, 10.0]\n",
        )
        .unwrap();
        let o = c.analytic_options().unwrap();
        assert_eq!((o.cap_mass, o.dl_exposure), (CapMass::WithinRm, DlExposureModel::ServingConditioned));
        assert_eq!(c.sweep.scenario, ScenarioKind::B);
        assert_eq!(c.sweep.grid().unwrap(), vec![per_km2(1.0), per_km2(10.0)]);
        let bad = Config::from_toml_str("[sweep]\ndensities_per_km2 = [2.0, 1.0]\n").unwrap();
        assert!(bad.sweep.grid().is_err());
    }

    #[test]
    fn open_loop_power_follows_density_unless_pinned() {
        let c = Config::from_toml_str("[network]\nlambda_b_per_km2 = 1.0\nlambda_u_per_km2 = 10.0\n").unwrap();
        let p = c.network_params().unwrap();
        assert_eq!(p.p_u_0, p.clone().with_open_loop().p_u_0);
        assert_ne!(p.p_u_0, NetworkParams::default().p_u_0);
        let pinned = Config::from_toml_str("[network]\np_u_0_dbm = -20.0\n").unwrap();
        assert!((pinned.network_params().unwrap().p_u_0 - 1e-5).abs() < 1e-18);
        let invalid = Config::from_toml_str("[network]\nalpha = 1.5\n").unwrap();
        assert!(invalid.network_params().is_err());
    }
}
