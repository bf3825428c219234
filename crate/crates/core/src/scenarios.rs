//! The two densification studies: how network parameters follow the node
//! densities, density grids, and sweeps with optimum extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{Analytic, AnalyticOptions};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::simulate::{run_mc, McOptions};
use crate::units::{dbm_to_watts, per_km2, to_per_km2, NetworkParams};

/// Which quantity is densified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// BSs densify with ten UEs per BS; the swept density is λ_b.
    A,
    /// UEs densify over a fixed BS layer that jumps once cells run out of
    /// resource blocks; the swept density is λ_u.
    B,
}

/// Radio parameters that change between macro and small cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSet {
    pub alpha: f64,
    pub z: f64,
    /// BS transmit power, W.
    pub p_d: f64,
}

impl CellSet {
    pub fn macro_cell() -> Self {
        Self { alpha: 3.25, z: 33.0, p_d: dbm_to_watts(66.0) }
    }

    pub fn small_cell() -> Self {
        Self { alpha: 2.5, z: 4.0, p_d: dbm_to_watts(40.0) }
    }
}

/// Side of the macro/small switch a point was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Macro,
    Small,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Macro => "macro",
            Branch::Small => "small",
        }
    }
}

/// Parameter switching rule of a densification study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensificationRule {
    pub kind: ScenarioKind,
    /// Swept density (m⁻²) up to which the macro set applies, inclusive.
    pub switch_threshold: f64,
    pub macro_set: CellSet,
    pub small_set: CellSet,
    /// Everything the rule does not override.
    pub base: NetworkParams,
}

/// Fully resolved parameters at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPoint {
    /// Swept density, m⁻².
    pub density: f64,
    pub branch: Branch,
    /// λ_u was raised to λ_b to keep at least one UE per BS on average.
    pub clamped: bool,
    pub params: NetworkParams,
}

impl DensificationRule {
    pub fn new(kind: ScenarioKind, base: NetworkParams) -> Self {
        let switch_threshold = match kind {
            ScenarioKind::A => per_km2(100.0),
            ScenarioKind::B => per_km2(1_000.0),
        };
        Self {
            kind,
            switch_threshold,
            macro_set: CellSet::macro_cell(),
            small_set: CellSet::small_cell(),
            base,
        }
    }

    /// Parameters at `density` (m⁻²); the switch threshold itself belongs to the macro side.
    pub fn params_for(&self, density: f64) -> Result<ScenarioPoint> {
        let branch = if density <= self.switch_threshold { Branch::Macro } else { Branch::Small };
        self.params_on(density, branch)
    }

    /// Parameters at `density` with the cell set of `branch`, whatever the density.
    pub fn params_on(&self, density: f64, branch: Branch) -> Result<ScenarioPoint> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::Domain(format!("density must be positive (got {density})")));
        }
        let set = match branch {
            Branch::Macro => self.macro_set,
            Branch::Small => self.small_set,
        };
        let (lambda_b, mut lambda_u) = match self.kind {
            ScenarioKind::A => (density, 10.0 * density),
            ScenarioKind::B => {
                let lb = match branch {
                    Branch::Macro => per_km2(10.0),
                    Branch::Small => per_km2(1_000.0),
                };
                (lb, density)
            }
        };
        let clamped = lambda_u < lambda_b;
        if clamped {
            lambda_u = lambda_b;
        }
        let params = NetworkParams {
            lambda_b,
            lambda_u,
            alpha: set.alpha,
            z: set.z,
            p_d: set.p_d,
            ..self.base.clone()
        }
        .with_open_loop();
        Ok(ScenarioPoint { density, branch, clamped, params })
    }

    /// Every point to evaluate on `grid`: one per density, two at the switch.
    pub fn points(&self, grid: &[f64]) -> Result<Vec<ScenarioPoint>> {
        let mut out = Vec::with_capacity(grid.len() + 1);
        for &d in grid {
            out.push(self.params_for(d)?);
            if (d - self.switch_threshold).abs() <= 1e-9 * self.switch_threshold {
                out.push(self.params_on(d, Branch::Small)?);
            }
        }
        Ok(out)
    }

    /// Twenty log-spaced points per decade over the study's span, in m⁻².
    pub fn default_grid(&self) -> Vec<f64> {
        let (lo, hi) = match self.kind {
            ScenarioKind::A => (-1, 5),
            ScenarioKind::B => (0, 6),
        };
        log_grid(lo, hi, 20)
    }
}

/// `per_decade` log-spaced densities from 10^lo to 10^hi per km², in m⁻².
/// Decade points are exact.
pub fn log_grid(lo: i32, hi: i32, per_decade: u32) -> Vec<f64> {
    let n = (hi - lo) as u32 * per_decade;
    (0..=n)
        .map(|k| {
            let (dec, frac) = (lo + (k / per_decade) as i32, k % per_decade);
            per_km2(10f64.powi(dec) * 10f64.powf(frac as f64 / per_decade as f64))
        })
        .collect()
}

/// Resource blocks per channel: (B − 2·guard)/(SCS·subframes), floored.
pub fn rb_capacity(bandwidth: f64, scs: f64, guard_fraction: f64, subframes: u32) -> Result<u64> {
    let usable = bandwidth * (1.0 - 2.0 * guard_fraction);
    if !(bandwidth > 0.0 && scs > 0.0 && subframes > 0 && guard_fraction >= 0.0 && usable > 0.0) {
        return Err(Error::Domain("resource-block capacity needs positive bandwidth, spacing and subframes".into()));
    }
    // Guard against 99.999… from the float product.
    Ok((usable / (scs * subframes as f64) * (1.0 + 1e-12)).floor() as u64)
}

/// Engines a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Analytic,
    Mc,
    Both,
}

impl Engine {
    pub fn analytic(self) -> bool {
        self != Engine::Mc
    }

    pub fn mc(self) -> bool {
        self != Engine::Analytic
    }
}

/// Monte-Carlo estimate and its 95% half-width.
type McValue = (f64, f64);

/// One evaluated grid point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub point: ScenarioPoint,
    pub analytic: Option<f64>,
    /// Monte-Carlo estimate and its 95% half-width.
    pub mc: Option<(f64, f64)>,
    /// Why the point has no value, when it failed.
    pub error: Option<String>,
}

impl SweepRow {
    /// The value used for the optimum: analytic when present, else MC.
    pub fn value(&self) -> Option<f64> {
        self.analytic.or(self.mc.map(|m| m.0))
    }

    /// |analytic − MC| when both engines ran.
    pub fn discrepancy(&self) -> Option<f64> {
        Some((self.analytic? - self.mc?.0).abs())
    }
}

/// Grid argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    /// Density (m⁻²) of the best point; ties go to the lowest density.
    pub density: f64,
    pub value: f64,
    /// Ratio between neighbouring grid densities: the optimum is only known to this factor.
    pub grid_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub metric: String,
    pub rows: Vec<SweepRow>,
    pub optimum: Option<Optimum>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Evaluate `metric` at the fixed axis value `at` (ignored for means) over `grid`.
/// Points that fail numerically keep their error message and are skipped by
/// the optimum; configuration errors abort the sweep.
pub fn sweep(
    rule: &DensificationRule,
    grid: &[f64],
    metric: &Metric,
    at: f64,
    engine: Engine,
    analytic_opts: &AnalyticOptions,
    mc_opts: &McOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("density grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("density grid must be strictly increasing".into()));
    }
    let points = rule.points(grid)?;
    let axis = if metric.is_mean() { vec![] } else { vec![at] };
    let rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|point| {
            let eval = || -> Result<(Option<f64>, Option<McValue>)> {
                let analytic = if engine.analytic() {
                    let a = Analytic::new(&point.params, *analytic_opts)?;
                    Some(metric.analytic(&a, &axis)?.values[0])
                } else {
                    None
                };
                let mc = if engine.mc() {
                    let run = run_mc(&point.params, mc_opts)?;
                    let c = metric.monte_carlo(&run, &axis)?;
                    Some((c.values[0], c.half_width.map_or(f64::NAN, |h| h[0])))
                } else {
                    None
                };
                Ok((analytic, mc))
            };
            match eval() {
                Ok((analytic, mc)) => Ok(SweepRow { point, analytic, mc, error: None }),
                Err(e @ (Error::Config(_) | Error::Io(_))) => Err(e),
                Err(e) => Ok(SweepRow { point, analytic: None, mc: None, error: Some(e.to_string()) }),
            }
        })
        .collect::<Result<_>>()?;
    let grid_ratio = grid.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
    let mut optimum: Option<Optimum> = None;
    for r in &rows {
        if let Some(v) = r.value() {
            if optimum.is_none_or(|o| v > o.value) {
                optimum = Some(Optimum { density: r.point.density, value: v, grid_ratio });
            }
        }
    }
    Ok(SweepResult {
        metric: metric.name().into(),
        rows,
        optimum,
    })
}

/// Human-readable density with the swept quantity's unit.
pub fn density_label(kind: ScenarioKind, density: f64) -> String {
    match kind {
        ScenarioKind::A => format!("{:.4} BS/km2", to_per_km2(density)),
        ScenarioKind::B => format!("{:.4} UE/km2", to_per_km2(density)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(kind: ScenarioKind) -> DensificationRule {
        DensificationRule::new(kind, NetworkParams::default())
    }

    #[test]
    fn scenario_a_switches_after_100() {
        let a = rule(ScenarioKind::A);
        let p = a.params_for(per_km2(10.0)).unwrap();
        assert_eq!((p.params.alpha, p.params.z, p.branch), (3.25, 33.0, Branch::Macro));
        assert!((p.params.p_d - dbm_to_watts(66.0)).abs() < 1e-12);
        assert!((to_per_km2(p.params.lambda_u) - 100.0).abs() < 1e-9);
        assert_eq!(a.params_for(per_km2(100.0)).unwrap().branch, Branch::Macro);
        let s = a.params_for(per_km2(200.0)).unwrap();
        assert_eq!((s.params.alpha, s.params.z, s.branch), (2.5, 4.0, Branch::Small));
        assert!((s.params.p_d - dbm_to_watts(40.0)).abs() < 1e-12);
        // Open-loop power follows λ_b.
        assert_ne!(p.params.p_u_0, a.params_for(per_km2(20.0)).unwrap().params.p_u_0);
    }

    #[test]
    fn scenario_b_layers_and_clamp() {
        let b = rule(ScenarioKind::B);
        let p = b.params_for(per_km2(2_000.0)).unwrap();
        assert!((to_per_km2(p.params.lambda_b) - 1_000.0).abs() < 1e-9);
        assert_eq!(p.params.alpha, 2.5);
        let q = b.params_for(per_km2(1_000.0)).unwrap();
        assert!((to_per_km2(q.params.lambda_b) - 10.0).abs() < 1e-12 && !q.clamped);
        let low = b.params_for(per_km2(3.0)).unwrap();
        assert!(low.clamped && low.params.lambda_u == low.params.lambda_b);
        assert!(low.params.validate().is_ok());
    }

    #[test]
    fn switch_point_yields_both_branches() {
        let a = rule(ScenarioKind::A);
        let grid = a.default_grid();
        assert_eq!(grid.len(), 121);
        assert!((to_per_km2(grid[0]) - 0.1).abs() < 1e-15 && (to_per_km2(grid[120]) - 1e5).abs() < 1e-9);
        let pts = a.points(&grid).unwrap();
        assert_eq!(pts.len(), 122);
        let at: Vec<_> = pts.iter().filter(|p| (to_per_km2(p.density) - 100.0).abs() < 1e-9).collect();
        assert_eq!(at.iter().map(|p| p.branch).collect::<Vec<_>>(), vec![Branch::Macro, Branch::Small]);
    }

    #[test]
    fn resource_blocks() {
        assert_eq!(rb_capacity(20e6, 15e3, 0.05, 12).unwrap(), 100);
        assert_eq!(rb_capacity(40e6, 15e3, 0.05, 12).unwrap(), 200);
        assert_eq!(rb_capacity(10e6, 15e3, 0.05, 12).unwrap(), 50);
        assert!(rb_capacity(20e6, 15e3, 0.5, 12).is_err());
    }

    #[test]
    fn flat_metric_optimum_is_first_point() {
        let a = rule(ScenarioKind::A);
        let grid = [per_km2(1.0), per_km2(2.0), per_km2(4.0)];
        // Coverage at a vanishing threshold is 1 everywhere.
        let m = Metric::CoverageDl;
        let r = sweep(&a, &grid, &m, 1e-12, Engine::Analytic, &AnalyticOptions::default(), &McOptions::default()).unwrap();
        let o = r.optimum.unwrap();
        assert!(r.rows.iter().all(|row| (row.analytic.unwrap() - 1.0).abs() < 1e-6));
        assert_eq!(o.density, grid[0]);
        assert_eq!(o.grid_ratio, 2.0);
        assert!(sweep(&a, &[], &m, 1.0, Engine::Analytic, &AnalyticOptions::default(), &McOptions::default()).is_err());
    }
}
