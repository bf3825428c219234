//! Named metrics with one evaluator per engine, so that every front end
//! (CLI, sweeps, validation) asks the analytic model and the simulator the
//! same question.

use serde::Serialize;

use crate::analytic::{Analytic, ExposureLink};
use crate::curve::{MetricCurve, Monotonicity};
use crate::error::{Error, Result};
use crate::simulate::{McEstimate, McRun, SampleRecord};

/// Every metric name accepted on the command line.
pub const METRIC_NAMES: [&str; 10] = [
    "mean-exposure-ul",
    "mean-exposure-dl",
    "cdf-exposure-ul",
    "cdf-exposure-dl",
    "cdf-exposure-total",
    "coverage-ul",
    "coverage-dl",
    "joint-uec",
    "joint-emp-udc",
    "conditional-emp-udc",
];

/// A metric together with the thresholds it holds fixed. The free threshold
/// is the curve axis: an exposure level in watts or an SINR ratio. Means
/// have no axis and yield a single point with a NaN axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "metric")]
pub enum Metric {
    MeanExposureUl,
    MeanExposureDl,
    CdfExposure { link: ExposureLink },
    CoverageUl,
    CoverageDl,
    /// P[SINR^u > t_cov_ul, P^u < axis].
    JointUec { t_cov_ul: f64 },
    /// P[SINR^u > t_cov_ul, P^u + P^d < axis, SINR^d > t_cov_dl].
    JointEmpUdc { t_cov_ul: f64, t_cov_dl: f64 },
    /// P[P^u + P^d < axis | SINR^u > t_cov_ul, SINR^d > t_cov_dl].
    ConditionalEmpUdc { t_cov_ul: f64, t_cov_dl: f64 },
}

fn need(v: Option<f64>, what: &str, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("metric {name} needs {what}")))
}

impl Metric {
    /// Parse a metric name; joint metrics take their fixed SINR thresholds (linear).
    pub fn from_name(name: &str, t_cov_ul: Option<f64>, t_cov_dl: Option<f64>) -> Result<Self> {
        Ok(match name {
            "mean-exposure-ul" => Metric::MeanExposureUl,
            "mean-exposure-dl" => Metric::MeanExposureDl,
            "cdf-exposure-ul" => Metric::CdfExposure { link: ExposureLink::Ul },
            "cdf-exposure-dl" => Metric::CdfExposure { link: ExposureLink::Dl },
            "cdf-exposure-total" => Metric::CdfExposure { link: ExposureLink::Total },
            "coverage-ul" => Metric::CoverageUl,
            "coverage-dl" => Metric::CoverageDl,
            "joint-uec" => Metric::JointUec {
                t_cov_ul: need(t_cov_ul, "a UL SINR threshold", name)?,
            },
            "joint-emp-udc" => Metric::JointEmpUdc {
                t_cov_ul: need(t_cov_ul, "a UL SINR threshold", name)?,
                t_cov_dl: need(t_cov_dl, "a DL SINR threshold", name)?,
            },
            "conditional-emp-udc" => Metric::ConditionalEmpUdc {
                t_cov_ul: need(t_cov_ul, "a UL SINR threshold", name)?,
                t_cov_dl: need(t_cov_dl, "a DL SINR threshold", name)?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown metric `{other}`; valid names: {}",
                    METRIC_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::MeanExposureUl => "mean-exposure-ul",
            Metric::MeanExposureDl => "mean-exposure-dl",
            Metric::CdfExposure { link } => link.name(),
            Metric::CoverageUl => "coverage-ul",
            Metric::CoverageDl => "coverage-dl",
            Metric::JointUec { .. } => "joint-uec",
            Metric::JointEmpUdc { .. } => "joint-emp-udc",
            Metric::ConditionalEmpUdc { .. } => "conditional-emp-udc",
        }
    }

    pub fn is_mean(&self) -> bool {
        matches!(self, Metric::MeanExposureUl | Metric::MeanExposureDl)
    }

    /// Whether the axis is an SINR ratio (otherwise an exposure power in watts).
    pub fn axis_is_sinr(&self) -> bool {
        matches!(self, Metric::CoverageUl | Metric::CoverageDl)
    }

    pub fn axis_label(&self) -> &'static str {
        if self.is_mean() {
            "none"
        } else if self.axis_is_sinr() {
            "sinr"
        } else {
            "exposure_w"
        }
    }

    fn monotonicity(&self) -> Monotonicity {
        match self {
            Metric::CoverageUl | Metric::CoverageDl => Monotonicity::NonIncreasing,
            _ => Monotonicity::NonDecreasing,
        }
    }

    fn check_axis(&self, axis: &[f64]) -> Result<()> {
        if !self.is_mean() && axis.is_empty() {
            return Err(Error::Config(format!("metric {} needs at least one threshold", self.name())));
        }
        Ok(())
    }

    /// Evaluate with the analytic engine.
    pub fn analytic(&self, a: &Analytic, axis: &[f64]) -> Result<MetricCurve> {
        self.check_axis(axis)?;
        let tol = a.options().policy.abs_tol.max(10.0 * a.options().policy.rel_tol);
        let prob = |raw: Vec<f64>| {
            MetricCurve::probability(self.name(), self.axis_label(), axis.to_vec(), raw, self.monotonicity(), tol)
        };
        match *self {
            Metric::MeanExposureUl => MetricCurve::values(self.name(), "none", vec![f64::NAN], vec![a.mean_ul_exposure()?]),
            Metric::MeanExposureDl => MetricCurve::values(self.name(), "none", vec![f64::NAN], vec![a.mean_dl_exposure()?]),
            Metric::CdfExposure { link } => a.cdf_exposure(link, axis),
            Metric::CoverageUl => a.coverage_ul(axis),
            Metric::CoverageDl => a.coverage_dl(axis),
            Metric::JointUec { t_cov_ul } => {
                let cov = a.coverage_ul(&[t_cov_ul])?.values[0];
                let exp = a.cdf_exposure(ExposureLink::Ul, axis)?;
                prob(exp.values.iter().map(|e| cov * e).collect())
            }
            Metric::JointEmpUdc { t_cov_ul, t_cov_dl } => {
                let raw = axis
                    .iter()
                    .map(|&t| a.joint_emp_udc_raw(t_cov_ul, t, t_cov_dl))
                    .collect::<Result<_>>()?;
                prob(raw)
            }
            Metric::ConditionalEmpUdc { t_cov_ul, t_cov_dl } => {
                let both = a.joint_coverage(t_cov_ul, t_cov_dl)?;
                if !(both > 0.0) {
                    return Err(Error::NullEvent(format!("joint coverage vanishes ({both:e})")));
                }
                let raw = axis
                    .iter()
                    .map(|&t| Ok(a.joint_emp_udc_raw(t_cov_ul, t, t_cov_dl)? / both))
                    .collect::<Result<_>>()?;
                prob(raw)
            }
        }
    }

    /// Evaluate on Monte-Carlo samples.
    pub fn monte_carlo(&self, run: &McRun, axis: &[f64]) -> Result<MetricCurve> {
        self.check_axis(axis)?;
        if run.is_empty() {
            return Err(Error::Domain("no Monte-Carlo samples".into()));
        }
        let est: McEstimate = match *self {
            Metric::MeanExposureUl => run.mean(|r| r.exp_ul_w),
            Metric::MeanExposureDl => run.mean(|r| r.exp_dl_w),
            Metric::CdfExposure { link } => run.cdf(exposure_of(link), axis),
            Metric::CoverageUl => run.ccdf(|r| r.sinr_ul, axis),
            Metric::CoverageDl => run.ccdf(|r| r.sinr_dl, axis),
            Metric::JointUec { t_cov_ul } => run.joint(|r, t| r.sinr_ul > t_cov_ul && r.exp_ul_w < t, axis),
            Metric::JointEmpUdc { t_cov_ul, t_cov_dl } => run.joint(
                |r, t| r.sinr_ul > t_cov_ul && r.sinr_dl > t_cov_dl && r.exp_total_w() < t,
                axis,
            ),
            Metric::ConditionalEmpUdc { t_cov_ul, t_cov_dl } => run.conditional(
                |r, t| r.exp_total_w() < t,
                |r| r.sinr_ul > t_cov_ul && r.sinr_dl > t_cov_dl,
                axis,
            )?,
        };
        let curve = if self.is_mean() {
            MetricCurve::values(self.name(), "none", vec![f64::NAN], est.values)?
        } else {
            MetricCurve::probability(
                self.name(),
                self.axis_label(),
                axis.to_vec(),
                est.values,
                self.monotonicity(),
                0.0,
            )?
        };
        Ok(curve.with_half_width(est.half_width_95))
    }
}

/// Accessor for the exposure sum behind `link`.
pub fn exposure_of(link: ExposureLink) -> fn(&SampleRecord) -> f64 {
    match link {
        ExposureLink::Ul => |r| r.exp_ul_w,
        ExposureLink::Dl => |r| r.exp_dl_w,
        ExposureLink::Total => |r| r.exp_total_w(),
    }
}
