//! The curve type every metric evaluator returns.

use serde::Serialize;

use crate::error::{Error, Result};

/// Shape constraint a curve must satisfy on its sampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    Unconstrained,
}

/// Ordered samples `axis → value` plus what they mean.
#[derive(Debug, Clone, Serialize)]
pub struct MetricCurve {
    /// Metric name, e.g. `coverage-ul`.
    pub metric: String,
    /// Physical meaning of the axis, e.g. `sinr` or `exposure_w`.
    pub axis_label: String,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    /// 95% half-widths for Monte-Carlo estimates.
    pub half_width: Option<Vec<f64>>,
    /// Values are probabilities, clamped to [0, 1] on construction.
    pub probability: bool,
    pub monotonicity: Monotonicity,
    /// Values before clamping, kept for diagnostics.
    pub raw: Vec<f64>,
    pub warnings: Vec<String>,
}

impl MetricCurve {
    /// Build a probability curve. Values outside [−tol, 1+tol] and monotonicity
    /// violations larger than `tol` are recorded as warnings; the values are then
    /// clamped to [0, 1] and projected onto the monotone sequences (least squares).
    pub fn probability(
        metric: &str,
        axis_label: &str,
        axis: Vec<f64>,
        raw: Vec<f64>,
        monotonicity: Monotonicity,
        tol: f64,
    ) -> Result<Self> {
        check_axis(&axis, raw.len())?;
        let mut warnings = Vec::new();
        for (t, v) in axis.iter().zip(&raw) {
            if *v < -tol || *v > 1.0 + tol || !v.is_finite() {
                warnings.push(format!("{metric}: value {v:e} at {t:e} outside [0,1] beyond tolerance"));
            }
        }
        let clamped: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let values = match monotonicity {
            Monotonicity::NonDecreasing => isotonic(&clamped),
            Monotonicity::NonIncreasing => {
                let flipped: Vec<f64> = clamped.iter().map(|v| -v).collect();
                isotonic(&flipped).into_iter().map(|v| -v).collect()
            }
            Monotonicity::Unconstrained => clamped.clone(),
        };
        let worst = clamped.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst > tol {
            warnings.push(format!("{metric}: monotonicity violated by up to {worst:e}"));
        }
        Ok(Self {
            metric: metric.into(),
            axis_label: axis_label.into(),
            axis,
            values,
            half_width: None,
            probability: true,
            monotonicity,
            raw,
            warnings,
        })
    }

    /// Build a curve of unconstrained real values (means, densities).
    pub fn values(metric: &str, axis_label: &str, axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_axis(&axis, values.len())?;
        Ok(Self {
            metric: metric.into(),
            axis_label: axis_label.into(),
            axis,
            raw: values.clone(),
            values,
            half_width: None,
            probability: false,
            monotonicity: Monotonicity::Unconstrained,
            warnings: Vec::new(),
        })
    }

    pub fn with_half_width(mut self, hw: Vec<f64>) -> Self {
        self.half_width = Some(hw);
        self
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Largest violation of the monotonicity flag on the sampled grid (0 if none).
    pub fn monotonicity_violation(&self) -> f64 {
        let step = |w: &[f64]| match self.monotonicity {
            Monotonicity::NonDecreasing => (w[0] - w[1]).max(0.0),
            Monotonicity::NonIncreasing => (w[1] - w[0]).max(0.0),
            Monotonicity::Unconstrained => 0.0,
        };
        self.values.windows(2).map(step).fold(0.0, f64::max)
    }

    /// Whether every value respects the [0, 1] bound (for probability curves) and
    /// the monotonicity flag up to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let bounded = !self.probability || self.values.iter().all(|v| (0.0..=1.0).contains(v));
        bounded && self.monotonicity_violation() <= tol
    }
}

/// Non-decreasing least-squares fit by pooling adjacent violators.
fn isotonic(v: &[f64]) -> Vec<f64> {
    // Blocks of (mean, size).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, n2) = blocks.pop().unwrap();
            let (m1, n1) = blocks.pop().unwrap();
            let n = n1 + n2;
            blocks.push(((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n));
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

fn check_axis(axis: &[f64], n: usize) -> Result<()> {
    if axis.len() != n {
        return Err(Error::Domain(format!("axis has {} points but {n} values", axis.len())));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("curve axis must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_and_warns() {
        let c = MetricCurve::probability(
            "x",
            "t",
            vec![1.0, 2.0, 3.0],
            vec![-1e-12, 0.5, 1.2],
            Monotonicity::NonDecreasing,
            1e-9,
        )
        .unwrap();
        assert_eq!(c.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.warnings.len(), 1);
        assert!(c.is_valid(0.0));
    }

    #[test]
    fn rejects_unsorted_axis() {
        assert!(MetricCurve::values("x", "t", vec![2.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn projects_onto_monotone_sequence() {
        let c = MetricCurve::probability("x", "t", vec![1.0, 2.0], vec![0.6, 0.4], Monotonicity::NonDecreasing, 0.0)
            .unwrap();
        assert_eq!(c.values, vec![0.5, 0.5]);
        assert_eq!(c.raw, vec![0.6, 0.4]);
        assert_eq!(c.warnings.len(), 1);
        assert_eq!(c.monotonicity_violation(), 0.0);

        let noisy = vec![0.9, 0.9 + 1e-12, 0.5, 0.5 - 1e-13, 0.1];
        let c = MetricCurve::probability("x", "t", (0..5).map(f64::from).collect(), noisy, Monotonicity::NonIncreasing, 1e-9)
            .unwrap();
        assert!(c.warnings.is_empty() && c.is_valid(0.0));
        assert!((c.values[0] - 0.9).abs() < 1e-12 && c.values[4] == 0.1);
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic(&[]), Vec::<f64>::new());
    }

    #[test]
    fn unsorted_values_flagged_by_violation_measure() {
        let mut c = MetricCurve::values("x", "t", vec![1.0, 2.0], vec![0.6, 0.4]).unwrap();
        c.monotonicity = Monotonicity::NonDecreasing;
        assert!((c.monotonicity_violation() - 0.2).abs() < 1e-15);
        assert!(!c.is_valid(1e-3));
    }
}
