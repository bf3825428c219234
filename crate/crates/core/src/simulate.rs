//! Monte-Carlo ground truth: full Poisson-Voronoi type-II networks sampled
//! around a typical BS, with every SINR and exposure quantity measured at the
//! typical BS/UE pair.
//!
//! Realization `i` draws from its own ChaCha stream keyed by `(seed, i)`, so a
//! run is reproducible for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_realization, dist, NetworkRealization};
use crate::units::NetworkParams;

/// How UE–UE exposure treats interferers closer than r_e.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearFieldPolicy {
    /// Distances below r_e are raised to r_e.
    #[default]
    Clip,
    /// UEs closer than r_e are left out, as in the analytic integrals.
    Exclude,
}

/// Whether the DL exposure reuses the fading of the DL SINR links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingCoupling {
    /// One fading draw per BS feeds both the DL SINR and the DL exposure, so the
    /// serving signal appears in both (the joint metrics rely on this).
    #[default]
    Shared,
    /// DL exposure draws its own fading.
    Independent,
}

/// Knobs of a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McOptions {
    pub realizations: usize,
    pub seed: u64,
    /// Fraction of the mean DL exposure allowed to fall outside the window.
    pub tail_fraction: f64,
    pub near_field: NearFieldPolicy,
    pub fading: FadingCoupling,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            realizations: 20_000,
            seed: 1,
            tail_fraction: 1e-3,
            near_field: NearFieldPolicy::default(),
            fading: FadingCoupling::default(),
        }
    }
}

impl McOptions {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("mc.realizations must be at least 1".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(Error::Config("mc.tail_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Quantities measured at the typical node of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub realization_id: u64,
    pub sinr_ul: f64,
    pub sinr_dl: f64,
    pub exp_ul_w: f64,
    pub exp_dl_w: f64,
    pub r0_m: f64,
}

impl SampleRecord {
    pub fn exp_total_w(&self) -> f64 {
        self.exp_ul_w + self.exp_dl_w
    }
}

/// Exposure distance used for UE–UE paths.
pub fn nearfield_clip(distance: f64, r_e: f64) -> f64 {
    distance.max(r_e)
}

/// Radius of the sampled disk: the distance beyond which BSs carry at most
/// `tail_fraction` of the mean DL exposure (capped at τ), plus five mean cell
/// radii against edge effects.
pub fn window_radius(p: &NetworkParams, tail_fraction: f64) -> f64 {
    let z2 = p.z * p.z;
    let e = 1.0 - p.alpha / 2.0;
    let a = |x: f64| (x * x + z2).powf(e);
    let level = a(p.tau) + tail_fraction * (a(p.r_e) - a(p.tau));
    let reach = (level.powf(1.0 / e) - z2).max(0.0).sqrt().min(p.tau);
    reach + 5.0 / (std::f64::consts::PI * p.lambda_b).sqrt()
}

fn fade<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Measure SINRs and exposures at the typical UE and its serving BS.
pub fn measure_realization<R: Rng + ?Sized>(
    real: &NetworkRealization,
    p: &NetworkParams,
    opts: &McOptions,
    rng: &mut R,
) -> SampleRecord {
    let ue0 = real.typical_ue_index;
    let ue_pos = real.ue_points[ue0];
    let bs0 = real.typical_bs_index;
    let r0 = real.serving_distance();

    let (mut s_dl, mut i_dl, mut exp_dl) = (0.0, 0.0, 0.0);
    let (mut s_ul, mut i_ul) = (0.0, 0.0);
    for (b, bs) in real.bs_points.iter().enumerate() {
        let Some(sel) = real.selected_ue[b] else { continue };
        let rho = dist(*bs, ue_pos);
        let rx = p.p_d * p.l_d(rho);
        let h = fade(rng);
        if b == bs0 {
            s_dl = h * rx;
        } else {
            i_dl += h * rx;
        }
        if rho >= p.r_e {
            let h_exp = match opts.fading {
                FadingCoupling::Shared => h,
                FadingCoupling::Independent => fade(rng),
            };
            exp_dl += h_exp * rx;
        }

        let sel = sel as usize;
        let power = p.ue_tx_power(real.ue_link_distance(sel));
        let d = dist(real.ue_points[sel], real.bs_points[bs0]);
        let rx = power * p.g_b * p.l_u(d) * fade(rng);
        if b == bs0 {
            s_ul = rx;
        } else {
            i_ul += rx;
        }
    }

    let mut exp_ul = 0.0;
    for (u, pos) in real.ue_points.iter().enumerate() {
        if u == ue0 {
            continue;
        }
        let d = dist(*pos, ue_pos);
        if d < p.r_e && opts.near_field == NearFieldPolicy::Exclude {
            continue;
        }
        let power = p.ue_tx_power(real.ue_link_distance(u));
        exp_ul += power * p.l_u_tilde(nearfield_clip(d, p.r_e)) * fade(rng);
    }

    SampleRecord {
        realization_id: 0,
        sinr_ul: s_ul / (i_ul + p.noise_ul),
        sinr_dl: s_dl / (i_dl + p.noise_dl),
        exp_ul_w: exp_ul,
        exp_dl_w: exp_dl,
        r0_m: r0,
    }
}

/// RNG for realization `id` of a run seeded with `seed`.
pub fn realization_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Sample realization `id` of a run, returning it with its rejection count.
pub fn sample_realization(p: &NetworkParams, opts: &McOptions, id: u64) -> Result<(NetworkRealization, u64, ChaCha8Rng)> {
    let mut rng = realization_rng(opts.seed, id);
    let (real, rejected) = build_realization(p.lambda_b, p.lambda_u, window_radius(p, opts.tail_fraction), &mut rng)?;
    Ok((real, rejected, rng))
}

/// All samples of a Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct McRun {
    pub records: Vec<SampleRecord>,
    /// Draws discarded because the typical cell held no UE.
    pub n_rejected: u64,
    pub seed: u64,
}

/// Simulate `opts.realizations` independent networks.
pub fn run_mc(p: &NetworkParams, opts: &McOptions) -> Result<McRun> {
    p.validate()?;
    opts.validate()?;
    let out: Vec<(SampleRecord, u64)> = (0..opts.realizations as u64)
        .into_par_iter()
        .map(|id| {
            let (real, rejected, mut rng) = sample_realization(p, opts, id)?;
            let mut rec = measure_realization(&real, p, opts, &mut rng);
            rec.realization_id = id;
            Ok((rec, rejected))
        })
        .collect::<Result<_>>()?;
    let n_rejected = out.iter().map(|(_, r)| r).sum();
    Ok(McRun {
        records: out.into_iter().map(|(r, _)| r).collect(),
        n_rejected,
        seed: opts.seed,
    })
}

/// What an [`McEstimate`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Mean,
    Median,
    Cdf,
    Ccdf,
    JointProb,
}

/// Empirical estimate with 95% normal-approximation half-widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub kind: EstimateKind,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub half_width_95: Vec<f64>,
    pub n_realizations: usize,
    pub n_rejected: u64,
    pub seed: u64,
}

const Z95: f64 = 1.959_963_984_540_054;

fn binomial_half_width(p: f64, n: usize) -> f64 {
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

impl McRun {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn estimate(&self, kind: EstimateKind, axis: Vec<f64>, values: Vec<f64>, half: Vec<f64>) -> McEstimate {
        McEstimate {
            kind,
            axis,
            values,
            half_width_95: half,
            n_realizations: self.len(),
            n_rejected: self.n_rejected,
            seed: self.seed,
        }
    }

    /// Sample mean of `f` with its 95% half-width.
    pub fn mean(&self, f: impl Fn(&SampleRecord) -> f64) -> McEstimate {
        let n = self.len() as f64;
        let xs: Vec<f64> = self.records.iter().map(&f).collect();
        let m = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        self.estimate(EstimateKind::Mean, vec![], vec![m], vec![Z95 * (var / n).sqrt()])
    }

    /// Sample median of `f`, with a half-width from the order statistics
    /// bracketing the 95% binomial interval of the median rank.
    pub fn median(&self, f: impl Fn(&SampleRecord) -> f64) -> McEstimate {
        let mut xs: Vec<f64> = self.records.iter().map(&f).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let med = if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        };
        let spread = Z95 * (n as f64).sqrt() / 2.0;
        let lo = xs[((n as f64 / 2.0 - spread).floor().max(0.0) as usize).min(n - 1)];
        let hi = xs[((n as f64 / 2.0 + spread).ceil() as usize).min(n - 1)];
        self.estimate(EstimateKind::Median, vec![], vec![med], vec![0.5 * (hi - lo)])
    }

    /// Empirical P[f ≤ t] at each threshold.
    pub fn cdf(&self, f: impl Fn(&SampleRecord) -> f64, thresholds: &[f64]) -> McEstimate {
        let mut xs: Vec<f64> = self.records.iter().map(&f).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let values: Vec<f64> = thresholds
            .iter()
            .map(|t| xs.partition_point(|x| x <= t) as f64 / n as f64)
            .collect();
        let half = values.iter().map(|p| binomial_half_width(*p, n)).collect();
        self.estimate(EstimateKind::Cdf, thresholds.to_vec(), values, half)
    }

    /// Empirical P[f > t] at each threshold.
    pub fn ccdf(&self, f: impl Fn(&SampleRecord) -> f64, thresholds: &[f64]) -> McEstimate {
        let mut e = self.cdf(f, thresholds);
        e.kind = EstimateKind::Ccdf;
        for v in &mut e.values {
            *v = 1.0 - *v;
        }
        e
    }

    /// Frequency of the event `hit(record, t)` at each axis value.
    pub fn joint(&self, hit: impl Fn(&SampleRecord, f64) -> bool, axis: &[f64]) -> McEstimate {
        let n = self.len();
        let values: Vec<f64> = axis
            .iter()
            .map(|&t| self.records.iter().filter(|r| hit(r, t)).count() as f64 / n as f64)
            .collect();
        let half = values.iter().map(|p| binomial_half_width(*p, n)).collect();
        self.estimate(EstimateKind::JointProb, axis.to_vec(), values, half)
    }

    /// Frequency of `event` among the records satisfying `given`. Fails when no
    /// record satisfies `given`.
    pub fn conditional(
        &self,
        event: impl Fn(&SampleRecord, f64) -> bool,
        given: impl Fn(&SampleRecord) -> bool,
        axis: &[f64],
    ) -> Result<McEstimate> {
        let sub: Vec<&SampleRecord> = self.records.iter().filter(|r| given(r)).collect();
        if sub.is_empty() {
            return Err(Error::NullEvent("no realization satisfies the conditioning event".into()));
        }
        let m = sub.len();
        let values: Vec<f64> = axis
            .iter()
            .map(|&t| sub.iter().filter(|r| event(r, t)).count() as f64 / m as f64)
            .collect();
        let half = values.iter().map(|p| binomial_half_width(*p, m)).collect();
        let mut e = self.estimate(EstimateKind::JointProb, axis.to_vec(), values, half);
        e.n_realizations = m;
        Ok(e)
    }
}
