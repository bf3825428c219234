//! Point-process sampling and distance laws of the Poisson-Voronoi type-II model.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{domain, Result};
use crate::units::BETA;

pub type Point = [f64; 2];

/// Uniform points of a homogeneous PPP of intensity `density` on the disk of
/// radius `radius` centred at the origin.
pub fn sample_hppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<Point> {
    let mean = density * PI * radius * radius;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let th = 2.0 * PI * rng.random::<f64>();
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

/// One sampled network around a BS at the origin.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub bs_points: Vec<Point>,
    pub ue_points: Vec<Point>,
    /// Serving BS of every UE (nearest BS, ties to the lowest index).
    pub association: Vec<u32>,
    /// The UE scheduled on the typical resource block in each cell, if any.
    pub selected_ue: Vec<Option<u32>>,
    pub typical_bs_index: usize,
    pub typical_ue_index: usize,
    pub window_radius: f64,
}

impl NetworkRealization {
    /// Distance from the typical UE to its serving (typical) BS.
    pub fn serving_distance(&self) -> f64 {
        dist(self.ue_points[self.typical_ue_index], self.bs_points[self.typical_bs_index])
    }

    /// Serving distance of an arbitrary UE.
    pub fn ue_link_distance(&self, ue: usize) -> f64 {
        dist(self.ue_points[ue], self.bs_points[self.association[ue] as usize])
    }

    pub fn is_active(&self, bs: usize) -> bool {
        self.selected_ue[bs].is_some()
    }
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Uniform bucket grid over a square for nearest-neighbour queries.
pub struct NearestGrid<'a> {
    points: &'a [Point],
    origin: f64,
    cell: f64,
    n: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> NearestGrid<'a> {
    /// Grid over [−half_width, half_width]² with buckets holding ~2 points each.
    pub fn new(points: &'a [Point], half_width: f64) -> Self {
        let target = (points.len() as f64 / 2.0).max(1.0);
        let n = (target.sqrt().ceil() as usize).clamp(1, 4096);
        let cell = 2.0 * half_width / n as f64;
        let origin = -half_width;
        let mut counts = vec![0u32; n * n + 1];
        let index = |p: &Point| -> usize {
            let i = (((p[0] - origin) / cell) as isize).clamp(0, n as isize - 1) as usize;
            let j = (((p[1] - origin) / cell) as isize).clamp(0, n as isize - 1) as usize;
            i * n + j
        };
        for p in points {
            counts[index(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (id, p) in points.iter().enumerate() {
            let c = index(p);
            items[fill[c] as usize] = id as u32;
            fill[c] += 1;
        }
        Self {
            points,
            origin,
            cell,
            n,
            starts: counts,
            items,
        }
    }

    /// Index of the nearest point to `q`; ties resolved to the lowest index.
    pub fn nearest(&self, q: Point) -> usize {
        let n = self.n as isize;
        let ci = (((q[0] - self.origin) / self.cell) as isize).clamp(0, n - 1);
        let cj = (((q[1] - self.origin) / self.cell) as isize).clamp(0, n - 1);
        let mut best = (f64::INFINITY, u32::MAX);
        let mut ring = 0isize;
        loop {
            let mut visit = |i: isize, j: isize| {
                if i < 0 || j < 0 || i >= n || j >= n {
                    return;
                }
                let c = (i * n + j) as usize;
                for &id in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let p = self.points[id as usize];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    if d2 < best.0 || (d2 == best.0 && id < best.1) {
                        best = (d2, id);
                    }
                }
            };
            if ring == 0 {
                visit(ci, cj);
            } else {
                for d in -ring..=ring {
                    visit(ci - ring, cj + d);
                    visit(ci + ring, cj + d);
                }
                for d in -ring + 1..ring {
                    visit(ci + d, cj - ring);
                    visit(ci + d, cj + ring);
                }
            }
            // Every unvisited bucket is at least `ring` cells away from q.
            let reach = ring as f64 * self.cell;
            if best.1 != u32::MAX && best.0 <= reach * reach {
                return best.1 as usize;
            }
            if ring > n {
                return best.1 as usize;
            }
            ring += 1;
        }
    }
}

/// Sample BSs (typical BS at the origin plus a PPP) and UEs on a disk, associate
/// UEs to their nearest BS and schedule one uniform UE per non-empty cell.
/// Returns `None` when the typical cell holds no UE.
pub fn try_build_realization<R: Rng + ?Sized>(
    lambda_b: f64,
    lambda_u: f64,
    window_radius: f64,
    rng: &mut R,
) -> Option<NetworkRealization> {
    let mut bs_points = vec![[0.0, 0.0]];
    bs_points.extend(sample_hppp(lambda_b, window_radius, rng));
    let ue_points = sample_hppp(lambda_u, window_radius, rng);

    let grid = NearestGrid::new(&bs_points, window_radius);
    let association: Vec<u32> = ue_points.iter().map(|&u| grid.nearest(u) as u32).collect();

    let nb = bs_points.len();
    let mut starts = vec![0u32; nb + 1];
    for &b in &association {
        starts[b as usize + 1] += 1;
    }
    for k in 1..=nb {
        starts[k] += starts[k - 1];
    }
    let mut fill = starts.clone();
    let mut members = vec![0u32; association.len()];
    for (ue, &b) in association.iter().enumerate() {
        members[fill[b as usize] as usize] = ue as u32;
        fill[b as usize] += 1;
    }
    let selected_ue: Vec<Option<u32>> = (0..nb)
        .map(|b| {
            let (s, e) = (starts[b] as usize, starts[b + 1] as usize);
            (e > s).then(|| members[s + rng.random_range(0..e - s)])
        })
        .collect();

    let typical_ue_index = selected_ue[0]? as usize;
    Some(NetworkRealization {
        bs_points,
        ue_points,
        association,
        selected_ue,
        typical_bs_index: 0,
        typical_ue_index,
        window_radius,
    })
}

/// Like [`try_build_realization`] but resamples until the typical cell is
/// non-empty; also returns the number of rejected draws.
pub fn build_realization<R: Rng + ?Sized>(
    lambda_b: f64,
    lambda_u: f64,
    window_radius: f64,
    rng: &mut R,
) -> Result<(NetworkRealization, u64)> {
    if !(lambda_u > 0.0) {
        return domain("a typical UE requires lambda_u > 0");
    }
    let mut rejected = 0;
    loop {
        if let Some(r) = try_build_realization(lambda_b, lambda_u, window_radius, rng) {
            return Ok((r, rejected));
        }
        rejected += 1;
    }
}

/// Intensity of UL interferers seen from the typical BS at distance `r`.
pub fn interferer_intensity(r: f64, lambda_r: f64) -> f64 {
    let x = lambda_r * r * r;
    lambda_r * (-(-6.5 * x).exp_m1() + 2.0 / 7.0 * x * (-13.0 / 9.0 * x).exp())
}

/// Density of the serving distance R₀.
pub fn serving_distance_pdf(r: f64, lambda_b: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    let k = BETA * lambda_b * PI;
    2.0 * k * r * (-k * r * r).exp()
}

/// CDF of the serving distance R₀.
pub fn serving_distance_cdf(r: f64, lambda_b: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -(-BETA * lambda_b * PI * r * r).exp_m1()
}

/// F(b) − F(a) computed without cancellation for nearby arguments.
pub fn serving_distance_mass(a: f64, b: f64, lambda_b: f64) -> f64 {
    let k = BETA * lambda_b * PI;
    let (a, b) = (a.max(0.0), b.max(0.0));
    // e^(−ka²) − e^(−kb²) = e^(−ka²)(1 − e^(−k(b²−a²)))
    -(-k * a * a).exp() * (-k * (b * b - a * a)).exp_m1()
}

/// Inverse CDF of the serving distance.
pub fn serving_distance_quantile(u: f64, lambda_b: f64) -> f64 {
    (-(-u).ln_1p() / (BETA * lambda_b * PI)).sqrt()
}

/// Serving-distance density of an interfering UE at distance `d_y` from the
/// typical BS, truncated to [0, d_y] and renormalized.
pub fn truncated_serving_pdf(r: f64, d_y: f64, lambda_b: f64) -> Result<f64> {
    if r > d_y || r < 0.0 {
        return domain(format!("truncated serving pdf needs 0 <= r <= d_y (r={r}, d_y={d_y})"));
    }
    Ok(serving_distance_pdf(r, lambda_b) / serving_distance_cdf(d_y, lambda_b))
}
