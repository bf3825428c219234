//! Adaptive Gauss–Kronrod and fixed Gauss–Legendre rules.
//!
//! The adaptive driver is generic over the value type so the same code
//! integrates real, complex and vector-valued integrands. Vector integrands
//! are how the batch inversions share one integrand evaluation across many
//! thresholds: the error of a vector estimate is the largest component error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be accumulated by the quadrature drivers.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    /// `self += w * x`
    fn axpy(&mut self, w: f64, x: &Self);
    fn max_abs(&self) -> f64;
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        *self += w * x;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl QuadValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        *self += x * w;
    }
    fn max_abs(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }
}

impl QuadValue for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += w * v;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// 7-point Gauss weights, at the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate over `[a, b]` and its embedded-Gauss error.
pub fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.zero_like();
    let mut gauss = fc.zero_like();
    kron.axpy(WGK[7], &fc);
    gauss.axpy(WG[3], &fc);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.axpy(WGK[j], &f1);
        kron.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.axpy(WG[j / 2], &f1);
            gauss.axpy(WG[j / 2], &f2);
        }
    }
    let mut k = kron.zero_like();
    k.axpy(half, &kron);
    let mut g = gauss.zero_like();
    g.axpy(half, &gauss);
    let err = k.max_abs_diff(&g);
    (k, err)
}

/// Absolute/relative stopping rule: `err <= max(abs, rel * |estimate|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, magnitude: f64) -> f64 {
        self.abs.max(self.rel * magnitude)
    }
}

#[derive(Debug, Clone)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]` with optional
/// interior breakpoints. Always bisects the segment with the largest error.
pub fn adaptive<T, F>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
    max_subdivisions: usize,
) -> Result<Quad<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    assert!(points.len() >= 2, "need at least an interval");
    let mut heap = BinaryHeap::new();
    let mut total: Option<T> = None;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (v, e) = gk15(&mut f, a, b);
        evaluations += 15;
        match total.as_mut() {
            Some(t) => t.axpy(1.0, &v),
            None => total = Some(v.clone()),
        }
        total_err += e;
        heap.push(Segment { a, b, value: v, err: e });
    }
    let Some(mut total) = total else {
        // Empty range: integrate a degenerate segment to learn the value shape.
        let (v, _) = gk15(&mut f, points[0], points[0]);
        return Ok(Quad {
            value: v.zero_like(),
            error: 0.0,
            evaluations: 15,
        });
    };

    let mut subdivisions = 0;
    while total_err > tol.target(total.max_abs()) {
        if subdivisions >= max_subdivisions {
            return Err(Error::NonConvergence {
                context: "adaptive Gauss-Kronrod".into(),
                estimate: total.max_abs(),
                achieved: total_err,
            });
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval exhausted at machine precision; accept what we have.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evaluations += 30;
        total.axpy(-1.0, &seg.value);
        total.axpy(1.0, &v1);
        total.axpy(1.0, &v2);
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        subdivisions += 1;
    }
    // Re-sum to shed accumulated cancellation from the incremental updates.
    let mut value = total.zero_like();
    let mut error = 0.0;
    for seg in heap.iter() {
        value.axpy(1.0, &seg.value);
        error += seg.err;
    }
    Ok(Quad {
        value,
        error,
        evaluations,
    })
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    adaptive(f, &[a, b], tol, 2000).map(|q| q.value)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                nodes[0] = 0.0;
                weights[0] = 2.0;
                break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Shared, lazily built Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Mutex<Vec<(usize, &'static GaussLegendre)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    if let Some((_, rule)) = guard.iter().find(|(k, _)| *k == n) {
        return rule;
    }
    let rule: &'static GaussLegendre = Box::leak(Box::new(GaussLegendre::new(n)));
    guard.push((n, rule));
    rule
}
