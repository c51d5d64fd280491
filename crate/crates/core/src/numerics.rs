//! Numerical building blocks shared by the model modules: adaptive
//! Gauss-Kronrod quadrature, 1-D search, root bracketing, streaming
//! moments and deterministic parallel Monte Carlo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for nodes 1, 3, 5, 7 of the Kronrod set.
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute tolerance used by model-level integrals.
pub const QUAD_TOL: f64 = 1e-12;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for (j, (&x, &w)) in GK_NODES.iter().zip(GK_WEIGHTS.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * value.abs()) || depth == 0 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth - 1) + adapt(f, mid, b, 0.5 * tol, depth - 1)
}

/// Adaptive 15-point Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adapt(&f, a, b, tol, 40)
}

/// Integral over `[a, b]` split at every interior breakpoint, so that kinks of
/// the integrand never fall inside a Kronrod panel.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    let pieces = cuts.len() + 1;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        total += adapt(&f, lo, hi, tol / pieces as f64, 40);
        lo = hi;
    }
    total
}

/// Golden-section search for the maximum of `f` on `[a, b]`. Returns `(x, f(x))`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 < f2 {
        (x2, f2)
    } else {
        (x1, f1)
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "root not bracketed on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= tol || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Monte Carlo estimate: sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, se: 0.0, samples: 0 }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut stats = RunningStats::default();
        for &x in xs {
            stats.push(x);
        }
        stats.estimate()
    }

    /// Whether `value` lies within `sigmas` standard errors of the mean.
    pub fn covers(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.se
    }
}

/// Welford accumulator with an order-deterministic merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        let se = if self.count < 2 { 0.0 } else { (self.variance() / self.count as f64).sqrt() };
        Estimate { mean: self.mean, se, samples: self.count }
    }
}

/// Independent ChaCha8 substream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const PATH_BATCH: u64 = 2048;

/// Parallel fold over `paths` indices with a reproducible result.
///
/// Work is cut into fixed batches of consecutive indices, each batch is folded
/// sequentially, and batch accumulators are merged in index order, so the
/// output is independent of the thread schedule.
pub fn fold_paths<S, I, F, M>(paths: u64, init: I, step: F, merge: M) -> S
where
    S: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, u64) + Sync,
    M: Fn(&mut S, S),
{
    let batches = paths.div_ceil(PATH_BATCH);
    let partials: Vec<S> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let end = ((b + 1) * PATH_BATCH).min(paths);
            for path in b * PATH_BATCH..end {
                step(&mut acc, path);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in partials {
        merge(&mut total, part);
    }
    total
}

/// Parallel map over `paths` indices preserving index order.
pub fn map_paths<T, F>(paths: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..paths).into_par_iter().map(|i| f(i)).collect()
}

/// Monte Carlo mean of `sample(rng)` with one draw per path; path `i` uses
/// substream `stream_base + i` of `seed`.
pub fn mc_estimate<F>(seed: u64, stream_base: u64, paths: u64, sample: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    fold_paths(
        paths,
        RunningStats::default,
        |acc, i| {
            let mut rng = substream(seed, stream_base.wrapping_add(i));
            acc.push(sample(&mut rng));
        },
        |acc, part| acc.merge(&part),
    )
    .estimate()
}

/// Geometric annuity factor `sum_{s=0}^{periods-1} beta^s`.
pub fn annuity(beta: f64, periods: usize) -> f64 {
    if periods == 0 {
        return 0.0;
    }
    if (1.0 - beta).abs() < 1e-15 {
        return periods as f64;
    }
    (1.0 - beta.powi(periods as i32)) / (1.0 - beta)
}
