//! Per-period private valuations and the order statistics that drive
//! revenue: the expected second-highest value `k`, the per-bidder surplus
//! `g`, and the law of the period's total payment under a second-price
//! auction with reserve at the bottom of the support.

use rand::Rng;

use crate::error::{domain, Result};
use crate::numerics::{integrate, integrate_piecewise, QUAD_TOL};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform { low: f64, high: f64 },
    Discrete { values: Vec<f64>, cumulative: Vec<f64>, probs: Vec<f64> },
}

/// The common law `F` from which every bidder draws an i.i.d. valuation each period.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationDistribution {
    shape: Shape,
}

impl ValuationDistribution {
    /// Uniform law on `[low, high]`; `low == high` is a point mass.
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite()) || low < 0.0 || high < low {
            return domain(format!("uniform support [{low}, {high}] must satisfy 0 <= low <= high"));
        }
        Ok(Self { shape: Shape::Uniform { low, high } })
    }

    /// Finite law from `(value, probability)` atoms. Equal values are merged and
    /// zero-probability atoms dropped.
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return domain("discrete distribution needs at least one atom");
        }
        let mut sorted = Vec::with_capacity(atoms.len());
        for &(v, p) in atoms {
            if !v.is_finite() || v < 0.0 {
                return domain(format!("atom value {v} must be finite and nonnegative"));
            }
            if !p.is_finite() || p < 0.0 {
                return domain(format!("atom probability {p} must be nonnegative"));
            }
            if p > 0.0 {
                sorted.push((v, p));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return domain(format!("atom probabilities sum to {total}, expected 1"));
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (v, p) in sorted {
            match values.last() {
                Some(&last) if last == v => *probs.last_mut().unwrap() += p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p / total;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        let probs = probs.iter().map(|p| p / total).collect();
        Ok(Self { shape: Shape::Discrete { values, cumulative, probs } })
    }

    /// Single atom at `value`.
    pub fn point(value: f64) -> Result<Self> {
        Self::discrete(&[(value, 1.0)])
    }

    /// Lower end of the support, `v̲`.
    pub fn low(&self) -> f64 {
        match &self.shape {
            Shape::Uniform { low, .. } => *low,
            Shape::Discrete { values, .. } => values[0],
        }
    }

    /// Upper end of the support, `v̄`.
    pub fn high(&self) -> f64 {
        match &self.shape {
            Shape::Uniform { high, .. } => *high,
            Shape::Discrete { values, .. } => *values.last().unwrap(),
        }
    }

    /// True for a uniform law with a nondegenerate support.
    pub fn is_atomless(&self) -> bool {
        matches!(self.shape, Shape::Uniform { low, high } if high > low)
    }

    /// Atoms of a finite law (a degenerate uniform counts as one atom).
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Uniform { low, high } if high == low => Some(vec![(*low, 1.0)]),
            Shape::Uniform { .. } => None,
            Shape::Discrete { values, probs, .. } => Some(values.iter().copied().zip(probs.iter().copied()).collect()),
        }
    }

    /// `F(x) = P(V <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Uniform { low, high } => {
                if x < *low {
                    0.0
                } else if x >= *high {
                    1.0
                } else {
                    (x - low) / (high - low)
                }
            }
            Shape::Discrete { values, cumulative, .. } => {
                let idx = values.partition_point(|&v| v <= x);
                if idx == 0 {
                    0.0
                } else {
                    cumulative[idx - 1]
                }
            }
        }
    }

    /// `P(V < x)`.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Uniform { .. } => self.cdf(x),
            Shape::Discrete { values, cumulative, .. } => {
                let idx = values.partition_point(|&v| v < x);
                if idx == 0 {
                    0.0
                } else {
                    cumulative[idx - 1]
                }
            }
        }
    }

    /// Density of an atomless law; zero outside the support.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self.shape {
            Shape::Uniform { low, high } if high > low => Some(if x < low || x > high { 0.0 } else { 1.0 / (high - low) }),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match &self.shape {
            Shape::Uniform { low, high } => low + (high - low) * u,
            Shape::Discrete { values, cumulative, .. } => {
                let idx = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
                values[idx]
            }
        }
    }
}

/// Draws `n` i.i.d. valuations.
pub fn sample_valuations<R: Rng + ?Sized>(dist: &ValuationDistribution, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_bidders(n)?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

pub(crate) fn check_bidders(n: usize) -> Result<()> {
    if n < 2 {
        return domain(format!("the model needs at least two bidders, got {n}"));
    }
    Ok(())
}

/// Second-highest entry of `values` (ties count twice).
pub fn second_highest(values: &[f64]) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    second
}

/// Law of the period's total payment `B`, the second-highest of `n` valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentLaw {
    dist: ValuationDistribution,
    n: usize,
    pmf: Option<Vec<(f64, f64)>>,
}

impl PaymentLaw {
    pub fn distribution(&self) -> &ValuationDistribution {
        &self.dist
    }

    pub fn bidders(&self) -> usize {
        self.n
    }

    /// Exact probability mass function for finite valuation laws.
    pub fn pmf(&self) -> Option<&[(f64, f64)]> {
        self.pmf.as_deref()
    }

    fn order_cdf(&self, f: f64) -> f64 {
        let n = self.n as i32;
        f.powi(n) + self.n as f64 * f.powi(n - 1) * (1.0 - f)
    }

    /// `P(B <= x)`: at most one valuation exceeds `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.order_cdf(self.dist.cdf(x))
    }

    /// `P(B < x)`.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        self.order_cdf(self.dist.cdf_strict(x))
    }

    /// Density of `B` for atomless laws: `n(n-1) F^(n-2) (1-F) f`.
    pub fn density(&self, x: f64) -> Option<f64> {
        let f = self.dist.pdf(x)?;
        let big_f = self.dist.cdf(x);
        let n = self.n as f64;
        Some(n * (n - 1.0) * big_f.powi(self.n as i32 - 2) * (1.0 - big_f) * f)
    }

    /// `E[h(B)]`; `kinks` lists points where `h` is not smooth.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H, kinks: &[f64]) -> f64 {
        match &self.pmf {
            Some(pmf) => pmf.iter().map(|&(b, p)| p * h(b)).sum(),
            None => {
                let (lo, hi) = (self.dist.low(), self.dist.high());
                integrate_piecewise(|x| h(x) * self.density(x).unwrap_or(0.0), lo, hi, kinks, QUAD_TOL)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.expect(|b| b, &[])
    }

    /// Draws `B` by sampling a full valuation profile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut first = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for _ in 0..self.n {
            let v = self.dist.sample(rng);
            if v > first {
                second = first;
                first = v;
            } else if v > second {
                second = v;
            }
        }
        second
    }
}

/// Law of the period payment total under the second-price format.
pub fn total_payment_distribution(dist: &ValuationDistribution, n: usize) -> Result<PaymentLaw> {
    check_bidders(n)?;
    let mut law = PaymentLaw { dist: dist.clone(), n, pmf: None };
    if let Some(atoms) = dist.atoms() {
        let mut pmf = Vec::with_capacity(atoms.len());
        let mut prev = 0.0;
        for &(v, _) in &atoms {
            let g = law.cdf(v);
            pmf.push((v, g - prev));
            prev = g;
        }
        law.pmf = Some(pmf);
    }
    Ok(law)
}

/// `k = E[v_(n-1)]`, the expected second-highest valuation and hence the
/// expected per-period payment.
pub fn expected_second_highest(dist: &ValuationDistribution, n: usize) -> Result<f64> {
    Ok(total_payment_distribution(dist, n)?.mean())
}

/// `E[max_i v_i]`.
pub fn expected_highest(dist: &ValuationDistribution, n: usize) -> Result<f64> {
    check_bidders(n)?;
    if let Some(atoms) = dist.atoms() {
        let mut prev = 0.0;
        let mut mean = 0.0;
        for (v, _) in atoms {
            let g = dist.cdf(v).powi(n as i32);
            mean += v * (g - prev);
            prev = g;
        }
        return Ok(mean);
    }
    let (lo, hi) = (dist.low(), dist.high());
    let density = |x: f64| n as f64 * dist.cdf(x).powi(n as i32 - 1) * dist.pdf(x).unwrap_or(0.0);
    Ok(integrate(|x| x * density(x), lo, hi, QUAD_TOL))
}

/// `g = E[max{v_i - v_(n-1), 0}]`, each bidder's ex-ante per-period surplus.
/// Only the winner earns surplus, so `n g = E[v_max] - k`.
pub fn expected_bidder_surplus(dist: &ValuationDistribution, n: usize) -> Result<f64> {
    let top = expected_highest(dist, n)?;
    let k = expected_second_highest(dist, n)?;
    Ok((top - k) / n as f64)
}

/// Whether `v f(v) >= 1 - F(v)` across the support, the condition under which
/// a reserve at `v̲` maximizes revenue.
///
/// Atomless laws are checked on a 10 001-point grid. Finite laws use the
/// discrete virtual value `x_j - (x_{j+1} - x_j)(1 - F(x_j)) / p_j >= 0`.
pub fn regularity_check(dist: &ValuationDistribution) -> bool {
    const GRID: usize = 10_000;
    match &dist.shape {
        Shape::Uniform { low, high } if high > low => (0..=GRID).all(|i| {
            let v = low + (high - low) * i as f64 / GRID as f64;
            v * dist.pdf(v).unwrap_or(0.0) >= 1.0 - dist.cdf(v) - 1e-12
        }),
        Shape::Uniform { .. } => true,
        Shape::Discrete { values, cumulative, probs } => (0..values.len().saturating_sub(1)).all(|j| {
            let gap = values[j + 1] - values[j];
            values[j] * probs[j] >= gap * (1.0 - cumulative[j]) - 1e-12
        }),
    }
}
