//! Two-period model in which the auctioneer exerts costly effort `e` (cost
//! `e²/2`) that raises period-2 revenue by `e`.
//!
//! Under tokens, effort is pinned down by the auctioneer's stake `α` in the
//! period-2 token stock, and `σ` trades front-loaded sales against that stake.
//! Under dollars, outside investors can only be repaid through a contract
//! whose state-wise payment is capped by the misappropriation cost `c`.
//! Savings earn a gross return of one in this model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{bisect, golden_max};
use crate::valuation::{check_bidders, total_payment_distribution, PaymentLaw, ValuationDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPeriodConfig {
    pub beta: f64,
    /// Misappropriation cost.
    pub c: f64,
    pub dist: ValuationDistribution,
    pub n: usize,
}

impl TwoPeriodConfig {
    pub fn new(beta: f64, c: f64, dist: ValuationDistribution, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return domain(format!("beta must lie in (0, 1), got {beta}"));
        }
        if !(c.is_finite() && c >= 0.0) {
            return domain(format!("misappropriation cost must be finite and nonnegative, got {c}"));
        }
        check_bidders(n)?;
        Ok(Self { beta, c, dist, n })
    }

    pub fn with_cost(&self, c: f64) -> Result<Self> {
        Self::new(self.beta, c, self.dist.clone(), self.n)
    }

    pub fn payment_law(&self) -> Result<PaymentLaw> {
        total_payment_distribution(&self.dist, self.n)
    }

    /// Expected period payment `k`.
    pub fn k(&self) -> Result<f64> {
        Ok(self.payment_law()?.mean())
    }

    /// Smallest `σ` with `v̲(1+σ) >= k+1`, at which `α = 1` on every path.
    pub fn sigma_bar(&self) -> Result<f64> {
        let low = self.dist.low();
        if !(low > 0.0) {
            return Err(Error::Unsupported("the full-stake boundary needs a support bounded away from zero".into()));
        }
        Ok((self.k()? + 1.0) / low - 1.0)
    }
}

/// Auctioneer's share of the period-2 token stock:
/// `min{1, (√(k² + 4 B₁(1+σ)) − k)/2}`.
pub fn alpha_of(b1: f64, sigma: f64, k: f64) -> f64 {
    let x = b1 * (1.0 + sigma);
    if !(x > 0.0) {
        return 0.0;
    }
    if x >= k + 1.0 {
        return 1.0;
    }
    // (√(k²+4x) − k)/2 without cancellation for small x
    (2.0 * x / ((k * k + 4.0 * x).sqrt() + k)).min(1.0)
}

/// `α` by solving the period-1 clearing condition for speculative demand
/// `S₁` directly. Agrees with [`alpha_of`] for every `τ > -1`.
pub fn alpha_fixed_point_oracle(b1: f64, sigma: f64, tau: f64, k: f64) -> Result<f64> {
    if !(b1 >= 0.0 && sigma >= -1.0 && k >= 0.0) {
        return domain(format!("need B1 >= 0, sigma >= -1, k >= 0 (got {b1}, {sigma}, {k})"));
    }
    if !(tau > -1.0) {
        return domain(format!("tau must exceed -1 for a nonempty period-2 stock, got {tau}"));
    }
    let growth = 1.0 + tau;
    let alpha_at = |s: f64| {
        let held = (1.0 - s) * (1.0 + sigma) * growth;
        let total = held + s * growth;
        if total > 0.0 {
            held / total
        } else {
            0.0
        }
    };
    let target = b1 * (1.0 + sigma);
    if !(target > 0.0) {
        return Ok(0.0);
    }
    // (k + α)α − B₁(1+σ) falls from k + 1 − B₁(1+σ) at S = 0 to −B₁(1+σ) at S = 1
    let gap = |s: f64| {
        let a = alpha_at(s);
        (k + a) * a - target
    };
    if gap(0.0) <= 0.0 {
        return Ok(1.0);
    }
    let s = bisect(gap, 0.0, 1.0, 1e-15)?;
    Ok(alpha_at(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPeriod2 {
    pub effort: f64,
    pub expected_price: f64,
    /// Expected value of the tokens held by investors, `(1−α)(k+α)`.
    pub investor_value: f64,
}

pub fn token_equilibrium_period2(alpha: f64, k: f64, supply: f64) -> Result<TokenPeriod2> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    if !(supply > 0.0) {
        return domain(format!("period-2 supply must be positive, got {supply}"));
    }
    Ok(TokenPeriod2 { effort: alpha, expected_price: (k + alpha) / supply, investor_value: (1.0 - alpha) * (k + alpha) })
}

/// Marginal condition of `max_e α(k+e) − e²/2`, evaluated at `e`.
pub fn effort_foc_residual(alpha: f64, effort: f64) -> f64 {
    (alpha - effort).abs()
}

/// Period-1 expected utility `k + E[(1−α)(k+α)] + β(E[α(k+α)] − E[α²]/2)`.
pub fn token_auctioneer_utility(sigma: f64, config: &TwoPeriodConfig) -> Result<f64> {
    let law = config.payment_law()?;
    token_utility_with(&law, sigma, config.beta)
}

fn token_utility_with(law: &PaymentLaw, sigma: f64, beta: f64) -> Result<f64> {
    if !(sigma >= -1.0) {
        return domain(format!("sigma {sigma} is below -1"));
    }
    let k = law.mean();
    let kink = if sigma > -1.0 { vec![(k + 1.0) / (1.0 + sigma)] } else { vec![] };
    let integrand = |b: f64| {
        let a = alpha_of(b, sigma, k);
        (1.0 - a) * (k + a) + beta * (a * (k + a) - 0.5 * a * a)
    };
    Ok(k + law.expect(integrand, &kink))
}

fn expected_alpha(law: &PaymentLaw, sigma: f64) -> f64 {
    let k = law.mean();
    let kink = if sigma > -1.0 { vec![(k + 1.0) / (1.0 + sigma)] } else { vec![] };
    law.expect(|b| alpha_of(b, sigma, k), &kink)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaOptimum {
    pub sigma: f64,
    pub utility: f64,
    pub expected_alpha: f64,
    pub sigma_bar: f64,
    pub boundary_utility: f64,
    /// Set when the objective is flat and the boundary was returned.
    pub diagnostic: Option<String>,
}

impl SigmaOptimum {
    pub fn is_interior(&self) -> bool {
        self.expected_alpha < 1.0 && self.utility > self.boundary_utility
    }
}

const SIGMA_GRID: usize = 401;

/// Maximizes token utility over `σ ∈ [−1, σ̄]`.
pub fn optimize_sigma(config: &TwoPeriodConfig) -> Result<SigmaOptimum> {
    let law = config.payment_law()?;
    let upper = config.sigma_bar()?;
    let beta = config.beta;
    let objective = |s: f64| token_utility_with(&law, s, beta).expect("sigma stays in range");
    let step = (upper + 1.0) / (SIGMA_GRID - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..SIGMA_GRID)
        .into_par_iter()
        .map(|i| {
            let s = if i == SIGMA_GRID - 1 { upper } else { -1.0 + i as f64 * step };
            (s, objective(s))
        })
        .collect();
    let boundary_utility = grid[SIGMA_GRID - 1].1;
    let (lo_val, hi_val) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, u)| (lo.min(*u), hi.max(*u)));
    if hi_val - lo_val < 1e-12 {
        return Ok(SigmaOptimum {
            sigma: upper,
            utility: boundary_utility,
            expected_alpha: expected_alpha(&law, upper),
            sigma_bar: upper,
            boundary_utility,
            diagnostic: Some("objective is flat in sigma; returning the full-stake boundary".into()),
        });
    }
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |b, (i, (_, u))| if *u > grid[b].1 { i } else { b });
    let lo = grid[best.saturating_sub(1)].0;
    let hi = grid[(best + 1).min(SIGMA_GRID - 1)].0;
    let (mut sigma, mut utility) = golden_max(objective, lo, hi, 1e-11);
    if grid[best].1 > utility {
        (sigma, utility) = grid[best];
    }
    Ok(SigmaOptimum {
        sigma,
        utility,
        expected_alpha: expected_alpha(&law, sigma),
        sigma_bar: upper,
        boundary_utility,
        diagnostic: None,
    })
}

/// Period-2 payment to investors: `base`, plus `penalty` when period-2
/// revenue falls strictly below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub y1: f64,
    pub base: f64,
    pub penalty: f64,
    pub threshold: f64,
}

impl ContractSpec {
    /// A contract priced so investors break even given the effort it induces.
    pub fn fair(config: &TwoPeriodConfig, base: f64, penalty: f64, threshold: f64) -> Result<Self> {
        let draft = Self { y1: 0.0, base, penalty, threshold };
        check_contract(config, &draft)?;
        let law = config.payment_law()?;
        let e = best_response_effort(&law, &draft);
        Ok(Self { y1: expected_repayment(&law, &draft, e), ..draft })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DollarOutcome {
    pub effort: f64,
    pub utility: f64,
    /// `E[y₂] − y₁`; zero for a fairly priced contract.
    pub investor_payoff: f64,
}

fn check_contract(config: &TwoPeriodConfig, contract: &ContractSpec) -> Result<()> {
    let ContractSpec { y1, base, penalty, threshold } = *contract;
    if ![y1, base, penalty, threshold].iter().all(|x| x.is_finite()) {
        return domain("contract terms must be finite");
    }
    if base < 0.0 || penalty < 0.0 {
        return domain(format!("contract payments must be nonnegative (base {base}, penalty {penalty})"));
    }
    if base + penalty > config.c + 1e-12 {
        return domain(format!("contract pays up to {} but the misappropriation cost caps payments at {}", base + penalty, config.c));
    }
    let low = config.dist.low();
    if threshold < low - 1e-12 || threshold > low + 1.0 + 1e-12 {
        return domain(format!("threshold {threshold} outside [{low}, {}]", low + 1.0));
    }
    Ok(())
}

fn penalty_probability(law: &PaymentLaw, threshold: f64, effort: f64) -> f64 {
    law.cdf_strict(threshold - effort)
}

fn expected_repayment(law: &PaymentLaw, contract: &ContractSpec, effort: f64) -> f64 {
    contract.base + contract.penalty * penalty_probability(law, contract.threshold, effort)
}

/// Effort maximizing `e − e²/2 − penalty·P(B₂ + e < threshold)`; ties go to
/// the higher effort.
fn best_response_effort(law: &PaymentLaw, contract: &ContractSpec) -> f64 {
    let penalty = contract.penalty;
    if penalty == 0.0 {
        return 1.0;
    }
    let objective = |e: f64| e - 0.5 * e * e - penalty * penalty_probability(law, contract.threshold, e);
    let e_max = 1.0 + (1.0 + 2.0 * penalty).sqrt();
    let mut candidates: Vec<f64> = (0..=256).map(|i| e_max * i as f64 / 256.0).collect();
    candidates.push(1.0);
    let (lo, hi) = (law.distribution().low(), law.distribution().high());
    match law.pmf() {
        Some(pmf) => candidates.extend(pmf.iter().map(|(b, _)| contract.threshold - b)),
        None => candidates.extend([contract.threshold - lo, contract.threshold - hi]),
    }
    let candidates: Vec<f64> = candidates.into_iter().filter(|e| (0.0..=e_max).contains(e)).collect();
    let pick = |best: (f64, f64), e: f64| {
        let v = objective(e);
        if v > best.1 + 1e-14 || (v >= best.1 - 1e-14 && e > best.0) {
            (e, v)
        } else {
            best
        }
    };
    let mut best = candidates.iter().fold((0.0, objective(0.0)), |b, &e| pick(b, e));
    if law.pmf().is_none() {
        // the objective is smooth between the support kinks; polish around the best point
        let width = e_max / 256.0;
        let (x, _) = golden_max(objective, (best.0 - width).max(0.0), (best.0 + width).min(e_max), 1e-12);
        best = pick(best, x);
    }
    best.0
}

/// Effort, utility, and investor payoff for an optional contract.
pub fn dollar_regime(config: &TwoPeriodConfig, contract: Option<&ContractSpec>) -> Result<DollarOutcome> {
    let law = config.payment_law()?;
    let k = law.mean();
    let beta = config.beta;
    let Some(contract) = contract else {
        return Ok(DollarOutcome { effort: 1.0, utility: k + beta * (k + 0.5), investor_payoff: 0.0 });
    };
    check_contract(config, contract)?;
    let e = best_response_effort(&law, contract);
    let repay = expected_repayment(&law, contract, e);
    if repay > k + e + 1e-12 {
        return domain(format!("expected repayment {repay} exceeds expected period-2 revenue {}", k + e));
    }
    Ok(DollarOutcome {
        effort: e,
        utility: k + contract.y1 + beta * (k + e - repay - 0.5 * e * e),
        investor_payoff: repay - contract.y1,
    })
}

/// Best fairly priced contract in the (base, penalty, threshold) family.
pub fn optimize_contract(config: &TwoPeriodConfig) -> Result<(ContractSpec, DollarOutcome)> {
    let k = config.k()?;
    let low = config.dist.low();
    let c = config.c;
    let base_top = c.min(k + 2.0);
    let mut terms = Vec::new();
    for i in 0..=20 {
        let base = base_top * i as f64 / 20.0;
        for j in 0..=5 {
            let penalty = (c - base).max(0.0) * j as f64 / 5.0;
            for m in 0..=5 {
                terms.push((base, penalty, low + m as f64 / 5.0));
            }
        }
    }
    // full pledge of expected revenue at first-best effort
    terms.push((c.min(k + 1.0), 0.0, low + 1.0));
    let evaluated: Vec<Option<(ContractSpec, DollarOutcome)>> = terms
        .par_iter()
        .map(|&(base, penalty, threshold)| {
            let contract = ContractSpec::fair(config, base, penalty.min(c - base).max(0.0), threshold).ok()?;
            let outcome = dollar_regime(config, Some(&contract)).ok()?;
            Some((contract, outcome))
        })
        .collect();
    evaluated
        .into_iter()
        .flatten()
        .fold(None, |best: Option<(ContractSpec, DollarOutcome)>, cand| match best {
            Some(b) if b.1.utility >= cand.1.utility => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::Numerical("no feasible contract in the search family".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub c: f64,
    pub dollar_utility: f64,
    pub token_utility: f64,
    pub sigma_star: f64,
    pub expected_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub rows: Vec<ComparisonRow>,
    /// Smallest grid `c` at which dollars weakly beat tokens.
    pub crossing: Option<f64>,
    pub sigma: SigmaOptimum,
}

impl RegimeComparison {
    pub fn tokens_preferred_at_zero(&self) -> bool {
        self.rows.first().is_some_and(|r| r.c == 0.0 && r.token_utility > r.dollar_utility)
    }

    pub fn dollars_preferred_at_top(&self) -> bool {
        self.rows.last().is_some_and(|r| r.dollar_utility > r.token_utility)
    }

    pub fn dollar_utility_nondecreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].dollar_utility >= w[0].dollar_utility - 1e-12)
    }

    pub fn token_utility_constant(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].token_utility == w[0].token_utility)
    }
}

/// Sweeps the misappropriation cost. The contract search covers one
/// parametric family, so the dollar column is a lower bound on what richer
/// contracts could achieve.
pub fn compare_regimes(config: &TwoPeriodConfig, c_grid: &[f64]) -> Result<RegimeComparison> {
    if c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return domain("c grid entries must be finite and nonnegative");
    }
    if c_grid.windows(2).any(|w| w[1] < w[0]) {
        return domain("c grid must be sorted ascending");
    }
    let sigma = optimize_sigma(config)?;
    let dollars = c_grid
        .par_iter()
        .map(|&c| optimize_contract(&config.with_cost(c)?).map(|(_, o)| o.utility))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ComparisonRow> = c_grid
        .iter()
        .zip(dollars)
        .map(|(&c, dollar_utility)| ComparisonRow {
            c,
            dollar_utility,
            token_utility: sigma.utility,
            sigma_star: sigma.sigma,
            expected_alpha: sigma.expected_alpha,
        })
        .collect();
    let crossing = rows.iter().find(|r| r.dollar_utility >= r.token_utility).map(|r| r.c);
    Ok(RegimeComparison { rows, crossing, sigma })
}
