//! Present values and the auctioneer's consumption problem.
//!
//! The auctioneer saves and borrows at gross return `R = 1/β`. With `βR = 1`
//! the unconstrained optimum is flat consumption equal to wealth divided by
//! the annuity factor, which is what [`optimal_riskfree_savings`] returns.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::MonetaryPolicy;
use crate::numerics::{annuity, fold_paths, Estimate, RunningStats};
use crate::simulation::Simulator;
use crate::solver::{solve_backward, SolveMethod};
use crate::valuation::{expected_second_highest, ValuationDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Preference {
    RiskNeutral,
    Log,
    Crra { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    pub preference: Preference,
    /// Initial assets `w_1`.
    pub w1: f64,
    pub beta: f64,
}

impl UtilityModel {
    pub fn new(preference: Preference, w1: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return domain(format!("beta must lie in (0, 1), got {beta}"));
        }
        if !(w1.is_finite() && w1 >= 0.0) {
            return domain(format!("w1 must be finite and nonnegative, got {w1}"));
        }
        if let Preference::Crra { gamma } = preference {
            if !(gamma.is_finite() && gamma > 0.0) || gamma == 1.0 {
                return domain(format!("crra gamma must be positive and different from 1 (use log), got {gamma}"));
            }
        }
        Ok(Self { preference, w1, beta })
    }

    pub fn risk_neutral(w1: f64, beta: f64) -> Result<Self> {
        Self::new(Preference::RiskNeutral, w1, beta)
    }

    pub fn log(w1: f64, beta: f64) -> Result<Self> {
        Self::new(Preference::Log, w1, beta)
    }

    /// Gross return on savings, `1/β`.
    pub fn gross_return(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn is_strictly_concave(&self) -> bool {
        !matches!(self.preference, Preference::RiskNeutral)
    }

    /// Period utility. Returns `-inf` at nonpositive consumption where the
    /// preference is unbounded below.
    pub fn utility(&self, c: f64) -> f64 {
        match self.preference {
            Preference::RiskNeutral => c,
            Preference::Log => {
                if c > 0.0 {
                    c.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Preference::Crra { gamma } => {
                if c > 0.0 {
                    c.powf(1.0 - gamma) / (1.0 - gamma)
                } else if gamma > 1.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    pub fn marginal_utility(&self, c: f64) -> f64 {
        match self.preference {
            Preference::RiskNeutral => 1.0,
            Preference::Log => 1.0 / c,
            Preference::Crra { gamma } => c.powf(-gamma),
        }
    }

    /// `Σ_t β^{t-1} U(c_t)`.
    pub fn lifetime_utility(&self, consumption: &[f64]) -> f64 {
        let mut factor = 1.0;
        let mut total = 0.0;
        for &c in consumption {
            total += factor * self.utility(c);
            factor *= self.beta;
        }
        total
    }
}

/// `Σ_t β^{t-1} x_t`.
pub fn pdv(stream: &[f64], beta: f64) -> f64 {
    let mut factor = 1.0;
    let mut total = 0.0;
    for &x in stream {
        total += factor * x;
        factor *= beta;
    }
    total
}

/// Expected dollar value at the start of period `t` of the auctioneer's
/// remaining revenue under tokens: `(1-β^{T-t+1})/(1-β) k - p^e_t (M_t - A_t)`.
pub fn prop1_value(k: f64, horizon: usize, beta: f64, t: usize, expected_price: f64, supply: f64, auctioneer: f64) -> Result<f64> {
    if t == 0 || t > horizon {
        return domain(format!("period {t} outside 1..={horizon}"));
    }
    if !(auctioneer >= 0.0 && supply >= auctioneer - 1e-12) {
        return domain(format!("need M_t >= A_t >= 0, got M_t={supply}, A_t={auctioneer}"));
    }
    Ok(annuity(beta, horizon - t + 1) * k - expected_price * (supply - auctioneer))
}

/// Solution of the deterministic savings problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsPlan {
    /// `w_2, …, w_T`; negative entries are borrowing.
    pub assets: Vec<f64>,
    pub consumption: Vec<f64>,
    pub utility: f64,
    /// `|U'(c_t) - βR U'(c_{t+1})|` for `t = 1..T-1`.
    pub euler_residuals: Vec<f64>,
}

impl SavingsPlan {
    pub fn max_euler_residual(&self) -> f64 {
        self.euler_residuals.iter().fold(0.0, |m, r| m.max(*r))
    }

    pub fn borrows(&self) -> bool {
        self.assets.iter().any(|w| *w < -1e-12)
    }
}

/// Optimal consumption for a known income stream with unrestricted
/// borrowing at `R = 1/β` and `w_{T+1} = 0`. Risk-neutral preferences are
/// indifferent among plans; the returned plan consumes income as it arrives.
pub fn optimal_riskfree_savings(income: &[f64], model: &UtilityModel) -> Result<SavingsPlan> {
    if income.is_empty() {
        return domain("income stream must cover at least one period");
    }
    if let Some(y) = income.iter().find(|y| !y.is_finite()) {
        return domain(format!("income {y} is not finite"));
    }
    let horizon = income.len();
    let beta = model.beta;
    let consumption = if model.is_strictly_concave() {
        let wealth = model.w1 + pdv(income, beta);
        if !(wealth > 0.0) {
            return Err(Error::Domain(format!("lifetime wealth {wealth} must be positive")));
        }
        vec![wealth / annuity(beta, horizon); horizon]
    } else {
        let mut c = income.to_vec();
        c[0] += model.w1;
        c
    };
    let assets = asset_path(model, income, &consumption);
    let euler_residuals = consumption
        .windows(2)
        .map(|w| (model.marginal_utility(w[0]) - beta * model.gross_return() * model.marginal_utility(w[1])).abs())
        .collect();
    Ok(SavingsPlan { utility: model.lifetime_utility(&consumption), assets, consumption, euler_residuals })
}

/// `w_{t+1} = R(w_t + y_t - c_t)` for `t = 1..T-1`.
fn asset_path(model: &UtilityModel, income: &[f64], consumption: &[f64]) -> Vec<f64> {
    let mut w = model.w1;
    let mut out = Vec::with_capacity(income.len().saturating_sub(1));
    for t in 0..income.len().saturating_sub(1) {
        w = model.gross_return() * (w + income[t] - consumption[t]);
        out.push(w);
    }
    out
}

/// Feasible savings rules for dollar revenue when the auctioneer cannot borrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DollarRule {
    /// Consume each period's revenue plus the annuity value of `w_1`.
    ConsumeIncome,
    /// Smooth cash on hand plus expected future revenue `k` per period,
    /// capped at cash on hand.
    SmoothToExpected,
}

/// Consumption under a no-borrowing rule for dollar revenue `income` with
/// expected per-period revenue `k`.
pub fn dollar_consumption(income: &[f64], k: f64, model: &UtilityModel, rule: DollarRule) -> Vec<f64> {
    let horizon = income.len();
    let beta = model.beta;
    match rule {
        DollarRule::ConsumeIncome => {
            let extra = model.w1 / annuity(beta, horizon);
            income.iter().map(|y| y + extra).collect()
        }
        DollarRule::SmoothToExpected => {
            let mut w = model.w1;
            let mut out = Vec::with_capacity(horizon);
            for (t, y) in income.iter().enumerate() {
                let remaining = horizon - t;
                let cash = w + y;
                let expected_future = beta * annuity(beta, remaining - 1) * k;
                let c = ((cash + expected_future) / annuity(beta, remaining)).min(cash);
                out.push(c);
                w = model.gross_return() * (cash - c);
            }
            out
        }
    }
}

fn expected_revenue_per_period(dist: &ValuationDistribution, n: usize, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return domain("horizon must be at least one period");
    }
    expected_second_highest(dist, n)
}

/// Expected utility of smoothing period-1 revenue `B_1` plus a certain `k`
/// in every later period. `B_1` on path `i` is the same draw the simulator
/// makes in period 1 of path `i` under `seed`.
pub fn lemma1_upper_bound(
    dist: &ValuationDistribution,
    n: usize,
    horizon: usize,
    model: &UtilityModel,
    paths: u64,
    seed: u64,
) -> Result<Estimate> {
    let k = expected_revenue_per_period(dist, n, horizon)?;
    let sim = Simulator::dollars(dist, n, 1)?;
    let stats = fold_paths(
        paths,
        RunningStats::default,
        |acc, i| {
            let b1 = sim.path(seed, i).periods[0].total_payment;
            acc.push(bound_utility(b1, k, horizon, model));
        },
        |acc, part| acc.merge(&part),
    );
    Ok(stats.estimate())
}

fn bound_utility(b1: f64, k: f64, horizon: usize, model: &UtilityModel) -> f64 {
    let mut income = vec![k; horizon];
    income[0] = b1;
    smoothed_utility(&income, model)
}

fn smoothed_utility(income: &[f64], model: &UtilityModel) -> f64 {
    match optimal_riskfree_savings(income, model) {
        Ok(plan) => plan.utility,
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub rule: DollarRule,
    pub paths: u64,
    /// Smoothed utility of the simulated burn policy.
    pub token_burn: Estimate,
    pub lemma1_bound: Estimate,
    /// Dollar-auction utility under `rule`.
    pub dollar: Estimate,
    /// Paired difference `token_burn - dollar`.
    pub advantage: Estimate,
    /// Paired difference `token_burn - lemma1_bound`.
    pub burn_minus_bound: Estimate,
    /// Whether any burn path needed to borrow to smooth.
    pub burn_borrows: bool,
}

impl CorollaryReport {
    /// The burn policy beats dollars by more than `sigmas` standard errors
    /// (`strict`), or is at least within `sigmas` standard errors of them.
    pub fn holds(&self, strict: bool, sigmas: f64) -> bool {
        let se = self.advantage.se;
        if strict {
            self.advantage.mean > sigmas * se
        } else {
            self.advantage.mean >= -sigmas * se - 1e-12
        }
    }
}

/// Compares the token auction with a full burn against the dollar auction
/// on common valuation paths.
pub fn corollary_comparison(
    dist: &ValuationDistribution,
    n: usize,
    horizon: usize,
    model: &UtilityModel,
    rule: DollarRule,
    paths: u64,
    seed: u64,
) -> Result<CorollaryReport> {
    let k = expected_revenue_per_period(dist, n, horizon)?;
    let policy = MonetaryPolicy::burn(horizon)?;
    let profile = solve_backward(dist, n, horizon, model.beta, &policy, SolveMethod::Quadrature)?;
    let tokens = Simulator::tokens(&profile, dist, n, horizon, 1.0)?;
    let dollars = Simulator::dollars(dist, n, horizon)?;

    #[derive(Default)]
    struct Acc {
        burn: RunningStats,
        bound: RunningStats,
        dollar: RunningStats,
        advantage: RunningStats,
        gap: RunningStats,
        borrows: bool,
    }
    let acc = fold_paths(
        paths,
        Acc::default,
        |acc, i| {
            let tok = tokens.path(seed, i);
            let dol = dollars.path(seed, i);
            let burn_income = tok.revenues();
            let (burn, borrows) = match optimal_riskfree_savings(&burn_income, model) {
                Ok(plan) => (plan.utility, plan.borrows()),
                Err(_) => (f64::NEG_INFINITY, false),
            };
            let bound = bound_utility(dol.periods[0].total_payment, k, horizon, model);
            let dollar = model.lifetime_utility(&dollar_consumption(&dol.revenues(), k, model, rule));
            acc.burn.push(burn);
            acc.bound.push(bound);
            acc.dollar.push(dollar);
            acc.advantage.push(burn - dollar);
            acc.gap.push(burn - bound);
            acc.borrows |= borrows;
        },
        |acc, part| {
            acc.burn.merge(&part.burn);
            acc.bound.merge(&part.bound);
            acc.dollar.merge(&part.dollar);
            acc.advantage.merge(&part.advantage);
            acc.gap.merge(&part.gap);
            acc.borrows |= part.borrows;
        },
    );
    Ok(CorollaryReport {
        rule,
        paths,
        token_burn: acc.burn.estimate(),
        lemma1_bound: acc.bound.estimate(),
        dollar: acc.dollar.estimate(),
        advantage: acc.advantage.estimate(),
        burn_minus_bound: acc.gap.estimate(),
        burn_borrows: acc.borrows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::golden_max;

    #[test]
    fn pdv_examples() {
        assert!((pdv(&[1.0 / 3.0; 3], 0.9) - 0.903_333_333_333_333_3).abs() < 1e-15);
        assert_eq!(pdv(&[2.5, 0.0, 0.0], 0.9), 2.5);
        assert_eq!(pdv(&[0.7], 0.3), 0.7);
    }

    #[test]
    fn prop1_examples() {
        let k = 1.0 / 3.0;
        let full = prop1_value(k, 2, 0.9, 1, 0.4, 1.0, 1.0).unwrap();
        assert!((full - 1.9 * k).abs() < 1e-15);
        let pe = 1.9 * k;
        assert!(prop1_value(k, 2, 0.9, 1, pe, 1.0, 0.0).unwrap().abs() < 1e-15);
        let v = prop1_value(k, 2, 0.9, 1, 0.1, 1.0, 0.0).unwrap();
        assert!((v - (0.633_333_333_333_333_3 - 0.1)).abs() < 1e-15);
        assert!(prop1_value(k, 2, 0.9, 3, 0.1, 1.0, 0.0).is_err());
        assert!(prop1_value(k, 2, 0.9, 1, 0.1, 0.5, 1.0).is_err());
    }

    #[test]
    fn log_smoothing_example() {
        let m = UtilityModel::log(0.0, 0.9).unwrap();
        let plan = optimal_riskfree_savings(&[1.0, 1.0 / 3.0], &m).unwrap();
        for c in &plan.consumption {
            assert!((c - 1.3 / 1.9).abs() < 1e-14);
        }
        assert!(plan.max_euler_residual() < 1e-8);
        // w_2 = R (1 - c)
        assert!((plan.assets[0] - (1.0 - 1.3 / 1.9) / 0.9).abs() < 1e-14);
    }

    #[test]
    fn smoothing_matches_brute_force() {
        let m = UtilityModel::new(Preference::Crra { gamma: 2.5 }, 0.4, 0.85).unwrap();
        let income = [0.2, 1.1];
        let r = m.gross_return();
        let (c1, best) = golden_max(
            |c1| m.utility(c1) + m.beta * m.utility(r * (m.w1 + income[0] - c1) + income[1]),
            1e-6,
            m.w1 + income[0] + income[1] / r - 1e-6,
            1e-12,
        );
        let plan = optimal_riskfree_savings(&income, &m).unwrap();
        assert!((plan.consumption[0] - c1).abs() < 1e-6);
        assert!((plan.utility - best).abs() < 1e-10);
    }

    #[test]
    fn risk_neutral_and_single_period() {
        let m = UtilityModel::risk_neutral(0.5, 0.9).unwrap();
        let plan = optimal_riskfree_savings(&[0.2, 0.3, 0.4], &m).unwrap();
        assert_eq!(plan.consumption, vec![0.7, 0.3, 0.4]);
        assert!((plan.utility - (0.5 + pdv(&[0.2, 0.3, 0.4], 0.9))).abs() < 1e-15);
        let log = UtilityModel::log(0.25, 0.9).unwrap();
        let plan = optimal_riskfree_savings(&[0.5], &log).unwrap();
        assert_eq!(plan.consumption, vec![0.75]);
        assert!(plan.assets.is_empty());
    }

    #[test]
    fn infeasible_wealth_is_rejected() {
        let m = UtilityModel::log(0.0, 0.9).unwrap();
        assert!(optimal_riskfree_savings(&[0.0, 0.0], &m).is_err());
        assert!(UtilityModel::new(Preference::Crra { gamma: 1.0 }, 0.0, 0.9).is_err());
        assert!(UtilityModel::log(0.0, 1.0).is_err());
    }

    #[test]
    fn dollar_rules_never_borrow() {
        let m = UtilityModel::log(0.3, 0.9).unwrap();
        let income = [0.1, 0.9, 0.05, 0.6];
        for rule in [DollarRule::ConsumeIncome, DollarRule::SmoothToExpected] {
            let c = dollar_consumption(&income, 0.4, &m, rule);
            let assets = asset_path(&m, &income, &c);
            assert!(assets.iter().all(|w| *w >= -1e-12), "{rule:?}: {assets:?}");
            // everything is consumed by the end
            let last = assets.last().copied().unwrap_or(m.w1);
            assert!((last + income[3] - c[3]).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_examples() {
        let d = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        let rn = UtilityModel::risk_neutral(0.5, 0.9).unwrap();
        let est = lemma1_upper_bound(&d, 2, 3, &rn, 100_000, 2).unwrap();
        assert!(est.covers(0.5 + 2.71 / 3.0, 3.0), "{est:?}");

        let point = ValuationDistribution::point(0.6).unwrap();
        let log = UtilityModel::log(0.0, 0.9).unwrap();
        let est = lemma1_upper_bound(&point, 2, 2, &log, 1_000, 2).unwrap();
        let c: f64 = 0.6;
        assert!((est.mean - 1.9 * c.ln()).abs() < 1e-12);
    }

    #[test]
    fn corollary_single_period_is_a_tie() {
        let d = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        let log = UtilityModel::log(1.0, 0.9).unwrap();
        let rep = corollary_comparison(&d, 2, 1, &log, DollarRule::SmoothToExpected, 2_000, 3).unwrap();
        assert!(rep.advantage.mean.abs() < 1e-12);
        assert!(rep.burn_minus_bound.mean.abs() < 1e-12);
    }

    #[test]
    fn corollary_strict_under_log() {
        let d = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        let log = UtilityModel::log(1.0, 0.9).unwrap();
        for rule in [DollarRule::ConsumeIncome, DollarRule::SmoothToExpected] {
            let rep = corollary_comparison(&d, 2, 3, &log, rule, 20_000, 4).unwrap();
            assert!(rep.holds(true, 3.0), "{rule:?}: {:?}", rep.advantage);
            assert!(rep.burn_minus_bound.mean.abs() < 1e-9);
            assert!(!rep.burn_borrows);
        }
        let rn = UtilityModel::risk_neutral(1.0, 0.9).unwrap();
        let rep = corollary_comparison(&d, 2, 3, &rn, DollarRule::ConsumeIncome, 20_000, 4).unwrap();
        assert!(rep.advantage.covers(0.0, 3.0), "{:?}", rep.advantage);
    }
}
