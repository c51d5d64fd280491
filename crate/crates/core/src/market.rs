//! Token-market clearing within a period and the monetary-policy state
//! transition between periods.
//!
//! Prices are quoted in dollars per token. Because the whole pricing problem
//! is homogeneous of degree -1 in the token stock, the solver works with the
//! market cap `X = p M` instead; [`market_cap_fixed_point`] is the
//! rational-expectations closure that links the two views.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Absolute tolerance for token-count feasibility checks.
pub const LEDGER_TOL: f64 = 1e-9;

/// Per-period growth factors: `tau` applies to every token, `sigma` only to
/// tokens the auctioneer received as payment. Both are bounded below by -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryPolicy {
    tau: Vec<f64>,
    sigma: Vec<f64>,
}

impl MonetaryPolicy {
    pub fn new(tau: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if tau.len() != sigma.len() {
            return domain(format!("tau has {} entries but sigma has {}", tau.len(), sigma.len()));
        }
        if tau.is_empty() {
            return domain("policy needs at least one period");
        }
        for (name, path) in [("tau", &tau), ("sigma", &sigma)] {
            if let Some((t, v)) = path.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= -1.0)) {
                return domain(format!("{name}[{t}] = {v} is below -1"));
            }
        }
        Ok(Self { tau, sigma })
    }

    /// Same `(tau, sigma)` in every one of `horizon` periods.
    pub fn constant(horizon: usize, tau: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![tau; horizon], vec![sigma; horizon])
    }

    /// Burn every payment token: `sigma = -1` throughout, `tau = 0`.
    pub fn burn(horizon: usize) -> Result<Self> {
        Self::constant(horizon, 0.0, -1.0)
    }

    pub fn horizon(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Copy of this policy with a different `tau` path.
    pub fn with_tau(&self, tau: Vec<f64>) -> Result<Self> {
        Self::new(tau, self.sigma.clone())
    }
}

/// Token holdings at the start of period `t` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerState {
    pub t: usize,
    /// Total stock `M_t`.
    pub supply: f64,
    /// Auctioneer holdings `A_t`.
    pub auctioneer: f64,
    /// Bidder holdings `a_{i,t}`.
    pub bidders: Vec<f64>,
}

impl LedgerState {
    /// Period-1 ledger: the auctioneer owns the whole initial stock.
    pub fn genesis(initial_supply: f64, n: usize) -> Result<Self> {
        if !(initial_supply.is_finite() && initial_supply > 0.0) {
            return domain(format!("initial token stock {initial_supply} must be positive"));
        }
        Ok(Self { t: 1, supply: initial_supply, auctioneer: initial_supply, bidders: vec![0.0; n] })
    }

    pub fn bidder_total(&self) -> f64 {
        self.bidders.iter().sum()
    }

    /// `A + sum a_i = M` within [`LEDGER_TOL`] (relative to the stock size).
    pub fn is_feasible(&self) -> bool {
        let scale = self.supply.abs().max(1.0);
        self.auctioneer >= -LEDGER_TOL * scale
            && self.auctioneer <= self.supply + LEDGER_TOL * scale
            && self.bidders.iter().all(|&a| a >= -LEDGER_TOL * scale)
            && (self.auctioneer + self.bidder_total() - self.supply).abs() <= LEDGER_TOL * scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketClearing {
    /// Dollars per token.
    pub price: f64,
    /// Tokens bought and not used for payment this period.
    pub speculative_demand: f64,
    /// `B / p`.
    pub tokens_paid: f64,
    /// No-arbitrage floor `β(1+τ) p^e_{t+1}`.
    pub floor: f64,
    /// Zero payments and zero continuation value: the price is not pinned down.
    pub degenerate: bool,
}

impl MarketClearing {
    /// The floor strictly exceeds the payment-only price, so speculators absorb the slack.
    pub fn floor_binds(&self) -> bool {
        self.speculative_demand > 0.0
    }
}

/// Clears the period-`t` token market given total dollar payments `B`, the
/// stock `M_t` and the expected next-period price:
/// `p = max{B/M, β(1+τ)p^e}` and `S = max{M - B/(β(1+τ)p^e), 0}`.
pub fn clear_market(payments: f64, supply: f64, beta: f64, tau: f64, next_price: f64) -> Result<MarketClearing> {
    if !(supply.is_finite() && supply > 0.0) {
        return domain(format!("token stock {supply} must be positive"));
    }
    if !(payments.is_finite() && payments >= 0.0) {
        return domain(format!("payments {payments} must be nonnegative"));
    }
    if !(next_price.is_finite() && next_price >= 0.0) {
        return domain(format!("expected next price {next_price} must be nonnegative"));
    }
    check_beta(beta)?;
    if tau < -1.0 {
        return domain(format!("tau {tau} is below -1"));
    }
    let floor = beta * (1.0 + tau) * next_price;
    let spot = payments / supply;
    if payments == 0.0 && floor == 0.0 {
        return Ok(MarketClearing { price: 0.0, speculative_demand: supply, tokens_paid: 0.0, floor, degenerate: true });
    }
    if spot < floor {
        let speculative_demand = (supply - payments / floor).max(0.0);
        Ok(MarketClearing { price: floor, speculative_demand, tokens_paid: payments / floor, floor, degenerate: false })
    } else {
        Ok(MarketClearing { price: spot, speculative_demand: 0.0, tokens_paid: supply, floor, degenerate: false })
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("discount factor {beta} must lie in (0, 1]"));
    }
    Ok(())
}

/// Market cap `X = p M` consistent with the next-period stock the policy
/// implies: `X = max{B, β P_next - σ B}`, where `P_next` is the expected
/// next-period market cap. Speculation is active iff `(1+σ)B < β P_next`.
/// `τ` cancels out.
pub fn market_cap_fixed_point(payments: f64, sigma: f64, beta: f64, next_cap: f64) -> f64 {
    payments.max(beta * next_cap - sigma * payments)
}

/// Whether the speculation branch of [`market_cap_fixed_point`] is active.
pub fn speculation_active(payments: f64, sigma: f64, beta: f64, next_cap: f64) -> bool {
    (1.0 + sigma) * payments < beta * next_cap
}

/// Moves the ledger to the next period. The auctioneer has sold his entire
/// stock, so he enters the next period holding only the payment tokens,
/// grown by `(1+τ)(1+σ)`; speculators' tokens grow by `(1+τ)`.
pub fn apply_policy(ledger: &LedgerState, tokens_paid: f64, speculators: &[f64], tau: f64, sigma: f64) -> Result<LedgerState> {
    if tau < -1.0 || sigma < -1.0 {
        return domain(format!("policy factors tau={tau}, sigma={sigma} must be >= -1"));
    }
    if speculators.len() != ledger.bidders.len() {
        return domain(format!("{} speculator positions for {} bidders", speculators.len(), ledger.bidders.len()));
    }
    if tokens_paid < 0.0 || speculators.iter().any(|&s| s < 0.0) {
        return domain("token flows must be nonnegative");
    }
    let held: f64 = speculators.iter().sum();
    let scale = ledger.supply.max(1.0);
    if tokens_paid + held > ledger.supply + LEDGER_TOL * scale {
        return domain(format!(
            "paid {tokens_paid} + speculative {held} tokens exceed the stock {}",
            ledger.supply
        ));
    }
    let bidders: Vec<f64> = speculators.iter().map(|s| (1.0 + tau) * s).collect();
    let auctioneer = (1.0 + tau) * (1.0 + sigma) * tokens_paid;
    let supply = auctioneer + bidders.iter().sum::<f64>();
    Ok(LedgerState { t: ledger.t + 1, supply, auctioneer, bidders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clearing_examples() {
        // floor slack
        let c = clear_market(0.3, 1.0, 0.5, 0.0, 0.4).unwrap();
        assert!((c.price - 0.3).abs() < 1e-15);
        assert_eq!(c.speculative_demand, 0.0);
        // floor binds
        let c = clear_market(0.1, 1.0, 0.5, 0.0, 0.4).unwrap();
        assert!((c.price - 0.2).abs() < 1e-15);
        assert!((c.speculative_demand - 0.5).abs() < 1e-15);
        assert!(c.floor_binds());
        // terminal period
        let c = clear_market(0.4, 2.0, 0.9, 0.0, 0.0).unwrap();
        assert!((c.price - 0.2).abs() < 1e-15);
        assert_eq!(c.speculative_demand, 0.0);
    }

    #[test]
    fn degenerate_zero_price_is_flagged() {
        let c = clear_market(0.0, 3.0, 0.9, 0.0, 0.0).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.price, 0.0);
        assert_eq!(c.speculative_demand, 3.0);
    }

    #[test]
    fn clearing_rejects_bad_inputs() {
        assert!(clear_market(0.1, 0.0, 0.9, 0.0, 0.1).is_err());
        assert!(clear_market(-0.1, 1.0, 0.9, 0.0, 0.1).is_err());
        assert!(clear_market(0.1, 1.0, 0.0, 0.0, 0.1).is_err());
        assert!(clear_market(0.1, 1.0, 0.9, -1.5, 0.1).is_err());
    }

    #[test]
    fn market_cap_examples() {
        assert!((market_cap_fixed_point(0.25, -1.0, 1.0, 0.3) - 0.55).abs() < 1e-15);
        assert!((market_cap_fixed_point(0.3, 0.0, 1.0, 0.2) - 0.3).abs() < 1e-15);
        assert!((market_cap_fixed_point(0.1, 0.0, 1.0, 0.2) - 0.2).abs() < 1e-15);
        assert!(speculation_active(0.1, 0.0, 1.0, 0.2));
        assert!(!speculation_active(0.3, 0.0, 1.0, 0.2));
    }

    #[test]
    fn policy_examples() {
        let l = LedgerState { t: 1, supply: 1.0, auctioneer: 1.0, bidders: vec![0.0, 0.0] };
        let next = apply_policy(&l, 0.4, &[0.3, 0.3], 0.0, -1.0).unwrap();
        assert!((next.supply - 0.6).abs() < 1e-15);
        assert_eq!(next.auctioneer, 0.0);
        let next = apply_policy(&l, 0.5, &[0.25, 0.25], 1.0, 0.0).unwrap();
        assert!((next.supply - 2.0).abs() < 1e-15);
        assert!((next.auctioneer - 1.0).abs() < 1e-15);
        let next = apply_policy(&l, 0.7, &[0.1, 0.2], 0.0, 0.0).unwrap();
        assert!((next.supply - 1.0).abs() < 1e-15);
        assert!(next.is_feasible());
        assert_eq!(next.t, 2);
    }

    #[test]
    fn policy_rejects_overdraw() {
        let l = LedgerState::genesis(1.0, 2).unwrap();
        assert!(apply_policy(&l, 0.8, &[0.2, 0.2], 0.0, 0.0).is_err());
        assert!(apply_policy(&l, 0.5, &[0.2], 0.0, 0.0).is_err());
    }

    #[test]
    fn policy_bounds() {
        assert!(MonetaryPolicy::new(vec![0.0], vec![-1.5]).is_err());
        assert!(MonetaryPolicy::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(MonetaryPolicy::new(vec![-1.0], vec![-1.0]).is_ok());
    }

    proptest! {
        #[test]
        fn conservation_law(supply in 0.1f64..100.0, paid_frac in 0.0f64..1.0, spec_frac in 0.0f64..1.0,
                            tau in -1.0f64..4.0, sigma in -1.0f64..4.0) {
            let l = LedgerState::genesis(supply, 3).unwrap();
            let paid = paid_frac * supply;
            let spec = spec_frac * (supply - paid);
            let each = spec / 3.0;
            let next = apply_policy(&l, paid, &[each, each, each], tau, sigma).unwrap();
            let expected = (1.0 + tau) * (paid + spec + sigma * paid);
            prop_assert!((next.supply - expected).abs() <= 1e-9 * supply.max(1.0));
            prop_assert!(next.is_feasible());
        }

        #[test]
        fn price_respects_floor(b in 0.0f64..5.0, m in 0.01f64..10.0, beta in 0.05f64..1.0,
                                tau in -1.0f64..3.0, pe in 0.0f64..5.0) {
            let c = clear_market(b, m, beta, tau, pe).unwrap();
            prop_assert!(c.price >= beta * (1.0 + tau) * pe - 1e-12);
            prop_assert!(c.speculative_demand >= 0.0);
            prop_assert!(c.speculative_demand + c.tokens_paid <= m + 1e-9 || c.degenerate);
            prop_assert_eq!(c.speculative_demand > 0.0 && !c.degenerate, b / m < c.floor);
        }

        #[test]
        fn fixed_point_reproduces_clearing(b in 0.001f64..5.0, m in 0.01f64..10.0, beta in 0.05f64..0.99,
                                           tau in -0.9f64..3.0, sigma in -0.99f64..3.0, next_cap in 0.0f64..10.0) {
            let x = market_cap_fixed_point(b, sigma, beta, next_cap);
            prop_assert!(x >= b);
            let p = x / m;
            let next_supply = (1.0 + tau) * (m + sigma * b / p);
            prop_assume!(next_supply > 0.0);
            let pe = next_cap / next_supply;
            let c = clear_market(b, m, beta, tau, pe).unwrap();
            prop_assert!((c.price - p).abs() <= 1e-9 * p.max(1.0));
        }
    }
}
