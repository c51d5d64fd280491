//! Repeated second-price auctions paid in dollars or in a platform token.
//!
//! The crate models a horizon of `T` auctions of a perishable good. Under the
//! token regime bidders pay in tokens bought on a spot market, the auctioneer
//! holds the tokens it collects, and a per-period policy `(τ_t, σ_t)` inflates
//! or burns the supply. The modules build on each other:
//!
//! * [`valuation`]: valuation laws and order-statistic moments;
//! * [`auction`]: one period's sealed-bid auction;
//! * [`market`]: token market clearing and the ledger transition;
//! * [`solver`]: backward induction for expected market caps;
//! * [`simulation`]: path simulation under dollars, tokens, or equity;
//! * [`accounting`]: PDV, consumption smoothing, and Euler residuals;
//! * [`extension`]: the two-period effort model and its contract comparison;
//! * [`experiment`]: config files, run drivers, and CSV/JSON output.

pub mod accounting;
pub mod auction;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod market;
pub mod numerics;
pub mod simulation;
pub mod solver;
pub mod valuation;

pub use auction::{expected_revenue, fpa_equilibrium_bid, run_auction, AuctionFormat, AuctionKind, AuctionOutcome};
pub use error::{Error, Result};
pub use market::{apply_policy, clear_market, LedgerState, MarketClearing, MonetaryPolicy};
pub use numerics::Estimate;
pub use simulation::{
    simulate_dollar_auction, simulate_equity_benchmark, simulate_token_auction, Regime, RevenueSummary, SimulationTrace,
    Simulator,
};
pub use solver::{expected_price, solve_backward, solve_discrete_oracle, EquilibriumProfile, SolveMethod};
pub use valuation::{
    expected_highest, expected_second_highest, regularity_check, total_payment_distribution, PaymentLaw,
    ValuationDistribution,
};
