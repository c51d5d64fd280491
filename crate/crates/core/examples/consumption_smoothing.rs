//! A risk-averse auctioneer who cannot borrow prefers the full-burn token
//! auction to dollars.
//!
//! `cargo run --release --example consumption_smoothing`

use token_auction::accounting::{corollary_comparison, optimal_riskfree_savings, DollarRule, UtilityModel};
use token_auction::valuation::ValuationDistribution;

fn main() -> token_auction::Result<()> {
    let log = UtilityModel::log(0.0, 0.9)?;
    let plan = optimal_riskfree_savings(&[1.0, 1.0 / 3.0], &log)?;
    println!(
        "income (1, 1/3): consume {:?}, save {:?}, Euler residual {:.1e}",
        plan.consumption,
        plan.assets,
        plan.max_euler_residual()
    );

    let dist = ValuationDistribution::uniform(0.0, 1.0)?;
    let model = UtilityModel::log(1.0, 0.9)?;
    for rule in [DollarRule::ConsumeIncome, DollarRule::SmoothToExpected] {
        let rep = corollary_comparison(&dist, 2, 3, &model, rule, 200_000, 21)?;
        println!(
            "{rule:?}: burn {:.5}, smoothing bound {:.5}, dollars {:.5}, gain {:.5} ± {:.5}",
            rep.token_burn.mean, rep.lemma1_bound.mean, rep.dollar.mean, rep.advantage.mean, rep.advantage.se
        );
    }
    Ok(())
}
