//! Two-period effort model: optimal token policy versus investor contracts
//! capped by the misappropriation cost.

use token_auction::extension::{alpha_of, compare_regimes, optimize_sigma, token_auctioneer_utility, TwoPeriodConfig};
use token_auction::valuation::ValuationDistribution;

fn main() -> token_auction::Result<()> {
    let cfg = TwoPeriodConfig::new(0.9, 0.0, ValuationDistribution::uniform(1.0, 2.0)?, 2)?;
    let k = cfg.k()?;
    println!("k = {k:.4}, full-stake sigma = {:.4}", cfg.sigma_bar()?);

    println!("\n  sigma   alpha(B1=1.5)   utility");
    for sigma in [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, cfg.sigma_bar()?] {
        println!("{sigma:>7.3} {:>15.4} {:>9.5}", alpha_of(1.5, sigma, k), token_auctioneer_utility(sigma, &cfg)?);
    }

    let opt = optimize_sigma(&cfg)?;
    println!("\noptimum sigma* = {:.4}, utility {:.5}, E[alpha] = {:.4}", opt.sigma, opt.utility, opt.expected_alpha);

    let grid: Vec<f64> = (0..=12).map(|i| i as f64 * 0.05).collect();
    let cmp = compare_regimes(&cfg, &grid)?;
    println!("\n     c   dollars    tokens");
    for r in &cmp.rows {
        println!("{:>6.2} {:>9.5} {:>9.5}", r.c, r.dollar_utility, r.token_utility);
    }
    println!("dollars catch up at c* = {:?}", cmp.crossing);
    Ok(())
}
