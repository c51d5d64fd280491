//! Burning every payment token moves all expected future revenue into period
//! one, where it matches a sale of equity in the dollar auction.
//!
//! `cargo run --release --example burn_front_loading`

use token_auction::market::MonetaryPolicy;
use token_auction::simulation::Simulator;
use token_auction::solver::{solve_backward, SolveMethod};
use token_auction::valuation::ValuationDistribution;

fn main() -> token_auction::Result<()> {
    let dist = ValuationDistribution::uniform(0.0, 1.0)?;
    let (n, horizon, beta, paths, seed) = (2, 4, 0.9, 200_000, 17);

    let dollars = Simulator::dollars(&dist, n, horizon)?;
    let equity = Simulator::equity(&dist, n, horizon, beta)?;
    println!("{:<12} {:>10} {:>12}  per-period mean revenue", "regime", "PDV", "later var");
    for (name, sim) in [("dollars", &dollars), ("equity", &equity)] {
        report(name, sim.summarize(paths, seed, beta));
    }
    for sigma in [2.0, 0.0, -0.5, -1.0] {
        let policy = MonetaryPolicy::constant(horizon, 0.0, sigma)?;
        let profile = solve_backward(&dist, n, horizon, beta, &policy, SolveMethod::Quadrature)?;
        let sim = Simulator::tokens(&profile, &dist, n, horizon, 1.0)?;
        report(&format!("sigma={sigma}"), sim.summarize(paths, seed, beta));
    }
    Ok(())
}

fn report(name: &str, s: token_auction::RevenueSummary) {
    let per: Vec<String> = s.period_revenue.iter().map(|e| format!("{:.4}", e.mean)).collect();
    println!("{name:<12} {:>10.5} {:>12.6}  [{}]", s.pdv.mean, s.later_pdv_variance, per.join(", "));
}
