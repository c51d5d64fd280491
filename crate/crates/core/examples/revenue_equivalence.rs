//! Second-price and first-price auctions raise the same expected revenue.
//!
//! `cargo run --release --example revenue_equivalence`

use token_auction::auction::{expected_revenue, fpa_equilibrium_bid, AuctionFormat, AuctionKind};
use token_auction::valuation::{expected_second_highest, ValuationDistribution};

fn main() -> token_auction::Result<()> {
    let dist = ValuationDistribution::uniform(0.0, 1.0)?;
    for n in [2, 3, 4] {
        let spa = AuctionFormat::with_default_reserve(AuctionKind::SecondPrice, &dist);
        let fpa = AuctionFormat::with_default_reserve(AuctionKind::FirstPrice, &dist);
        let a = expected_revenue(&spa, &dist, n, 500_000, 1)?;
        let b = expected_revenue(&fpa, &dist, n, 500_000, 2)?;
        println!(
            "n={n}: second-price {:.5} ± {:.5}, first-price {:.5} ± {:.5}, exact {:.5}",
            a.mean,
            a.se,
            b.mean,
            b.se,
            expected_second_highest(&dist, n)?
        );
    }
    println!("\nfirst-price bids, n=3:");
    for v in [0.2, 0.5, 0.9] {
        println!("  v = {v}: bid {:.4}", fpa_equilibrium_bid(&dist, 3, v)?);
    }
    Ok(())
}
