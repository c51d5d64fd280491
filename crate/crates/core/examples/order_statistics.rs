//! Payment-law moments for a few valuation laws.
//!
//! `cargo run --example order_statistics`

use token_auction::valuation::{
    expected_bidder_surplus, expected_highest, expected_second_highest, regularity_check, total_payment_distribution,
    ValuationDistribution,
};

fn main() -> token_auction::Result<()> {
    let laws = [
        ("uniform(0,1)", ValuationDistribution::uniform(0.0, 1.0)?),
        ("uniform(1,2)", ValuationDistribution::uniform(1.0, 2.0)?),
        ("three atoms", ValuationDistribution::discrete(&[(1.0, 0.3), (1.5, 0.5), (3.0, 0.2)])?),
    ];
    println!("{:<14} {:>2} {:>10} {:>10} {:>10} {:>8}", "law", "n", "E[max]", "k", "g", "regular");
    for (name, dist) in &laws {
        for n in [2, 3, 5] {
            println!(
                "{name:<14} {n:>2} {:>10.6} {:>10.6} {:>10.6} {:>8}",
                expected_highest(dist, n)?,
                expected_second_highest(dist, n)?,
                expected_bidder_surplus(dist, n)?,
                regularity_check(dist),
            );
        }
    }

    let law = total_payment_distribution(&laws[0].1, 2)?;
    println!("\nuniform(0,1), n=2: P(B <= x)");
    for x in [0.1, 0.25, 0.5, 0.75] {
        println!("  x = {x:<5} {:.6}", law.cdf(x));
    }
    Ok(())
}
