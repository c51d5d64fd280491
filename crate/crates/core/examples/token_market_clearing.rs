//! One period of the token market, then the ledger update.

use token_auction::market::{apply_policy, clear_market, LedgerState};

fn main() -> token_auction::Result<()> {
    let ledger = LedgerState::genesis(1.0, 2)?;
    let (beta, tau, sigma) = (0.9, 0.0, 0.5);

    // payments are low relative to what tokens will be worth next period, so
    // the no-arbitrage floor sets the price and bidders hold the slack
    for (payments, next_price) in [(0.2, 0.5), (0.6, 0.5), (0.0, 0.0)] {
        let c = clear_market(payments, ledger.supply, beta, tau, next_price)?;
        println!(
            "B = {payments:.2}, p^e = {next_price:.2}: price {:.4}, floor {:.4}, speculative {:.4}, paid {:.4}{}",
            c.price,
            c.floor,
            c.speculative_demand,
            c.tokens_paid,
            if c.degenerate { " (degenerate)" } else { "" }
        );
    }

    let c = clear_market(0.2, ledger.supply, beta, tau, 0.5)?;
    let each = c.speculative_demand / 2.0;
    let next = apply_policy(&ledger, c.tokens_paid, &[each, each], tau, sigma)?;
    println!("\nnext ledger: supply {:.4}, auctioneer {:.4}, bidders {:?}", next.supply, next.auctioneer, next.bidders);
    Ok(())
}
