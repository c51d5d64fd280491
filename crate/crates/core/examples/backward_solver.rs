//! Expected market caps under several supply policies, by quadrature and by
//! enumeration on a finite law.

use token_auction::market::MonetaryPolicy;
use token_auction::solver::{solve_backward, solve_discrete_oracle, SolveMethod};
use token_auction::valuation::ValuationDistribution;

fn main() -> token_auction::Result<()> {
    let dist = ValuationDistribution::uniform(0.0, 1.0)?;
    let horizon = 4;
    for sigma in [-1.0, -0.5, 0.0, 1.0, 4.0] {
        let policy = MonetaryPolicy::constant(horizon, 0.0, sigma)?;
        let profile = solve_backward(&dist, 2, horizon, 0.9, &policy, SolveMethod::Quadrature)?;
        println!("sigma = {sigma:>4}:");
        print!("{}", profile.report());
    }

    let atoms = ValuationDistribution::discrete(&[(1.0, 0.5), (2.0, 0.3), (4.0, 0.2)])?;
    let policy = MonetaryPolicy::new(vec![0.0, 0.2, 0.0], vec![-0.5, 0.5, 0.0])?;
    let quad = solve_backward(&atoms, 3, 3, 0.85, &policy, SolveMethod::Quadrature)?;
    let exact = solve_discrete_oracle(&atoms, 3, 3, 0.85, &policy)?;
    let mc = solve_backward(&atoms, 3, 3, 0.85, &policy, SolveMethod::MonteCarlo { paths: 200_000, seed: 3 })?;
    println!("\nfinite law, n=3: quadrature {:?}", quad.market_caps());
    println!("                 enumeration {:?}", exact.market_caps());
    println!("                 monte carlo {:?} (se {:?})", mc.market_caps(), mc.std_errors().unwrap());
    Ok(())
}
