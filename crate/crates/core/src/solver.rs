//! Backward induction for the expected market caps `P_t = E[p_t M_t]`.
//!
//! The recursion lives in market-cap space: `P_T = E[B]` and, for `t < T`,
//! `P_t = E[max{B, β P_{t+1} - σ_t B}]`. The expectation at `t` is taken at
//! the start of the period, after `M_t` is known and before valuations are
//! drawn, so the expected price is `p^e_t = P_t / M_t`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::{check_beta, market_cap_fixed_point, speculation_active, MonetaryPolicy};
use crate::numerics::{fold_paths, substream, RunningStats};
use crate::valuation::{check_bidders, second_highest, total_payment_distribution, PaymentLaw, ValuationDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SolveMethod {
    /// Exact sums for finite laws, adaptive Gauss-Kronrod for uniform laws.
    Quadrature,
    /// Independent samples of `B` per period; substream `t << 40 | path`.
    MonteCarlo { paths: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    horizon: usize,
    market_caps: Vec<f64>,
    speculation_prob: Vec<f64>,
    std_errors: Option<Vec<f64>>,
    policy: MonetaryPolicy,
    beta: f64,
    payment_law: PaymentLaw,
}

impl EquilibriumProfile {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `P_1, ..., P_T`.
    pub fn market_caps(&self) -> &[f64] {
        &self.market_caps
    }

    /// `P_t` for 1-based `t`, with `P_{T+1} = 0`.
    pub fn cap(&self, t: usize) -> f64 {
        if t == 0 || t > self.horizon {
            0.0
        } else {
            self.market_caps[t - 1]
        }
    }

    /// Probability that speculation is active in each period.
    pub fn speculation_prob(&self) -> &[f64] {
        &self.speculation_prob
    }

    /// Standard errors of `P_t` (Monte Carlo only), including the error
    /// propagated from later periods.
    pub fn std_errors(&self) -> Option<&[f64]> {
        self.std_errors.as_deref()
    }

    pub fn policy(&self) -> &MonetaryPolicy {
        &self.policy
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn payment_law(&self) -> &PaymentLaw {
        &self.payment_law
    }

    /// Plain-text report: one `t P_t speculation_prob` line per period.
    pub fn report(&self) -> String {
        let mut out = String::from("t\tP_t\tspeculation_prob\n");
        for t in 0..self.horizon {
            out.push_str(&format!("{}\t{:.12}\t{:.6}\n", t + 1, self.market_caps[t], self.speculation_prob[t]));
        }
        out
    }
}

fn check_inputs(n: usize, horizon: usize, beta: f64, policy: &MonetaryPolicy) -> Result<()> {
    check_bidders(n)?;
    if horizon == 0 {
        return domain("horizon must be at least one period");
    }
    if policy.horizon() != horizon {
        return Err(Error::Mismatch(format!("policy covers {} periods but horizon is {horizon}", policy.horizon())));
    }
    check_beta(beta)
}

/// Solves for the expected market caps by backward induction.
pub fn solve_backward(
    dist: &ValuationDistribution,
    n: usize,
    horizon: usize,
    beta: f64,
    policy: &MonetaryPolicy,
    method: SolveMethod,
) -> Result<EquilibriumProfile> {
    check_inputs(n, horizon, beta, policy)?;
    let law = total_payment_distribution(dist, n)?;
    let mut caps = vec![0.0; horizon];
    let mut spec_prob = vec![0.0; horizon];
    let mut std_errors = match method {
        SolveMethod::Quadrature => None,
        SolveMethod::MonteCarlo { .. } => Some(vec![0.0; horizon]),
    };
    let mut next_cap = 0.0;
    let mut next_var = 0.0;
    for t in (0..horizon).rev() {
        let sigma = policy.sigma()[t];
        match method {
            SolveMethod::Quadrature => {
                let kink = if sigma > -1.0 { beta * next_cap / (1.0 + sigma) } else { f64::NAN };
                caps[t] = law.expect(|b| market_cap_fixed_point(b, sigma, beta, next_cap), &[kink]);
                spec_prob[t] = if next_cap > 0.0 {
                    if sigma > -1.0 {
                        law.cdf_strict(kink)
                    } else {
                        1.0
                    }
                } else {
                    0.0
                };
            }
            SolveMethod::MonteCarlo { paths, seed } => {
                if paths < 2 {
                    return domain("Monte Carlo solve needs at least two paths");
                }
                let (stats, active) = fold_paths(
                    paths,
                    || (RunningStats::default(), 0u64),
                    |acc, i| {
                        let mut rng = substream(seed, ((t as u64) << 40) | i);
                        let b = law.sample(&mut rng);
                        acc.0.push(market_cap_fixed_point(b, sigma, beta, next_cap));
                        acc.1 += speculation_active(b, sigma, beta, next_cap) as u64;
                    },
                    |acc, part| {
                        acc.0.merge(&part.0);
                        acc.1 += part.1;
                    },
                );
                let est = stats.estimate();
                caps[t] = est.mean;
                spec_prob[t] = active as f64 / paths as f64;
                // dP_t/dP_{t+1} = β P(speculation): propagate the later period's error.
                let slope = beta * spec_prob[t];
                let var = est.se * est.se + slope * slope * next_var;
                if let Some(se) = std_errors.as_mut() {
                    se[t] = var.sqrt();
                }
                next_var = var;
            }
        }
        next_cap = caps[t];
    }
    Ok(EquilibriumProfile {
        horizon,
        market_caps: caps,
        speculation_prob: spec_prob,
        std_errors,
        policy: policy.clone(),
        beta,
        payment_law: law,
    })
}

/// `p^e_t = P_t / M_t` for 1-based `t`.
pub fn expected_price(profile: &EquilibriumProfile, t: usize, supply: f64) -> Result<f64> {
    if !(supply > 0.0) {
        return domain(format!("token stock {supply} must be positive"));
    }
    if t == 0 || t > profile.horizon() + 1 {
        return domain(format!("period {t} outside 1..={}", profile.horizon() + 1));
    }
    Ok(profile.cap(t) / supply)
}

const ORACLE_MAX_ATOMS: usize = 8;
const ORACLE_MAX_BIDDERS: usize = 4;
const ORACLE_MAX_HORIZON: usize = 4;

/// Exact profile for small finite laws by enumerating every valuation
/// profile in every period.
pub fn solve_discrete_oracle(
    dist: &ValuationDistribution,
    n: usize,
    horizon: usize,
    beta: f64,
    policy: &MonetaryPolicy,
) -> Result<EquilibriumProfile> {
    check_inputs(n, horizon, beta, policy)?;
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::Unsupported("the enumeration oracle needs a finite valuation law".into()))?;
    if atoms.len() > ORACLE_MAX_ATOMS || n > ORACLE_MAX_BIDDERS || horizon > ORACLE_MAX_HORIZON {
        return domain(format!(
            "oracle limits exceeded: {} atoms (max {ORACLE_MAX_ATOMS}), n={n} (max {ORACLE_MAX_BIDDERS}), T={horizon} (max {ORACLE_MAX_HORIZON})",
            atoms.len()
        ));
    }
    let m = atoms.len();
    let mut profiles: Vec<(f64, f64)> = Vec::with_capacity(m.pow(n as u32));
    let mut idx = vec![0usize; n];
    let mut vals = vec![0.0; n];
    loop {
        let mut prob = 1.0;
        for (slot, &j) in idx.iter().enumerate() {
            vals[slot] = atoms[j].0;
            prob *= atoms[j].1;
        }
        profiles.push((second_highest(&vals), prob));
        // odometer increment
        let mut pos = 0;
        while pos < n {
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    let mut caps = vec![0.0; horizon];
    let mut spec_prob = vec![0.0; horizon];
    let mut next_cap = 0.0;
    for t in (0..horizon).rev() {
        let sigma = policy.sigma()[t];
        let mut cap = 0.0;
        let mut prob = 0.0;
        for &(b, p) in &profiles {
            cap += p * market_cap_fixed_point(b, sigma, beta, next_cap);
            if speculation_active(b, sigma, beta, next_cap) {
                prob += p;
            }
        }
        caps[t] = cap;
        spec_prob[t] = prob;
        next_cap = cap;
    }
    Ok(EquilibriumProfile {
        horizon,
        market_caps: caps,
        speculation_prob: spec_prob,
        std_errors: None,
        policy: policy.clone(),
        beta,
        payment_law: total_payment_distribution(dist, n)?,
    })
}
