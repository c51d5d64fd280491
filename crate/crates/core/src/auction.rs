//! One period's sealed-bid auction. Second-price is the format used by the
//! solver and simulator; first-price is available for revenue-equivalence
//! comparisons on atomless laws.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{integrate, mc_estimate, Estimate, QUAD_TOL};
use crate::valuation::{check_bidders, sample_valuations, ValuationDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuctionKind {
    SecondPrice,
    FirstPrice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionFormat {
    pub kind: AuctionKind,
    pub reserve: f64,
}

impl AuctionFormat {
    pub fn new(kind: AuctionKind, reserve: f64) -> Result<Self> {
        if !(reserve.is_finite() && reserve >= 0.0) {
            return domain(format!("reserve {reserve} must be finite and nonnegative"));
        }
        Ok(Self { kind, reserve })
    }

    /// Format with the reserve at the bottom of the support.
    pub fn with_default_reserve(kind: AuctionKind, dist: &ValuationDistribution) -> Self {
        Self { kind, reserve: dist.low() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: Option<usize>,
    /// Dollar bids `m_i`.
    pub messages: Vec<f64>,
    /// Dollar payments `b_i <= m_i`.
    pub payments: Vec<f64>,
    /// `B = sum_i b_i`.
    pub total_payment: f64,
}

/// Runs the auction on realized valuations. Bidders play their equilibrium
/// strategy (truthful under second-price). Ties go to the lowest index.
pub fn run_auction(format: &AuctionFormat, dist: &ValuationDistribution, valuations: &[f64]) -> Result<AuctionOutcome> {
    if valuations.len() < 2 {
        return domain(format!("need at least two valuations, got {}", valuations.len()));
    }
    if let Some(v) = valuations.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return domain(format!("valuation {v} must be finite and nonnegative"));
    }
    let messages = match format.kind {
        AuctionKind::SecondPrice => valuations.to_vec(),
        AuctionKind::FirstPrice => {
            let n = valuations.len();
            valuations
                .iter()
                .map(|&v| fpa_bid_with_reserve(dist, n, v, format.reserve))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(settle(format, messages))
}

/// Winner and payments from submitted messages.
pub fn settle(format: &AuctionFormat, messages: Vec<f64>) -> AuctionOutcome {
    let mut winner: Option<usize> = None;
    let mut top = f64::NEG_INFINITY;
    let mut runner_up = f64::NEG_INFINITY;
    for (i, &m) in messages.iter().enumerate() {
        if m > top {
            runner_up = top;
            top = m;
            winner = Some(i);
        } else if m > runner_up {
            runner_up = m;
        }
    }
    let mut payments = vec![0.0; messages.len()];
    let winner = winner.filter(|_| top >= format.reserve);
    if let Some(w) = winner {
        payments[w] = match format.kind {
            AuctionKind::SecondPrice => runner_up.max(format.reserve),
            AuctionKind::FirstPrice => top,
        };
    }
    let total_payment = payments.iter().sum();
    AuctionOutcome { winner, messages, payments, total_payment }
}

/// Symmetric first-price equilibrium bid with reserve `v̲`:
/// `b(v) = v - ∫_{v̲}^{v} F(x)^{n-1} dx / F(v)^{n-1}`.
pub fn fpa_equilibrium_bid(dist: &ValuationDistribution, n: usize, v: f64) -> Result<f64> {
    fpa_bid_with_reserve(dist, n, v, dist.low())
}

fn fpa_bid_with_reserve(dist: &ValuationDistribution, n: usize, v: f64, reserve: f64) -> Result<f64> {
    check_bidders(n)?;
    if !dist.is_atomless() {
        if dist.low() == dist.high() && v == dist.low() {
            return Ok(v);
        }
        return Err(Error::Unsupported("first-price equilibrium requires an atomless valuation law".into()));
    }
    if v < dist.low() - 1e-12 || v > dist.high() + 1e-12 {
        return domain(format!("valuation {v} outside the support [{}, {}]", dist.low(), dist.high()));
    }
    if v < reserve {
        // Types below the reserve stay out.
        return Ok(0.0);
    }
    let lower = reserve.max(dist.low());
    let fv = dist.cdf(v).powi(n as i32 - 1);
    if fv <= 0.0 {
        return Ok(lower);
    }
    let shade = integrate(|x| dist.cdf(x).powi(n as i32 - 1), lower, v, QUAD_TOL) / fv;
    Ok(v - shade)
}

/// Monte Carlo mean and standard error of the period total payment `B`.
/// Path `i` draws its profile from substream `i` of `seed`.
pub fn expected_revenue(format: &AuctionFormat, dist: &ValuationDistribution, n: usize, paths: u64, seed: u64) -> Result<Estimate> {
    check_bidders(n)?;
    if paths < 10_000 {
        return domain(format!("expected_revenue needs at least 10^4 paths, got {paths}"));
    }
    if format.kind == AuctionKind::FirstPrice && !dist.is_atomless() {
        if let Some(atoms) = dist.atoms() {
            if atoms.len() == 1 {
                return Ok(Estimate::exact(atoms[0].0));
            }
        }
        return Err(Error::Unsupported("first-price equilibrium requires an atomless valuation law".into()));
    }
    Ok(mc_estimate(seed, 0, paths, |rng| {
        let vals = sample_valuations(dist, n, rng).expect("n checked above");
        run_auction(format, dist, &vals).map(|o| o.total_payment).unwrap_or(f64::NAN)
    }))
}
