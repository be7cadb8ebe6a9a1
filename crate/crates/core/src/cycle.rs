//! Ring arbitrage on a single cycle: index, marginal profitability, optimal
//! sizing and atomic execution.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::{AmmError, Amount, FeeParams, Market, Pool, PoolId, TokenId};
use crate::compose::{compose_hops, PathError, SwapLeg, TradePath, VirtualPool};
use crate::rational::{self, round_significant, Rational};

/// Relative half-width of the bracket certified around the optimal input.
pub const OPTIMAL_BRACKET: f64 = 1e-12;
/// Significant digits kept in a reported optimal input.
pub const OPTIMAL_DIGITS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArbError {
    #[error("invalid cycle: {0}")]
    InvalidCycle(#[from] PathError),
    #[error("path does not return to its start token {0}")]
    OpenCycle(TokenId),
    #[error("a cycle needs at least two hops")]
    TooShort,
    #[error("cycle is not profitable")]
    NotProfitable,
    #[error("ring reverted: realized profit {realized_profit}")]
    Reverted { realized_profit: Rational },
    #[error("ring input must be positive")]
    NonPositiveInput,
    #[error(transparent)]
    Amm(#[from] AmmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// A closed trade path: the last leg pays out the first leg's input token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cycle {
    path: TradePath,
}

impl Cycle {
    pub fn new(path: TradePath, market: &Market) -> Result<Self, ArbError> {
        if path.len() < 2 {
            return Err(ArbError::TooShort);
        }
        let hops = path.hops(market)?;
        let start = hops[0].token_in();
        if hops[hops.len() - 1].token_out() != start {
            return Err(ArbError::OpenCycle(start.clone()));
        }
        Ok(Self { path })
    }

    /// Cycle through `pools` in order, paying `start` into the first one.
    pub fn through(market: &Market, start: &TokenId, pools: &[PoolId]) -> Result<Self, ArbError> {
        let mut legs = Vec::with_capacity(pools.len());
        let mut token = start.clone();
        for id in pools {
            let pool = market.pool(id)?;
            let next = pool.other_token(&token)?.clone();
            legs.push(SwapLeg::new(id.clone(), std::mem::replace(&mut token, next)));
        }
        Self::new(TradePath::new(legs)?, market)
    }

    pub(crate) fn from_legs_unchecked(legs: Vec<SwapLeg>) -> Self {
        Self {
            path: TradePath::new(legs).expect("enumerated cycles use distinct pools"),
        }
    }

    pub fn path(&self) -> &TradePath {
        &self.path
    }

    pub fn legs(&self) -> &[SwapLeg] {
        self.path.legs()
    }

    pub fn start_token(&self) -> &TokenId {
        &self.path.legs()[0].input_token
    }

    pub fn n_hops(&self) -> usize {
        self.path.len()
    }

    /// The same pools traversed the other way, from the same start token.
    pub fn reversed(&self) -> Cycle {
        let legs = self.path.legs();
        let n = legs.len();
        let reversed = (0..n)
            .rev()
            .map(|i| SwapLeg::new(legs[i].pool_id.clone(), legs[(i + 1) % n].input_token.clone()))
            .collect();
        Cycle::from_legs_unchecked(reversed)
    }

    pub fn oriented(&self, direction: Direction) -> Cycle {
        match direction {
            Direction::Forward => self.clone(),
            Direction::Reverse => self.reversed(),
        }
    }

    pub fn resolve(&self, market: &Market) -> Result<ResolvedCycle, ArbError> {
        Ok(ResolvedCycle {
            hops: self.path.hops(market)?,
        })
    }
}

/// Pool ids joined with `>`, used to label cycles in reports.
pub fn cycle_label(cycle: &Cycle) -> String {
    cycle
        .legs()
        .iter()
        .map(|leg| format!("{}:{}", leg.pool_id, leg.input_token))
        .collect::<Vec<_>>()
        .join(",")
}

/// A cycle's hops read out of a market snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCycle {
    hops: Vec<VirtualPool>,
}

impl ResolvedCycle {
    pub fn hops(&self) -> &[VirtualPool] {
        &self.hops
    }

    pub fn n_hops(&self) -> usize {
        self.hops.len()
    }

    /// Every hop repriced under `fees`.
    pub fn with_fees(&self, fees: &FeeParams) -> ResolvedCycle {
        ResolvedCycle {
            hops: self.hops.iter().map(|h| h.with_fees(fees.clone())).collect(),
        }
    }

    pub fn virtual_pool(&self) -> Result<VirtualPool, ArbError> {
        Ok(compose_hops(&self.hops)?)
    }

    /// `I`: product of `reserve_out / reserve_in` around the cycle.
    pub fn index(&self) -> Rational {
        self.hops
            .iter()
            .fold(Rational::one(), |acc, h| acc * h.reserve_out() / h.reserve_in())
    }

    /// `U'(0) = prod(r1 r2) * I - 1`.
    pub fn marginal_at_zero(&self) -> Rational {
        self.hops.iter().fold(Rational::one(), |acc, h| acc * h.marginal_rate()) - Rational::one()
    }

    pub fn is_profitable(&self) -> bool {
        self.marginal_at_zero().is_positive()
    }

    /// `U(delta) = output - delta`, run hop by hop.
    pub fn utility(&self, delta: &Rational) -> Rational {
        crate::compose::sequential_output(&self.hops, delta) - delta
    }

    pub fn optimal_input(&self) -> Result<OptimalInput, ArbError> {
        if !self.is_profitable() {
            return Err(ArbError::NotProfitable);
        }
        let vp = self.virtual_pool()?;
        let input = optimal_on_virtual_pool(&vp);
        let profit = vp.swap_output(&input.input) - &input.input;
        Ok(OptimalInput { profit, ..input })
    }
}

/// Optimal ring input with its profit and a certified bracket around the
/// true (generally irrational) maximizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalInput {
    pub input: Rational,
    pub profit: Rational,
    pub lower: Rational,
    pub upper: Rational,
}

/// Sign of `U'(delta) = r1 r2 z x / (x + r1 delta)^2 - 1` on a virtual pool.
pub fn derivative_sign(vp: &VirtualPool, delta: &Rational) -> std::cmp::Ordering {
    let x = vp.reserve_in();
    let w = x + vp.fees().r1() * delta;
    let target = vp.fees().rate() * vp.reserve_out() * x;
    target.cmp(&(&w * &w))
}

/// Maximizer `(sqrt(r1 r2 x z) - x) / r1` of a profitable virtual pool.
///
/// The square root is truncated a few digits past the rounding precision
/// and the rounded input is certified: `U'` is positive at the lower end of
/// the bracket and negative at the upper end. Failing that, precision grows.
fn optimal_on_virtual_pool(vp: &VirtualPool) -> OptimalInput {
    let x = vp.reserve_in();
    let r1 = vp.fees().r1();
    let target = vp.fees().rate() * vp.reserve_out() * x;
    // Decimal exponent of sqrt(target), within one.
    let bits = target.numer().bits() as i64 - target.denom().bits() as i64;
    let magnitude = bits * 30103 / 200_000;
    let half_width = rational::from_f64(OPTIMAL_BRACKET).expect("finite");
    let mut digits = OPTIMAL_DIGITS;
    loop {
        let places = (digits as i64 + 8 - magnitude).max(0) as usize;
        let w = rational::sqrt_floor(&target, places);
        let exact = (&w - x) / r1;
        if exact.is_positive() {
            let input = round_significant(&exact, digits);
            let lower = &input * (Rational::one() - &half_width);
            let upper = &input * (Rational::one() + &half_width);
            if derivative_sign(vp, &lower).is_gt() && derivative_sign(vp, &upper).is_lt() {
                return OptimalInput {
                    input,
                    profit: Rational::zero(),
                    lower,
                    upper,
                };
            }
        }
        digits += 8;
    }
}

pub fn cycle_utility(cycle: &Cycle, market: &Market, delta: &Amount) -> Result<Rational, ArbError> {
    Ok(cycle.resolve(market)?.utility(delta.value()))
}

pub fn arbitrage_index(cycle: &Cycle, market: &Market) -> Result<Rational, ArbError> {
    Ok(cycle.resolve(market)?.index())
}

pub fn marginal_at_zero(cycle: &Cycle, market: &Market) -> Result<Rational, ArbError> {
    Ok(cycle.resolve(market)?.marginal_at_zero())
}

pub fn is_profitable(cycle: &Cycle, market: &Market) -> Result<bool, ArbError> {
    Ok(cycle.resolve(market)?.is_profitable())
}

/// The orientation with positive marginal, if any. Both orientations can
/// never qualify at once: their indices are reciprocal and fees are at most 1.
pub fn best_direction(cycle: &Cycle, market: &Market) -> Result<Option<Direction>, ArbError> {
    if is_profitable(cycle, market)? {
        return Ok(Some(Direction::Forward));
    }
    if is_profitable(&cycle.reversed(), market)? {
        return Ok(Some(Direction::Reverse));
    }
    Ok(None)
}

pub fn optimal_input(cycle: &Cycle, market: &Market) -> Result<OptimalInput, ArbError> {
    cycle.resolve(market)?.optimal_input()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutedLeg {
    pub pool_id: PoolId,
    pub token_in: TokenId,
    pub token_out: TokenId,
    pub amount_in: Amount,
    pub amount_out: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingExecution {
    pub legs: Vec<ExecutedLeg>,
    pub input: Amount,
    pub output: Amount,
    pub profit: Rational,
}

/// Runs `delta` around the cycle on live reserves, all or nothing.
///
/// The ring commits only if its profit is strictly positive and at least
/// `min_profit`; otherwise every touched pool is restored and
/// [`ArbError::Reverted`] reports what the ring would have made.
pub fn execute_ring(
    market: &mut Market,
    cycle: &Cycle,
    delta: &Amount,
    min_profit: &Amount,
) -> Result<RingExecution, ArbError> {
    if delta.is_zero() {
        return Err(ArbError::NonPositiveInput);
    }
    cycle.resolve(market)?;
    let snapshot: Vec<Pool> = cycle
        .legs()
        .iter()
        .map(|leg| market.pool(&leg.pool_id).cloned())
        .collect::<Result<_, _>>()?;
    let rollback = |market: &mut Market| {
        for pool in &snapshot {
            market.restore_pool(pool.clone());
        }
    };

    let mut legs = Vec::with_capacity(cycle.n_hops());
    let mut amount = delta.clone();
    for leg in cycle.legs() {
        let token_out = snapshot
            .iter()
            .find(|p| *p.id() == leg.pool_id)
            .expect("snapshot covers every leg")
            .other_token(&leg.input_token)?
            .clone();
        let out = match market.swap(&leg.pool_id, &leg.input_token, &amount) {
            Ok(out) => out,
            Err(err) => {
                rollback(market);
                return Err(err.into());
            }
        };
        legs.push(ExecutedLeg {
            pool_id: leg.pool_id.clone(),
            token_in: leg.input_token.clone(),
            token_out,
            amount_in: std::mem::replace(&mut amount, out.clone()),
            amount_out: out,
        });
    }
    let profit = &amount - delta;
    if !profit.is_positive() || profit < *min_profit.value() {
        rollback(market);
        return Err(ArbError::Reverted {
            realized_profit: profit,
        });
    }
    Ok(RingExecution {
        legs,
        input: delta.clone(),
        output: amount,
        profit,
    })
}
