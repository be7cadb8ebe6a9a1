//! Fee thresholds that switch ring arbitrage off.
//!
//! A cycle with index `I > 1` stays profitable while `(r1 r2)^n * I > 1`, so
//! the largest per-hop rate that removes it is `t = I^(-1/n)`. Thresholds are
//! exact when `1/I` is a perfect `n`-th power and otherwise bisected on the
//! exact marginal to a relative width of `1e-15`.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::amm::{AmmError, FeeParams, Market};
use crate::cycle::{ArbError, Cycle, Direction, ResolvedCycle};
use crate::rational::{exact_nth_root, pow10, Rational};
use crate::search::enumerate_cycles;

/// Bisection stops once `upper - lower <= lower * 10^-15`.
pub const BISECTION_DIGITS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeeError {
    #[error("cycle is balanced (index 1): no direction to price out")]
    NoArbitrageDirection,
    #[error("invalid fee: {0}")]
    InvalidFee(#[from] AmmError),
    #[error(transparent)]
    Arb(#[from] ArbError),
}

/// Rate bracket `lower <= I^(-1/n) <= upper`. At `lower` the cycle's
/// marginal is never positive; `lower == upper` when the root is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeThreshold {
    pub index: Rational,
    pub hops: usize,
    pub lower: Rational,
    pub upper: Rational,
}

impl FeeThreshold {
    pub fn value(&self) -> &Rational {
        &self.lower
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// `t` with `t^hops * index = 1` for an index above 1.
pub fn threshold_for_index(index: &Rational, hops: usize) -> Result<FeeThreshold, FeeError> {
    if index.is_one() || !index.is_positive() {
        return Err(FeeError::NoArbitrageDirection);
    }
    let index = if *index > Rational::one() { index.clone() } else { index.recip() };
    let n = u32::try_from(hops).expect("cycle length fits in u32");
    if let Some(root) = exact_nth_root(&index.recip(), n) {
        return Ok(FeeThreshold {
            index,
            hops,
            lower: root.clone(),
            upper: root,
        });
    }
    let tolerance = Rational::new(One::one(), pow10(BISECTION_DIGITS));
    let excess = |t: &Rational| num_traits::pow(t.clone(), hops) * &index - Rational::one();
    let (mut lower, mut upper) = (Rational::zero(), Rational::one());
    while (&upper - &lower) > &lower * &tolerance {
        let mid = (&lower + &upper) / Rational::from_integer(2.into());
        if excess(&mid).is_positive() {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    Ok(FeeThreshold {
        index,
        hops,
        lower,
        upper,
    })
}

/// Threshold for the orientation of `cycle` whose index exceeds 1.
pub fn cycle_fee_threshold(cycle: &Cycle, market: &Market) -> Result<(Direction, FeeThreshold), FeeError> {
    let index = cycle.resolve(market)?.index();
    let direction = if index > Rational::one() {
        Direction::Forward
    } else {
        Direction::Reverse
    };
    Ok((direction, threshold_for_index(&index, cycle.n_hops())?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleThreshold {
    /// Oriented so that its index exceeds 1.
    pub cycle: Cycle,
    pub direction: Direction,
    pub threshold: FeeThreshold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeThresholdReport {
    pub per_cycle: Vec<CycleThreshold>,
    /// Smallest per-cycle threshold, or 1 when no cycle is unbalanced.
    pub market_threshold: Rational,
}

/// Thresholds for every unbalanced cycle of up to `max_hops` pools.
pub fn market_fee_threshold(market: &Market, max_hops: usize) -> Result<FeeThresholdReport, FeeError> {
    if max_hops < 2 {
        return Err(ArbError::TooShort.into());
    }
    let cycles = enumerate_cycles(market, None, max_hops);
    let per_cycle: Vec<Option<CycleThreshold>> = cycles
        .par_iter()
        .map(|cycle| match cycle_fee_threshold(cycle, market) {
            Ok((direction, threshold)) => Ok(Some(CycleThreshold {
                cycle: cycle.oriented(direction),
                direction,
                threshold,
            })),
            Err(FeeError::NoArbitrageDirection) => Ok(None),
            Err(err) => Err(err),
        })
        .collect::<Result<_, _>>()?;
    let per_cycle: Vec<CycleThreshold> = per_cycle.into_iter().flatten().collect();
    let market_threshold = per_cycle
        .iter()
        .map(|c| c.threshold.lower.clone())
        .min()
        .unwrap_or_else(Rational::one);
    Ok(FeeThresholdReport {
        per_cycle,
        market_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeSweepPoint {
    /// Input-side rate `r1`; the output side is left at 1.
    pub fee: Rational,
    pub marginal_at_zero: Rational,
    /// `U(delta*)` when the marginal is positive, else zero.
    pub optimal_profit: Rational,
    pub optimal_input: Option<Rational>,
}

/// Marginal and optimal profit of `cycle` as `r1` moves over `fee_grid`.
pub fn sweep_fee_profitability(
    market: &Market,
    cycle: &Cycle,
    fee_grid: &[Rational],
) -> Result<Vec<FeeSweepPoint>, FeeError> {
    let resolved = cycle.resolve(market)?;
    fee_grid.iter().map(|fee| sweep_point(&resolved, fee)).collect()
}

fn sweep_point(resolved: &ResolvedCycle, fee: &Rational) -> Result<FeeSweepPoint, FeeError> {
    let fees = FeeParams::new(fee.clone(), Rational::one())?;
    let repriced = resolved.with_fees(&fees);
    let marginal_at_zero = repriced.marginal_at_zero();
    let (optimal_profit, optimal_input) = if marginal_at_zero.is_positive() {
        let optimal = repriced.optimal_input()?;
        (optimal.profit, Some(optimal.input))
    } else {
        (Rational::zero(), None)
    };
    Ok(FeeSweepPoint {
        fee: fee.clone(),
        marginal_at_zero,
        optimal_profit,
        optimal_input,
    })
}
