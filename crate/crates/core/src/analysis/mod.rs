//! Effects of ring arbitrage on other traders and on liquidity providers.

mod surd;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::{AmmError, Amount, FeeParams, Market, Pool, PoolId, TokenId};
use crate::compose::sequential_output;
use crate::cycle::{execute_ring, ArbError, Cycle, Direction};
use crate::rational::{self, Rational};
use crate::search::{enumerate_cycles, find_cycles};

pub use self::surd::QuadraticSurd;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("target ratio {0} must be positive")]
    InvalidRatio(Rational),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Amm(#[from] AmmError),
    #[error(transparent)]
    Arb(#[from] ArbError),
}

/// Which reserve a trade pays into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Token0,
    Token1,
}

impl Side {
    fn opposite(self) -> Side {
        match self {
            Side::Token0 => Side::Token1,
            Side::Token1 => Side::Token0,
        }
    }
}

/// How the ring's leg in this pool relates to the direct trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioClass {
    /// The ring overshoots the target and the corrective trade reverses.
    SameThenReverse,
    /// The ring moves away from the target and the corrective trade returns.
    ReverseThenSame,
    /// The ring stops short and the corrective trade continues.
    SameDirectionBoth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSwap {
    pub input_token: TokenId,
    pub amount: Amount,
}

/// A pool that rational traders push to reserve ratio `x / y = target_ratio`,
/// optionally after a ring leg has traded against it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceScenario {
    pub pool: Pool,
    pub ring_swap: Option<RingSwap>,
    pub target_ratio: Rational,
}

/// Fees retained by the pool, per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeAccrual {
    pub token0: QuadraticSurd,
    pub token1: QuadraticSurd,
}

impl FeeAccrual {
    fn none() -> Self {
        Self {
            token0: QuadraticSurd::zero(),
            token1: QuadraticSurd::zero(),
        }
    }

    fn add(&self, other: &FeeAccrual) -> FeeAccrual {
        FeeAccrual {
            token0: self.token0.add(&other.token0),
            token1: self.token1.add(&other.token1),
        }
    }

    /// Total in token0 units at the target ratio `k = x / y`.
    pub fn value_in_token0(&self, k: &Rational) -> QuadraticSurd {
        self.token0.add(&self.token1.scale(k))
    }
}

/// A trade that moves a pool to a target ratio. The amount is exact but in
/// general irrational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioTrade {
    pub pays: Side,
    pub amount: QuadraticSurd,
    pub product_after: QuadraticSurd,
    pub fees: FeeAccrual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub initial_product: Rational,
    pub direct: Option<RatioTrade>,
    pub corrective: Option<RatioTrade>,
    pub product_direct: QuadraticSurd,
    pub product_with_ring: QuadraticSurd,
    pub fees_direct: FeeAccrual,
    pub fees_with_ring: FeeAccrual,
    /// `None` without a ring leg.
    pub scenario_class: Option<ScenarioClass>,
}

impl ConvergenceReport {
    /// Exact comparison of `product_with_ring` against `product_direct`.
    pub fn ring_vs_direct(&self) -> Ordering {
        self.product_with_ring.cmp_value(&self.product_direct)
    }
}

/// The single trade taking reserves `(x, y)` to `x' / y' = k`, or `None` if
/// they are already there.
///
/// Paying `d` of token0 gives `x' = x + d` and `y' = y - r1 r2 y d / (x + r1 d)`.
/// Requiring `x' = k y'` leaves the quadratic
/// `r1 d^2 + (x (1 + r1) - k y r1 (1 - r2)) d + x^2 - k x y = 0`, whose
/// constant term is negative, so exactly one root is positive.
pub fn trade_to_ratio(x: &Rational, y: &Rational, fees: &FeeParams, k: &Rational) -> Option<RatioTrade> {
    match (x / y).cmp(k) {
        Ordering::Equal => None,
        Ordering::Less => Some(sell_toward(x, y, fees, k, Side::Token0)),
        Ordering::Greater => {
            let mirrored = sell_toward(y, x, fees, &k.recip(), Side::Token1);
            Some(RatioTrade {
                fees: FeeAccrual {
                    token0: mirrored.fees.token1,
                    token1: mirrored.fees.token0,
                },
                ..mirrored
            })
        }
    }
}

/// Pays `input` (reserve `x`) until `x' / y' = k`; fees are reported as if
/// `x` were token0.
fn sell_toward(x: &Rational, y: &Rational, fees: &FeeParams, k: &Rational, pays: Side) -> RatioTrade {
    let one = Rational::one();
    let two = &one + &one;
    let (r1, r2) = (fees.r1(), fees.r2());
    let b = x * (&one + r1) - k * y * r1 * (&one - r2);
    let c = x * x - k * x * y;
    let disc = &b * &b - two.clone() * &two * r1 * &c;
    let denom = &two * r1;
    let amount = QuadraticSurd::new(-&b / &denom, one.clone() / &denom, disc);
    let x_after = amount.add_rational(x);
    let y_after = x_after.scale(&k.recip());
    let paid_out = y_after.scale(&-&one).add_rational(y);
    RatioTrade {
        pays,
        product_after: x_after.mul(&y_after),
        fees: FeeAccrual {
            token0: amount.scale(&(&one - r1)),
            token1: paid_out.scale(&(r2.recip() - &one)),
        },
        amount,
    }
}

/// Compares reaching the target directly with reaching it after the ring
/// leg, by final reserve product and fees retained.
pub fn compare_convergence(scenario: &ConvergenceScenario) -> Result<ConvergenceReport, AnalysisError> {
    let k = &scenario.target_ratio;
    if !k.is_positive() {
        return Err(AnalysisError::InvalidRatio(k.clone()));
    }
    let pool = &scenario.pool;
    if pool.is_empty() {
        return Err(AmmError::EmptyPool(pool.id().clone()).into());
    }
    let fees = pool.fees();
    let (x, y) = (pool.reserve0().value(), pool.reserve1().value());
    let initial_product = x * y;

    let direct = trade_to_ratio(x, y, fees, k);
    let (product_direct, fees_direct) = match &direct {
        Some(trade) => (trade.product_after.clone(), trade.fees.clone()),
        None => (QuadraticSurd::rational(initial_product.clone()), FeeAccrual::none()),
    };

    let Some(ring) = &scenario.ring_swap else {
        return Ok(ConvergenceReport {
            initial_product,
            direct,
            corrective: None,
            product_with_ring: product_direct.clone(),
            fees_with_ring: fees_direct.clone(),
            product_direct,
            fees_direct,
            scenario_class: None,
        });
    };
    if ring.amount.is_zero() {
        return Err(AnalysisError::InvalidScenario("ring swap amount must be positive".into()));
    }
    let ring_side = if ring.input_token == *pool.token0() {
        Side::Token0
    } else if ring.input_token == *pool.token1() {
        Side::Token1
    } else {
        return Err(AnalysisError::InvalidScenario(format!(
            "ring token {} is not traded by pool {}",
            ring.input_token,
            pool.id()
        )));
    };
    let (after, out) = pool.apply_swap(&ring.input_token, &ring.amount)?;
    let input_fee = QuadraticSurd::rational((Rational::one() - fees.r1()) * ring.amount.value());
    let output_fee = QuadraticSurd::rational(out.value() * (fees.r2().recip() - Rational::one()));
    let ring_fees = match ring_side {
        Side::Token0 => FeeAccrual {
            token0: input_fee,
            token1: output_fee,
        },
        Side::Token1 => FeeAccrual {
            token0: output_fee,
            token1: input_fee,
        },
    };
    let (xa, ya) = (after.reserve0().value(), after.reserve1().value());
    let corrective = trade_to_ratio(xa, ya, fees, k);
    let (product_with_ring, fees_with_ring) = match &corrective {
        Some(trade) => (trade.product_after.clone(), ring_fees.add(&trade.fees)),
        None => (QuadraticSurd::rational(xa * ya), ring_fees),
    };

    let direct_side = direct.as_ref().map(|t| t.pays);
    let corrective_side = corrective.as_ref().map(|t| t.pays);
    let scenario_class = if direct_side == Some(ring_side) {
        if corrective_side == Some(ring_side.opposite()) {
            ScenarioClass::SameThenReverse
        } else {
            ScenarioClass::SameDirectionBoth
        }
    } else {
        ScenarioClass::ReverseThenSame
    };

    Ok(ConvergenceReport {
        initial_product,
        direct,
        corrective,
        product_direct,
        product_with_ring,
        fees_direct,
        fees_with_ring,
        scenario_class: Some(scenario_class),
    })
}

/// Buying `z_token` with `x_token` in one pool, then selling it back to
/// `x_token` through `via`, for a profit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairArbitrageWitness {
    pub x_token: TokenId,
    pub z_token: TokenId,
    pub via: TokenId,
    pub buy_pool: PoolId,
    pub sell_pools: [PoolId; 2],
    pub input: Rational,
    pub bought: Rational,
    pub returned: Rational,
    pub profit: Rational,
}

/// Searches every triangle for a profitable buy-direct / sell-via-two-hop
/// pair. Candidate sizes are the closed-form optimum and a geometric grid
/// below the buy pool's input reserve; every candidate is evaluated exactly.
pub fn detect_pair_arbitrage(market: &Market) -> Result<Option<PairArbitrageWitness>, AnalysisError> {
    for cycle in enumerate_cycles(market, None, 3) {
        if cycle.n_hops() != 3 {
            continue;
        }
        for direction in [Direction::Forward, Direction::Reverse] {
            let oriented = cycle.oriented(direction);
            if let Some(witness) = pair_witness(&oriented, market)? {
                return Ok(Some(witness));
            }
        }
    }
    Ok(None)
}

fn pair_witness(cycle: &Cycle, market: &Market) -> Result<Option<PairArbitrageWitness>, AnalysisError> {
    let resolved = cycle.resolve(market)?;
    let hops = resolved.hops();
    let mut candidates = Vec::new();
    if resolved.is_profitable() {
        if let Ok(optimal) = resolved.optimal_input() {
            candidates.push(optimal.input);
        }
    }
    let reserve = hops[0].reserve_in();
    let mut step = reserve.clone();
    for _ in 0..24 {
        step /= Rational::from_integer(4.into());
        candidates.push(step.clone());
    }
    for input in candidates {
        let bought = hops[0].swap_output(&input);
        let returned = sequential_output(&hops[1..], &bought);
        let profit = &returned - &input;
        if profit.is_positive() {
            let legs = cycle.legs();
            return Ok(Some(PairArbitrageWitness {
                x_token: hops[0].token_in().clone(),
                z_token: hops[0].token_out().clone(),
                via: hops[1].token_out().clone(),
                buy_pool: legs[0].pool_id.clone(),
                sell_pools: [legs[1].pool_id.clone(), legs[2].pool_id.clone()],
                input,
                bought,
                returned,
                profit,
            }));
        }
    }
    Ok(None)
}

/// Product of directed rates around a cycle in two snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateProducts {
    pub before: Rational,
    pub after: Rational,
}

impl RateProducts {
    /// `|ln after| < |ln before|`, decided exactly.
    pub fn moved_toward_one(&self) -> bool {
        let distance = |v: &Rational| if *v >= Rational::one() { v.clone() } else { v.recip() };
        distance(&self.after) < distance(&self.before)
    }
}

pub fn balance_report(before: &Market, after: &Market, cycle: &Cycle) -> Result<RateProducts, AnalysisError> {
    Ok(RateProducts {
        before: cycle.resolve(before)?.index(),
        after: cycle.resolve(after)?.index(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenefitRound {
    pub cycle: Cycle,
    pub input: Amount,
    pub profit: Rational,
}

/// Greedy exhaustion of ring profit from a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenefitReport {
    pub rounds: Vec<BenefitRound>,
    /// Summed profit per start token.
    pub total_by_token: BTreeMap<TokenId, Rational>,
    /// True if the loop stopped because nothing above `dust` was left.
    pub exhausted: bool,
    pub final_market: Market,
}

/// Repeatedly executes the most profitable ring at its optimal size until
/// no opportunity above `dust` remains or `max_rounds` is hit.
pub fn exhaust_ring_arbitrage(
    market: &Market,
    max_hops: usize,
    max_rounds: usize,
    dust: &Rational,
) -> Result<BenefitReport, AnalysisError> {
    let mut current = market.clone();
    let mut rounds = Vec::new();
    let mut total_by_token: BTreeMap<TokenId, Rational> = BTreeMap::new();
    let mut exhausted = false;
    while rounds.len() < max_rounds {
        let found = find_cycles(&current, None, max_hops)?;
        let Some(best) = found.into_iter().find(|o| o.expected_profit > *dust) else {
            exhausted = true;
            break;
        };
        let input = Amount::new(best.optimal_input.clone())?;
        let run = execute_ring(&mut current, &best.cycle, &input, &Amount::zero())?;
        *total_by_token.entry(best.cycle.start_token().clone()).or_insert_with(Rational::zero) += &run.profit;
        rounds.push(BenefitRound {
            cycle: best.cycle,
            input,
            profit: run.profit,
        });
    }
    Ok(BenefitReport {
        rounds,
        total_by_token,
        exhausted,
        final_market: current,
    })
}

/// Float view of a surd, for reports.
pub fn approx_f64(value: &QuadraticSurd) -> f64 {
    rational::to_f64(&value.approximate())
}
