//! Folding a multi-hop trade path into one equivalent constant-product pool.
//!
//! Two chained hops `(a_in, a_out)` then `(b_in, b_out)` with combined fee
//! rate `f = r1 * r2` behave exactly like a single pool with
//!
//! ```text
//! reserve_in  = a_in * b_in / (b_in + f * a_out)
//! reserve_out = f * a_out * b_out / (b_in + f * a_out)
//! ```
//!
//! charging the fees once. Folding left over a path gives its virtual pool.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::{constant_product_output, AmmError, Amount, FeeParams, Market, Pool, PoolId, TokenId};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("a trade path needs at least one leg")]
    EmptyPath,
    #[error("pool {0} appears more than once in the path")]
    RepeatedPool(PoolId),
    #[error("leg expects {expected} as input but the previous leg outputs {found}")]
    TokenMismatch { expected: TokenId, found: TokenId },
    #[error("pools along a path must share one fee schedule")]
    FeeMismatch,
    #[error("virtual pool has no liquidity")]
    EmptyPool,
    #[error(transparent)]
    Amm(#[from] AmmError),
}

/// One hop: pay `input_token` into `pool_id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwapLeg {
    pub pool_id: PoolId,
    pub input_token: TokenId,
}

impl SwapLeg {
    pub fn new(pool_id: PoolId, input_token: TokenId) -> Self {
        Self { pool_id, input_token }
    }
}

/// Ordered legs over distinct pools. Token chaining is checked against a
/// market when the path is resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<SwapLeg>", into = "Vec<SwapLeg>")]
pub struct TradePath {
    legs: Vec<SwapLeg>,
}

impl TradePath {
    pub fn new(legs: Vec<SwapLeg>) -> Result<Self, PathError> {
        if legs.is_empty() {
            return Err(PathError::EmptyPath);
        }
        let mut seen = BTreeSet::new();
        for leg in &legs {
            if !seen.insert(&leg.pool_id) {
                return Err(PathError::RepeatedPool(leg.pool_id.clone()));
            }
        }
        Ok(Self { legs })
    }

    pub fn legs(&self) -> &[SwapLeg] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn pool_ids(&self) -> impl Iterator<Item = &PoolId> {
        self.legs.iter().map(|leg| &leg.pool_id)
    }

    /// Each leg as a directed pool, checking that outputs feed inputs.
    pub fn hops(&self, market: &Market) -> Result<Vec<VirtualPool>, PathError> {
        let mut hops: Vec<VirtualPool> = Vec::with_capacity(self.legs.len());
        for leg in &self.legs {
            let hop = VirtualPool::from_pool(market.pool(&leg.pool_id)?, &leg.input_token)?;
            if let Some(prev) = hops.last() {
                if prev.token_out != hop.token_in {
                    return Err(PathError::TokenMismatch {
                        expected: hop.token_in,
                        found: prev.token_out.clone(),
                    });
                }
            }
            hops.push(hop);
        }
        Ok(hops)
    }
}

impl TryFrom<Vec<SwapLeg>> for TradePath {
    type Error = PathError;

    fn try_from(legs: Vec<SwapLeg>) -> Result<Self, Self::Error> {
        TradePath::new(legs)
    }
}

impl From<TradePath> for Vec<SwapLeg> {
    fn from(path: TradePath) -> Self {
        path.legs
    }
}

/// A directed constant-product pool, real or composed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualPool {
    token_in: TokenId,
    token_out: TokenId,
    reserve_in: Rational,
    reserve_out: Rational,
    fees: FeeParams,
}

impl VirtualPool {
    pub fn new(
        token_in: TokenId,
        token_out: TokenId,
        reserve_in: Rational,
        reserve_out: Rational,
        fees: FeeParams,
    ) -> Result<Self, PathError> {
        if !reserve_in.is_positive() || !reserve_out.is_positive() {
            return Err(PathError::EmptyPool);
        }
        Ok(Self {
            token_in,
            token_out,
            reserve_in,
            reserve_out,
            fees,
        })
    }

    /// `pool` traded by paying `input`.
    pub fn from_pool(pool: &Pool, input: &TokenId) -> Result<Self, PathError> {
        let (x, y) = pool.reserves_for(input)?;
        if pool.is_empty() {
            return Err(AmmError::EmptyPool(pool.id().clone()).into());
        }
        Ok(Self {
            token_in: input.clone(),
            token_out: pool.other_token(input)?.clone(),
            reserve_in: x.value().clone(),
            reserve_out: y.value().clone(),
            fees: pool.fees().clone(),
        })
    }

    pub fn token_in(&self) -> &TokenId {
        &self.token_in
    }

    pub fn token_out(&self) -> &TokenId {
        &self.token_out
    }

    pub fn reserve_in(&self) -> &Rational {
        &self.reserve_in
    }

    pub fn reserve_out(&self) -> &Rational {
        &self.reserve_out
    }

    pub fn fees(&self) -> &FeeParams {
        &self.fees
    }

    pub fn with_fees(&self, fees: FeeParams) -> Self {
        Self { fees, ..self.clone() }
    }

    /// `r1 r2 z d / (x + r1 d)` on the virtual reserves.
    pub fn swap_output(&self, delta_in: &Rational) -> Rational {
        constant_product_output(&self.reserve_in, &self.reserve_out, &self.fees, delta_in)
    }

    /// Derivative of the output at zero input, `r1 r2 z / x`.
    pub fn marginal_rate(&self) -> Rational {
        self.fees.rate() * &self.reserve_out / &self.reserve_in
    }
}

/// Composes two chained directed pools into one. Fees must agree.
pub fn compose_pair(first: &VirtualPool, second: &VirtualPool) -> Result<VirtualPool, PathError> {
    if first.token_out != second.token_in {
        return Err(PathError::TokenMismatch {
            expected: second.token_in.clone(),
            found: first.token_out.clone(),
        });
    }
    if first.fees != second.fees {
        return Err(PathError::FeeMismatch);
    }
    let rate = first.fees.rate();
    let carried = &rate * &first.reserve_out;
    let denom = &second.reserve_in + &carried;
    Ok(VirtualPool {
        token_in: first.token_in.clone(),
        token_out: second.token_out.clone(),
        reserve_in: &first.reserve_in * &second.reserve_in / &denom,
        reserve_out: carried * &second.reserve_out / denom,
        fees: first.fees.clone(),
    })
}

/// Left fold of [`compose_pair`] over already-resolved hops.
pub fn compose_hops(hops: &[VirtualPool]) -> Result<VirtualPool, PathError> {
    let (first, rest) = hops.split_first().ok_or(PathError::EmptyPath)?;
    rest.iter().try_fold(first.clone(), |acc, hop| compose_pair(&acc, hop))
}

/// Virtual pool equivalent to trading along `path` in `market`.
pub fn compose_path(path: &TradePath, market: &Market) -> Result<VirtualPool, PathError> {
    compose_hops(&path.hops(market)?)
}

pub fn virtual_swap_output(pool: &VirtualPool, delta_in: &Amount) -> Amount {
    let out = pool.swap_output(delta_in.value());
    debug_assert!(!out.is_negative());
    Amount::new(out).unwrap_or_else(|_| Amount::zero())
}

/// Output of running `delta_in` through the hops one after another.
pub fn sequential_output(hops: &[VirtualPool], delta_in: &Rational) -> Rational {
    hops.iter().fold(delta_in.clone(), |amount, hop| {
        if amount.is_zero() {
            amount
        } else {
            hop.swap_output(&amount)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn t(s: &str) -> TokenId {
        TokenId::new(s).unwrap()
    }

    fn vp(a: &str, b: &str, x: Rational, y: Rational, fees: FeeParams) -> VirtualPool {
        VirtualPool::new(t(a), t(b), x, y, fees).unwrap()
    }

    #[test]
    fn compose_pair_without_fees() {
        let first = vp("A", "B", int(100), int(200), FeeParams::no_fee());
        let second = vp("B", "C", int(400), int(50), FeeParams::no_fee());
        let v = compose_pair(&first, &second).unwrap();
        assert_eq!(v.reserve_in(), &ratio(200, 3));
        assert_eq!(v.reserve_out(), &ratio(50, 3));
        assert_eq!((v.token_in(), v.token_out()), (&t("A"), &t("C")));
        // 50/3 * 10 / (200/3 + 10)
        assert_eq!(v.swap_output(&int(10)), ratio(50, 23));
        assert_eq!(v.swap_output(&int(0)), int(0));
    }

    #[test]
    fn compose_pair_with_uniswap_fee() {
        let fees = FeeParams::uniswap_v2();
        let first = vp("A", "B", int(100), int(200), fees.clone());
        let second = vp("B", "C", int(400), int(50), fees);
        let v = compose_pair(&first, &second).unwrap();
        assert_eq!(v.reserve_in(), &ratio(200_000, 2997));
        assert_eq!(v.reserve_out(), &ratio(49_850, 2997));
    }

    #[test]
    fn compose_pair_rejects_unchained_or_mixed_fee_legs() {
        let first = vp("A", "B", int(100), int(200), FeeParams::no_fee());
        let reversed = vp("C", "B", int(50), int(400), FeeParams::no_fee());
        assert!(matches!(compose_pair(&first, &reversed), Err(PathError::TokenMismatch { .. })));
        let other_fee = vp("B", "C", int(400), int(50), FeeParams::uniswap_v2());
        assert_eq!(compose_pair(&first, &other_fee), Err(PathError::FeeMismatch));
    }

    #[test]
    fn three_hop_fold_matches_closed_form() {
        let fees = FeeParams::uniswap_v2();
        let (x1, y1, y2, z2, z3, x3) = (int(100), int(200), int(230), int(90), int(110), int(120));
        let hops = [
            vp("X", "Y", x1.clone(), y1.clone(), fees.clone()),
            vp("Y", "Z", y2.clone(), z2.clone(), fees.clone()),
            vp("Z", "X", z3.clone(), x3.clone(), fees.clone()),
        ];
        let v = compose_hops(&hops).unwrap();
        let f = fees.rate();
        let f2 = &f * &f;
        let denom = &y2 * &z3 + &f * &y1 * &z3 + &f2 * &y1 * &z2;
        assert_eq!(v.reserve_in(), &(&x1 * &y2 * &z3 / &denom));
        assert_eq!(v.reserve_out(), &(&f2 * &y1 * &z2 * &x3 / &denom));
    }

    #[test]
    fn trade_path_validation() {
        assert_eq!(TradePath::new(vec![]), Err(PathError::EmptyPath));
        let p = PoolId::new("p").unwrap();
        let legs = vec![SwapLeg::new(p.clone(), t("A")), SwapLeg::new(p, t("B"))];
        assert!(matches!(TradePath::new(legs), Err(PathError::RepeatedPool(_))));
    }
}
