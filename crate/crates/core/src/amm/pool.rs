use num_traits::{Signed, Zero};

use super::{constant_product_output, AmmError, Amount, FeeParams, PoolId, TokenId};
use crate::rational::Rational;

/// A two-token constant-product pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    id: PoolId,
    token0: TokenId,
    token1: TokenId,
    reserve0: Amount,
    reserve1: Amount,
    fees: FeeParams,
    lp_supply: Amount,
}

impl Pool {
    /// An empty pool awaiting its first deposit.
    pub fn new(id: PoolId, token0: TokenId, token1: TokenId, fees: FeeParams) -> Result<Self, AmmError> {
        Self::with_reserves(id, token0, token1, Amount::zero(), Amount::zero(), fees, Amount::zero())
    }

    /// A pool with existing state, e.g. loaded from a market file.
    pub fn with_reserves(
        id: PoolId,
        token0: TokenId,
        token1: TokenId,
        reserve0: Amount,
        reserve1: Amount,
        fees: FeeParams,
        lp_supply: Amount,
    ) -> Result<Self, AmmError> {
        if token0 == token1 {
            return Err(AmmError::IdenticalTokens(token0));
        }
        let empty = reserve0.is_zero() && reserve1.is_zero() && lp_supply.is_zero();
        let live = !reserve0.is_zero() && !reserve1.is_zero();
        if !empty && !live {
            return Err(AmmError::InvalidReserves(id));
        }
        Ok(Self {
            id,
            token0,
            token1,
            reserve0,
            reserve1,
            fees,
            lp_supply,
        })
    }

    pub fn id(&self) -> &PoolId {
        &self.id
    }

    pub fn token0(&self) -> &TokenId {
        &self.token0
    }

    pub fn token1(&self) -> &TokenId {
        &self.token1
    }

    pub fn reserve0(&self) -> &Amount {
        &self.reserve0
    }

    pub fn reserve1(&self) -> &Amount {
        &self.reserve1
    }

    pub fn fees(&self) -> &FeeParams {
        &self.fees
    }

    pub fn lp_supply(&self) -> &Amount {
        &self.lp_supply
    }

    pub fn is_empty(&self) -> bool {
        self.reserve0.is_zero() || self.reserve1.is_zero()
    }

    pub fn contains(&self, token: &TokenId) -> bool {
        *token == self.token0 || *token == self.token1
    }

    pub fn other_token(&self, token: &TokenId) -> Result<&TokenId, AmmError> {
        if *token == self.token0 {
            Ok(&self.token1)
        } else if *token == self.token1 {
            Ok(&self.token0)
        } else {
            Err(self.unknown(token))
        }
    }

    /// `(input-side reserve, output-side reserve)` for a swap paying `input`.
    pub fn reserves_for(&self, input: &TokenId) -> Result<(&Amount, &Amount), AmmError> {
        if *input == self.token0 {
            Ok((&self.reserve0, &self.reserve1))
        } else if *input == self.token1 {
            Ok((&self.reserve1, &self.reserve0))
        } else {
            Err(self.unknown(input))
        }
    }

    /// `x * y`.
    pub fn reserve_product(&self) -> Rational {
        self.reserve0.value() * self.reserve1.value()
    }

    /// Copy of this pool under a different fee schedule.
    pub fn with_fees(&self, fees: FeeParams) -> Pool {
        Pool { fees, ..self.clone() }
    }

    /// Output of paying `delta_in` of `input`: `r1 r2 Y d / (X + r1 d)`.
    /// Pure; `delta_in = 0` yields 0.
    pub fn swap_output(&self, input: &TokenId, delta_in: &Amount) -> Result<Amount, AmmError> {
        let (x, y) = self.reserves_for(input)?;
        if self.is_empty() {
            return Err(AmmError::EmptyPool(self.id.clone()));
        }
        let out = constant_product_output(x.value(), y.value(), &self.fees, delta_in.value());
        Ok(Amount(out))
    }

    /// Executes a swap, returning the updated pool and the output paid. The
    /// whole input (fee included) stays in the pool.
    pub fn apply_swap(&self, input: &TokenId, delta_in: &Amount) -> Result<(Pool, Amount), AmmError> {
        self.apply_swap_rounded(input, delta_in, None)
    }

    /// [`Pool::apply_swap`] with the output floored to `places` decimals
    /// when given, as on-chain pools pay whole base units.
    pub fn apply_swap_rounded(
        &self,
        input: &TokenId,
        delta_in: &Amount,
        places: Option<usize>,
    ) -> Result<(Pool, Amount), AmmError> {
        if delta_in.is_zero() {
            // Check the token first so callers get the more specific error.
            self.reserves_for(input)?;
            return Err(AmmError::ZeroSwap);
        }
        let mut out = self.swap_output(input, delta_in)?;
        if let Some(places) = places {
            out = Amount(crate::rational::floor_places(out.value(), places));
        }
        let mut next = self.clone();
        let (reserve_in, reserve_out) = if *input == self.token0 {
            (&mut next.reserve0, &mut next.reserve1)
        } else {
            (&mut next.reserve1, &mut next.reserve0)
        };
        *reserve_in = &*reserve_in + delta_in;
        let remaining = reserve_out.value() - out.value();
        debug_assert!(remaining.is_positive());
        *reserve_out = Amount(remaining);
        Ok((next, out))
    }

    /// Marginal pre-fee rate `Y / X` for paying `input`.
    pub fn spot_rate(&self, input: &TokenId) -> Result<Rational, AmmError> {
        let (x, y) = self.reserves_for(input)?;
        if self.is_empty() {
            return Err(AmmError::EmptyPool(self.id.clone()));
        }
        Ok(y.value() / x.value())
    }

    pub(super) fn set_state(&mut self, reserve0: Amount, reserve1: Amount, lp_supply: Amount) {
        debug_assert!(!lp_supply.value().is_negative());
        self.reserve0 = reserve0;
        self.reserve1 = reserve1;
        self.lp_supply = lp_supply;
        if self.lp_supply.value().is_zero() {
            debug_assert!(self.reserve0.is_zero() && self.reserve1.is_zero());
        }
    }

    fn unknown(&self, token: &TokenId) -> AmmError {
        AmmError::UnknownToken {
            pool: self.id.clone(),
            token: token.clone(),
        }
    }
}
