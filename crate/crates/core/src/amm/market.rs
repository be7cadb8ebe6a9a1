use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{AmmError, Amount, FeeParams, Pool, PoolId, ProviderId, TokenId};
use crate::rational::{self, Rational};

/// Decimal places kept when the first LP mint is not a perfect square.
pub const DEFAULT_MINT_PRECISION: usize = 18;

/// Result of a liquidity deposit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiquidityReceipt {
    pub deposit0: Amount,
    pub deposit1: Amount,
    pub minted: Amount,
}

/// Pool registry with token adjacency and LP-token balances.
///
/// State-changing operations take `&mut self` and leave the market untouched
/// when they return an error. Clone the market for a persistent snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    pools: BTreeMap<PoolId, Pool>,
    adjacency: BTreeMap<TokenId, BTreeSet<PoolId>>,
    pairs: BTreeMap<(TokenId, TokenId), BTreeSet<PoolId>>,
    lp_balances: BTreeMap<(ProviderId, PoolId), Amount>,
    unique_pairs: bool,
    mint_precision: usize,
    swap_precision: Option<usize>,
}

impl Default for Market {
    fn default() -> Self {
        Self::new()
    }
}

fn pair_key(a: &TokenId, b: &TokenId) -> (TokenId, TokenId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl Market {
    /// An empty market allowing at most one pool per unordered token pair.
    pub fn new() -> Self {
        Self {
            pools: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            pairs: BTreeMap::new(),
            lp_balances: BTreeMap::new(),
            unique_pairs: true,
            mint_precision: DEFAULT_MINT_PRECISION,
            swap_precision: None,
        }
    }

    /// An empty market where several pools may list the same pair, as when
    /// modelling multiple venues. Two-hop cycles need this.
    pub fn allowing_parallel_pools() -> Self {
        Self {
            unique_pairs: false,
            ..Self::new()
        }
    }

    pub fn with_mint_precision(mut self, places: usize) -> Self {
        self.mint_precision = places;
        self
    }

    /// Floors every executed swap output to `places` decimals. Without it
    /// swaps are exact, and reserve numerators and denominators grow with
    /// each trade, which makes long simulations slow.
    pub fn with_swap_precision(mut self, places: Option<usize>) -> Self {
        self.swap_precision = places;
        self
    }

    pub fn swap_precision(&self) -> Option<usize> {
        self.swap_precision
    }

    pub fn allows_parallel_pools(&self) -> bool {
        !self.unique_pairs
    }

    /// Registers an empty pool, naming it `token0/token1` (suffixed when the
    /// name is taken).
    pub fn create_pool(&mut self, token0: TokenId, token1: TokenId, fees: FeeParams) -> Result<PoolId, AmmError> {
        let base = format!("{token0}/{token1}");
        let mut id = PoolId::new(base.clone())?;
        let mut n = 2;
        while self.pools.contains_key(&id) {
            id = PoolId::new(format!("{base}#{n}"))?;
            n += 1;
        }
        self.create_pool_with_id(id, token0, token1, fees)
    }

    pub fn create_pool_with_id(
        &mut self,
        id: PoolId,
        token0: TokenId,
        token1: TokenId,
        fees: FeeParams,
    ) -> Result<PoolId, AmmError> {
        let pool = Pool::new(id.clone(), token0, token1, fees)?;
        self.insert_pool(pool)?;
        Ok(id)
    }

    /// Registers a pool with existing state.
    pub fn insert_pool(&mut self, pool: Pool) -> Result<(), AmmError> {
        if pool.token0() == pool.token1() {
            return Err(AmmError::IdenticalTokens(pool.token0().clone()));
        }
        if self.pools.contains_key(pool.id()) {
            return Err(AmmError::DuplicatePoolId(pool.id().clone()));
        }
        let key = pair_key(pool.token0(), pool.token1());
        if self.unique_pairs {
            if let Some(existing) = self.pairs.get(&key).and_then(|ids| ids.iter().next()) {
                return Err(AmmError::DuplicatePair(
                    pool.token0().clone(),
                    pool.token1().clone(),
                    existing.clone(),
                ));
            }
        }
        let id = pool.id().clone();
        for token in [pool.token0(), pool.token1()] {
            self.adjacency.entry(token.clone()).or_default().insert(id.clone());
        }
        self.pairs.entry(key).or_default().insert(id.clone());
        self.pools.insert(id, pool);
        Ok(())
    }

    pub fn pool(&self, id: &PoolId) -> Result<&Pool, AmmError> {
        self.pools.get(id).ok_or_else(|| AmmError::UnknownPool(id.clone()))
    }

    /// Pools in id order.
    pub fn pools(&self) -> impl Iterator<Item = &Pool> {
        self.pools.values()
    }

    pub fn pool_count(&self) -> usize {
        self.pools.len()
    }

    /// Tokens in lexicographic order.
    pub fn tokens(&self) -> impl Iterator<Item = &TokenId> {
        self.adjacency.keys()
    }

    pub fn has_token(&self, token: &TokenId) -> bool {
        self.adjacency.contains_key(token)
    }

    /// Ids of pools trading `token`, in id order.
    pub fn pools_for_token(&self, token: &TokenId) -> impl Iterator<Item = &PoolId> {
        self.adjacency.get(token).into_iter().flatten()
    }

    /// Pools listing the unordered pair `{a, b}`.
    pub fn pools_between(&self, a: &TokenId, b: &TokenId) -> impl Iterator<Item = &Pool> {
        self.pairs
            .get(&pair_key(a, b))
            .into_iter()
            .flatten()
            .filter_map(|id| self.pools.get(id))
    }

    pub fn lp_balance(&self, provider: &ProviderId, pool: &PoolId) -> Amount {
        self.lp_balances
            .get(&(provider.clone(), pool.clone()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn swap_output(&self, pool: &PoolId, input: &TokenId, delta_in: &Amount) -> Result<Amount, AmmError> {
        self.pool(pool)?.swap_output(input, delta_in)
    }

    pub fn spot_rate(&self, pool: &PoolId, input: &TokenId) -> Result<Rational, AmmError> {
        self.pool(pool)?.spot_rate(input)
    }

    /// Executes a swap on `pool` and returns the output paid to the trader,
    /// floored to the market's swap precision if one is set.
    pub fn swap(&mut self, pool: &PoolId, input: &TokenId, delta_in: &Amount) -> Result<Amount, AmmError> {
        let (next, out) = self.pool(pool)?.apply_swap_rounded(input, delta_in, self.swap_precision)?;
        self.pools.insert(pool.clone(), next);
        Ok(out)
    }

    /// Deposits into `pool`.
    ///
    /// For a live pool only `delta0` is needed: the matching `delta1 =
    /// delta0 * y / x` is implied, and if given it must match exactly. The
    /// provider receives `c * delta0 / x` LP tokens. For an empty pool both
    /// amounts are required and the first mint is `sqrt(delta0 * delta1)`,
    /// exact for perfect squares, otherwise floored at the market's mint
    /// precision.
    pub fn add_liquidity(
        &mut self,
        provider: &ProviderId,
        pool_id: &PoolId,
        delta0: &Amount,
        delta1: Option<&Amount>,
    ) -> Result<LiquidityReceipt, AmmError> {
        let pool = self.pool(pool_id)?;
        if delta0.is_zero() || delta1.is_some_and(Amount::is_zero) {
            return Err(AmmError::ZeroDeposit);
        }
        let receipt = if pool.is_empty() {
            let delta1 = delta1.ok_or_else(|| AmmError::MissingCounterDeposit(pool_id.clone()))?;
            let product = delta0.value() * delta1.value();
            let minted = rational::exact_nth_root(&product, 2)
                .unwrap_or_else(|| rational::sqrt_floor(&product, self.mint_precision));
            if minted.is_zero() {
                return Err(AmmError::ZeroDeposit);
            }
            LiquidityReceipt {
                deposit0: delta0.clone(),
                deposit1: delta1.clone(),
                minted: Amount::new(minted)?,
            }
        } else {
            let x = pool.reserve0().value();
            let y = pool.reserve1().value();
            let expected = Amount::new(delta0.value() * y / x)?;
            if let Some(given) = delta1 {
                if *given != expected {
                    return Err(AmmError::RatioMismatch {
                        deposit1: given.clone(),
                        expected,
                    });
                }
            }
            let minted = Amount::new(pool.lp_supply().value() * delta0.value() / x)?;
            LiquidityReceipt {
                deposit0: delta0.clone(),
                deposit1: expected,
                minted,
            }
        };
        let reserve0 = pool.reserve0() + &receipt.deposit0;
        let reserve1 = pool.reserve1() + &receipt.deposit1;
        let supply = pool.lp_supply() + &receipt.minted;
        let mut next = pool.clone();
        next.set_state(reserve0, reserve1, supply);
        self.pools.insert(pool_id.clone(), next);
        let balance = self.lp_balances.entry((provider.clone(), pool_id.clone())).or_default();
        *balance = &*balance + &receipt.minted;
        Ok(receipt)
    }

    /// Burns `delta_c` LP tokens for `(c_share * x, c_share * y)` where
    /// `c_share = delta_c / c`.
    pub fn remove_liquidity(
        &mut self,
        provider: &ProviderId,
        pool_id: &PoolId,
        delta_c: &Amount,
    ) -> Result<(Amount, Amount), AmmError> {
        let pool = self.pool(pool_id)?;
        if delta_c.is_zero() {
            return Err(AmmError::ZeroWithdrawal);
        }
        let held = self.lp_balance(provider, pool_id);
        let remaining_balance = held.checked_sub(delta_c).ok_or_else(|| AmmError::InsufficientLpBalance {
            provider: provider.clone(),
            pool: pool_id.clone(),
            held: held.clone(),
            requested: delta_c.clone(),
        })?;
        let share = delta_c.value() / pool.lp_supply().value();
        let out0 = Amount::new(pool.reserve0().value() * &share)?;
        let out1 = Amount::new(pool.reserve1().value() * &share)?;
        let reserve0 = Amount::new(pool.reserve0() - &out0)?;
        let reserve1 = Amount::new(pool.reserve1() - &out1)?;
        let supply = Amount::new(pool.lp_supply() - delta_c)?;
        let mut next = pool.clone();
        next.set_state(reserve0, reserve1, supply);
        self.pools.insert(pool_id.clone(), next);
        let key = (provider.clone(), pool_id.clone());
        if remaining_balance.is_zero() {
            self.lp_balances.remove(&key);
        } else {
            self.lp_balances.insert(key, remaining_balance);
        }
        Ok((out0, out1))
    }

    /// Copy of the market with every pool on the same fee schedule.
    pub fn with_uniform_fees(&self, fees: &FeeParams) -> Market {
        let mut market = self.clone();
        for pool in market.pools.values_mut() {
            *pool = pool.with_fees(fees.clone());
        }
        market
    }

    /// Puts back a previously captured pool state. Only used to roll back
    /// an aborted multi-leg execution.
    pub(crate) fn restore_pool(&mut self, pool: Pool) {
        debug_assert!(self.pools.contains_key(pool.id()));
        self.pools.insert(pool.id().clone(), pool);
    }

    /// Sum of provider balances for `pool`; never exceeds its LP supply.
    pub fn lp_balance_total(&self, pool: &PoolId) -> Amount {
        let total = self
            .lp_balances
            .iter()
            .filter(|((_, p), _)| p == pool)
            .fold(Rational::zero(), |acc, (_, v)| acc + v.value());
        Amount::new(total).unwrap_or_default()
    }
}
