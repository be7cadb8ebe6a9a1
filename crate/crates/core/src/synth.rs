//! Seeded synthetic markets for simulation, tests and benchmarks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amm::{Amount, FeeParams, Market, Pool, PoolId, TokenId};
use crate::cycle::Cycle;
use crate::rational::{int, ratio, Rational};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn token_name(i: usize) -> TokenId {
    TokenId::new(format!("T{i:05}")).expect("non-empty")
}

/// `r1` and `r2` drawn uniformly from whole ppm in `[lo_ppm, 1_000_000]`.
pub fn random_fees(rng: &mut impl Rng, lo_ppm: u32) -> FeeParams {
    let r1 = rng.random_range(lo_ppm..=1_000_000);
    let r2 = rng.random_range(lo_ppm..=1_000_000);
    FeeParams::from_ppm(r1, r2).expect("ppm within range")
}

/// Positive rational `n / d` with `n` in `[lo, hi]` and `d` in `[1, 1000]`.
pub fn random_reserve(rng: &mut impl Rng, lo: i64, hi: i64) -> Rational {
    ratio(rng.random_range(lo..=hi), rng.random_range(1..=1000))
}

fn live_pool(id: String, a: TokenId, b: TokenId, x: Rational, y: Rational, fees: &FeeParams) -> Pool {
    Pool::with_reserves(
        PoolId::new(id).expect("non-empty"),
        a,
        b,
        Amount::new(x).expect("positive reserve"),
        Amount::new(y).expect("positive reserve"),
        fees.clone(),
        Amount::from_integer(1),
    )
    .expect("valid pool")
}

/// Up to `n_pools` distinct token pairs, in draw order.
fn random_pairs(rng: &mut impl Rng, n_tokens: usize, n_pools: usize) -> Vec<(usize, usize)> {
    assert!(n_tokens >= 2, "need at least two tokens");
    let n_pools = n_pools.min(n_tokens * (n_tokens - 1) / 2);
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(n_pools);
    while pairs.len() < n_pools {
        let a = rng.random_range(0..n_tokens);
        let b = rng.random_range(0..n_tokens);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push(key);
        }
    }
    pairs
}

fn build(pairs: &[(usize, usize)], fees: &FeeParams, mut reserves: impl FnMut(usize, usize) -> (Rational, Rational)) -> Market {
    let mut market = Market::new();
    for &(a, b) in pairs {
        let (x, y) = reserves(a, b);
        let pool = live_pool(format!("P{a:05}-{b:05}"), token_name(a), token_name(b), x, y, fees);
        market.insert_pool(pool).expect("pairs are unique");
    }
    market
}

/// Every token has an integer price and every pool sits at those prices, so
/// each cycle has index exactly 1.
pub fn balanced_market(seed: u64, n_tokens: usize, n_pools: usize, fees: &FeeParams) -> Market {
    let mut rng = rng(seed);
    let prices: Vec<i64> = (0..n_tokens).map(|_| rng.random_range(1..=1000)).collect();
    let pairs = random_pairs(&mut rng, n_tokens, n_pools);
    build(&pairs, fees, |a, b| {
        let depth = rng.random_range(1_000..=100_000);
        (int(depth * prices[b]), int(depth * prices[a]))
    })
}

/// Balanced market with each pool's token1 reserve scaled by a factor in
/// `[1 - noise, 1 + noise]`.
pub fn perturbed_market(seed: u64, n_tokens: usize, n_pools: usize, fees: &FeeParams, noise_ppm: i64) -> Market {
    let mut rng = rng(seed);
    let prices: Vec<i64> = (0..n_tokens).map(|_| rng.random_range(1..=1000)).collect();
    let pairs = random_pairs(&mut rng, n_tokens, n_pools);
    build(&pairs, fees, |a, b| {
        let depth = rng.random_range(1_000..=100_000);
        let factor = ratio(1_000_000 + rng.random_range(-noise_ppm..=noise_ppm), 1_000_000);
        (int(depth * prices[b]), int(depth * prices[a]) * factor)
    })
}

/// Independent integer reserves in `[1_000, 1_000_000]` on random pairs.
pub fn random_market(seed: u64, n_tokens: usize, n_pools: usize, fees: &FeeParams) -> Market {
    let mut rng = rng(seed);
    let pairs = random_pairs(&mut rng, n_tokens, n_pools);
    build(&pairs, fees, |_, _| {
        (int(rng.random_range(1_000..=1_000_000)), int(rng.random_range(1_000..=1_000_000)))
    })
}

/// A lone ring of `hops` pools `C0 -> C1 -> ... -> C0` with random rational
/// reserves, and the cycle starting at `C0`.
pub fn random_cycle(rng: &mut impl Rng, hops: usize, fees: &FeeParams) -> (Market, Cycle) {
    assert!(hops >= 2, "a cycle needs two hops");
    let mut market = if hops == 2 {
        Market::allowing_parallel_pools()
    } else {
        Market::new()
    };
    let token = |i: usize| TokenId::new(format!("C{}", i % hops)).expect("non-empty");
    let mut pools = Vec::with_capacity(hops);
    for i in 0..hops {
        let x = random_reserve(rng, 1_000, 1_000_000_000);
        let y = random_reserve(rng, 1_000, 1_000_000_000);
        let pool = live_pool(format!("R{i}"), token(i), token(i + 1), x, y, fees);
        pools.push(pool.id().clone());
        market.insert_pool(pool).expect("fresh ids");
    }
    let cycle = Cycle::through(&market, &token(0), &pools).expect("closed by construction");
    (market, cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::find_cycles;

    #[test]
    fn generators_are_deterministic() {
        let fees = FeeParams::uniswap_v2();
        assert_eq!(random_market(7, 20, 40, &fees), random_market(7, 20, 40, &fees));
        assert_ne!(random_market(7, 20, 40, &fees), random_market(8, 20, 40, &fees));
        assert_eq!(random_market(7, 20, 40, &fees).pool_count(), 40);
    }

    #[test]
    fn balanced_market_has_no_arbitrage() {
        let market = balanced_market(3, 12, 40, &FeeParams::no_fee());
        assert!(find_cycles(&market, None, 4).unwrap().is_empty());
    }

    #[test]
    fn random_cycle_is_closed() {
        let mut r = rng(1);
        for hops in 2..=5 {
            let (market, cycle) = random_cycle(&mut r, hops, &FeeParams::uniswap_v2());
            assert_eq!(cycle.n_hops(), hops);
            assert_eq!(market.pool_count(), hops);
        }
    }
}
