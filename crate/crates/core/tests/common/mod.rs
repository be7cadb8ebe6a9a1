//! Oracles shared by the integration suites. They only use pool-level swaps
//! and brute-force search, never the closed forms under test.

#![allow(dead_code)]

use num_traits::{One, Signed, Zero};
use rand::Rng;

use cyclarb::rational::{from_f64, int, ratio, to_f64};
use cyclarb::{Amount, Cycle, FeeParams, Market, Pool, PoolId, Rational, TokenId};

pub fn token(name: &str) -> TokenId {
    TokenId::new(name).unwrap()
}

pub fn pool_id(name: &str) -> PoolId {
    PoolId::new(name).unwrap()
}

pub fn pool(id: &str, a: &str, b: &str, x: Rational, y: Rational, fees: &FeeParams) -> Pool {
    Pool::with_reserves(
        pool_id(id),
        token(a),
        token(b),
        Amount::new(x).unwrap(),
        Amount::new(y).unwrap(),
        fees.clone(),
        Amount::from_integer(1),
    )
    .unwrap()
}

/// `(r1, 1)` with `r1` uniform over whole ppm in `[lo_ppm, hi_ppm]`.
pub fn input_fee(rng: &mut impl Rng, lo_ppm: u32, hi_ppm: u32) -> FeeParams {
    FeeParams::from_ppm(rng.random_range(lo_ppm..=hi_ppm), 1_000_000).unwrap()
}

/// Runs `delta` through the cycle's pools one swap at a time.
pub fn ring_output(market: &Market, cycle: &Cycle, delta: &Rational) -> Rational {
    if delta.is_zero() {
        return Rational::zero();
    }
    let mut amount = Amount::new(delta.clone()).unwrap();
    for leg in cycle.legs() {
        amount = market.swap_output(&leg.pool_id, &leg.input_token, &amount).unwrap();
    }
    amount.into_inner()
}

pub fn ring_utility(market: &Market, cycle: &Cycle, delta: &Rational) -> Rational {
    ring_output(market, cycle, delta) - delta
}

/// Exact rational close to a positive float.
pub fn rational_of(value: f64) -> Rational {
    from_f64(value).expect("finite float")
}

/// Maximiser of a concave `f` on `[0, inf)` with `f(0) = 0`, by doubling to a
/// bracket and golden-section search on exact values.
pub fn golden_section_argmax(f: impl Fn(&Rational) -> Rational, scale: f64) -> f64 {
    let mut hi = scale;
    while f(&rational_of(2.0 * hi)) > f(&rational_of(hi)) {
        hi *= 2.0;
    }
    hi *= 2.0;
    let mut lo = 0.0f64;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(&rational_of(a)), f(&rational_of(b)));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(&rational_of(b));
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(&rational_of(a));
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// `|a - b| / max(|b|, floor)` in floats.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Whether some point of the grid `scale * 8^j`, `j` in `-30..=4`, makes the
/// ring profitable. Profitable sizes form an interval starting at zero, so a
/// sparse grid reaching far below `scale` is enough.
pub fn grid_finds_profit(market: &Market, cycle: &Cycle, scale: &Rational) -> bool {
    let mut delta = scale / Rational::from_integer(num_bigint::BigInt::one() << 90);
    for _ in 0..=34 {
        if ring_utility(market, cycle, &delta).is_positive() {
            return true;
        }
        delta *= int(8);
    }
    false
}

/// A triangle `A -> B -> C -> A` priced near random external prices, with
/// each reserve nudged by up to `noise_ppm`.
pub fn near_balanced_triangle(rng: &mut impl Rng, fees: &FeeParams, noise_ppm: i64) -> Market {
    let [pa, pb, pc] = [(); 3].map(|_| int(rng.random_range(1..=1000)));
    let mut market = Market::new();
    for (id, a, b, p_a, p_b) in [("AB", "A", "B", &pa, &pb), ("BC", "B", "C", &pb, &pc), ("CA", "C", "A", &pc, &pa)] {
        let depth = int(rng.random_range(1_000..=1_000_000));
        let noise = ratio(1_000_000 + rng.random_range(-noise_ppm..=noise_ppm), 1_000_000);
        market.insert_pool(pool(id, a, b, &depth * p_b * noise, &depth * p_a, fees)).unwrap();
    }
    market
}

pub fn approx(value: &Rational) -> f64 {
    to_f64(value)
}
