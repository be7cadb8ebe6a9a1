mod common;

use num_traits::{Signed, Zero};
use rand::Rng;

use cyclarb::cycle::{arbitrage_index, best_direction, execute_ring, is_profitable, marginal_at_zero, optimal_input, ArbError};
use cyclarb::rational::{int, ratio};
use cyclarb::synth::{self, random_cycle, random_fees, random_reserve};
use cyclarb::{Amount, Rational};

use common::{approx, grid_finds_profit, ring_utility};

#[test]
fn utility_is_strictly_concave_on_profitable_cycles() {
    let mut rng = synth::rng(21);
    let mut checked = 0;
    while checked < 500 {
        let hops = rng.random_range(2..=5);
        let fees = random_fees(&mut rng, 950_000);
        let (market, cycle) = random_cycle(&mut rng, hops, &fees);
        let Some(d) = best_direction(&cycle, &market).unwrap() else {
            continue;
        };
        checked += 1;
        let cycle = cycle.oriented(d);
        let scale = cycle.resolve(&market).unwrap().hops()[0].reserve_in().clone();
        for _ in 0..4 {
            let a = &scale * ratio(rng.random_range(1..=1_000_000), 1_000_000_000);
            let b = &scale * ratio(rng.random_range(1..=1_000_000), 1_000_000_000);
            if a == b {
                continue;
            }
            let mid = (&a + &b) / int(2);
            let u = |x: &Rational| ring_utility(&market, &cycle, x);
            assert!(u(&mid) * int(2) > u(&a) + u(&b));
        }
    }
}

#[test]
fn profitability_criterion_matches_grid_search() {
    let mut rng = synth::rng(22);
    let (mut agreed, mut skipped) = (0, 0);
    for _ in 0..10_000 {
        let fees = random_fees(&mut rng, 900_000);
        let (market, cycle) = random_cycle(&mut rng, 3, &fees);
        let marginal = marginal_at_zero(&cycle, &market).unwrap();
        if approx(&marginal).abs() < 1e-9 {
            skipped += 1;
            continue;
        }
        let scale = cycle.resolve(&market).unwrap().hops()[0].reserve_in().clone();
        assert_eq!(
            is_profitable(&cycle, &market).unwrap(),
            grid_finds_profit(&market, &cycle, &scale),
            "cycle {cycle:?}"
        );
        agreed += 1;
    }
    assert_eq!(agreed + skipped, 10_000);
}

#[test]
fn committed_ring_lowers_index_toward_one() {
    let mut rng = synth::rng(23);
    let mut committed = 0;
    while committed < 300 {
        let hops = rng.random_range(2..=5);
        let fees = random_fees(&mut rng, 990_000);
        let (mut market, cycle) = random_cycle(&mut rng, hops, &fees);
        let Some(d) = best_direction(&cycle, &market).unwrap() else {
            continue;
        };
        let cycle = cycle.oriented(d);
        let before = arbitrage_index(&cycle, &market).unwrap();
        // Any profitable size, not only the optimum.
        let opt = optimal_input(&cycle, &market).unwrap();
        let delta = &opt.input * ratio(rng.random_range(1..=1_000), 1_000);
        if execute_ring(&mut market, &cycle, &Amount::new(delta).unwrap(), &Amount::zero()).is_err() {
            continue;
        }
        committed += 1;
        let after = arbitrage_index(&cycle, &market).unwrap();
        assert!(before > int(1) && after < before);
    }
}

#[test]
fn residual_profit_after_optimal_execution_is_negligible() {
    let mut rng = synth::rng(24);
    let mut executed = 0;
    while executed < 300 {
        let hops = rng.random_range(2..=5);
        let fees = random_fees(&mut rng, 990_000);
        let (mut market, cycle) = random_cycle(&mut rng, hops, &fees);
        let Some(d) = best_direction(&cycle, &market).unwrap() else {
            continue;
        };
        let cycle = cycle.oriented(d);
        let first = optimal_input(&cycle, &market).unwrap();
        execute_ring(&mut market, &cycle, &Amount::new(first.input.clone()).unwrap(), &Amount::zero()).unwrap();
        executed += 1;
        let residual = match optimal_input(&cycle, &market) {
            Ok(again) => again.profit,
            Err(ArbError::NotProfitable) => Rational::zero(),
            Err(err) => panic!("{err}"),
        };
        assert!(residual <= &first.profit * ratio(1, 1_000), "residual {residual} after {}", first.profit);
    }
}

#[test]
fn failed_leg_rolls_back_earlier_legs() {
    let mut rng = synth::rng(25);
    for _ in 0..200 {
        let fees = random_fees(&mut rng, 990_000);
        let (mut market, cycle) = random_cycle(&mut rng, 4, &fees);
        let before = market.clone();
        let delta = random_reserve(&mut rng, 1, 1_000_000);
        match execute_ring(&mut market, &cycle, &Amount::new(delta).unwrap(), &Amount::zero()) {
            Ok(run) => assert!(run.profit.is_positive()),
            Err(ArbError::Reverted { .. }) => assert_eq!(market, before),
            Err(err) => panic!("{err}"),
        }
    }
}
