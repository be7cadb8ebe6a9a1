//! Acceptance gate: every criterion prints one PASS/FAIL line and the
//! process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use num_traits::{One, Pow, Signed};
use rand::Rng;

use cyclarb::analysis::{balance_report, compare_convergence, detect_pair_arbitrage, ConvergenceScenario, RingSwap, ScenarioClass};
use cyclarb::compose::{compose_path, virtual_swap_output};
use cyclarb::cycle::{arbitrage_index, best_direction, execute_ring, is_profitable, marginal_at_zero, optimal_input, ArbError};
use cyclarb::fee_policy::{cycle_fee_threshold, market_fee_threshold};
use cyclarb::rational::{int, parse_rational, ratio};
use cyclarb::search::{find_cycles, scan};
use cyclarb::synth::{self, random_cycle, random_fees, random_reserve};
use cyclarb::trace::{group_cyclic_transactions, parse_events, revenue_summary};
use cyclarb::{Amount, FeeParams, Market, Rational, ScanOptions, SwapLeg, TradePath};

use common::{approx, golden_section_argmax, pool, relative_error, ring_utility, token};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(violations: usize, detail: String) -> Outcome {
    Outcome {
        pass: violations == 0,
        detail: format!("{detail}, {violations} violations"),
    }
}

fn timed(limit: Duration, elapsed: Duration, mut o: Outcome) -> Outcome {
    o.pass &= elapsed < limit;
    o.detail += &format!(" in {:.2} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs());
    o
}

fn random_hops(rng: &mut impl Rng) -> usize {
    rng.random_range(2..=5)
}

fn exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = synth::rng(1);
    let mut violations = 0;
    for i in 0..10_000 {
        let fees = random_fees(&mut rng, 900_000);
        let p = pool("P", "A", "B", random_reserve(&mut rng, 1, 1_000_000_000), random_reserve(&mut rng, 1, 1_000_000_000), &fees);
        let input = if i % 2 == 0 { token("A") } else { token("B") };
        let (x, y) = p.reserves_for(&input).unwrap();
        let (x, y) = (x.value().clone(), y.value().clone());
        let delta = random_reserve(&mut rng, 1, 1_000_000_000);
        let (_, out) = p.apply_swap(&input, &Amount::new(delta.clone()).unwrap()).unwrap();
        let after = (&x + fees.r1() * &delta) * (&y - out.value() / fees.r2());
        violations += usize::from(x * y != after);
    }
    timed(Duration::from_secs(30), start.elapsed(), outcome(violations, "10000 swaps".into()))
}

fn composition() -> Outcome {
    let start = Instant::now();
    let mut rng = synth::rng(2);
    let mut violations = 0;
    for _ in 0..1_000 {
        let hops = random_hops(&mut rng);
        let fees = random_fees(&mut rng, 900_000);
        let mut market = Market::new();
        let mut legs = Vec::new();
        for i in 0..hops {
            let (a, b) = (format!("T{i}"), format!("T{}", i + 1));
            let id = format!("P{i}");
            let (t0, t1) = if rng.random_bool(0.5) { (&a, &b) } else { (&b, &a) };
            let (x, y) = (random_reserve(&mut rng, 1, 1_000_000_000), random_reserve(&mut rng, 1, 1_000_000_000));
            market.insert_pool(pool(&id, t0, t1, x, y, &fees)).unwrap();
            legs.push(SwapLeg::new(common::pool_id(&id), token(&a)));
        }
        let path = TradePath::new(legs).unwrap();
        let vp = compose_path(&path, &market).unwrap();
        let delta = Amount::new(random_reserve(&mut rng, 1, 1_000_000_000)).unwrap();
        let mut sequential = delta.clone();
        for leg in path.legs() {
            sequential = market.swap_output(&leg.pool_id, &leg.input_token, &sequential).unwrap();
        }
        violations += usize::from(virtual_swap_output(&vp, &delta) != sequential);
    }
    timed(Duration::from_secs(30), start.elapsed(), outcome(violations, "1000 paths of 2-5 hops".into()))
}

fn derivative() -> Outcome {
    let mut rng = synth::rng(3);
    let mut violations = 0;
    let mut worst = 0f64;
    for _ in 0..1_000 {
        let hops = random_hops(&mut rng);
        let fees = random_fees(&mut rng, 900_000);
        let (market, cycle) = random_cycle(&mut rng, hops, &fees);
        let marginal = marginal_at_zero(&cycle, &market).unwrap();
        let x = cycle.resolve(&market).unwrap().virtual_pool().unwrap().reserve_in().clone();
        let h = x * ratio(1, 100_000_000);
        let fd = ring_utility(&market, &cycle, &h) / &h;
        let err = relative_error(approx(&fd), approx(&marginal), 1.0);
        worst = worst.max(err);
        violations += usize::from(err > 1e-5);
    }
    outcome(violations, format!("1000 cycles, worst error {worst:.2e}"))
}

fn one_direction() -> Outcome {
    let mut rng = synth::rng(4);
    let mut violations = 0;
    for _ in 0..10_000 {
        let fees = random_fees(&mut rng, 900_000);
        let (market, cycle) = random_cycle(&mut rng, 3, &fees);
        violations += usize::from(is_profitable(&cycle, &market).unwrap() && is_profitable(&cycle.reversed(), &market).unwrap());
    }
    outcome(violations, "10000 triangles".into())
}

fn no_fee_always_profitable() -> Outcome {
    let mut rng = synth::rng(5);
    let (mut violations, mut checked) = (0, 0);
    while checked < 10_000 {
        let hops = random_hops(&mut rng);
        let (market, cycle) = random_cycle(&mut rng, hops, &FeeParams::no_fee());
        if arbitrage_index(&cycle, &market).unwrap().is_one() {
            continue;
        }
        checked += 1;
        violations += usize::from(best_direction(&cycle, &market).unwrap().is_none());
    }
    outcome(violations, "10000 unbalanced no-fee cycles".into())
}

fn optimal_sizing() -> Outcome {
    let mut rng = synth::rng(6);
    let (mut violations, mut found, mut worst) = (0, 0, 0f64);
    while found < 1_000 {
        let hops = random_hops(&mut rng);
        let fees = random_fees(&mut rng, 990_000);
        let (market, cycle) = random_cycle(&mut rng, hops, &fees);
        let Some(direction) = best_direction(&cycle, &market).unwrap() else {
            continue;
        };
        found += 1;
        let cycle = cycle.oriented(direction);
        let opt = optimal_input(&cycle, &market).unwrap();
        let u = |d: &Rational| ring_utility(&market, &cycle, d);
        let scale = approx(cycle.resolve(&market).unwrap().hops()[0].reserve_in());
        let oracle = golden_section_argmax(u, scale * 1e-6);
        let err = relative_error(approx(&opt.input), oracle, 0.0);
        worst = worst.max(err);
        let best = u(&opt.input);
        let eps = ratio(1, 1_000_000);
        let probes = [
            &opt.input / int(2),
            &opt.input * int(2),
            &opt.input * (Rational::one() + &eps),
            &opt.input * (Rational::one() - &eps),
        ];
        let dominated = probes.iter().all(|p| best >= u(p));
        violations += usize::from(err > 1e-6 || !dominated || best != opt.profit);
    }
    outcome(violations, format!("1000 profitable cycles, worst error {worst:.2e}"))
}

fn fee_threshold() -> Outcome {
    let mut rng = synth::rng(7);
    let (mut violations, mut checked) = (0, 0);
    let eps = ratio(1, 1_000_000);
    while checked < 1_000 {
        let hops = random_hops(&mut rng);
        let (market, cycle) = random_cycle(&mut rng, hops, &FeeParams::uniswap_v2());
        let Ok((direction, t)) = cycle_fee_threshold(&cycle, &market) else {
            continue;
        };
        checked += 1;
        let index = arbitrage_index(&cycle.oriented(direction), &market).unwrap();
        let marginal = |rate: &Rational| Pow::pow(rate, hops) * &index - Rational::one();
        let flips = marginal(&(&t.lower - &eps)).is_negative() && marginal(&(&t.upper + &eps)).is_positive();
        let repriced = market.with_uniform_fees(&FeeParams::new(t.lower.clone(), Rational::one()).unwrap());
        let cleared = find_cycles(&repriced, None, hops).unwrap().is_empty();
        violations += usize::from(!flips || !cleared);
    }
    let mut markets = 0;
    for seed in 0..20 {
        let market = synth::random_market(seed, 15, 40, &FeeParams::uniswap_v2());
        let report = market_fee_threshold(&market, 3).unwrap();
        let repriced = market.with_uniform_fees(&FeeParams::new(report.market_threshold, Rational::one()).unwrap());
        violations += usize::from(!find_cycles(&repriced, None, 3).unwrap().is_empty());
        markets += 1;
    }
    outcome(violations, format!("1000 unbalanced cycles and {markets} random markets"))
}

fn pair_arbitrage() -> Outcome {
    let mut rng = synth::rng(8);
    let (mut violations, mut checked, mut drawn) = (0, 0, 0);
    while checked < 10_000 {
        drawn += 1;
        let fees = random_fees(&mut rng, 990_000);
        let market = common::near_balanced_triangle(&mut rng, &fees, 5_000);
        if !find_cycles(&market, None, 3).unwrap().is_empty() {
            continue;
        }
        checked += 1;
        violations += usize::from(detect_pair_arbitrage(&market).unwrap().is_some());
    }
    outcome(violations, format!("10000 ring-free triangles ({drawn} drawn)"))
}

fn fee_accrual_dominance() -> Outcome {
    let mut rng = synth::rng(9);
    let mut violations = 0;
    let mut by_class = [0usize; 3];
    for _ in 0..10_000 {
        let fees = common::input_fee(&mut rng, 900_000, 999_999);
        let (x, y) = (int(rng.random_range(1_000..=1_000_000)), int(rng.random_range(1_000..=1_000_000)));
        let factor = ratio(rng.random_range(500..=2_000), 1_000);
        let k = &x / &y * factor;
        let input = if rng.random_bool(0.5) { token("A") } else { token("B") };
        let reserve = if input == token("A") { &x } else { &y };
        let amount = reserve * ratio(rng.random_range(1..=500), 1_000);
        let scenario = ConvergenceScenario {
            pool: pool("P", "A", "B", x.clone(), y.clone(), &fees),
            ring_swap: Some(RingSwap {
                input_token: input,
                amount: Amount::new(amount).unwrap(),
            }),
            target_ratio: k,
        };
        let report = compare_convergence(&scenario).unwrap();
        match report.scenario_class {
            Some(ScenarioClass::SameThenReverse) => by_class[0] += 1,
            Some(ScenarioClass::ReverseThenSame) => by_class[1] += 1,
            Some(ScenarioClass::SameDirectionBoth) => by_class[2] += 1,
            None => {}
        }
        violations += usize::from(report.ring_vs_direct() != std::cmp::Ordering::Greater);
    }
    let mut o = outcome(
        violations,
        format!("10000 scenarios (classes {}/{}/{}), r2 = 1", by_class[0], by_class[1], by_class[2]),
    );
    o.pass &= by_class.iter().all(|&n| n > 0);
    o
}

fn atomicity() -> Outcome {
    let mut rng = synth::rng(10);
    let mut violations = 0;
    for i in 0..1_000 {
        let hops = random_hops(&mut rng);
        let fees = random_fees(&mut rng, 990_000);
        let (mut market, cycle) = random_cycle(&mut rng, hops, &fees);
        let before = market.clone();
        let (cycle, delta, min_profit) = match best_direction(&cycle, &market).unwrap() {
            Some(d) if i % 2 == 0 => {
                let c = cycle.oriented(d);
                let opt = optimal_input(&c, &market).unwrap();
                (c, opt.input, Amount::new(opt.profit + Rational::one()).unwrap())
            }
            Some(d) => (cycle.oriented(d).reversed(), random_reserve(&mut rng, 1, 1_000_000), Amount::zero()),
            None => (cycle, random_reserve(&mut rng, 1, 1_000_000), Amount::zero()),
        };
        let result = execute_ring(&mut market, &cycle, &Amount::new(delta).unwrap(), &min_profit);
        violations += usize::from(!matches!(result, Err(ArbError::Reverted { .. })) || market != before);
    }
    outcome(violations, "1000 forced reverts".into())
}

const RING_FIXTURE: &str = r#"{"tx_id":"0xr","block":1,"log_index":0,"token_in":"USDC","token_out":"USDT","amount_in":"285.71","amount_out":"285.64"}
{"tx_id":"0xr","block":1,"log_index":1,"token_in":"USDT","token_out":"SEAL","amount_in":"285.64","amount_out":"31.2"}
{"tx_id":"0xr","block":1,"log_index":2,"token_in":"SEAL","token_out":"KP3R","amount_in":"31.2","amount_out":"1.5"}
{"tx_id":"0xr","block":1,"log_index":3,"token_in":"KP3R","token_out":"USDC","amount_in":"1.5","amount_out":"303.68"}
"#;

fn ring_fixture() -> Outcome {
    let parsed = parse_events(RING_FIXTURE).unwrap();
    let grouping = group_cyclic_transactions(&parsed.events, None);
    let summary = revenue_summary(&grouping.cyclic, &token("USDC"));
    let ok = parsed.errors.is_empty()
        && grouping.cyclic.len() == 1
        && *grouping.cyclic[0].input.value() == parse_rational("285.71").unwrap()
        && *grouping.cyclic[0].output.value() == parse_rational("303.68").unwrap()
        && grouping.cyclic[0].revenue == parse_rational("17.97").unwrap()
        && summary.total == parse_rational("17.97").unwrap();
    let ring = grouping.cyclic.first();
    Outcome {
        pass: ok,
        detail: format!(
            "input {}, output {}, revenue {}",
            ring.map_or("-".into(), |r| r.input.to_string()),
            ring.map_or("-".into(), |r| r.output.to_string()),
            cyclarb::report::decimal(&summary.total),
        ),
    }
}

fn balance_improvement() -> Outcome {
    let (mut violations, mut committed) = (0, 0);
    // Exact reserves grow in size with every executed ring, so many short
    // runs are much cheaper than a few long ones.
    for seed in 0..100 {
        let mut market = synth::perturbed_market(seed, 10, 25, &FeeParams::uniswap_v2(), 50_000);
        for _ in 0..6 {
            let Some(best) = find_cycles(&market, None, 3).unwrap().into_iter().next() else {
                break;
            };
            let before = market.clone();
            let input = Amount::new(best.optimal_input.clone()).unwrap();
            if execute_ring(&mut market, &best.cycle, &input, &Amount::zero()).is_err() {
                break;
            }
            committed += 1;
            let rates = balance_report(&before, &market, &best.cycle).unwrap();
            violations += usize::from(!rates.moved_toward_one() || rates.after >= rates.before);
        }
    }
    let mut o = outcome(violations, format!("{committed} committed rings"));
    o.pass &= committed > 0;
    o
}

fn performance() -> Outcome {
    let market = synth::random_market(13, 2_000, 10_000, &FeeParams::uniswap_v2());
    let start = Instant::now();
    let found = scan(
        &market,
        &ScanOptions {
            max_hops: 3,
            ..ScanOptions::default()
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    timed(
        Duration::from_secs(5),
        elapsed,
        Outcome {
            pass: !found.is_empty(),
            detail: format!("{} pools, {} opportunities", market.pool_count(), found.len()),
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("exactness suite", exactness),
        ("composition equivalence", composition),
        ("marginal vs finite difference", derivative),
        ("at most one profitable direction", one_direction),
        ("no-fee imbalance is always profitable", no_fee_always_profitable),
        ("optimal sizing vs golden section", optimal_sizing),
        ("fee threshold bracketing and market clearing", fee_threshold),
        ("no pair arbitrage without ring arbitrage", pair_arbitrage),
        ("fee-accrual dominance", fee_accrual_dominance),
        ("atomicity", atomicity),
        ("ring fixture ingest", ring_fixture),
        ("balance improvement", balance_improvement),
        ("performance of a 10000-pool scan", performance),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        failed += usize::from(!result.pass);
        println!(
            "AC{:<2} {} {name}: {} [{:.1} s]",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), suite.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
