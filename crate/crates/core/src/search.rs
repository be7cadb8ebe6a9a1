//! Cycle search over the token graph.
//!
//! Simple cycles are enumerated by bounded depth-first search. Without an
//! anchor every cycle is rooted at its smallest token id, so profits are
//! quoted in that token; with an anchor only cycles through it are listed.
//! Of the two orientations of a cycle the one whose first pool id sorts
//! below its last is listed, and profitability then picks the direction.

use std::collections::BTreeMap;

use num_traits::{One, Signed};
use petgraph::algo::find_negative_cycle;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amm::{Market, Pool, PoolId, TokenId};
use crate::compose::SwapLeg;
use crate::cycle::{ArbError, Cycle, Direction, ResolvedCycle};
use crate::rational::{self, Rational};

pub const DEFAULT_MAX_HOPS: usize = 4;

/// Extra per-edge weight in the log-space prefilter, so rounding never hides
/// a barely profitable cycle.
const PREFILTER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Rational arithmetic throughout; profitability is decided exactly.
    #[default]
    Exact,
    /// Binary64 evaluation, for quick scans of very large markets.
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOptions {
    pub max_hops: usize,
    pub start_token: Option<TokenId>,
    pub mode: EvalMode,
    /// Skip token components without a negative cycle under
    /// `-ln(r1 r2 spot_rate)` edge weights.
    pub negative_cycle_prefilter: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            max_hops: DEFAULT_MAX_HOPS,
            start_token: None,
            mode: EvalMode::Exact,
            negative_cycle_prefilter: false,
        }
    }
}

/// A profitable cycle, oriented in its profitable direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbOpportunity {
    pub cycle: Cycle,
    /// Orientation relative to the enumerated cycle.
    pub direction: Direction,
    pub index: Rational,
    pub marginal_at_zero: Rational,
    pub optimal_input: Rational,
    pub expected_profit: Rational,
    /// Certified bracket around the true optimum, exact mode only.
    pub bracket: Option<(Rational, Rational)>,
}

impl ArbOpportunity {
    pub fn pool_ids(&self) -> Vec<PoolId> {
        self.cycle.path().pool_ids().cloned().collect()
    }
}

struct TokenGraph<'a> {
    tokens: Vec<&'a TokenId>,
    pools: Vec<&'a Pool>,
    /// Per token: `(neighbour, pool)` sorted.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<'a> TokenGraph<'a> {
    fn new(market: &'a Market) -> Self {
        let tokens: Vec<&TokenId> = market.tokens().collect();
        let position: BTreeMap<&TokenId, usize> = tokens.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let pools: Vec<&Pool> = market.pools().filter(|p| !p.is_empty()).collect();
        let mut adjacency = vec![Vec::new(); tokens.len()];
        for (k, pool) in pools.iter().enumerate() {
            let a = position[pool.token0()];
            let b = position[pool.token1()];
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            tokens,
            pools,
            adjacency,
        }
    }

    fn position(&self, token: &TokenId) -> Option<usize> {
        self.tokens.binary_search(&token).ok()
    }

    /// Cycles rooted at `anchor` as `(tokens, pools)` index lists.
    fn cycles_from(&self, anchor: usize, max_hops: usize, above_anchor: bool, live: &[bool]) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut found = Vec::new();
        if !live[anchor] {
            return found;
        }
        let mut tokens = vec![anchor];
        let mut pools = Vec::new();
        let mut on_path = vec![false; self.tokens.len()];
        on_path[anchor] = true;
        self.extend(anchor, max_hops, above_anchor, live, &mut tokens, &mut pools, &mut on_path, &mut found);
        found
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        anchor: usize,
        max_hops: usize,
        above_anchor: bool,
        live: &[bool],
        tokens: &mut Vec<usize>,
        pools: &mut Vec<usize>,
        on_path: &mut [bool],
        found: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) {
        let here = *tokens.last().expect("path starts at the anchor");
        for &(next, pool) in &self.adjacency[here] {
            if pools.contains(&pool) {
                continue;
            }
            if next == anchor {
                if !pools.is_empty() && pools[0] < pool {
                    let mut cycle_pools = pools.clone();
                    cycle_pools.push(pool);
                    found.push((tokens.clone(), cycle_pools));
                }
                continue;
            }
            if on_path[next] || !live[next] || (above_anchor && next < anchor) || pools.len() + 2 > max_hops {
                continue;
            }
            on_path[next] = true;
            tokens.push(next);
            pools.push(pool);
            self.extend(anchor, max_hops, above_anchor, live, tokens, pools, on_path, found);
            pools.pop();
            tokens.pop();
            on_path[next] = false;
        }
    }

    fn to_cycle(&self, tokens: &[usize], pools: &[usize]) -> Cycle {
        let legs = tokens
            .iter()
            .zip(pools)
            .map(|(&t, &p)| SwapLeg::new(self.pools[p].id().clone(), self.tokens[t].clone()))
            .collect();
        Cycle::from_legs_unchecked(legs)
    }

    /// Marks tokens whose component holds a negative log-rate cycle.
    fn negative_cycle_components(&self) -> Vec<bool> {
        let n = self.tokens.len();
        let mut components = UnionFind::<usize>::new(n);
        for pool_edges in self.adjacency.iter().enumerate() {
            for &(b, _) in pool_edges.1 {
                components.union(pool_edges.0, b);
            }
        }
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for t in 0..n {
            members.entry(components.find(t)).or_default().push(t);
        }
        let flagged: Vec<Vec<usize>> = members
            .into_par_iter()
            .filter_map(|(_, nodes)| self.has_negative_cycle(&nodes).then_some(nodes))
            .collect();
        let mut live = vec![false; n];
        for t in flagged.into_iter().flatten() {
            live[t] = true;
        }
        live
    }

    fn has_negative_cycle(&self, nodes: &[usize]) -> bool {
        if nodes.len() < 2 {
            return false;
        }
        let local: BTreeMap<usize, NodeIndex> = nodes.iter().enumerate().map(|(i, &t)| (t, NodeIndex::new(i))).collect();
        let mut graph = DiGraph::<(), f64>::with_capacity(nodes.len(), 0);
        for _ in nodes {
            graph.add_node(());
        }
        for &a in nodes {
            for &(b, p) in &self.adjacency[a] {
                let pool = self.pools[p];
                let rate = pool.fees().rate() * pool.spot_rate(self.tokens[a]).expect("pool holds its tokens");
                graph.add_edge(local[&a], local[&b], -rational::to_f64(&rate).ln() - PREFILTER_SLACK);
            }
        }
        find_negative_cycle(&graph, NodeIndex::new(0)).is_some()
    }
}

/// Every simple cycle of 2..=`max_hops` distinct pools, each listed once.
pub fn enumerate_cycles(market: &Market, start_token: Option<&TokenId>, max_hops: usize) -> Vec<Cycle> {
    let graph = TokenGraph::new(market);
    let live = vec![true; graph.tokens.len()];
    enumerate_in(&graph, start_token, max_hops, &live)
}

fn enumerate_in(graph: &TokenGraph<'_>, start_token: Option<&TokenId>, max_hops: usize, live: &[bool]) -> Vec<Cycle> {
    let raw: Vec<(Vec<usize>, Vec<usize>)> = match start_token {
        Some(token) => match graph.position(token) {
            Some(anchor) => graph.cycles_from(anchor, max_hops, false, live),
            None => Vec::new(),
        },
        None => (0..graph.tokens.len())
            .into_par_iter()
            .flat_map_iter(|anchor| graph.cycles_from(anchor, max_hops, true, live))
            .collect(),
    };
    raw.iter().map(|(tokens, pools)| graph.to_cycle(tokens, pools)).collect()
}

/// Profitable cycles, most profitable first.
pub fn find_cycles(market: &Market, start_token: Option<&TokenId>, max_hops: usize) -> Result<Vec<ArbOpportunity>, ArbError> {
    scan(
        market,
        &ScanOptions {
            max_hops,
            start_token: start_token.cloned(),
            ..ScanOptions::default()
        },
    )
}

pub fn scan(market: &Market, options: &ScanOptions) -> Result<Vec<ArbOpportunity>, ArbError> {
    if options.max_hops < 2 {
        return Err(ArbError::TooShort);
    }
    let graph = TokenGraph::new(market);
    let live = if options.negative_cycle_prefilter {
        graph.negative_cycle_components()
    } else {
        vec![true; graph.tokens.len()]
    };
    let cycles = enumerate_in(&graph, options.start_token.as_ref(), options.max_hops, &live);
    let evaluated: Vec<Option<ArbOpportunity>> = cycles
        .par_iter()
        .map(|cycle| match options.mode {
            EvalMode::Exact => evaluate_exact(cycle, market),
            EvalMode::Float => evaluate_float(cycle, market),
        })
        .collect::<Result<_, _>>()?;
    let mut found: Vec<ArbOpportunity> = evaluated.into_iter().flatten().collect();
    sort_opportunities(&mut found);
    Ok(found)
}

/// Profit descending, then pool-id sequence, then input tokens.
pub fn sort_opportunities(found: &mut [ArbOpportunity]) {
    found.sort_by(|a, b| {
        b.expected_profit
            .cmp(&a.expected_profit)
            .then_with(|| a.pool_ids().cmp(&b.pool_ids()))
            .then_with(|| a.cycle.legs().cmp(b.cycle.legs()))
    });
}

fn uniform_fees(resolved: &ResolvedCycle) -> bool {
    let first = resolved.hops()[0].fees();
    resolved.hops().iter().all(|h| h.fees() == first)
}

fn evaluate_exact(cycle: &Cycle, market: &Market) -> Result<Option<ArbOpportunity>, ArbError> {
    let forward = cycle.resolve(market)?;
    if !uniform_fees(&forward) {
        return Ok(None);
    }
    let (direction, oriented) = if forward.is_profitable() {
        (Direction::Forward, cycle.clone())
    } else {
        let reverse = cycle.reversed();
        if !reverse.resolve(market)?.is_profitable() {
            return Ok(None);
        }
        (Direction::Reverse, reverse)
    };
    let resolved = oriented.resolve(market)?;
    let optimal = resolved.optimal_input()?;
    Ok(Some(ArbOpportunity {
        index: resolved.index(),
        marginal_at_zero: resolved.marginal_at_zero(),
        optimal_input: optimal.input,
        expected_profit: optimal.profit,
        bracket: Some((optimal.lower, optimal.upper)),
        cycle: oriented,
        direction,
    }))
}

/// `(reserve_in, reserve_out, r1, rate)` per hop, as floats.
fn float_hops(resolved: &ResolvedCycle) -> Vec<(f64, f64, f64, f64)> {
    resolved
        .hops()
        .iter()
        .map(|h| {
            (
                rational::to_f64(h.reserve_in()),
                rational::to_f64(h.reserve_out()),
                rational::to_f64(h.fees().r1()),
                rational::to_f64(&h.fees().rate()),
            )
        })
        .collect()
}

fn evaluate_float(cycle: &Cycle, market: &Market) -> Result<Option<ArbOpportunity>, ArbError> {
    let resolved = cycle.resolve(market)?;
    if !uniform_fees(&resolved) {
        return Ok(None);
    }
    let hops = float_hops(&resolved);
    let n = hops.len() as f64;
    let log_index: f64 = hops.iter().map(|(x, y, _, _)| (y / x).ln()).sum();
    let log_rate = hops[0].3.ln();
    let (direction, oriented, log_index) = if n * log_rate + log_index > 0.0 {
        (Direction::Forward, cycle.clone(), log_index)
    } else if n * log_rate - log_index > 0.0 {
        (Direction::Reverse, cycle.reversed(), -log_index)
    } else {
        return Ok(None);
    };
    let hops = match direction {
        Direction::Forward => hops,
        Direction::Reverse => float_hops(&oriented.resolve(market)?),
    };
    let (r1, rate) = (hops[0].2, hops[0].3);
    let (x, z) = hops[1..].iter().fold((hops[0].0, hops[0].1), |(x, z), &(b_in, b_out, _, _)| {
        let denom = b_in + rate * z;
        (x * b_in / denom, rate * z * b_out / denom)
    });
    let input = ((rate * x * z).sqrt() - x) / r1;
    let profit = rate * z * input / (x + r1 * input) - input;
    let marginal = (n * log_rate + log_index).exp_m1();
    let exact = |v: f64| rational::from_f64(v).unwrap_or_else(Rational::one);
    if !(input > 0.0 && profit.is_finite()) {
        return Ok(None);
    }
    Ok(Some(ArbOpportunity {
        cycle: oriented,
        direction,
        index: exact(log_index.exp()),
        marginal_at_zero: exact(marginal),
        optimal_input: exact(input),
        expected_profit: exact(profit.max(0.0)),
        bracket: None,
    }))
}

/// True if either orientation of `cycle` profits, decided exactly.
pub fn has_profitable_direction(cycle: &Cycle, market: &Market) -> Result<bool, ArbError> {
    let resolved = cycle.resolve(market)?;
    let rate: Rational = resolved
        .hops()
        .iter()
        .fold(Rational::one(), |acc, h| acc * h.fees().rate());
    let index = resolved.index();
    Ok((&rate * &index - Rational::one()).is_positive() || (&rate / &index - Rational::one()).is_positive())
}
