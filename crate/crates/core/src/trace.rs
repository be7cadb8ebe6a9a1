//! Swap-event logs and the cyclic transactions hidden in them.
//!
//! Events arrive as JSON Lines:
//!
//! ```text
//! {"tx_id":"0xab","block":1,"log_index":0,"token_in":"USDC","token_out":"USDT","amount_in":"285.71","amount_out":"285.65"}
//! ```
//!
//! Within one transaction, consecutive swaps chain when the output token and
//! amount of one are the input token and amount of the next. A chained run
//! that ends in its first input token is a cyclic transaction.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::{Amount, TokenId};
use crate::cycle::RingExecution;
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SwapEvent {
    pub tx_id: String,
    pub block: u64,
    pub log_index: u64,
    pub token_in: TokenId,
    pub token_out: TokenId,
    pub amount_in: Amount,
    pub amount_out: Amount,
}

/// A rejected input line, numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("no valid events ({} malformed lines, first: {})", .0.len(), .0[0])]
    NoValidEvents(Vec<ParseError>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedEvents {
    /// Sorted by `(block, tx_id, log_index)`.
    pub events: Vec<SwapEvent>,
    pub errors: Vec<ParseError>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    tx_id: String,
    block: u64,
    log_index: u64,
    token_in: String,
    token_out: String,
    amount_in: String,
    amount_out: String,
}

fn positive_amount(field: &str, text: &str) -> Result<Amount, String> {
    let value = parse_rational(text).map_err(|e| format!("{field}: {e}"))?;
    if !value.is_positive() {
        return Err(format!("{field} must be positive, got {text}"));
    }
    Amount::new(value).map_err(|e| e.to_string())
}

fn parse_line(line: &str) -> Result<SwapEvent, String> {
    let raw: RawEvent = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.tx_id.is_empty() {
        return Err("tx_id must be non-empty".into());
    }
    let token_in = TokenId::new(raw.token_in).map_err(|e| format!("token_in: {e}"))?;
    let token_out = TokenId::new(raw.token_out).map_err(|e| format!("token_out: {e}"))?;
    if token_in == token_out {
        return Err(format!("token_in and token_out are both {token_in}"));
    }
    Ok(SwapEvent {
        tx_id: raw.tx_id,
        block: raw.block,
        log_index: raw.log_index,
        token_in,
        token_out,
        amount_in: positive_amount("amount_in", &raw.amount_in)?,
        amount_out: positive_amount("amount_out", &raw.amount_out)?,
    })
}

/// Parses JSON Lines from raw bytes. Blank lines are skipped; every other
/// line yields an event or an error. Fails only if there are errors and no
/// event at all.
pub fn parse_events_from_bytes(input: &[u8]) -> Result<ParsedEvents, IngestError> {
    let mut parsed = ParsedEvents::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in input.split(|&b| b == b'\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let outcome = std::str::from_utf8(raw)
            .map_err(|_| "line is not valid UTF-8".to_string())
            .and_then(|text| {
                if text.trim().is_empty() {
                    Ok(None)
                } else {
                    parse_line(text).map(Some)
                }
            });
        match outcome {
            Ok(None) => {}
            Ok(Some(event)) => {
                if seen.insert((event.tx_id.clone(), event.log_index)) {
                    parsed.events.push(event);
                } else {
                    parsed.errors.push(ParseError {
                        line,
                        reason: format!("duplicate log_index {} in tx {}", event.log_index, event.tx_id),
                    });
                }
            }
            Err(reason) => parsed.errors.push(ParseError { line, reason }),
        }
    }
    if parsed.events.is_empty() && !parsed.errors.is_empty() {
        return Err(IngestError::NoValidEvents(parsed.errors));
    }
    parsed
        .events
        .sort_by(|a, b| (a.block, &a.tx_id, a.log_index).cmp(&(b.block, &b.tx_id, b.log_index)));
    Ok(parsed)
}

pub fn parse_events(input: &str) -> Result<ParsedEvents, IngestError> {
    parse_events_from_bytes(input.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicTransaction {
    pub tx_id: String,
    pub block: u64,
    pub legs: Vec<SwapEvent>,
    pub start_token: TokenId,
    pub input: Amount,
    pub output: Amount,
    pub revenue: Rational,
}

impl CyclicTransaction {
    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }
}

/// Swaps of one transaction that are not part of any closed chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonCyclicGroup {
    pub tx_id: String,
    pub legs: Vec<SwapEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grouping {
    pub cyclic: Vec<CyclicTransaction>,
    pub non_cyclic: Vec<NonCyclicGroup>,
}

/// `b` continues `a`: same token, and amounts equal (or within `slack` of
/// the larger one when given).
fn chains(a: &SwapEvent, b: &SwapEvent, slack: Option<&Rational>) -> bool {
    if a.token_out != b.token_in {
        return false;
    }
    match slack {
        None => a.amount_out == b.amount_in,
        Some(slack) => {
            let gap = (&a.amount_out - &b.amount_in).abs();
            let scale = a.amount_out.value().max(b.amount_in.value());
            gap <= slack * scale
        }
    }
}

/// Splits one transaction's legs (sorted by log index) into maximal closed
/// chained segments and leftovers.
fn split_transaction(legs: &[SwapEvent], slack: Option<&Rational>) -> (Vec<CyclicTransaction>, Vec<SwapEvent>) {
    let mut cyclic = Vec::new();
    let mut rest = Vec::new();
    let mut i = 0;
    while i < legs.len() {
        let mut end = i;
        while end + 1 < legs.len() && chains(&legs[end], &legs[end + 1], slack) {
            end += 1;
        }
        let closing = (i + 1..=end).rev().find(|&j| legs[j].token_out == legs[i].token_in);
        match closing {
            Some(j) => {
                let segment = legs[i..=j].to_vec();
                let input = segment[0].amount_in.clone();
                let output = segment[segment.len() - 1].amount_out.clone();
                cyclic.push(CyclicTransaction {
                    tx_id: segment[0].tx_id.clone(),
                    block: segment[0].block,
                    start_token: segment[0].token_in.clone(),
                    revenue: &output - &input,
                    input,
                    output,
                    legs: segment,
                });
                i = j + 1;
            }
            None => {
                rest.push(legs[i].clone());
                i += 1;
            }
        }
    }
    (cyclic, rest)
}

/// Groups events by transaction and extracts cyclic transactions. Output
/// follows the `(block, tx_id)` order of the input.
pub fn group_cyclic_transactions(events: &[SwapEvent], slack: Option<&Rational>) -> Grouping {
    let mut by_tx: BTreeMap<(u64, &str), Vec<SwapEvent>> = BTreeMap::new();
    for event in events {
        by_tx.entry((event.block, &event.tx_id)).or_default().push(event.clone());
    }
    let split: Vec<(Vec<CyclicTransaction>, NonCyclicGroup)> = by_tx
        .into_par_iter()
        .map(|((_, tx_id), mut legs)| {
            legs.sort_by_key(|e| e.log_index);
            let (cyclic, rest) = split_transaction(&legs, slack);
            (
                cyclic,
                NonCyclicGroup {
                    tx_id: tx_id.to_string(),
                    legs: rest,
                },
            )
        })
        .collect();
    let mut grouping = Grouping::default();
    for (cyclic, rest) in split {
        grouping.cyclic.extend(cyclic);
        if !rest.legs.is_empty() {
            grouping.non_cyclic.push(rest);
        }
    }
    grouping
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevenueSummary {
    pub unit: TokenId,
    pub count: usize,
    pub total: Rational,
    pub mean: Rational,
    /// Cycle length to number of cycles.
    pub by_length: BTreeMap<usize, usize>,
}

/// Revenue of the cyclic transactions that start in `unit`.
pub fn revenue_summary(cyclics: &[CyclicTransaction], unit: &TokenId) -> RevenueSummary {
    let selected: Vec<&CyclicTransaction> = cyclics.iter().filter(|c| c.start_token == *unit).collect();
    let total: Rational = selected.iter().map(|c| c.revenue.clone()).sum();
    let count = selected.len();
    let mean = if count == 0 {
        Rational::zero()
    } else {
        &total / Rational::from_integer(count.into())
    };
    let mut by_length = BTreeMap::new();
    for c in &selected {
        *by_length.entry(c.len()).or_insert(0) += 1;
    }
    RevenueSummary {
        unit: unit.clone(),
        count,
        total,
        mean,
        by_length,
    }
}

/// The swap events an executed ring would log.
pub fn events_from_execution(run: &RingExecution, tx_id: &str, block: u64) -> Vec<SwapEvent> {
    run.legs
        .iter()
        .enumerate()
        .map(|(i, leg)| SwapEvent {
            tx_id: tx_id.to_string(),
            block,
            log_index: i as u64,
            token_in: leg.token_in.clone(),
            token_out: leg.token_out.clone(),
            amount_in: leg.amount_in.clone(),
            amount_out: leg.amount_out.clone(),
        })
        .collect()
}
