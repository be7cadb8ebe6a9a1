//! JSON and CSV renderings of analysis results. Amounts are decimal strings
//! with at most 18 significant digits.

use serde_json::{json, Value};

use crate::analysis::{ConvergenceReport, QuadraticSurd, ScenarioClass};
use crate::cycle::{cycle_label, Cycle, Direction, OptimalInput};
use crate::fee_policy::{FeeSweepPoint, FeeThresholdReport};
use crate::rational::{format_significant, Rational};
use crate::search::ArbOpportunity;
use crate::trace::{CyclicTransaction, ParseError, RevenueSummary};

pub const SIGNIFICANT_DIGITS: usize = 18;

pub fn decimal(value: &Rational) -> String {
    format_significant(value, SIGNIFICANT_DIGITS)
}

fn surd(value: &QuadraticSurd) -> String {
    value.to_string()
}

fn direction(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Reverse => "reverse",
    }
}

fn class(c: Option<ScenarioClass>) -> &'static str {
    match c {
        None => "none",
        Some(ScenarioClass::SameThenReverse) => "same-direction-then-reverse",
        Some(ScenarioClass::ReverseThenSame) => "reverse-then-same",
        Some(ScenarioClass::SameDirectionBoth) => "same-direction-both",
    }
}

fn legs_json(cycle: &Cycle) -> Value {
    serde_json::to_value(cycle.legs()).expect("legs serialize")
}

pub fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}

pub fn opportunities_json(found: &[ArbOpportunity]) -> Value {
    Value::Array(
        found
            .iter()
            .map(|o| {
                json!({
                    "cycle": legs_json(&o.cycle),
                    "direction": direction(o.direction),
                    "index": decimal(&o.index),
                    "marginal": decimal(&o.marginal_at_zero),
                    "optimal_input": decimal(&o.optimal_input),
                    "expected_profit": decimal(&o.expected_profit),
                    "profit_token": o.cycle.start_token().as_str(),
                })
            })
            .collect(),
    )
}

pub fn opportunities_csv(found: &[ArbOpportunity]) -> String {
    csv_string(
        &["cycle", "direction", "hops", "index", "marginal", "optimal_input", "expected_profit", "profit_token"],
        found
            .iter()
            .map(|o| {
                vec![
                    cycle_label(&o.cycle),
                    direction(o.direction).to_string(),
                    o.cycle.n_hops().to_string(),
                    decimal(&o.index),
                    decimal(&o.marginal_at_zero),
                    decimal(&o.optimal_input),
                    decimal(&o.expected_profit),
                    o.cycle.start_token().to_string(),
                ]
            })
            .collect(),
    )
}

/// Sizing of one cycle; `optimal` is absent when it is not profitable.
pub fn optimal_json(cycle: &Cycle, index: &Rational, marginal: &Rational, optimal: Option<&OptimalInput>) -> Value {
    let mut value = json!({
        "cycle": legs_json(cycle),
        "index": decimal(index),
        "marginal": decimal(marginal),
        "profitable": optimal.is_some(),
    });
    if let Some(opt) = optimal {
        value["optimal_input"] = json!(decimal(&opt.input));
        value["expected_profit"] = json!(decimal(&opt.profit));
        value["bracket"] = json!([decimal(&opt.lower), decimal(&opt.upper)]);
    }
    value
}

pub fn optimal_csv(cycle: &Cycle, index: &Rational, marginal: &Rational, optimal: Option<&OptimalInput>) -> String {
    let (input, profit) = match optimal {
        Some(opt) => (decimal(&opt.input), decimal(&opt.profit)),
        None => (String::new(), String::new()),
    };
    csv_string(
        &["cycle", "index", "marginal", "optimal_input", "expected_profit"],
        vec![vec![cycle_label(cycle), decimal(index), decimal(marginal), input, profit]],
    )
}

pub fn fee_threshold_json(report: &FeeThresholdReport) -> Value {
    json!({
        "market_threshold": decimal(&report.market_threshold),
        "cycles": report.per_cycle.iter().map(|c| json!({
            "cycle": legs_json(&c.cycle),
            "direction": direction(c.direction),
            "index": decimal(&c.threshold.index),
            "hops": c.threshold.hops,
            "threshold": decimal(&c.threshold.lower),
            "exact": c.threshold.is_exact(),
        })).collect::<Vec<_>>(),
    })
}

pub fn fee_threshold_csv(report: &FeeThresholdReport) -> String {
    csv_string(
        &["cycle", "index", "hops", "threshold"],
        report
            .per_cycle
            .iter()
            .map(|c| {
                vec![
                    cycle_label(&c.cycle),
                    decimal(&c.threshold.index),
                    c.threshold.hops.to_string(),
                    decimal(&c.threshold.lower),
                ]
            })
            .collect(),
    )
}

pub fn fee_sweep_csv(points: &[FeeSweepPoint]) -> String {
    csv_string(
        &["fee", "marginal", "optimal_profit"],
        points
            .iter()
            .map(|p| vec![decimal(&p.fee), decimal(&p.marginal_at_zero), decimal(&p.optimal_profit)])
            .collect(),
    )
}

fn ordering_word(report: &ConvergenceReport) -> &'static str {
    match report.ring_vs_direct() {
        std::cmp::Ordering::Less => "less",
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "greater",
    }
}

pub fn convergence_json(reports: &[ConvergenceReport]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|r| {
                json!({
                    "scenario_class": class(r.scenario_class),
                    "initial_product": decimal(&r.initial_product),
                    "product_direct": surd(&r.product_direct),
                    "product_with_ring": surd(&r.product_with_ring),
                    "ring_vs_direct": ordering_word(r),
                    "fees_direct": {"token0": surd(&r.fees_direct.token0), "token1": surd(&r.fees_direct.token1)},
                    "fees_with_ring": {"token0": surd(&r.fees_with_ring.token0), "token1": surd(&r.fees_with_ring.token1)},
                })
            })
            .collect(),
    )
}

pub fn convergence_csv(reports: &[ConvergenceReport]) -> String {
    csv_string(
        &[
            "scenario",
            "scenario_class",
            "initial_product",
            "product_direct",
            "product_with_ring",
            "ring_vs_direct",
            "fees_direct_token0",
            "fees_direct_token1",
            "fees_with_ring_token0",
            "fees_with_ring_token1",
        ],
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    i.to_string(),
                    class(r.scenario_class).to_string(),
                    decimal(&r.initial_product),
                    surd(&r.product_direct),
                    surd(&r.product_with_ring),
                    ordering_word(r).to_string(),
                    surd(&r.fees_direct.token0),
                    surd(&r.fees_direct.token1),
                    surd(&r.fees_with_ring.token0),
                    surd(&r.fees_with_ring.token1),
                ]
            })
            .collect(),
    )
}

fn summary_value(s: &RevenueSummary) -> Value {
    json!({
        "unit": s.unit.as_str(),
        "count": s.count,
        "total_revenue": decimal(&s.total),
        "mean_revenue": decimal(&s.mean),
        "by_length": s.by_length.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
    })
}

fn cyclic_value(c: &CyclicTransaction) -> Value {
    json!({
        "tx_id": c.tx_id,
        "block": c.block,
        "start_token": c.start_token.as_str(),
        "length": c.len(),
        "input": decimal(c.input.value()),
        "output": decimal(c.output.value()),
        "revenue": decimal(&c.revenue),
    })
}

pub fn ingest_json(summaries: &[RevenueSummary], cyclic: &[CyclicTransaction], non_cyclic: usize, errors: &[ParseError]) -> Value {
    json!({
        "summaries": summaries.iter().map(summary_value).collect::<Vec<_>>(),
        "cyclic_transactions": cyclic.iter().map(cyclic_value).collect::<Vec<_>>(),
        "non_cyclic_transactions": non_cyclic,
        "parse_errors": errors,
    })
}

pub fn ingest_csv(summaries: &[RevenueSummary]) -> String {
    csv_string(
        &["unit", "count", "total_revenue", "mean_revenue", "by_length"],
        summaries
            .iter()
            .map(|s| {
                let histogram = s
                    .by_length
                    .iter()
                    .map(|(k, v)| format!("{k}:{v}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                vec![
                    s.unit.to_string(),
                    s.count.to_string(),
                    decimal(&s.total),
                    decimal(&s.mean),
                    histogram,
                ]
            })
            .collect(),
    )
}
