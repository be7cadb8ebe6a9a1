use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cyclarb::analysis::{balance_report, compare_convergence};
use cyclarb::cycle::{cycle_label, execute_ring, ArbError};
use cyclarb::fee_policy::{market_fee_threshold, sweep_fee_profitability};
use cyclarb::io::{load_market, read_bytes, read_text, scenarios_from_json};
use cyclarb::rational::parse_rational;
use cyclarb::report::{self, decimal};
use cyclarb::search::{find_cycles, scan};
use cyclarb::trace::{
    events_from_execution, group_cyclic_transactions, parse_events_from_bytes, revenue_summary, ParsedEvents,
};
use cyclarb::{synth, Amount, Cycle, EvalMode, FeeParams, PoolId, Rational, ScanOptions, SwapLeg, TokenId, TradePath};

const NOT_FOUND: u8 = 3;

const MARKET_SCHEMA: &str = "\
Market file (JSON):
  {\"allow_parallel_pools\": false,
   \"pools\": [{\"id\": \"XY\", \"token0\": \"X\", \"token1\": \"Y\",
              \"reserve0\": \"100\", \"reserve1\": \"200\",
              \"fee_in_ppm\": 997000, \"fee_out_ppm\": 1000000, \"lp_supply\": \"141.4\"}]}
Amounts are decimal strings or JSON integers. fee_in_ppm and fee_out_ppm are
the retained fractions r1 and r2 in parts per million (defaults 997000 and
1000000). lp_supply defaults to sqrt(reserve0 * reserve1). An optional
top-level \"swap_precision\": 18 floors executed swap outputs to 18 decimals.";

const CYCLE_SCHEMA: &str = "\
A cycle is written as comma-separated pool:input_token legs, e.g.
  XY:X,YZ:Y,ZX:Z";

const SCENARIO_SCHEMA: &str = "\
Scenario file (JSON array):
  [{\"pool\": {<pool record as in a market file>},
    \"ring_swap\": {\"input_token\": \"X\", \"amount\": \"50\"} | null,
    \"target_ratio\": \"1.05\"}]
target_ratio is the external price reserve0 / reserve1 the pool converges to.";

const EVENT_SCHEMA: &str = "\
Event file (JSON Lines), one swap per line:
  {\"tx_id\": \"0xab\", \"block\": 1, \"log_index\": 0, \"token_in\": \"USDC\",
   \"token_out\": \"USDT\", \"amount_in\": \"285.71\", \"amount_out\": \"285.64\"}
Amounts are positive decimal strings. Blank lines are skipped; malformed
lines are reported and skipped.";

/// Ring arbitrage analytics over constant-product AMM markets.
///
/// Exit codes: 0 success, 1 input error, 2 usage error, 3 nothing found.
#[derive(Parser)]
#[command(name = "cyclarb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List profitable cycles; exits 3 if there are none.
    #[command(after_help = MARKET_SCHEMA)]
    Scan(ScanArgs),
    /// Size one cycle; exits 3 if it is not profitable.
    #[command(after_help = format!("{CYCLE_SCHEMA}\n\n{MARKET_SCHEMA}"))]
    Optimal(OptimalArgs),
    /// Per-hop fee rate below which no cycle is profitable.
    #[command(after_help = format!("{CYCLE_SCHEMA}\n\n{MARKET_SCHEMA}"))]
    FeeThreshold(FeeArgs),
    /// Compare pool convergence to an external price with and without a
    /// preceding ring swap.
    #[command(after_help = SCENARIO_SCHEMA)]
    Converge(ConvergeArgs),
    /// Reconstruct cyclic transactions from a swap-event log.
    #[command(after_help = EVENT_SCHEMA)]
    Ingest(IngestArgs),
    /// Run repeated ring arbitrage on a seeded synthetic market.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_hops: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Only cycles starting and ending in this token.
    #[arg(long)]
    start: Option<String>,
    /// Skip token components without a negative log-rate cycle.
    #[arg(long)]
    prefilter: bool,
    /// Drop opportunities whose expected profit is below this amount.
    #[arg(long, default_value = "0")]
    min_profit: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OptimalArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long)]
    cycle: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FeeArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_hops: usize,
    /// With --sweep, report profitability of this cycle across input fees.
    #[arg(long, requires = "sweep")]
    cycle: Option<String>,
    /// Comma-separated r1 values, e.g. 0.99,0.995,1.
    #[arg(long, requires = "cycle")]
    sweep: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    events: PathBuf,
    /// Summarise cycles starting in this token; all start tokens if absent.
    #[arg(long)]
    unit: Option<String>,
    /// Relative tolerance when chaining one swap's output to the next input.
    #[arg(long)]
    slack: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    tokens: usize,
    #[arg(long, default_value_t = 30)]
    pools: usize,
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    #[arg(long, default_value_t = 3)]
    max_hops: usize,
    /// Relative reserve noise around balanced prices, in ppm.
    #[arg(long, default_value_t = 50_000)]
    noise_ppm: i64,
    /// A ring commits only if its profit reaches this amount.
    #[arg(long, default_value = "0")]
    min_profit: String,
    /// Decimals kept in executed swap outputs.
    #[arg(long, default_value_t = 18, conflicts_with = "exact_swaps")]
    swap_precision: usize,
    /// Keep swap outputs exact; slows down as reserves grow.
    #[arg(long)]
    exact_swaps: bool,
    /// Also write the executed swaps as a JSON Lines event log.
    #[arg(long)]
    emit_events: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::Optimal(args) => cmd_optimal(args),
        Command::FeeThreshold(args) => cmd_fee_threshold(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::FAILURE
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text += ": ";
            }
            text += &part;
        }
    }
    text
}

fn emit(format: Format, json: Value, csv: impl FnOnce() -> String) -> Result<()> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
        Format::Csv => csv(),
    };
    std::io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn amount_arg(text: &str, flag: &str) -> Result<Amount> {
    let value = parse_rational(text).with_context(|| format!("{flag} {text:?}"))?;
    Amount::new(value).with_context(|| format!("{flag} {text:?}"))
}

fn parse_cycle(text: &str) -> Result<TradePath> {
    let legs = text
        .split(',')
        .map(|part| {
            let (pool, token) = part
                .trim()
                .split_once(':')
                .with_context(|| format!("cycle leg {part:?} is not pool:token"))?;
            Ok(SwapLeg::new(PoolId::new(pool)?, TokenId::new(token)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradePath::new(legs)?)
}

fn check_hops(max_hops: usize) -> Result<()> {
    if max_hops < 2 {
        bail!("--max-hops must be at least 2");
    }
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    check_hops(args.max_hops)?;
    let min_profit = amount_arg(&args.min_profit, "--min-profit")?;
    let market = load_market(&args.market)?;
    let options = ScanOptions {
        max_hops: args.max_hops,
        start_token: args.start.map(TokenId::new).transpose()?,
        mode: match args.mode {
            Mode::Exact => EvalMode::Exact,
            Mode::Float => EvalMode::Float,
        },
        negative_cycle_prefilter: args.prefilter,
    };
    let mut found = scan(&market, &options)?;
    found.retain(|o| o.expected_profit >= *min_profit.value());
    emit(args.output.format, report::opportunities_json(&found), || report::opportunities_csv(&found))?;
    Ok(if found.is_empty() { ExitCode::from(NOT_FOUND) } else { ExitCode::SUCCESS })
}

fn cmd_optimal(args: OptimalArgs) -> Result<ExitCode> {
    let market = load_market(&args.market)?;
    let cycle = Cycle::new(parse_cycle(&args.cycle)?, &market)?;
    let resolved = cycle.resolve(&market)?;
    let index = resolved.index();
    let marginal = resolved.marginal_at_zero();
    let optimal = if resolved.is_profitable() {
        Some(resolved.optimal_input()?)
    } else {
        None
    };
    emit(
        args.output.format,
        report::optimal_json(&cycle, &index, &marginal, optimal.as_ref()),
        || report::optimal_csv(&cycle, &index, &marginal, optimal.as_ref()),
    )?;
    Ok(if optimal.is_some() { ExitCode::SUCCESS } else { ExitCode::from(NOT_FOUND) })
}

fn cmd_fee_threshold(args: FeeArgs) -> Result<ExitCode> {
    check_hops(args.max_hops)?;
    let market = load_market(&args.market)?;
    if let (Some(cycle), Some(sweep)) = (&args.cycle, &args.sweep) {
        let cycle = Cycle::new(parse_cycle(cycle)?, &market)?;
        let grid = sweep
            .split(',')
            .map(|s| parse_rational(s.trim()).with_context(|| format!("--sweep value {s:?}")))
            .collect::<Result<Vec<Rational>>>()?;
        let points = sweep_fee_profitability(&market, &cycle, &grid)?;
        let json = Value::Array(
            points
                .iter()
                .map(|p| {
                    json!({
                        "fee": decimal(&p.fee),
                        "marginal": decimal(&p.marginal_at_zero),
                        "optimal_profit": decimal(&p.optimal_profit),
                    })
                })
                .collect(),
        );
        emit(args.output.format, json, || report::fee_sweep_csv(&points))?;
        return Ok(ExitCode::SUCCESS);
    }
    let found = market_fee_threshold(&market, args.max_hops)?;
    emit(args.output.format, report::fee_threshold_json(&found), || report::fee_threshold_csv(&found))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(args: ConvergeArgs) -> Result<ExitCode> {
    let scenarios = scenarios_from_json(&read_text(&args.scenarios)?)?;
    let reports = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| compare_convergence(s).with_context(|| format!("scenario {i}")))
        .collect::<Result<Vec<_>>>()?;
    emit(args.output.format, report::convergence_json(&reports), || report::convergence_csv(&reports))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode> {
    let slack = args
        .slack
        .as_deref()
        .map(|s| amount_arg(s, "--slack"))
        .transpose()?;
    let bytes = read_bytes(&args.events)?;
    let ParsedEvents { events, errors } = parse_events_from_bytes(&bytes)?;
    for error in &errors {
        eprintln!("warning: {error}");
    }
    let grouping = group_cyclic_transactions(&events, slack.as_ref().map(|s| s.value()));
    let units: Vec<TokenId> = match args.unit {
        Some(unit) => vec![TokenId::new(unit)?],
        None => grouping
            .cyclic
            .iter()
            .map(|c| c.start_token.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let summaries: Vec<_> = units.iter().map(|u| revenue_summary(&grouping.cyclic, u)).collect();
    emit(
        args.output.format,
        report::ingest_json(&summaries, &grouping.cyclic, grouping.non_cyclic.len(), &errors),
        || report::ingest_csv(&summaries),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    check_hops(args.max_hops)?;
    if args.tokens < 2 {
        bail!("--tokens must be at least 2");
    }
    if !(0..1_000_000).contains(&args.noise_ppm) {
        bail!("--noise-ppm must be in [0, 1000000)");
    }
    let min_profit = amount_arg(&args.min_profit, "--min-profit")?;
    let precision = (!args.exact_swaps).then_some(args.swap_precision);
    let mut market = synth::perturbed_market(args.seed, args.tokens, args.pools, &FeeParams::uniswap_v2(), args.noise_ppm)
        .with_swap_precision(precision);

    let mut rounds = Vec::new();
    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut skipped = None;
    for round in 0..args.rounds {
        let Some(best) = find_cycles(&market, None, args.max_hops)?.into_iter().next() else {
            break;
        };
        let before = market.clone();
        let input = Amount::new(best.optimal_input.clone())?;
        match execute_ring(&mut market, &best.cycle, &input, &min_profit) {
            Ok(run) => {
                let rates = balance_report(&before, &market, &best.cycle)?;
                let label = cycle_label(&best.cycle);
                events.extend(events_from_execution(&run, &format!("0x{:x}{round:04x}", args.seed), round as u64));
                rows.push(vec![
                    round.to_string(),
                    label.clone(),
                    decimal(run.input.value()),
                    decimal(&run.profit),
                    best.cycle.start_token().to_string(),
                    decimal(&rates.before),
                    decimal(&rates.after),
                ]);
                rounds.push(json!({
                    "round": round,
                    "cycle": label,
                    "input": decimal(run.input.value()),
                    "profit": decimal(&run.profit),
                    "profit_token": best.cycle.start_token().as_str(),
                    "rate_product_before": decimal(&rates.before),
                    "rate_product_after": decimal(&rates.after),
                    "moved_toward_one": rates.moved_toward_one(),
                }));
            }
            // Opportunities come best first, so nothing else clears the bar.
            Err(ArbError::Reverted { realized_profit }) => {
                skipped = Some(decimal(&realized_profit));
                break;
            }
            Err(err) => return Err(err.into()),
        }
    }
    let remaining = find_cycles(&market, None, args.max_hops)?.len();

    if let Some(path) = &args.emit_events {
        let mut text = String::new();
        for event in &events {
            text += &serde_json::to_string(event)?;
            text.push('\n');
        }
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }

    let json = json!({
        "seed": args.seed,
        "tokens": args.tokens,
        "pools": market.pool_count(),
        "rounds": rounds,
        "stopped_below_min_profit": skipped,
        "remaining_opportunities": remaining,
    });
    emit(args.output.format, json, || {
        report::csv_string(
            &["round", "cycle", "input", "profit", "profit_token", "rate_before", "rate_after"],
            rows,
        )
    })?;
    Ok(ExitCode::SUCCESS)
}
