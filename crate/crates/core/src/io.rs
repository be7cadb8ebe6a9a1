//! Market and scenario files.
//!
//! A market file is a JSON object:
//!
//! ```text
//! {
//!   "allow_parallel_pools": false,
//!   "pools": [
//!     {"id": "XY", "token0": "X", "token1": "Y", "reserve0": "100", "reserve1": "200",
//!      "fee_in_ppm": 997000, "fee_out_ppm": 1000000, "lp_supply": "141.42"}
//!   ]
//! }
//! ```
//!
//! Amounts are decimal strings (or JSON integers). `fee_in_ppm` and
//! `fee_out_ppm` are the retained fractions `r1` and `r2` in parts per
//! million and default to 997000 and 1000000. A missing `lp_supply` is set to
//! `sqrt(reserve0 * reserve1)`, floored at 18 decimal places. An optional
//! top-level `"swap_precision": 18` floors executed swap outputs to that many
//! decimals; without it swaps are exact.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::{AmmError, Amount, FeeParams, Market, Pool, PoolId, TokenId, DEFAULT_MINT_PRECISION, PPM};
use crate::analysis::{ConvergenceScenario, RingSwap};
use crate::rational::{exact_nth_root, format_exact, parse_rational, sqrt_floor, Rational};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pool {pool}: {source}")]
    Pool {
        pool: String,
        #[source]
        source: AmmError,
    },
    #[error("scenario {index}: {reason}")]
    Scenario { index: usize, reason: String },
}

/// A decimal string or a JSON integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Text(String),
    Integer(u64),
}

impl Number {
    fn to_rational(&self) -> Result<Rational, AmmError> {
        match self {
            Number::Text(text) => Ok(parse_rational(text)?),
            Number::Integer(value) => Ok(Rational::from_integer((*value).into())),
        }
    }

    fn to_amount(&self) -> Result<Amount, AmmError> {
        Amount::new(self.to_rational()?)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Text(text) => f.write_str(text),
            Number::Integer(value) => write!(f, "{value}"),
        }
    }
}

fn default_fee_in() -> u32 {
    997_000
}

fn default_fee_out() -> u32 {
    PPM
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolRecord {
    pub id: String,
    pub token0: String,
    pub token1: String,
    pub reserve0: Number,
    pub reserve1: Number,
    #[serde(default = "default_fee_in")]
    pub fee_in_ppm: u32,
    #[serde(default = "default_fee_out")]
    pub fee_out_ppm: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_supply: Option<Number>,
}

impl PoolRecord {
    pub fn to_pool(&self) -> Result<Pool, AmmError> {
        let reserve0 = self.reserve0.to_amount()?;
        let reserve1 = self.reserve1.to_amount()?;
        let lp_supply = match &self.lp_supply {
            Some(n) => n.to_amount()?,
            None => {
                let product = reserve0.value() * reserve1.value();
                let root = exact_nth_root(&product, 2).unwrap_or_else(|| sqrt_floor(&product, DEFAULT_MINT_PRECISION));
                Amount::new(root)?
            }
        };
        Pool::with_reserves(
            PoolId::new(self.id.clone())?,
            TokenId::new(self.token0.clone())?,
            TokenId::new(self.token1.clone())?,
            reserve0,
            reserve1,
            FeeParams::from_ppm(self.fee_in_ppm, self.fee_out_ppm)?,
            lp_supply,
        )
    }

    /// Record for `pool`; fees that are not whole ppm are rejected.
    pub fn from_pool(pool: &Pool) -> Option<Self> {
        let (fee_in_ppm, fee_out_ppm) = pool.fees().to_ppm()?;
        Some(Self {
            id: pool.id().to_string(),
            token0: pool.token0().to_string(),
            token1: pool.token1().to_string(),
            reserve0: Number::Text(format_exact(pool.reserve0().value())),
            reserve1: Number::Text(format_exact(pool.reserve1().value())),
            fee_in_ppm,
            fee_out_ppm,
            lp_supply: Some(Number::Text(format_exact(pool.lp_supply().value()))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    #[serde(default)]
    pub allow_parallel_pools: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_precision: Option<usize>,
    pub pools: Vec<PoolRecord>,
}

pub fn market_from_json(text: &str) -> Result<Market, IoError> {
    let file: MarketFile = serde_json::from_str(text)?;
    let mut market = if file.allow_parallel_pools {
        Market::allowing_parallel_pools()
    } else {
        Market::new()
    }
    .with_swap_precision(file.swap_precision);
    for record in &file.pools {
        let wrap = |source| IoError::Pool {
            pool: record.id.clone(),
            source,
        };
        market.insert_pool(record.to_pool().map_err(wrap)?).map_err(wrap)?;
    }
    Ok(market)
}

/// Market file text; `None` if some fee is not a whole number of ppm.
pub fn market_to_json(market: &Market) -> Option<String> {
    let pools = market.pools().map(PoolRecord::from_pool).collect::<Option<Vec<_>>>()?;
    let file = MarketFile {
        allow_parallel_pools: market.allows_parallel_pools(),
        swap_precision: market.swap_precision(),
        pools,
    };
    Some(serde_json::to_string_pretty(&file).expect("market records serialize"))
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_market(path: &Path) -> Result<Market, IoError> {
    market_from_json(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSwapRecord {
    pub input_token: String,
    pub amount: Number,
}

/// One entry of a scenario batch: `{"pool": {...}, "ring_swap": {...} | null,
/// "target_ratio": "1.05"}` where the target is `reserve0 / reserve1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub pool: PoolRecord,
    #[serde(default)]
    pub ring_swap: Option<RingSwapRecord>,
    pub target_ratio: Number,
}

impl ScenarioRecord {
    pub fn to_scenario(&self) -> Result<ConvergenceScenario, AmmError> {
        let ring_swap = match &self.ring_swap {
            Some(ring) => Some(RingSwap {
                input_token: TokenId::new(ring.input_token.clone())?,
                amount: ring.amount.to_amount()?,
            }),
            None => None,
        };
        Ok(ConvergenceScenario {
            pool: self.pool.to_pool()?,
            ring_swap,
            target_ratio: self.target_ratio.to_rational()?,
        })
    }
}

pub fn scenarios_from_json(text: &str) -> Result<Vec<ConvergenceScenario>, IoError> {
    let records: Vec<ScenarioRecord> = serde_json::from_str(text)?;
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            r.to_scenario().map_err(|e| IoError::Scenario {
                index,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const MARKET: &str = r#"{
        "pools": [
            {"id": "XY", "token0": "X", "token1": "Y", "reserve0": "100", "reserve1": 400},
            {"id": "YZ", "token0": "Y", "token1": "Z", "reserve0": "2.5", "reserve1": "10",
             "fee_in_ppm": 1000000, "lp_supply": "5"}
        ]
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let market = market_from_json(MARKET).unwrap();
        let xy = market.pool(&PoolId::new("XY").unwrap()).unwrap();
        assert_eq!(xy.fees(), &FeeParams::uniswap_v2());
        assert_eq!(xy.lp_supply().value(), &int(200));
        let yz = market.pool(&PoolId::new("YZ").unwrap()).unwrap();
        assert_eq!(yz.fees(), &FeeParams::no_fee());
        let text = market_to_json(&market).unwrap();
        assert_eq!(market_from_json(&text).unwrap(), market);
    }

    #[test]
    fn rejects_bad_input() {
        let bad_fee = MARKET.replace("1000000", "1500000");
        assert!(matches!(market_from_json(&bad_fee), Err(IoError::Pool { .. })));
        assert!(matches!(market_from_json("{"), Err(IoError::Json(_))));
        let negative = MARKET.replace("\"2.5\"", "\"-2.5\"");
        assert!(matches!(market_from_json(&negative), Err(IoError::Pool { .. })));
        let duplicate = MARKET.replace("\"YZ\"", "\"XY\"");
        assert!(market_from_json(&duplicate).is_err());
    }

    #[test]
    fn scenarios_parse() {
        let text = r#"[{"pool": {"id": "p", "token0": "A", "token1": "B", "reserve0": 1000, "reserve1": 1000},
                       "ring_swap": {"input_token": "A", "amount": "50"}, "target_ratio": "1.05"},
                      {"pool": {"id": "p", "token0": "A", "token1": "B", "reserve0": 1000, "reserve1": 1000},
                       "target_ratio": "0.9"}]"#;
        let scenarios = scenarios_from_json(text).unwrap();
        assert_eq!(scenarios.len(), 2);
        assert!(scenarios[0].ring_swap.is_some());
        assert!(scenarios[1].ring_swap.is_none());
    }
}
