//! Constant-product AMM simulation and cyclic (ring) arbitrage analytics.
//!
//! The crate models liquidity pools with exact rational arithmetic, folds
//! multi-hop paths into equivalent virtual pools, finds and sizes profitable
//! cycles, computes the fee level that removes them, and reconstructs cyclic
//! transactions from exported swap logs.

pub mod amm;
pub mod analysis;
pub mod compose;
pub mod cycle;
pub mod fee_policy;
pub mod io;
pub mod rational;
pub mod report;
pub mod search;
pub mod synth;
pub mod trace;

pub use amm::{AmmError, Amount, FeeParams, Market, Pool, PoolId, ProviderId, TokenId};
pub use compose::{PathError, SwapLeg, TradePath, VirtualPool};
pub use cycle::{ArbError, Cycle, Direction};
pub use rational::Rational;
pub use search::{ArbOpportunity, EvalMode, ScanOptions};
