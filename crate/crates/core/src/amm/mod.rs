//! Constant-product pools and the market that holds them.
//!
//! All state is exact: reserves, LP supplies and fee ratios are rationals, and
//! every swap satisfies `x * y == (x + r1 * dx) * (y - dy / r2)` with equality.

mod market;
mod pool;

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, DecimalError, Rational};

pub use self::market::{LiquidityReceipt, Market, DEFAULT_MINT_PRECISION};
pub use self::pool::Pool;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmmError {
    #[error("identifier must be non-empty")]
    EmptyIdentifier,
    #[error("pool tokens must differ (got {0} twice)")]
    IdenticalTokens(TokenId),
    #[error("a pool for {0}/{1} already exists ({2})")]
    DuplicatePair(TokenId, TokenId, PoolId),
    #[error("pool id {0} is already in use")]
    DuplicatePoolId(PoolId),
    #[error("unknown pool {0}")]
    UnknownPool(PoolId),
    #[error("token {token} is not traded by pool {pool}")]
    UnknownToken { pool: PoolId, token: TokenId },
    #[error("pool {0} has no liquidity")]
    EmptyPool(PoolId),
    #[error("deposit must be positive")]
    ZeroDeposit,
    #[error("swap input must be positive")]
    ZeroSwap,
    #[error("withdrawal must be positive")]
    ZeroWithdrawal,
    #[error("deposit {deposit1} does not match the pool ratio (expected {expected})")]
    RatioMismatch { deposit1: Amount, expected: Amount },
    #[error("first deposit into {0} needs amounts of both tokens")]
    MissingCounterDeposit(PoolId),
    #[error("provider {provider} holds {held} LP tokens of {pool}, cannot burn {requested}")]
    InsufficientLpBalance {
        provider: ProviderId,
        pool: PoolId,
        held: Amount,
        requested: Amount,
    },
    #[error("fee ratio {0} is outside (0, 1]")]
    InvalidFee(Rational),
    #[error("amount {0} is negative")]
    NegativeAmount(Rational),
    #[error("reserves of {0} must be both positive, or both zero with no LP supply")]
    InvalidReserves(PoolId),
    #[error(transparent)]
    Decimal(#[from] DecimalError),
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self, AmmError> {
                let value = value.into();
                if value.is_empty() {
                    return Err(AmmError::EmptyIdentifier);
                }
                Ok(Self(value))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = AmmError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl TryFrom<String> for $name {
            type Error = AmmError;

            fn try_from(value: String) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(value: $name) -> String {
                value.0
            }
        }
    };
}

string_id!(
    /// Token symbol. Case-sensitive, non-empty.
    TokenId
);
string_id!(PoolId);
string_id!(
    /// Owner of LP tokens.
    ProviderId
);

/// Non-negative exact token quantity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(Rational);

impl Amount {
    pub fn new(value: Rational) -> Result<Self, AmmError> {
        if value.is_negative() {
            return Err(AmmError::NegativeAmount(value));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn from_integer(value: u64) -> Self {
        Self(Rational::from_integer(value.into()))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn from_ratio(numer: u64, denom: u64) -> Self {
        Self(Rational::new(numer.into(), denom.into()))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rational::to_f64(&self.0)
    }

    pub fn checked_sub(&self, other: &Amount) -> Option<Amount> {
        let diff = &self.0 - &other.0;
        (!diff.is_negative()).then_some(Amount(diff))
    }
}

impl Default for Amount {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &Amount {
    type Output = Amount;

    fn add(self, rhs: &Amount) -> Amount {
        Amount(&self.0 + &rhs.0)
    }
}

/// Signed difference.
impl Sub for &Amount {
    type Output = Rational;

    fn sub(self, rhs: &Amount) -> Rational {
        &self.0 - &rhs.0
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&rational::format_exact(&self.0))
    }
}

impl FromStr for Amount {
    type Err = AmmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Amount::new(rational::parse_rational(s)?)
    }
}

impl TryFrom<Rational> for Amount {
    type Error = AmmError;

    fn try_from(value: Rational) -> Result<Self, Self::Error> {
        Amount::new(value)
    }
}

impl Serialize for Amount {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&rational::format_exact(&self.0))
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Retained fractions of a swap: `r1` of the input counts toward the trade,
/// `r2` of the gross output reaches the trader.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeeParams {
    r1: Rational,
    r2: Rational,
}

pub const PPM: u32 = 1_000_000;

impl FeeParams {
    pub fn new(r1: Rational, r2: Rational) -> Result<Self, AmmError> {
        for r in [&r1, &r2] {
            if !r.is_positive() || *r > Rational::one() {
                return Err(AmmError::InvalidFee(r.clone()));
            }
        }
        Ok(Self { r1, r2 })
    }

    /// Parts-per-million form used by market files: `997_000` is `0.997`.
    pub fn from_ppm(fee_in_ppm: u32, fee_out_ppm: u32) -> Result<Self, AmmError> {
        let ppm = |v: u32| Rational::new(v.into(), PPM.into());
        Self::new(ppm(fee_in_ppm), ppm(fee_out_ppm))
    }

    /// `r1 = 0.997`, `r2 = 1`: a 3 per mille input fee.
    pub fn uniswap_v2() -> Self {
        Self {
            r1: rational::ratio(997, 1000),
            r2: Rational::one(),
        }
    }

    pub fn no_fee() -> Self {
        Self {
            r1: Rational::one(),
            r2: Rational::one(),
        }
    }

    pub fn r1(&self) -> &Rational {
        &self.r1
    }

    pub fn r2(&self) -> &Rational {
        &self.r2
    }

    /// Combined retained fraction `r1 * r2` of one hop.
    pub fn rate(&self) -> Rational {
        &self.r1 * &self.r2
    }

    /// Integer ppm pair, if both ratios are whole parts per million.
    pub fn to_ppm(&self) -> Option<(u32, u32)> {
        let scale = Rational::from_integer(PPM.into());
        let a = &self.r1 * &scale;
        let b = &self.r2 * &scale;
        if !a.is_integer() || !b.is_integer() {
            return None;
        }
        let a = u32::try_from(a.to_integer()).ok()?;
        let b = u32::try_from(b.to_integer()).ok()?;
        Some((a, b))
    }
}

/// Single-pool output `r1 * r2 * y * dx / (x + r1 * dx)`.
pub(crate) fn constant_product_output(
    reserve_in: &Rational,
    reserve_out: &Rational,
    fees: &FeeParams,
    delta_in: &Rational,
) -> Rational {
    if delta_in.is_zero() {
        return Rational::zero();
    }
    let effective = &fees.r1 * delta_in;
    &fees.r2 * reserve_out * &effective / (reserve_in + &effective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn ids_reject_empty() {
        assert_eq!(TokenId::new(""), Err(AmmError::EmptyIdentifier));
        assert_eq!(TokenId::new("USDC").unwrap().as_str(), "USDC");
        assert_ne!(TokenId::new("usdc").unwrap(), TokenId::new("USDC").unwrap());
    }

    #[test]
    fn amounts_are_non_negative() {
        assert!(matches!("-1".parse::<Amount>(), Err(AmmError::NegativeAmount(_))));
        assert_eq!("2.5".parse::<Amount>().unwrap(), Amount::from_ratio(5, 2));
        assert_eq!(Amount::from_integer(3).checked_sub(&Amount::from_integer(4)), None);
    }

    #[test]
    fn fee_params_validate_range() {
        assert!(FeeParams::new(ratio(0, 1), ratio(1, 1)).is_err());
        assert!(FeeParams::new(ratio(11, 10), ratio(1, 1)).is_err());
        assert!(FeeParams::new(ratio(1, 1), ratio(-1, 2)).is_err());
        assert!(FeeParams::from_ppm(1_000_001, PPM).is_err());
        let fees = FeeParams::from_ppm(997_000, PPM).unwrap();
        assert_eq!(fees, FeeParams::uniswap_v2());
        assert_eq!(fees.to_ppm(), Some((997_000, PPM)));
        assert_eq!(FeeParams::new(ratio(1, 3), ratio(1, 1)).unwrap().to_ppm(), None);
    }

    #[test]
    fn uniswap_fee_keeps_three_per_mille_of_input() {
        // 1000 in at r1 = 0.997 counts as 997 effective input.
        let fees = FeeParams::uniswap_v2();
        let effective = fees.r1() * rational::int(1000);
        assert_eq!(effective, rational::int(997));
        assert_eq!(rational::int(1000) - effective, rational::int(3));
    }
}
