//! Exact rational helpers: decimal parsing and formatting, float views and
//! integer roots.
//!
//! Every state-bearing quantity in the crate is a [`Rational`]. Files carry
//! amounts as decimal strings which are parsed without going through binary
//! floating point.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision signed rational.
pub type Rational = BigRational;

/// Maximum number of fractional digits accepted by [`parse_rational`].
pub const MAX_FRACTION_DIGITS: usize = 36;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty number")]
    Empty,
    #[error("invalid character {0:?} in number")]
    InvalidCharacter(char),
    #[error("more than {MAX_FRACTION_DIGITS} fractional digits ({0})")]
    TooManyFractionDigits(usize),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Builds `numer / denom` from machine integers.
///
/// Panics if `denom` is zero.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses a decimal string (`"-12.5"`, `"0.997"`) or a fraction (`"3/7"`)
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, DecimalError> {
    let text = text.trim();
    if let Some((numer, denom)) = text.split_once('/') {
        let numer = parse_decimal(numer.trim())?;
        let denom = parse_decimal(denom.trim())?;
        if denom.is_zero() {
            return Err(DecimalError::ZeroDenominator);
        }
        return Ok(numer / denom);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Result<Rational, DecimalError> {
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        Some(_) => (false, text),
        None => return Err(DecimalError::Empty),
    };
    let (whole, fraction) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && fraction.is_empty() {
        return Err(DecimalError::Empty);
    }
    if let Some(c) = whole.chars().chain(fraction.chars()).find(|c| !c.is_ascii_digit()) {
        return Err(DecimalError::InvalidCharacter(c));
    }
    if fraction.len() > MAX_FRACTION_DIGITS {
        return Err(DecimalError::TooManyFractionDigits(fraction.len()));
    }
    let digits = format!("{whole}{fraction}");
    let mut numer = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits
            .parse::<BigInt>()
            .map_err(|_| DecimalError::Empty)?
    };
    if negative {
        numer = -numer;
    }
    let denom = pow10(fraction.len());
    Ok(Rational::new(numer, denom))
}

pub(crate) fn pow10(exp: usize) -> BigInt {
    num_traits::pow(BigInt::from(10u32), exp)
}

/// Lossy binary64 view of an exact value.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational equal to a finite float.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

fn decimal_digits(value: &BigInt) -> usize {
    if value.is_zero() {
        1
    } else {
        value.magnitude().to_str_radix(10).len()
    }
}

/// Decimal exponent `e` with `10^e <= |value| < 10^(e+1)`. `value` must be
/// non-zero.
fn decimal_exponent(value: &Rational) -> i64 {
    let abs = value.abs();
    let mut exp = decimal_digits(abs.numer()) as i64 - decimal_digits(abs.denom()) as i64;
    if abs < scale10(exp) {
        exp -= 1;
    }
    exp
}

fn scale10(exp: i64) -> Rational {
    if exp >= 0 {
        Rational::from_integer(pow10(exp as usize))
    } else {
        Rational::new(BigInt::one(), pow10((-exp) as usize))
    }
}

/// Rounds half away from zero to an integer.
fn round_half_away(value: &Rational) -> BigInt {
    let (q, r) = value.numer().div_rem(value.denom());
    let twice = r.abs() * 2u32;
    if twice >= *value.denom() {
        if value.is_negative() {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Largest multiple of `10^-places` not above `value`.
pub fn floor_places(value: &Rational, places: usize) -> Rational {
    let scale = pow10(places);
    Rational::new((value * Rational::from_integer(scale.clone())).floor().to_integer(), scale)
}

/// Rounds to `digits` significant decimal digits (half away from zero).
pub fn round_significant(value: &Rational, digits: usize) -> Rational {
    if value.is_zero() {
        return Rational::zero();
    }
    let (mantissa, exp) = significant_parts(value, digits);
    Rational::from_integer(mantissa) * scale10(exp)
}

/// Mantissa with exactly `digits` digits and the power of ten it scales by.
fn significant_parts(value: &Rational, digits: usize) -> (BigInt, i64) {
    let digits = digits.max(1);
    let e = decimal_exponent(value);
    let shift = digits as i64 - 1 - e;
    let mut mantissa = round_half_away(&(value * scale10(shift)));
    let mut exp = -shift;
    if decimal_digits(&mantissa) > digits {
        mantissa /= 10;
        exp += 1;
    }
    (mantissa, exp)
}

/// Formats with at most `digits` significant digits, plain notation, trailing
/// zeros trimmed. `17.97` stays `"17.97"`.
pub fn format_significant(value: &Rational, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let (mantissa, exp) = significant_parts(value, digits);
    format_scaled(&mantissa, exp)
}

fn format_scaled(mantissa: &BigInt, exp: i64) -> String {
    let negative = mantissa.sign() == Sign::Minus;
    let body = mantissa.magnitude().to_str_radix(10);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        out.push_str(&body);
        out.extend(std::iter::repeat_n('0', exp as usize));
        return out;
    }
    let frac_len = (-exp) as usize;
    let (whole, frac) = if body.len() > frac_len {
        let split = body.len() - frac_len;
        (body[..split].to_string(), body[split..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat(frac_len - body.len()), body))
    };
    let frac = frac.trim_end_matches('0');
    out.push_str(&whole);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Exact decimal expansion when the value terminates within
/// [`MAX_FRACTION_DIGITS`] fractional digits.
pub fn to_exact_decimal(value: &Rational) -> Option<String> {
    let mut denom = value.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    while denom.is_even() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let frac_digits = twos.max(fives);
    if frac_digits > MAX_FRACTION_DIGITS {
        return None;
    }
    let scaled = value * Rational::from_integer(pow10(frac_digits));
    Some(format_scaled(&scaled.to_integer(), -(frac_digits as i64)))
}

/// Exact decimal when possible, otherwise `numer/denom`. Always re-parses to
/// the same value through [`parse_rational`].
pub fn format_exact(value: &Rational) -> String {
    to_exact_decimal(value).unwrap_or_else(|| format!("{}/{}", value.numer(), value.denom()))
}

/// Exact rational `n`-th root of a non-negative value, if there is one.
pub fn exact_nth_root(value: &Rational, n: u32) -> Option<Rational> {
    if value.is_negative() || n == 0 {
        return None;
    }
    let numer = value.numer().nth_root(n);
    let denom = value.denom().nth_root(n);
    if num_traits::pow(numer.clone(), n as usize) == *value.numer()
        && num_traits::pow(denom.clone(), n as usize) == *value.denom()
    {
        Some(Rational::new(numer, denom))
    } else {
        None
    }
}

/// Floor of `sqrt(value)` truncated to `places` decimal places. Exact and
/// certified: `result^2 <= value < (result + 10^-places)^2`.
pub fn sqrt_floor(value: &Rational, places: usize) -> Rational {
    assert!(!value.is_negative(), "square root of a negative value");
    let scale = pow10(places);
    // floor(sqrt(x)) == isqrt(floor(x)) for x >= 0.
    let scaled = value.numer() * &scale * &scale / value.denom();
    Rational::new(scaled.sqrt(), scale)
}

/// Sign of `a + b * sqrt(d)` for `d >= 0`, decided exactly.
pub(crate) fn sign_of_surd(a: &Rational, b: &Rational, d: &Rational) -> i8 {
    let sa = signum(a);
    let sb = if d.is_zero() { 0 } else { signum(b) };
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    let lhs = a * a;
    let rhs = b * b * d;
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => sa,
        std::cmp::Ordering::Less => sb,
        std::cmp::Ordering::Equal => 0,
    }
}

pub(crate) fn signum(value: &Rational) -> i8 {
    if value.is_zero() {
        0
    } else if value.is_positive() {
        1
    } else {
        -1
    }
}
