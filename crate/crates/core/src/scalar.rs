//! Exact rational scalars.
//!
//! Every numeric quantity in the crate (costs, rewards, shares,
//! probabilities) is an arbitrary-precision rational kept in lowest terms, so
//! equilibrium inequalities are decided exactly, ties included.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Scalar = BigRational;

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

/// `num / den` in lowest terms. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), exp as usize)
}

/// `10^-exp` as an exact scalar.
pub fn ten_to_minus(exp: u32) -> Scalar {
    Scalar::new(BigInt::one(), pow10(exp))
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_scalar(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {input:?} as an exact rational: {reason}")]
pub struct ParseScalarError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `p/q`, integers, and plain decimals (`0.925` becomes `37/40`).
pub fn parse_scalar(s: &str) -> Result<Scalar, ParseScalarError> {
    let err = |reason| ParseScalarError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err("bad numerator"))?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Scalar::new(num, den));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err("no digits"));
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err("unexpected character"));
    }
    let digits = format!("{whole}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|_| err("bad digits"))?;
    let value = Scalar::new(num, pow10(frac.len() as u32));
    Ok(if negative { -value } else { value })
}

/// Scalar extended with negative infinity, the codomain of the potential.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedScalar {
    NegInfinity,
    Finite(Scalar),
}

impl ExtendedScalar {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            ExtendedScalar::Finite(x) => Some(x),
            ExtendedScalar::NegInfinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedScalar::Finite(_))
    }
}

impl From<Scalar> for ExtendedScalar {
    fn from(x: Scalar) -> Self {
        ExtendedScalar::Finite(x)
    }
}

impl fmt::Display for ExtendedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedScalar::NegInfinity => f.write_str("-inf"),
            ExtendedScalar::Finite(x) => f.write_str(&format_scalar(x)),
        }
    }
}

/// The exact square root of `x`, when `x` is the square of a rational.
pub fn exact_sqrt(x: &Scalar) -> Option<Scalar> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Scalar::new(rn, rd))
    } else {
        None
    }
}

/// Half-up rounding of `x` to `digits` decimal places, as an exact scalar.
pub fn round_to_digits(x: &Scalar, digits: u32) -> Scalar {
    let scale = Scalar::from_integer(pow10(digits));
    let scaled = x * &scale;
    let floor = scaled.numer().div_floor(scaled.denom());
    let rem = &scaled - Scalar::from_integer(floor.clone());
    let rounded = if rem >= ratio(1, 2) { floor + 1 } else { floor };
    Scalar::from_integer(rounded) / scale
}
