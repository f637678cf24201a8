//! Number types the algorithms run on.
//!
//! Every computation is generic over [`Scalar`]. Two implementations exist:
//! [`Rational`] (arbitrary precision, all comparisons exact) and `f64`
//! (comparisons against a caller supplied relative tolerance). Tolerance
//! arguments are ignored by the exact implementation.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Rational = num_rational::BigRational;

/// Default relative tolerance used in floating-point mode.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a number")]
pub struct ParseScalarError {
    pub input: String,
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    /// True when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn from_i64(value: i64) -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses a decimal (`-0.25`, `1e-3`) or a fraction (`3/8`).
    fn parse_str(text: &str) -> Result<Self, ParseScalarError>;

    fn abs(&self) -> Self;

    /// Total order used for canonical sorting.
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Equality: exact for rationals, `|a - b| <= tol * max(1, |a|, |b|)` for floats.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// Zero test: exact for rationals, `|a| <= tol` for floats.
    fn is_negligible(&self, tol: f64) -> bool;

    /// Strictly positive and not negligible.
    fn is_positive(&self, tol: f64) -> bool {
        *self > Self::zero() && !self.is_negligible(tol)
    }

    /// Strictly negative and not negligible.
    fn is_negative(&self, tol: f64) -> bool {
        *self < Self::zero() && !self.is_negligible(tol)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_str(text: &str) -> Result<Self, ParseScalarError> {
        parse_rational(text).ok_or_else(|| ParseScalarError {
            input: text.to_string(),
        })
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(value: i64) -> Self {
        value as f64
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_str(text: &str) -> Result<Self, ParseScalarError> {
        let err = || ParseScalarError {
            input: text.to_string(),
        };
        let value = match text.split_once('/') {
            Some((p, q)) => {
                let p = parse_rational(p).ok_or_else(err)?;
                let q = parse_rational(q).ok_or_else(err)?;
                if q.is_zero() {
                    return Err(err());
                }
                ToPrimitive::to_f64(&(p / q)).ok_or_else(err)?
            }
            None => f64::from_str(text.trim()).map_err(|_| err())?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(err())
        }
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = 1f64.max(f64::abs(*self)).max(f64::abs(*other));
        (self - other).abs() <= tol * scale
    }

    fn is_negligible(&self, tol: f64) -> bool {
        f64::abs(*self) <= tol
    }
}

/// Exact parse of `p/q`, integers and decimals with optional exponent.
fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p = parse_decimal(p.trim())?;
        let q = parse_decimal(q.trim())?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    if text.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(&all_digits).ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Shorthand for building exact constants in code and tests.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::from_ratio(numer, denom)
}

pub(crate) fn sum<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    let mut acc = S::zero();
    for v in values {
        acc += v;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(Rational::parse_str("1/4").unwrap(), rat(1, 4));
        assert_eq!(Rational::parse_str("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(Rational::parse_str("0.1").unwrap(), rat(1, 10));
        assert_eq!(Rational::parse_str("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(Rational::parse_str("12E2").unwrap(), rat(1200, 1));
        assert_eq!(Rational::parse_str(".5").unwrap(), rat(1, 2));
        assert!(Rational::parse_str("1/0").is_err());
        assert!(Rational::parse_str("abc").is_err());
        assert!(Rational::parse_str("").is_err());
        assert!(Rational::parse_str("1.2.3").is_err());
    }

    #[test]
    fn float_parse_accepts_fractions() {
        assert_eq!(f64::parse_str("1/4").unwrap(), 0.25);
        assert_eq!(f64::parse_str("0.5").unwrap(), 0.5);
        assert!(f64::parse_str("inf").is_err());
        assert!(f64::parse_str("NaN").is_err());
    }

    #[test]
    fn float_comparisons_use_tolerance() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-12), 1e-9));
        assert!(!1.0f64.approx_eq(&1.001, 1e-9));
        assert!(1e6f64.approx_eq(&(1e6 + 1e-4), 1e-9));
        assert!(1e-12f64.is_negligible(1e-9));
        assert!(!rat(1, 1_000_000_000_000).is_negligible(1e-3));
    }

    #[test]
    fn display_round_trips() {
        let r = rat(-7, 3);
        assert_eq!(Rational::parse_str(&r.to_string()).unwrap(), r);
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::parse_str(&x.to_string()).unwrap(), x);
    }
}
