//! Scalar abstraction shared by every module.
//!
//! All arithmetic in the crate is written against [`Scalar`]. Exact rationals
//! ([`Rational`]) compare exactly; floating types compare with a small
//! tolerance so that rounding noise never shows up as a strict preference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};
use serde_json::Value;
use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

/// Arbitrary-precision rational, the default exact scalar.
pub type Rational = BigRational;

/// Absolute tolerance for `f64` comparisons (scaled by magnitude above 1).
pub const F64_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance for `f32` comparisons.
pub const F32_TOLERANCE: f32 = 1e-5;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Whether comparisons are exact.
    const EXACT: bool;

    /// Total comparison under the type's exactness policy.
    fn approx_cmp(&self, other: &Self) -> Ordering;

    fn approx_eq(&self, other: &Self) -> bool {
        self.approx_cmp(other) == Ordering::Equal
    }

    fn floor(&self) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses a decimal literal (`-1.25`, `3e-2`) or a fraction (`2/3`).
    fn parse_decimal(s: &str) -> Option<Self>;

    fn to_json(&self) -> Value;

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits every scalar")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

pub fn min<T: Scalar>(a: &T, b: &T) -> T {
    if a.approx_cmp(b) == Ordering::Greater {
        b.clone()
    } else {
        a.clone()
    }
}

pub fn max<T: Scalar>(a: &T, b: &T) -> T {
    if a.approx_cmp(b) == Ordering::Less {
        b.clone()
    } else {
        a.clone()
    }
}

/// `a < b` under the exactness policy.
pub fn lt<T: Scalar>(a: &T, b: &T) -> bool {
    a.approx_cmp(b) == Ordering::Less
}

/// `a <= b` under the exactness policy.
pub fn le<T: Scalar>(a: &T, b: &T) -> bool {
    a.approx_cmp(b) != Ordering::Greater
}

pub fn is_negative<T: Scalar>(a: &T) -> bool {
    lt(a, &T::zero())
}

/// Formats a value with six significant digits for human-readable tables.
pub fn format_sig<T: Scalar>(x: &T) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = 5 - magnitude;
    if (0..=15).contains(&decimals) {
        let s = format!("{:.*}", decimals as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else if decimals < 0 && magnitude < 15 {
        format!("{}", v.round())
    } else {
        format!("{v:.5e}")
    }
}

fn float_tolerance_cmp(a: f64, b: f64, tol: f64) -> Ordering {
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= tol * scale {
        Ordering::Equal
    } else {
        a.partial_cmp(&b).unwrap_or(Ordering::Equal)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn approx_cmp(&self, other: &Self) -> Ordering {
        float_tolerance_cmp(*self, *other, F64_TOLERANCE)
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            return (d != 0.0).then(|| n / d);
        }
        s.parse().ok().filter(|v: &f64| v.is_finite())
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn approx_cmp(&self, other: &Self) -> Ordering {
        float_tolerance_cmp(*self as f64, *other as f64, F32_TOLERANCE as f64)
    }

    fn floor(&self) -> Self {
        f32::floor(*self)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        f64::parse_decimal(s).map(|v| v as f32)
    }

    fn to_json(&self) -> Value {
        (*self as f64).to_json()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn approx_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_exact_decimal(n.trim())?;
            let d = parse_exact_decimal(d.trim())?;
            return (!d.is_zero()).then(|| n / d);
        }
        parse_exact_decimal(s)
    }

    fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("num".into(), bigint_json(self.numer()));
        map.insert("den".into(), bigint_json(self.denom()));
        Value::Object(map)
    }
}

fn bigint_json(n: &BigInt) -> Value {
    Value::Number(serde_json::Number::from_str(&n.to_string()).expect("integer literal"))
}

/// Exact decimal literal with optional sign, fraction, and exponent.
fn parse_exact_decimal(s: &str) -> Option<Rational> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).ok()?;
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return None;
    }
    let ten = BigInt::from(10u32);
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * factor)
    } else {
        BigRational::new(numer, factor)
    };
    Some(if negative { -value } else { value })
}

/// Convenience constructor used heavily in tests and fixtures.
pub fn ratio<T: Scalar>(num: i64, den: i64) -> T {
    T::from_ratio(num, den)
}

/// Integer constant in any scalar.
pub fn int<T: Scalar>(n: i64) -> T {
    T::from_ratio(n, 1)
}
