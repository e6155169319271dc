//! Exact arithmetic in the real quadratic field Q(√7).
//!
//! Every element is stored as a pair of canonical rationals `(a, b)` standing
//! for `a + b·√7`. Because √7 is irrational the pair is unique, so equality,
//! hashing and ordering are all exact; no floating point value is ever used to
//! decide a sign or a rounding digit.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary-precision rational in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Number of decimal places used for the convenience `decimal` field of
/// serialized values.
pub const REPORT_PLACES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("division by zero in Q(√7)")]
    DivisionByZero,
    #[error("malformed rational {0:?}")]
    BadRational(String),
}

/// Exact sign of a field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of_rational(x: &Rational) -> Sign {
        if x.is_zero() {
            Sign::Zero
        } else if x.is_positive() {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

/// Parses `"p"`, `"p/q"` or a decimal such as `"-0.125"` into a canonical
/// rational.
pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let bad = || ExactError::BadRational(s.to_string());
    let t = s.trim();
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let n = BigInt::from_str(&digits).map_err(|_| bad())?;
        let x = Rational::new(n, BigInt::from(10).pow(frac.len() as u32));
        return Ok(if negative { -x } else { x });
    }
    match t.split_once('/') {
        None => Ok(Rational::from_integer(BigInt::from_str(t).map_err(|_| bad())?)),
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Shorthand for a small rational `n/d`. Panics when `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// An element `a + b·√7` of Q(√7).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Q7Number {
    a: Rational,
    b: Rational,
}

impl Q7Number {
    pub fn new(a: Rational, b: Rational) -> Self {
        Q7Number { a, b }
    }

    pub fn from_rational(a: Rational) -> Self {
        Q7Number { a, b: Rational::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(n.into()))
    }

    /// `(a_num/den) + (b_num/den)·√7`, the shape in which closed forms are
    /// usually printed.
    pub fn frac(a_num: i64, b_num: i64, den: i64) -> Self {
        Q7Number::new(rat(a_num, den), rat(b_num, den))
    }

    pub fn sqrt7() -> Self {
        Q7Number::new(Rational::zero(), Rational::one())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn conjugate(&self) -> Self {
        Q7Number::new(self.a.clone(), -self.b.clone())
    }

    /// Field norm `a² − 7b²`.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - Rational::from_integer(7.into()) * &self.b * &self.b
    }

    pub fn inv(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        let n = self.norm();
        Ok(Q7Number::new(&self.a / &n, -(&self.b / &n)))
    }

    pub fn checked_div(&self, rhs: &Q7Number) -> Result<Self, ExactError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Q7Number::new(&self.a * k, &self.b * k)
    }

    /// Exact sign. Mixed-sign coefficients are settled by comparing `a²`
    /// against `7b²`.
    pub fn sign(&self) -> Sign {
        let sa = Sign::of_rational(&self.a);
        let sb = Sign::of_rational(&self.b);
        match (sa, sb) {
            (s, Sign::Zero) => s,
            (Sign::Zero, s) => s,
            (x, y) if x == y => x,
            _ => {
                let a2 = &self.a * &self.a;
                let b2 = Rational::from_integer(7.into()) * &self.b * &self.b;
                // a² = 7b² is impossible for nonzero rationals.
                if a2 > b2 {
                    sa
                } else {
                    sb
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Sign::Negative
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Largest integer `n` with `n ≤ self`.
    pub fn floor(&self) -> BigInt {
        // Integer estimate of b·√7 = ±sqrt(7u²)/v, then exact correction.
        let u = self.b.numer();
        let v = self.b.denom();
        let root = (BigInt::from(7) * u * u).sqrt() / v;
        let guess_b = if u.is_negative() { -root } else { root };
        let mut n = self.a.floor().to_integer() + guess_b;
        loop {
            let diff = self - &Q7Number::from_rational(Rational::from_integer(n.clone()));
            match diff.sign() {
                Sign::Negative => n -= 1,
                _ => {
                    let next = &diff - &Q7Number::one();
                    if next.sign() == Sign::Negative {
                        return n;
                    }
                    n += 1;
                }
            }
        }
    }

    /// Decimal expansion rounded half-up (on the magnitude) to `places`
    /// digits after the point. Ties can only occur for rational values.
    pub fn to_decimal(&self, places: usize) -> String {
        let negative = self.is_negative();
        let scale = Rational::from_integer(BigInt::from(10).pow(places as u32));
        let shifted = self.abs().scale(&scale) + Q7Number::from_rational(rat(1, 2));
        let digits = shifted.floor().to_string();
        let body = if places == 0 {
            digits
        } else {
            let padded = format!("{:0>width$}", digits, width = places + 1);
            let (int, frac) = padded.split_at(padded.len() - places);
            format!("{int}.{frac}")
        };
        let is_zero = body.chars().all(|c| c == '0' || c == '.');
        if negative && !is_zero {
            format!("-{body}")
        } else {
            body
        }
    }

    /// Floating-point approximation, for statistics and display only.
    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * 7f64.sqrt()
    }
}

impl PartialOrd for Q7Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q7Number {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            Sign::Negative => Ordering::Less,
            Sign::Zero => Ordering::Equal,
            Sign::Positive => Ordering::Greater,
        }
    }
}

impl From<Rational> for Q7Number {
    fn from(a: Rational) -> Self {
        Q7Number::from_rational(a)
    }
}

impl From<i64> for Q7Number {
    fn from(n: i64) -> Self {
        Q7Number::from_integer(n)
    }
}

impl fmt::Display for Q7Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let coeff = |b: &Rational| if b.is_one() { String::new() } else { format!("{b}") };
        match (self.a.is_zero(), self.b.is_negative()) {
            (true, false) => write!(f, "{}√7", coeff(&self.b)),
            (true, true) => write!(f, "-{}√7", coeff(&-&self.b)),
            (false, false) => write!(f, "{} + {}√7", self.a, coeff(&self.b)),
            (false, true) => write!(f, "{} - {}√7", self.a, coeff(&-&self.b)),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Q7Number> for Q7Number {
            type Output = Q7Number;
            fn $method(self, rhs: Q7Number) -> Q7Number {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Q7Number> for Q7Number {
            type Output = Q7Number;
            fn $method(self, rhs: &'a Q7Number) -> Q7Number {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Q7Number> for &'a Q7Number {
            type Output = Q7Number;
            fn $method(self, rhs: Q7Number) -> Q7Number {
                self.$method(&rhs)
            }
        }
    };
}

impl<'b> Add<&'b Q7Number> for &Q7Number {
    type Output = Q7Number;
    fn add(self, rhs: &'b Q7Number) -> Q7Number {
        Q7Number::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl<'b> Sub<&'b Q7Number> for &Q7Number {
    type Output = Q7Number;
    fn sub(self, rhs: &'b Q7Number) -> Q7Number {
        Q7Number::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl<'b> Mul<&'b Q7Number> for &Q7Number {
    type Output = Q7Number;
    fn mul(self, rhs: &'b Q7Number) -> Q7Number {
        let seven = Rational::from_integer(7.into());
        Q7Number::new(
            &self.a * &rhs.a + seven * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Q7Number {
    type Output = Q7Number;
    fn neg(self) -> Q7Number {
        Q7Number::new(-self.a, -self.b)
    }
}

impl Neg for &Q7Number {
    type Output = Q7Number;
    fn neg(self) -> Q7Number {
        -self.clone()
    }
}

impl Sum for Q7Number {
    fn sum<I: Iterator<Item = Q7Number>>(iter: I) -> Self {
        iter.fold(Q7Number::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Q7Number> for Q7Number {
    fn sum<I: Iterator<Item = &'a Q7Number>>(iter: I) -> Self {
        iter.fold(Q7Number::zero(), |acc, x| acc + x)
    }
}

#[derive(Serialize, Deserialize)]
struct Q7Wire {
    a: String,
    b: String,
    #[serde(default)]
    decimal: Option<String>,
}

impl Serialize for Q7Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        Q7Wire {
            a: self.a.to_string(),
            b: self.b.to_string(),
            decimal: Some(self.to_decimal(REPORT_PLACES)),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Q7Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = Q7Wire::deserialize(deserializer)?;
        let a = parse_rational(&wire.a).map_err(serde::de::Error::custom)?;
        let b = parse_rational(&wire.b).map_err(serde::de::Error::custom)?;
        Ok(Q7Number::new(a, b))
    }
}

/// Serde adapter writing a [`Rational`] as `"n/d"` (or `"n"`).
pub mod rational_string {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// `⌊x · 2^64⌋` for `0 ≤ x ≤ 1`, saturated to `u64::MAX` at `x = 1`.
/// Used to turn exact probabilities into integer sampling thresholds.
pub fn u64_threshold(x: &Q7Number) -> u64 {
    let scaled = x.scale(&Rational::from_integer(BigInt::from(1u8) << 64));
    let f = scaled.floor();
    if f.sign() == BigSign::Minus {
        0
    } else {
        f.to_u64().unwrap_or(u64::MAX)
    }
}
