//! Exact numeric primitives: rationals, signed square roots and closed intervals.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseValueError;

pub type Rational = BigRational;

/// Most fractional digits accepted by [`parse_decimal`].
pub const MAX_FRACTION_DIGITS: usize = 6;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses a plain decimal literal (`-0.125`, `3`, `.5`) into an exact rational.
///
/// A `p/q` fraction is also accepted, which is handy on the command line.
pub fn parse_decimal(text: &str) -> Result<Rational, ParseValueError> {
    let s = text.trim();
    let bad = || ParseValueError::Malformed(text.to_string());
    if s.is_empty() {
        return Err(ParseValueError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > MAX_FRACTION_DIGITS {
        return Err(ParseValueError::TooPrecise {
            text: text.to_string(),
            max: MAX_FRACTION_DIGITS,
        });
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Rounds to `places` decimal digits, halves away from zero.
pub fn round_half_up(value: &Rational, places: u32) -> Rational {
    let scale = Rational::from_integer(num_traits::pow(BigInt::from(10), places as usize));
    let scaled = value.abs() * &scale;
    let half = rational(1, 2);
    let rounded = (scaled + half).floor();
    let magnitude = rounded / scale;
    if value.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// Fixed-point rendering with half-up rounding, e.g. `10.7` for 262/2456·100 at one place.
pub fn format_fixed(value: &Rational, places: u32) -> String {
    let rounded = round_half_up(value, places);
    let scale = num_traits::pow(BigInt::from(10), places as usize);
    let scaled = (rounded.abs() * Rational::from_integer(scale.clone())).to_integer();
    let (int_part, frac_part) = scaled.div_rem(&scale);
    let sign = if rounded.is_negative() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = places as usize)
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(value: f64) -> Rational {
    Rational::from_float(value).expect("finite float")
}

fn perfect_square_root(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let root = n.sqrt();
    (&root * &root == *n).then_some(root)
}

/// A real number of the form `±√q` with `q` rational and non-negative.
///
/// Every registered metric is either rational or, like MCC, a signed square
/// root of a rational, so this type represents all of them exactly and
/// admits exact comparison against rational bounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactReal {
    negative: bool,
    square: Rational,
}

impl ExactReal {
    pub fn from_rational(value: Rational) -> Self {
        let negative = value.is_negative();
        Self { negative, square: &value * &value }
    }

    /// `sign · √square`; the sign of zero is dropped.
    pub fn signed_sqrt(negative: bool, square: Rational) -> Self {
        assert!(!square.is_negative(), "square root of a negative rational");
        let negative = negative && !square.is_zero();
        Self { negative, square }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn square(&self) -> &Rational {
        &self.square
    }

    /// The exact rational value, when there is one.
    pub fn to_rational(&self) -> Option<Rational> {
        let numer = perfect_square_root(self.square.numer())?;
        let denom = perfect_square_root(self.square.denom())?;
        let magnitude = Rational::new(numer, denom);
        Some(if self.negative { -magnitude } else { magnitude })
    }

    pub fn to_f64(&self) -> f64 {
        let magnitude = to_f64(&self.square).sqrt();
        if self.negative {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn cmp_rational(&self, other: &Rational) -> Ordering {
        self.cmp(&ExactReal::from_rational(other.clone()))
    }

    /// Absolute difference `|self − other|`, approximated for display.
    pub fn approx_gap(&self, other: &Rational) -> f64 {
        match self.to_rational() {
            Some(q) => to_f64(&(q - other).abs()),
            None => (self.to_f64() - to_f64(other)).abs(),
        }
    }
}

impl From<Rational> for ExactReal {
    fn from(value: Rational) -> Self {
        Self::from_rational(value)
    }
}

impl Ord for ExactReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.square.cmp(&other.square),
            (true, true) => other.square.cmp(&self.square),
        }
    }
}

impl PartialOrd for ExactReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_rational() {
            Some(q) => write!(f, "{}", display_rational(&q)),
            None => write!(f, "{:.6}", self.to_f64()),
        }
    }
}

/// Short human rendering: integers and terminating decimals exactly, others to six places.
pub fn display_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let mut denom = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0u32;
    while denom.is_even() {
        denom /= &two;
        digits += 1;
    }
    let mut fives = 0u32;
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    let places = digits.max(fives);
    if denom.is_one() && places <= 12 {
        format_fixed(value, places)
    } else {
        format_fixed(value, 6)
    }
}

/// A closed interval `[lo, hi]` over the rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    /// Returns `None` when `lo > hi`.
    pub fn new(lo: Rational, hi: Rational) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn point(value: Rational) -> Self {
        Self { lo: value.clone(), hi: value }
    }

    pub fn unit() -> Self {
        Self { lo: Rational::zero(), hi: Rational::one() }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn contains_real(&self, value: &ExactReal) -> bool {
        value.cmp_rational(&self.lo) != Ordering::Less && value.cmp_rational(&self.hi) != Ordering::Greater
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        Interval::new(lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", display_rational(&self.lo), display_rational(&self.hi))
    }
}
