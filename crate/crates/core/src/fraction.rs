//! Scalar abstraction for ownership amounts.
//!
//! Ownership is always exact. The checker runs on [`crate::Own`] (arbitrary
//! precision rationals); the type algebra itself only needs the operations
//! collected in [`Fraction`], so it also works over `Ratio<i64>` where
//! bounded denominators are acceptable (property tests use both).

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

pub trait Fraction:
    Clone
    + Eq
    + Ord
    + Hash
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Parses `1`, `0.5` or `1/3`.
    fn parse_literal(text: &str) -> Option<Self>;

    fn half(&self) -> Self;

    /// Display form: decimals when the value has a terminating
    /// decimal expansion, `n/d` otherwise.
    fn pretty(&self) -> String;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn in_unit_interval(&self) -> bool {
        *self >= Self::zero() && *self <= Self::one()
    }
}

/// Integer backends usable under [`Ratio`].
pub trait RatioInt:
    Integer + Clone + Hash + Debug + Display + Signed + From<i64> + Send + Sync + 'static
{
}

impl<T> RatioInt for T where
    T: Integer + Clone + Hash + Debug + Display + Signed + From<i64> + Send + Sync + 'static
{
}

impl<T: RatioInt> Fraction for Ratio<T> {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(T::from(numer), T::from(denom))
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n = parse_int::<T>(n.trim())?;
            let d = parse_int::<T>(d.trim())?;
            if d.is_zero() {
                return None;
            }
            return Some(Ratio::new(n, d));
        }
        if let Some((whole, frac)) = text.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let digits = format!("{}{}", whole, frac);
            let numer = parse_int::<T>(&digits)?;
            let mut denom = T::one();
            let ten = T::from(10);
            for _ in 0..frac.len() {
                denom = denom * ten.clone();
            }
            return Some(Ratio::new(numer, denom));
        }
        parse_int::<T>(text).map(Ratio::from_integer)
    }

    fn half(&self) -> Self {
        self.clone() / Ratio::from_integer(T::from(2))
    }

    fn pretty(&self) -> String {
        if self.is_integer() {
            return self.numer().to_string();
        }
        // terminating iff the reduced denominator has only 2 and 5 as factors
        let mut d = self.denom().clone();
        let two = T::from(2);
        let five = T::from(5);
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (d.clone() % two.clone()).is_zero() {
            d = d / two.clone();
            twos += 1;
        }
        while (d.clone() % five.clone()).is_zero() {
            d = d / five.clone();
            fives += 1;
        }
        if !d.is_one() {
            return format!("{}/{}", self.numer(), self.denom());
        }
        let places = twos.max(fives);
        let mut scale = T::one();
        for _ in 0..places {
            scale = scale * T::from(10);
        }
        let scaled = (self.clone() * Ratio::from_integer(scale.clone())).to_integer();
        let neg = scaled.is_negative();
        let abs = scaled.abs();
        let whole = abs.clone() / scale.clone();
        let frac = abs % scale;
        let frac = format!("{:0>width$}", frac.to_string(), width = places);
        format!("{}{}.{}", if neg { "-" } else { "" }, whole, frac)
    }
}

fn parse_int<T: RatioInt>(text: &str) -> Option<T> {
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let ten = T::from(10);
    let mut acc = T::zero();
    for b in digits.bytes() {
        acc = acc * ten.clone() + T::from(i64::from(b - b'0'));
    }
    Some(if neg { -acc } else { acc })
}
