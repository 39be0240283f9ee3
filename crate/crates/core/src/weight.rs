//! Exact rational weights.
//!
//! All comparisons in the solvers are made on exact rationals; the hot loops
//! (subset DP, brute force) first map a weight set onto a common integer grid
//! with [`IntScale`] and work on `i128`.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;
pub type Weight = Rational;

/// Sentinel used by the integer kernels for "unreachable".
pub(crate) const INF: i128 = i128::MAX / 4;

pub fn int(n: i128) -> Rational {
    Ratio::from_integer(n)
}

pub fn ratio(n: i128, d: i128) -> Rational {
    Ratio::new(n, d)
}

/// Parses `12`, `2.5`, `5/2` (no exponent notation, no sign).
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::Input(format!("not a non-negative rational: {text:?}"));
    let text = text.trim();
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: i128 = parse_digits(num).ok_or_else(bad)?;
        let d: i128 = parse_digits(den).ok_or_else(bad)?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    match text.split_once('.') {
        None => Ok(int(parse_digits(text).ok_or_else(bad)?)),
        Some((whole, frac)) => {
            if frac.len() > 30 || (whole.is_empty() && frac.is_empty()) {
                return Err(bad());
            }
            let whole = if whole.is_empty() { 0 } else { parse_digits(whole).ok_or_else(bad)? };
            let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
            let f = if frac.is_empty() { 0 } else { parse_digits(frac).ok_or_else(bad)? };
            let num = whole.checked_mul(den).and_then(|x| x.checked_add(f)).ok_or_else(bad)?;
            Ok(Ratio::new(num, den))
        }
    }
}

fn parse_digits(s: &str) -> Option<i128> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Exact textual form: integers as-is, terminating decimals as decimals,
/// everything else as `p/q`. Inverse of [`parse_rational`].
pub fn format_rational(w: &Rational) -> String {
    let (n, d) = (*w.numer(), *w.denom());
    if d == 1 {
        return n.to_string();
    }
    let mut rest = d;
    let (mut twos, mut fives) = (0u32, 0u32);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 || n < 0 {
        return format!("{n}/{d}");
    }
    let digits = twos.max(fives);
    let Some(scale) = 10i128.checked_pow(digits) else {
        return format!("{n}/{d}");
    };
    let Some(scaled) = n.checked_mul(scale / d) else {
        return format!("{n}/{d}");
    };
    let whole = scaled / scale;
    let frac = scaled % scale;
    format!("{whole}.{frac:0width$}", width = digits as usize)
}

/// Lossy conversion, for reports only.
pub fn to_f64(w: &Rational) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}

/// Maps a finite set of rationals onto integers by multiplying with the lcm
/// of their denominators. Order and sums are preserved exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntScale {
    factor: i128,
}

impl IntScale {
    pub fn for_weights<'a>(weights: impl IntoIterator<Item = &'a Rational>) -> Self {
        let factor = weights.into_iter().fold(1i128, |acc, w| acc.lcm(w.denom()));
        IntScale { factor }
    }

    pub fn to_int(&self, w: &Rational) -> i128 {
        debug_assert_eq!(self.factor % w.denom(), 0);
        w.numer() * (self.factor / w.denom())
    }

    pub fn to_rational(&self, x: i128) -> Rational {
        Ratio::new(x, self.factor)
    }
}

pub fn is_non_negative(w: &Rational) -> bool {
    !w.is_negative()
}

pub fn ceil_to_u64(w: &Rational) -> u64 {
    let c = w.ceil().to_integer();
    c.clamp(0, u64::MAX as i128) as u64
}

/// Largest power of two (possibly fractional) not exceeding `x`; zero for `x <= 0`.
pub fn pow2_floor(x: &Rational) -> Rational {
    if *x <= Rational::zero() {
        return Rational::zero();
    }
    let mut p = Rational::one();
    let two = int(2);
    while p > *x {
        p /= two;
    }
    while p * two <= *x {
        p *= two;
    }
    p
}

pub(crate) mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(w: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(w))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
