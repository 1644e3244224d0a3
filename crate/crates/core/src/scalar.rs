//! Exact rationals and the floating mirror.
//!
//! Every algorithm in the crate is written against [`Scalar`]. The exact
//! path instantiates it with [`Rational`]; the float path with `f64`. The
//! two never mix inside a single value: a `Multivector<Rational>` and a
//! `Multivector<f64>` are different types, and [`Scalar::MODE`] carries the
//! tag at runtime for reports.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Field elements the algebra is generic over.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    const MODE: Mode;

    fn abs_value(&self) -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        ratio_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// `num/den` as an exact rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn big(v: &BigInt) -> Rational {
    Rational::from_integer(v.clone())
}

/// Exact power of two, negative exponents allowed.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn pow_rat(base: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        num_traits::pow(base.recip(), e.unsigned_abs() as usize)
    }
}

/// Nearest integer, halves rounded up.
pub fn nearest_integer(r: &Rational) -> BigInt {
    (r + rat(1, 2)).floor().to_integer()
}

/// Distance from `r` to the nearest integer.
pub fn dist_to_int(r: &Rational) -> Rational {
    let n = big(&nearest_integer(r));
    (r - n).abs()
}

/// Conversion that stays accurate when numerator and denominator both
/// overflow `f64`.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let num = r.numer();
    let den = r.denom();
    let shift = num.bits() as i64 - den.bits() as i64;
    // scale to a quotient with ~64 significant bits
    let (n, d) = if shift > 0 {
        (num.clone(), den.clone() << (shift as u64))
    } else {
        (num.clone() << ((-shift) as u64), den.clone())
    };
    let q = Rational::new(n << 64u32, d).to_integer();
    let mant = q.to_f64().unwrap_or(f64::NAN);
    mant * 2f64.powi((shift - 64) as i32)
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(v: f64) -> Rational {
    Rational::from_float(v).expect("finite float")
}

/// A dyadic rational that is at least `v`, padded by a relative slack of
/// 2^-40 so that upstream rounding in `v` cannot make it fall below the
/// real quantity it approximates.
pub fn dyadic_upper(v: f64) -> Rational {
    let padded = if v >= 0.0 {
        v * (1.0 + 2f64.powi(-40))
    } else {
        v * (1.0 - 2f64.powi(-40))
    };
    from_f64(padded)
}

/// Always renders as `num/den`, the form used by every serialization in
/// the crate.
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den`, integers, decimals (`0.25`, `-1.5`) and scientific
/// notation (`1e-40`, `2.5e3`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut value = big(&joined.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac.len() as i64;
    let ten = int(10);
    value *= pow_rat(&ten, scale);
    if negative {
        value = -value;
    }
    Ok(value)
}

/// gcd of a list of integers (0 for an empty or all-zero list).
pub fn gcd_all<'a>(values: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::zero(), |acc, v| acc.gcd(v))
}

/// Compares `base^p / q` against 1 for `base >= 0` and rational exponent
/// `p/q`, exactly. Returns the ordering of `base^(p/q)` relative to 1.
pub fn cmp_rational_power_with_one(base: &Rational, exp: &Rational) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if base.is_zero() {
        return if exp.is_positive() {
            Ordering::Less
        } else {
            Ordering::Greater
        };
    }
    if exp.is_zero() {
        return Ordering::Equal;
    }
    // base^(p/q) vs 1  <=>  base^p vs 1 (q > 0)
    let p = exp.numer().to_i64().expect("small exponent numerator");
    pow_rat(base, p).cmp(&Rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5e2").unwrap(), int(250));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(pow2(3), int(8));
        assert_eq!(pow2(-2), rat(1, 4));
        assert_eq!(pow2(0), int(1));
    }

    #[test]
    fn nearest_integer_and_distance() {
        assert_eq!(nearest_integer(&rat(7, 3)), BigInt::from(2));
        assert_eq!(nearest_integer(&rat(-7, 3)), BigInt::from(-2));
        assert_eq!(dist_to_int(&rat(7, 3)), rat(1, 3));
        assert_eq!(dist_to_int(&rat(-5, 4)), rat(1, 4));
    }

    #[test]
    fn huge_ratios_convert_to_float() {
        let tiny = pow_rat(&int(10), -400) * int(3);
        let v = ratio_to_f64(&(Rational::one() + tiny));
        assert_eq!(v, 1.0);
        let r = Rational::new(BigInt::from(10).pow(400u32) * 3, BigInt::from(10).pow(400u32));
        assert!((ratio_to_f64(&r) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_upper_is_above() {
        for v in [0.1, 1.0 / 3.0, 1e-30, 12345.678] {
            assert!(dyadic_upper(v) > from_f64(v));
        }
    }

    #[test]
    fn rational_power_comparison() {
        use std::cmp::Ordering::*;
        assert_eq!(cmp_rational_power_with_one(&rat(1, 2), &rat(3, 2)), Less);
        assert_eq!(cmp_rational_power_with_one(&rat(3, 2), &rat(1, 7)), Greater);
        assert_eq!(cmp_rational_power_with_one(&rat(3, 2), &rat(-1, 7)), Less);
        assert_eq!(cmp_rational_power_with_one(&int(1), &rat(5, 3)), Equal);
    }
}
