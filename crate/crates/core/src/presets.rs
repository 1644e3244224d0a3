//! Named real constants as exact rationals within a stated precision `η`.
//!
//! Every approximation is a dyadic rational `r` with `|r - target| <= η`.
//! Supported names: `sqrtK`, `sqrtKm1` (for a non-square integer `K`),
//! `phi`, `phim1`, `e`, `pi`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flows::Hyperplane;
use crate::scalar::{big, int, parse_rational, pow2, rat, Rational};

/// Precision used when a preset appears without an explicit `@η`.
pub fn default_precision() -> Rational {
    parse_rational("1e-40").expect("literal")
}

/// Smallest `B` with `2^-B <= eta`.
fn bits_for(eta: &Rational) -> u64 {
    let mut b = 0u64;
    while pow2(-(b as i64)) > *eta {
        b += 1;
    }
    b
}

/// Rounds `r` to the nearest multiple of `2^-bits`.
fn round_dyadic(r: &Rational, bits: u64) -> Rational {
    let scale = pow2(bits as i64);
    let scaled = (r * &scale + rat(1, 2)).floor();
    scaled / scale
}

/// `sqrt(k)` within `eta`.
fn sqrt_approx(k: u64, eta: &Rational) -> Result<Rational> {
    let bits = bits_for(eta) + 1;
    let n = BigInt::from(k) << (2 * bits);
    let root = n.sqrt();
    if &root * &root == n {
        return Err(Error::InvalidParameter(format!("{k} is a perfect square")));
    }
    // floor(sqrt(k) 2^bits) / 2^bits is within 2^-bits of sqrt(k)
    Ok(big(&root) / pow2(bits as i64))
}

fn e_approx(eta: &Rational) -> Rational {
    let half = eta / int(2);
    let mut sum = Rational::zero();
    let mut term = Rational::one();
    let mut k = 0i64;
    // tail after term k is below 2 * term_{k+1}
    loop {
        sum += &term;
        k += 1;
        term /= int(k);
        if &term * int(2) < half {
            break;
        }
    }
    round_dyadic(&sum, bits_for(&half) + 1)
}

/// `atan(1/m)` within `eps` by the alternating series.
fn atan_inv(m: i64, eps: &Rational) -> Rational {
    let x = rat(1, m);
    let x2 = &x * &x;
    let mut power = x.clone();
    let mut sum = Rational::zero();
    let mut k = 0i64;
    loop {
        let term = &power / int(2 * k + 1);
        if term < *eps {
            break;
        }
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power *= &x2;
        k += 1;
    }
    sum
}

fn pi_approx(eta: &Rational) -> Rational {
    // pi = 16 atan(1/5) - 4 atan(1/239)
    let eps = eta / int(64);
    let v = int(16) * atan_inv(5, &eps) - int(4) * atan_inv(239, &eps);
    round_dyadic(&v, bits_for(&(eta / int(4))))
}

/// Value of a named constant within `eta`.
pub fn preset(name: &str, eta: &Rational) -> Result<Rational> {
    if !eta.is_positive() {
        return Err(Error::InvalidParameter("precision must be positive".into()));
    }
    let unknown = || Error::Parse(format!("unknown constant `{name}`"));
    match name {
        "phi" => Ok((int(1) + sqrt_approx(5, &(eta * int(2)))?) / int(2)),
        "phim1" => Ok((sqrt_approx(5, &(eta * int(2)))? - int(1)) / int(2)),
        "e" => Ok(e_approx(eta)),
        "pi" => Ok(pi_approx(eta)),
        _ => {
            let rest = name.strip_prefix("sqrt").ok_or_else(unknown)?;
            let (digits, minus_one) = match rest.strip_suffix("m1") {
                Some(d) => (d, true),
                None => (rest, false),
            };
            let k: u64 = digits.parse().map_err(|_| unknown())?;
            let r = sqrt_approx(k, eta)?;
            Ok(if minus_one { r - int(1) } else { r })
        }
    }
}

/// A list of coefficients, each a rational literal or a preset name, with
/// an optional trailing `@η` applying to the presets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientList {
    pub values: Vec<Rational>,
    /// `Some(η)` when at least one entry is a preset.
    pub precision: Option<Rational>,
}

impl CoefficientList {
    pub fn parse(s: &str) -> Result<Self> {
        let (list, eta) = match s.rsplit_once('@') {
            Some((l, e)) => (l, Some(parse_rational(e)?)),
            None => (s, None),
        };
        let eta_value = eta.clone().unwrap_or_else(default_precision);
        let mut any_preset = false;
        let values = list
            .split(',')
            .map(str::trim)
            .map(|item| {
                if item.is_empty() {
                    return Err(Error::Parse(format!("empty coefficient in `{s}`")));
                }
                if item.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    any_preset = true;
                    preset(item, &eta_value)
                } else {
                    parse_rational(item)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoefficientList {
            values,
            precision: any_preset.then_some(eta_value),
        })
    }

    pub fn into_hyperplane(self) -> Result<Hyperplane> {
        let h = Hyperplane::new(self.values)?;
        Ok(match self.precision {
            Some(eta) => h.with_precision(eta),
            None => h,
        })
    }
}
