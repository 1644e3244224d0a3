//! Deterministic point samplers over a box and binomial confidence
//! intervals.
//!
//! Monte Carlo points come in fixed-size chunks, chunk `c` drawn from a
//! ChaCha stream `c` under the run seed, so the multiset of points and
//! every hit count are independent of how chunks are spread over threads.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::ParamBox;
use crate::error::{Error, Result};
use crate::scalar::{big, pow2, Rational};

/// Points per chunk; part of the sampling contract, since it fixes which
/// stream each point is drawn from.
pub const CHUNK: u64 = 1024;

/// Upper limit on the number of points in one estimate.
pub const MAX_SAMPLES: u64 = 1 << 34;

/// Width of the binomial confidence intervals, in standard deviations.
pub const CI_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Sampler {
    /// Cell centers of a `per_axis^d` grid.
    Grid { per_axis: u64 },
    /// Uniform points with dyadic coordinates of 53-bit resolution.
    Mc { samples: u64, seed: u64 },
}

impl Sampler {
    pub fn count(&self, dim: usize) -> Result<u64> {
        let n = match *self {
            Sampler::Grid { per_axis } => per_axis.checked_pow(dim as u32),
            Sampler::Mc { samples, .. } => Some(samples),
        };
        match n {
            Some(n) if n > 0 && n <= MAX_SAMPLES => Ok(n),
            Some(0) => Err(Error::InvalidParameter("sampler has no points".into())),
            _ => Err(Error::BudgetExceeded {
                needed: n.map_or(u128::MAX, u128::from),
                budget: u128::from(MAX_SAMPLES),
            }),
        }
    }

    /// Points `start..end` (indices into the full sample sequence).
    fn points(&self, b: &ParamBox, chunk: u64, total: u64) -> Vec<Vec<Rational>> {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        match *self {
            Sampler::Grid { per_axis } => (start..end)
                .map(|idx| {
                    let mut rest = idx;
                    b.intervals()
                        .iter()
                        .map(|(lo, hi)| {
                            let j = rest % per_axis;
                            rest /= per_axis;
                            let frac = Rational::new(BigInt::from(2 * j + 1), BigInt::from(2 * per_axis));
                            lo + (hi - lo) * frac
                        })
                        .collect()
                })
                .collect(),
            Sampler::Mc { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                let scale = pow2(-53);
                (start..end)
                    .map(|_| {
                        b.intervals()
                            .iter()
                            .map(|(lo, hi)| {
                                let k: u64 = rng.random::<u64>() >> 11;
                                lo + (hi - lo) * big(&BigInt::from(k)) * &scale
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Result of a sampled volume estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub hits: u64,
    pub total: u64,
    #[serde(with = "crate::serde_rational")]
    pub estimate: Rational,
    pub estimate_f64: f64,
    /// Wilson interval at [`CI_SIGMAS`] for Monte Carlo; the point value
    /// for grids.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Estimate {
    fn new(hits: u64, total: u64, volume: &Rational, statistical: bool) -> Self {
        let estimate = volume * Rational::new(BigInt::from(hits), BigInt::from(total));
        let estimate_f64 = crate::scalar::ratio_to_f64(&estimate);
        let (ci_lo, ci_hi) = if statistical {
            let (lo, hi) = wilson_interval(hits, total, CI_SIGMAS);
            let v = crate::scalar::ratio_to_f64(volume);
            (lo * v, hi * v)
        } else {
            (estimate_f64, estimate_f64)
        };
        Estimate {
            hits,
            total,
            estimate,
            estimate_f64,
            ci_lo,
            ci_hi,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_lo <= value && value <= self.ci_hi
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, total: u64, z: f64) -> (f64, f64) {
    let n = total as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Volume of `{x ∈ B : pred(x)}` estimated from the sampler's points.
/// Errors from the predicate abort the estimate.
pub fn estimate_volume<F>(sampler: &Sampler, b: &ParamBox, pred: F) -> Result<Estimate>
where
    F: Fn(&[Rational]) -> Result<bool> + Sync,
{
    let total = sampler.count(b.dim())?;
    let chunks = total.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut h = 0u64;
            for x in sampler.points(b, c, total) {
                if pred(&x)? {
                    h += 1;
                }
            }
            Ok(h)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(Estimate::new(
        hits,
        total,
        &b.volume(),
        matches!(sampler, Sampler::Mc { .. }),
    ))
}

/// The first `count` points of the sampler, in order.
pub fn sample_points(sampler: &Sampler, b: &ParamBox, count: u64) -> Result<Vec<Vec<Rational>>> {
    let total = sampler.count(b.dim())?.min(count);
    Ok((0..total.div_ceil(CHUNK))
        .flat_map(|c| sampler.points(b, c, total))
        .collect())
}

/// Uniform rational in `[lo, hi)` with 53-bit resolution, from a caller's
/// RNG; used for random test instances.
pub fn uniform_rational<R: Rng>(rng: &mut R, lo: &Rational, hi: &Rational) -> Rational {
    let k: u64 = rng.random::<u64>() >> 11;
    lo + (hi - lo) * big(&BigInt::from(k)) * pow2(-53)
}

/// Small rational `num/den` with `|num| <= bound·den`, convenient for
/// readable random instances.
pub fn small_rational<R: Rng>(rng: &mut R, bound: i64, den: i64) -> Rational {
    let num = rng.random_range(-bound * den..=bound * den);
    Rational::new(BigInt::from(num), BigInt::from(den))
}
