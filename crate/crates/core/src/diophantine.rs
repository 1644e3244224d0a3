//! Approximation functions `ψ`, the series `Σ k^{n-1} ψ(k)`, finite-range
//! diagnostics of the simultaneous approximation properties of a vector
//! `(α_1, …, α_n)`, and the dimension lower bound for `ψ`-approximable
//! points.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{big, int, nearest_integer, parse_rational, pow_rat, rat, ratio_to_f64, Rational};

/// `ψ(k) = c k^{-a} (log k)^{-b}` for `k >= 2`, `ψ(1) = c`, or explicit
/// values `ψ(1), ψ(2), …`.
#[derive(Debug, Clone, PartialEq)]
pub enum ApproxRate {
    PowerLog { c: Rational, a: Rational, b: Rational },
    Tabulated(Vec<f64>),
}

impl ApproxRate {
    pub fn power_log(c: Rational, a: Rational, b: Rational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidParameter(format!("ψ needs c > 0, got {c}")));
        }
        Ok(ApproxRate::PowerLog { c, a, b })
    }

    /// `ψ_0(k) = k^{-n}`.
    pub fn psi0(n: usize) -> Self {
        ApproxRate::PowerLog {
            c: int(1),
            a: int(n as i64),
            b: int(0),
        }
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty table".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("ψ must be positive, found {v}")));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "ψ must be nonincreasing, increases at k = {}",
                k + 1
            )));
        }
        Ok(ApproxRate::Tabulated(values))
    }

    /// `ψ(k)` in floating point; `None` past the end of a table.
    pub fn value(&self, k: u64) -> Option<f64> {
        match self {
            ApproxRate::PowerLog { c, a, b } => {
                let c = ratio_to_f64(c);
                if k <= 1 {
                    return Some(c);
                }
                let kf = k as f64;
                Some(c * kf.powf(-ratio_to_f64(a)) * kf.ln().powf(-ratio_to_f64(b)))
            }
            ApproxRate::Tabulated(v) => usize::try_from(k).ok().and_then(|i| v.get(i.checked_sub(1)?)).copied(),
        }
    }

    /// Lower order `λ` of `1/ψ`, available in closed form for the
    /// power-log family.
    pub fn lower_order(&self) -> Option<Rational> {
        match self {
            ApproxRate::PowerLog { a, .. } => Some(a.clone()),
            ApproxRate::Tabulated(_) => None,
        }
    }
}

impl fmt::Display for ApproxRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxRate::PowerLog { c, a, b } => write!(f, "pow:c={c},a={a},b={b}"),
            ApproxRate::Tabulated(v) => write!(f, "table:{} values", v.len()),
        }
    }
}

impl FromStr for ApproxRate {
    type Err = Error;

    /// `pow:a=2,b=2` (`c` defaults to 1, `b` to 0), `psi0:n=3`, or
    /// `table:v1,v2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "pow" => {
                let (mut c, mut a, mut b) = (int(1), None, int(0));
                for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))?;
                    let v = parse_rational(v)?;
                    match k.trim() {
                        "c" => c = v,
                        "a" => a = Some(v),
                        "b" => b = v,
                        other => return Err(Error::Parse(format!("unknown ψ parameter `{other}`"))),
                    }
                }
                let a = a.ok_or_else(|| Error::Parse("ψ needs an exponent `a`".into()))?;
                Self::power_log(c, a, b)
            }
            "psi0" => {
                let n = rest
                    .trim()
                    .strip_prefix("n=")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("expected `psi0:n=<int>`, got `{s}`")))?;
                Ok(Self::psi0(n))
            }
            "table" => {
                let values = rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad table value `{v}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Self::tabulated(values)
            }
            other => Err(Error::Parse(format!("unknown ψ family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Converges,
    Diverges,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "CONVERGES",
            Verdict::Diverges => "DIVERGES",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub verdict: Verdict,
    /// Whether the verdict comes from a fit to tabulated values rather
    /// than from a closed form.
    pub empirical: bool,
    /// `(T, Σ_{k<=T} k^{n-1} ψ(k))` at powers of ten and at the last term.
    pub partial_sums: Vec<(u64, f64)>,
    /// `T` and an upper bound on `Σ_{k>T} k^{n-1} ψ(k)`.
    pub tail_bound: Option<(u64, f64)>,
}

/// Minimum table length for an empirical verdict.
pub const MIN_TABLE_TERMS: usize = 1000;

/// Decides convergence of `Σ k^{n-1} ψ(k)`, with partial sums over the
/// first `terms` terms and, when convergent, an integral-comparison bound
/// on the tail after the last term.
pub fn series_converges(psi: &ApproxRate, n: usize, terms: u64) -> Result<SeriesReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let limit = match psi {
        ApproxRate::Tabulated(v) => terms.min(v.len() as u64),
        ApproxRate::PowerLog { .. } => terms,
    };
    let partial_sums = partial_sums(psi, n, limit);
    match psi {
        ApproxRate::PowerLog { c, a, b } => {
            let nn = int(n as i64);
            let verdict = match a.cmp(&nn) {
                Ordering::Greater => Verdict::Converges,
                Ordering::Equal if *b > int(1) => Verdict::Converges,
                _ => Verdict::Diverges,
            };
            let tail_bound = if verdict == Verdict::Converges {
                Some(power_log_tail(c, a, b, n, limit.max(2)))
            } else {
                None
            };
            Ok(SeriesReport {
                verdict,
                empirical: false,
                partial_sums,
                tail_bound,
            })
        }
        ApproxRate::Tabulated(v) => {
            let verdict = if v.len() < MIN_TABLE_TERMS {
                Verdict::Indeterminate
            } else {
                let slope = tail_log_slope(v);
                let a_hat = -slope;
                if a_hat > n as f64 + 0.1 {
                    Verdict::Converges
                } else if a_hat < n as f64 - 0.1 {
                    Verdict::Diverges
                } else {
                    Verdict::Indeterminate
                }
            };
            Ok(SeriesReport {
                verdict,
                empirical: true,
                partial_sums,
                tail_bound: None,
            })
        }
    }
}

fn partial_sums(psi: &ApproxRate, n: usize, limit: u64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut sum = 0.0f64;
    let mut next_mark = 10u64;
    for k in 1..=limit {
        let Some(v) = psi.value(k) else { break };
        sum += (k as f64).powi(n as i32 - 1) * v;
        if k == next_mark || k == limit {
            out.push((k, sum));
            if k == next_mark {
                next_mark = next_mark.saturating_mul(10);
            }
        }
    }
    out
}

/// Least-squares slope of `log ψ(k)` against `log k` over the second half
/// of the table.
fn tail_log_slope(v: &[f64]) -> f64 {
    let start = v.len() / 2;
    let pts: Vec<(f64, f64)> = (start..v.len())
        .map(|i| (((i + 1) as f64).ln(), v[i].ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    num / den
}

/// Bound on `Σ_{k>T} c k^{n-1-a} (log k)^{-b}` by `∫_T^∞`, valid once the
/// summand is decreasing; `T` is raised to that point if needed.
fn power_log_tail(c: &Rational, a: &Rational, b: &Rational, n: usize, t: u64) -> (u64, f64) {
    let c = ratio_to_f64(c);
    let a = ratio_to_f64(a);
    let b = ratio_to_f64(b);
    let nf = n as f64;
    let mu = a - nf;
    if b == 0.0 {
        let tf = t as f64;
        return (t, c * tf.powf(-mu) / mu);
    }
    if mu == 0.0 {
        // a = n, b > 1
        let lt = (t as f64).ln();
        return (t, c * lt.powf(1.0 - b) / (b - 1.0));
    }
    if b > 0.0 {
        let tf = t as f64;
        return (t, c * tf.powf(-mu) / mu * tf.ln().powf(-b));
    }
    // b < 0: the summand decreases once log x > s / (a - n + 1)
    let s = -b;
    let t_min = (s / (mu + 1.0)).exp().ceil() as u64;
    let t = t.max(t_min).max(2);
    let lt = (t as f64).ln();
    let gamma = statrs::function::gamma::gamma(s + 1.0);
    let upper = statrs::function::gamma::gamma_ur(s + 1.0, mu * lt) * gamma;
    (t, c * upper / mu.powf(s + 1.0))
}

/// Lower bound `m - 1 + (n+1)/(λ+1)` on the Hausdorff dimension of the
/// `ψ`-approximable points of an `m`-dimensional manifold, `λ` the lower
/// order of `1/ψ`; requires `λ >= n`.
pub fn dd_dim_bound(psi: &ApproxRate, n: usize, m: usize) -> Result<Rational> {
    let lambda = psi
        .lower_order()
        .ok_or_else(|| Error::InvalidParameter("lower order needs the power-log family".into()))?;
    if lambda < int(n as i64) {
        return Err(Error::HypothesisViolation(format!(
            "lower order {lambda} is below n = {n}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("manifold dimension must be positive".into()));
    }
    Ok(int(m as i64 - 1) + int(n as i64 + 1) / (lambda + int(1)))
}

/// Enforces `Q^{n+1} η < 10^{-3}` for coefficients known to precision `η`.
pub fn check_precision(eta: Option<&Rational>, q_max: u64, n: usize) -> Result<()> {
    let Some(eta) = eta else { return Ok(()) };
    let lhs = pow_rat(&big(&BigInt::from(q_max)), n as i64 + 1) * eta;
    if lhs < rat(1, 1000) {
        Ok(())
    } else {
        Err(Error::PrecisionGuard(format!(
            "Q = {q_max} needs precision below 1e-3 / Q^{}; coefficients are known to {eta}",
            n + 1
        )))
    }
}

/// Largest scan range accepted.
pub const MAX_Q: u64 = 1_000_000_000;

fn check_range(q_max: u64, min: u64) -> Result<()> {
    if q_max < min {
        return Err(Error::InvalidParameter(format!("Q must be at least {min}, got {q_max}")));
    }
    if q_max > MAX_Q {
        return Err(Error::InvalidParameter(format!("Q = {q_max} exceeds the limit {MAX_Q}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub q: u64,
    /// `min_p max_i |p_i + α_i q|`, exact.
    #[serde(with = "crate::serde_rational")]
    pub best_value: Rational,
    /// `-log(best_value) / log q`; `+∞` when `best_value = 0`, `NaN` for
    /// `q = 1`.
    pub local_exponent: f64,
}

impl ExponentRecord {
    /// `p_i = nearest integer to -α_i q`, a minimizer of the max.
    pub fn minimizer(&self, alpha: &[Rational]) -> Vec<BigInt> {
        let q = int(self.q as i64);
        alpha.iter().map(|a| nearest_integer(&-(a * &q))).collect()
    }
}

/// `ln r` for a positive rational, accurate for huge numerators and
/// denominators.
pub(crate) fn ln_rational(r: &Rational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().expect("finite").ln();
    }
    let shift = bits - 60;
    let top = (v >> shift).to_f64().expect("finite");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Per-coefficient residue walker: `α = num/den`, tracking `num·q mod den`.
struct Residues {
    dens: Vec<BigInt>,
    step: Vec<BigInt>,
    cur: Vec<BigInt>,
}

impl Residues {
    fn new(alpha: &[Rational], q0: u64) -> Self {
        let nums: Vec<BigInt> = alpha.iter().map(|a| a.numer().clone()).collect();
        let dens: Vec<BigInt> = alpha.iter().map(|a| a.denom().clone()).collect();
        let step = nums.iter().zip(&dens).map(|(n, d)| n.mod_floor(d)).collect();
        let cur = nums
            .iter()
            .zip(&dens)
            .map(|(n, d)| (n * BigInt::from(q0)).mod_floor(d))
            .collect();
        Residues { dens, step, cur }
    }

    fn advance(&mut self) {
        for ((c, s), d) in self.cur.iter_mut().zip(&self.step).zip(&self.dens) {
            *c += s;
            if &*c >= d {
                *c -= d;
            }
        }
    }

    /// `max_i dist(α_i q, Z)` at the current `q`.
    fn best(&self) -> Rational {
        let mut best: Option<(BigInt, &BigInt)> = None;
        for (c, d) in self.cur.iter().zip(&self.dens) {
            let other = d - c;
            let dist = if *c <= other { c.clone() } else { other };
            best = match best {
                Some((bn, bd)) if &bn * d >= &dist * bd => Some((bn, bd)),
                _ => Some((dist, d)),
            };
        }
        best.map_or_else(Rational::zero, |(n, d)| Rational::new(n, d.clone()))
    }
}

fn local_exponent(q: u64, best: &Rational) -> f64 {
    if best.is_zero() {
        f64::INFINITY
    } else if q < 2 {
        f64::NAN
    } else {
        -ln_rational(best) / (q as f64).ln()
    }
}

const CHUNK: u64 = 4096;

/// Records for `q = lo..=hi`, computed in parallel chunks and returned in
/// ascending `q`.
pub fn exponent_records(alpha: &[Rational], lo: u64, hi: u64) -> Vec<ExponentRecord> {
    if hi < lo {
        return Vec::new();
    }
    let starts: Vec<u64> = (lo..=hi).step_by(CHUNK as usize).collect();
    starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK - 1).min(hi);
            let mut res = Residues::new(alpha, start);
            let mut out = Vec::with_capacity((end - start + 1) as usize);
            for q in start..=end {
                let best = res.best();
                out.push(ExponentRecord {
                    q,
                    local_exponent: local_exponent(q, &best),
                    best_value: best,
                });
                res.advance();
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// `-log(min_{2<=q<=Q} best_q) / log Q`; `+∞` when some `best_q = 0`.
    pub omega_hat: f64,
    /// `max_q -log(best_q)/log q` over the same range.
    pub max_local_exponent: f64,
    /// First `q` attaining the minimum.
    pub argmin_q: u64,
    /// The ten records with the largest local exponent (ties by `q`).
    pub top_records: Vec<ExponentRecord>,
    /// Records for every `2 <= q <= Q`.
    pub records: Vec<ExponentRecord>,
}

/// Empirical simultaneous approximation exponent over `2 <= q <= Q`.
///
/// The estimate is the exponent `v` for which the best approximation in the
/// range equals `Q^{-v}`. Unlike the maximum of the per-record exponents it
/// does not overweight small `q`, where a single lucky approximation gives
/// a large ratio of logarithms.
pub fn dioph_exponent_estimate(alpha: &[Rational], eta: Option<&Rational>, q_max: u64) -> Result<ExponentEstimate> {
    check_range(q_max, 2)?;
    if alpha.is_empty() {
        return Err(Error::InvalidParameter("no coefficients".into()));
    }
    check_precision(eta, q_max, alpha.len())?;
    let records = exponent_records(alpha, 2, q_max);
    let min_rec = records
        .iter()
        .min_by(|a, b| a.best_value.cmp(&b.best_value))
        .expect("nonempty");
    let omega_hat = if min_rec.best_value.is_zero() {
        f64::INFINITY
    } else {
        -ln_rational(&min_rec.best_value) / (q_max as f64).ln()
    };
    let max_local_exponent = records
        .iter()
        .map(|r| r.local_exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut ranked: Vec<&ExponentRecord> = records.iter().collect();
    ranked.sort_by(|a, b| {
        b.local_exponent
            .partial_cmp(&a.local_exponent)
            .unwrap_or(Ordering::Equal)
            .then(a.q.cmp(&b.q))
    });
    let top_records = ranked.into_iter().take(10).cloned().collect();
    Ok(ExponentEstimate {
        omega_hat,
        max_local_exponent,
        argmin_q: min_rec.q,
        top_records,
        records,
    })
}

/// `best · q^{e} <= 1` (or `< 1` when `strict`), exactly, for rational `e`.
fn power_product_cmp_one(best: &Rational, q: u64, e: &Rational) -> Ordering {
    if best.is_zero() {
        return Ordering::Less;
    }
    // (best · q^{num/den})^{den} = best^{den} · q^{num}
    let den = e.denom().to_i64().expect("small denominator");
    let num = e.numer().to_i64().expect("small numerator");
    (pow_rat(best, den) * pow_rat(&int(q as i64), num)).cmp(&Rational::one())
}

/// Decides `best · q^e < 1` (`Less`), `= 1` or `> 1`; uses logarithms and
/// falls back to exact arithmetic near a tie.
pub(crate) fn compare_scaled(best: &Rational, q: u64, e: &Rational) -> Ordering {
    if best.is_zero() {
        return Ordering::Less;
    }
    let v = ln_rational(best) + ratio_to_f64(e) * (q as f64).ln();
    if v < -1e-9 {
        Ordering::Less
    } else if v > 1e-9 {
        Ordering::Greater
    } else {
        power_product_cmp_one(best, q, e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMargin {
    /// Largest grid value of `δ` for which `best_q > q^{-n+δ}` holds for all
    /// `2 <= q <= Q` outside `exceptional`.
    #[serde(with = "crate::serde_rational")]
    pub delta: Rational,
    /// The `q` violating the inequality at `delta`, ascending.
    pub exceptional: Vec<u64>,
    /// Set when no positive `δ` works within the exceptional budget.
    pub condition_fails: bool,
    #[serde(with = "crate::serde_rational")]
    pub grid_step: Rational,
}

/// Search over `δ ∈ {0, 0.01, …, n}` for the inequality
/// `max_i |p_i + α_i q| > |q|^{-n+δ}` on `2 <= q <= Q`, allowing at most
/// `max_exceptional` violating `q`.
pub fn delta_margin(
    alpha: &[Rational],
    eta: Option<&Rational>,
    q_max: u64,
    max_exceptional: usize,
) -> Result<DeltaMargin> {
    check_range(q_max, 2)?;
    if alpha.is_empty() {
        return Err(Error::InvalidParameter("no coefficients".into()));
    }
    let n = alpha.len();
    check_precision(eta, q_max, n)?;
    let records = exponent_records(alpha, 2, q_max);
    delta_margin_from_records(&records, n, max_exceptional)
}

/// The search behind [`delta_margin`] on precomputed records.
pub fn delta_margin_from_records(
    records: &[ExponentRecord],
    n: usize,
    max_exceptional: usize,
) -> Result<DeltaMargin> {
    let step = rat(1, 100);
    let nn = int(n as i64);
    // q violates δ iff δ >= n - local_exponent(q)
    let violators = |delta: &Rational| -> Vec<u64> {
        let e = &nn - delta;
        let approx = ratio_to_f64(delta);
        records
            .iter()
            .filter(|r| {
                let critical = n as f64 - r.local_exponent;
                if approx < critical - 1e-6 {
                    false
                } else if approx > critical + 1e-6 {
                    true
                } else {
                    compare_scaled(&r.best_value, r.q, &e) != Ordering::Greater
                }
            })
            .map(|r| r.q)
            .collect()
    };
    let steps = 100 * n as i64;
    // violator sets grow with δ, so bisect on the grid index
    let ok = |k: i64| violators(&(int(k) * &step)).len() <= max_exceptional;
    let best_k = if !ok(0) {
        None
    } else {
        let (mut lo, mut hi) = (0i64, steps);
        if ok(hi) {
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    };
    let k = best_k.unwrap_or(0);
    let delta = int(k) * &step;
    let exceptional = violators(&delta);
    Ok(DeltaMargin {
        condition_fails: k == 0,
        delta,
        exceptional,
        grid_step: step,
    })
}

/// `q` in `1..=Q` with `best_q < q^{-v}`.
pub fn w_membership_diagnostic(
    alpha: &[Rational],
    eta: Option<&Rational>,
    v: &Rational,
    q_max: u64,
) -> Result<Vec<u64>> {
    check_range(q_max, 1)?;
    check_precision(eta, q_max, alpha.len())?;
    Ok(exponent_records(alpha, 1, q_max)
        .iter()
        .filter(|r| compare_scaled(&r.best_value, r.q, v) == Ordering::Less)
        .map(|r| r.q)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dist_to_int;

    #[test]
    fn series_examples() {
        let p: ApproxRate = "pow:a=2".parse().unwrap();
        assert_eq!(series_converges(&p, 2, 1000).unwrap().verdict, Verdict::Diverges);
        let p: ApproxRate = "pow:a=2,b=2".parse().unwrap();
        assert_eq!(series_converges(&p, 2, 1000).unwrap().verdict, Verdict::Converges);
        let p: ApproxRate = "pow:a=3.2".parse().unwrap();
        let r = series_converges(&p, 3, 1000).unwrap();
        let (t, tail) = r.tail_bound.unwrap();
        assert_eq!(t, 1000);
        assert!((tail - 5.0 * 1000f64.powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn short_tables_are_indeterminate() {
        let p = ApproxRate::tabulated(vec![1.0, 0.5, 0.25]).unwrap();
        assert_eq!(series_converges(&p, 2, 10).unwrap().verdict, Verdict::Indeterminate);
        assert!(ApproxRate::tabulated(vec![1.0, 2.0]).is_err());
        let long: Vec<f64> = (1..=5000).map(|k| (k as f64).powi(-4)).collect();
        let p = ApproxRate::tabulated(long).unwrap();
        assert_eq!(series_converges(&p, 2, 5000).unwrap().verdict, Verdict::Converges);
    }

    #[test]
    fn dimension_bound_examples() {
        let p: ApproxRate = "pow:a=3,b=1.1".parse().unwrap();
        assert_eq!(dd_dim_bound(&p, 3, 2).unwrap(), int(2));
        let p: ApproxRate = "pow:a=100".parse().unwrap();
        assert_eq!(dd_dim_bound(&p, 2, 1).unwrap(), rat(3, 101));
        let p: ApproxRate = "pow:a=4".parse().unwrap();
        assert_eq!(dd_dim_bound(&p, 2, 1).unwrap(), rat(3, 5));
        let p: ApproxRate = "pow:a=1".parse().unwrap();
        assert!(matches!(dd_dim_bound(&p, 2, 1), Err(Error::HypothesisViolation(_))));
    }

    #[test]
    fn records_match_direct_computation() {
        let alpha = vec![rat(3, 7), rat(-5, 11), rat(13, 17)];
        for r in exponent_records(&alpha, 1, 300) {
            let q = int(r.q as i64);
            let direct = alpha
                .iter()
                .map(|a| dist_to_int(&(a * &q)))
                .max()
                .unwrap();
            assert_eq!(r.best_value, direct, "q = {}", r.q);
        }
    }

    #[test]
    fn rational_coefficients_hit_zero() {
        let est = dioph_exponent_estimate(&[rat(1, 2), rat(1, 3)], None, 100).unwrap();
        assert!(est.omega_hat.is_infinite());
        assert_eq!(est.argmin_q, 6);
        let dm = delta_margin(&[rat(1, 2), rat(1, 3)], None, 100, 0).unwrap();
        assert!(dm.condition_fails);
        assert!(dm.exceptional.contains(&6));
    }

    #[test]
    fn precision_guard() {
        let eta = parse_rational("1e-10").unwrap();
        assert!(check_precision(Some(&eta), 100, 2).is_ok());
        assert!(matches!(check_precision(Some(&eta), 10_000, 2), Err(Error::PrecisionGuard(_))));
    }

    #[test]
    fn membership_counts() {
        let alpha = [rat(2, 7), rat(3, 7)];
        let all = w_membership_diagnostic(&alpha, None, &int(0), 50).unwrap();
        assert_eq!(all.len(), 50);
        let hits = w_membership_diagnostic(&alpha, None, &int(100), 50).unwrap();
        // q = 1 always qualifies since 1^{-v} = 1
        assert_eq!(hits, vec![1, 7, 14, 21, 28, 35, 42, 49]);
    }
}
