//! Shell hit tests for the sets `M^<(B,t,ψ)` and `M^≥(B,t,ψ)`, exact strip
//! measures for a single `q`, sampled region measures, the box constant of
//! the `M^≥` bound, and tails of the resulting series.
//!
//! For `x ∈ B ⊂ R^{n-1}` write `y(x) = (x, x̃A) ∈ R^n`. A shell witness at
//! level `t` is `(p, q) ∈ Z × Z^n` with `2^t <= ‖q‖_∞ < 2^{t+1}` and
//! `|p + q·y(x)| < θ`; the side is `LESS` when `|q_i + α_i q_n| < 1` for all
//! `i < n` and `GEQ` otherwise.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::affine::{sublevel_measure, AffineForm, ParamBox};
use crate::diophantine::ApproxRate;
use crate::error::{check_dim, Error, Result};
use crate::flows::Hyperplane;
use crate::reduce::short_vectors;
use crate::sampling::{estimate_volume, Estimate, Sampler};
use crate::scalar::{big, from_f64, int, nearest_integer, pow2, rat, ratio_to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Less,
    Geq,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Less => "less",
            Side::Geq => "geq",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "less" | "lt" => Ok(Side::Less),
            "geq" | "ge" => Ok(Side::Geq),
            _ => Err(Error::Parse(format!("unknown side `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub p: BigInt,
    pub q: Vec<i64>,
    /// `|p + q·y(x)|`.
    pub value: Rational,
}

impl Witness {
    /// Recomputes `|p + q·y(x)|` from scratch.
    pub fn recompute(&self, x: &[Rational], a: &Hyperplane) -> Result<Rational> {
        Ok((big(&self.p) + q_dot(&self.q, &point(x, a)?)).abs())
    }
}

/// The shell `2^t <= ‖q‖_∞ < 2^{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShellSpec {
    pub t: u32,
}

impl ShellSpec {
    pub fn lower(&self) -> i64 {
        1i64 << self.t
    }

    pub fn upper(&self) -> i64 {
        1i64 << (self.t + 1)
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        let h = q.iter().map(|v| v.abs()).max().unwrap_or(0);
        self.lower() <= h && h < self.upper()
    }

    /// Number of `q ∈ Z^n` in the shell.
    pub fn size(&self, n: usize) -> u128 {
        let outer = (2 * self.upper() - 1) as u128;
        let inner = (2 * self.lower() - 1) as u128;
        outer.pow(n as u32) - inner.pow(n as u32)
    }
}

/// Largest shell level accepted (keeps `q` within `i64`).
pub const MAX_T: u32 = 40;

/// `y(x) = (x_1, …, x_{n-1}, α_0 + Σ α_i x_i)`.
pub fn point(x: &[Rational], a: &Hyperplane) -> Result<Vec<Rational>> {
    check_dim(a.param_dim(), x.len())?;
    let mut y = x.to_vec();
    y.push(a.height_form().eval(x)?);
    Ok(y)
}

fn q_dot(q: &[i64], y: &[Rational]) -> Rational {
    q.iter()
        .zip(y)
        .filter(|(qi, _)| **qi != 0)
        .fold(Rational::zero(), |acc, (qi, yi)| acc + yi * int(*qi))
}

/// `q·y(x)` as an affine form in `x`: constant `q_n α_0`, gradient
/// `q_i + α_i q_n`.
pub fn shell_form(q: &[i64], a: &Hyperplane) -> Result<AffineForm> {
    check_dim(a.n(), q.len())?;
    let n = a.n();
    let qn = int(q[n - 1]);
    Ok(AffineForm::new(
        &a.alpha()[0] * &qn,
        (1..n).map(|i| int(q[i - 1]) + &a.alpha()[i] * &qn).collect(),
    ))
}

/// Whether `q` satisfies the side's constraint on `|q_i + α_i q_n|`.
pub fn side_of(q: &[i64], a: &Hyperplane) -> Side {
    let n = a.n();
    let qn = int(q[n - 1]);
    let all_small = (1..n).all(|i| (int(q[i - 1]) + &a.alpha()[i] * &qn).abs() < Rational::one());
    if all_small {
        Side::Less
    } else {
        Side::Geq
    }
}

/// `ψ(2^t)` as a rational: exact for `ψ = c k^{-a}` with integral `a`,
/// otherwise the nearest double.
pub fn psi_threshold(psi: &ApproxRate, t: u32) -> Result<Rational> {
    match psi {
        ApproxRate::PowerLog { c, a, b } if a.is_integer() && (b.is_zero() || t == 0) => {
            let a = a.to_integer().to_i64().ok_or_else(|| Error::InvalidParameter("exponent too large".into()))?;
            Ok(c * pow2(-a * i64::from(t)))
        }
        _ => {
            let k = 1u64.checked_shl(t).ok_or_else(|| Error::InvalidParameter("t too large".into()))?;
            let v = psi
                .value(k)
                .ok_or_else(|| Error::InvalidParameter(format!("ψ not tabulated at {k}")))?;
            Ok(from_f64(v))
        }
    }
}

fn zigzag_rank(v: i64) -> u64 {
    if v > 0 {
        2 * v as u64 - 1
    } else {
        2 * v.unsigned_abs()
    }
}

fn unzigzag(r: u64) -> i64 {
    if r % 2 == 1 {
        r.div_ceil(2) as i64
    } else {
        -((r / 2) as i64)
    }
}

/// Scan order of candidates: `q_n` first, then `q_1, …, q_{n-1}`, each in
/// the order `0, 1, -1, 2, -2, …`.
fn scan_key(q: &[i64]) -> Vec<u64> {
    let n = q.len();
    std::iter::once(zigzag_rank(q[n - 1]))
        .chain(q[..n - 1].iter().map(|&v| zigzag_rank(v)))
        .collect()
}

/// Default bound on candidates examined by an exhaustive shell scan.
pub const DEFAULT_SCAN_BUDGET: u128 = 50_000_000;

fn check_hit_args(x: &[Rational], a: &Hyperplane, t: u32, theta: &Rational) -> Result<()> {
    check_dim(a.param_dim(), x.len())?;
    if t > MAX_T {
        return Err(Error::InvalidParameter(format!("shell level {t} exceeds {MAX_T}")));
    }
    if !theta.is_positive() {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    Ok(())
}

fn accept(q: &[i64], y: &[Rational], a: &Hyperplane, shell: ShellSpec, side: Side, theta: &Rational) -> Option<Witness> {
    if !shell.contains(q) || side_of(q, a) != side {
        return None;
    }
    let s = q_dot(q, y);
    let p = nearest_integer(&-&s);
    let value = (big(&p) + s).abs();
    (value < *theta).then_some(Witness { p, q: q.to_vec(), value })
}

/// First shell witness in scan order, found by exhaustive enumeration of
/// the shell (restricted to the unit windows `|q_i + α_i q_n| < 1` for
/// `LESS`).
pub fn hit_test_exhaustive(
    x: &[Rational],
    a: &Hyperplane,
    t: u32,
    theta: &Rational,
    side: Side,
    budget: u128,
) -> Result<Option<Witness>> {
    check_hit_args(x, a, t, theta)?;
    let n = a.n();
    let shell = ShellSpec { t };
    let r = shell.upper();
    let side_len = (2 * r - 1) as u128;
    let needed = match side {
        Side::Geq => side_len.saturating_pow(n as u32),
        Side::Less => side_len.saturating_mul(1u128 << (n - 1)),
    };
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let y = point(x, a)?;
    for rank_n in 0..(2 * r - 1) as u64 {
        let qn = unzigzag(rank_n);
        // candidate values per inner coordinate, in scan order
        let choices: Vec<Vec<i64>> = (1..n)
            .map(|i| {
                let mut vals: Vec<i64> = match side {
                    Side::Geq => (0..(2 * r - 1) as u64).map(unzigzag).collect(),
                    Side::Less => {
                        let c = -(&a.alpha()[i] * int(qn));
                        let lo = (&c - int(1)).floor().to_integer().to_i64().unwrap_or(i64::MIN);
                        (lo..=lo + 2)
                            .filter(|v| (int(*v) - &c).abs() < Rational::one() && v.abs() < r)
                            .collect()
                    }
                };
                vals.sort_by_key(|&v| zigzag_rank(v));
                vals
            })
            .collect();
        if choices.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; n - 1];
        let mut q = vec![0i64; n];
        q[n - 1] = qn;
        loop {
            for i in 0..n - 1 {
                q[i] = choices[i][idx[i]];
            }
            if let Some(w) = accept(&q, &y, a, shell, side, theta) {
                return Ok(Some(w));
            }
            // odometer with the last inner coordinate fastest
            let Some(pos) = (0..n - 1).rev().find(|&i| idx[i] + 1 < choices[i].len()) else {
                break;
            };
            idx[pos] += 1;
            for j in idx.iter_mut().skip(pos + 1) {
                *j = 0;
            }
        }
    }
    Ok(None)
}

/// Enumeration nodes allowed before falling back to the exhaustive scan.
const MAX_NODES: usize = 2_000_000;

/// Shell witnesses are located as short vectors of the lattice spanned by
/// `(e_i / 2^{t+1}, y_i / θ)` and `(0, 1/θ)`, whose points in the unit box
/// are exactly the candidates `(p, q)`. Doubles lose accuracy once
/// `2^{(n+1)t}` approaches `2^{53}`; beyond that the exhaustive scan is
/// used.
fn lattice_path_usable(n: usize, t: u32, theta: &Rational) -> bool {
    (n as u64 + 1) * u64::from(t) <= 36 && *theta < rat(1, 2)
}

/// First shell witness in scan order (`q_n`, then `q_1, …`, each ordered
/// `0, 1, -1, 2, …`), or `None`. The minimizing `p` is the nearest integer
/// to `-q·y(x)`.
pub fn hit_test(
    x: &[Rational],
    a: &Hyperplane,
    t: u32,
    theta: &Rational,
    side: Side,
    budget: u128,
) -> Result<Option<Witness>> {
    check_hit_args(x, a, t, theta)?;
    let n = a.n();
    if !lattice_path_usable(n, t, theta) {
        return hit_test_exhaustive(x, a, t, theta, side, budget);
    }
    let y = point(x, a)?;
    let shell = ShellSpec { t };
    let scale = ratio_to_f64(&pow2(-(i64::from(t) + 1)));
    let inv_theta = 1.0 / ratio_to_f64(theta);
    let mut gens = Vec::with_capacity(n + 1);
    let mut g0 = vec![0.0; n + 1];
    g0[n] = inv_theta;
    gens.push(g0);
    for (i, yi) in y.iter().enumerate() {
        let mut g = vec![0.0; n + 1];
        g[i] = scale;
        g[n] = ratio_to_f64(yi) * inv_theta;
        gens.push(g);
    }
    let radius = ((n + 1) as f64).sqrt() * 1.001 + 1e-9;
    let Some(cands) = short_vectors(&gens, radius, MAX_NODES) else {
        return hit_test_exhaustive(x, a, t, theta, side, budget);
    };
    let yf: Vec<f64> = y.iter().map(ratio_to_f64).collect();
    let af: Vec<f64> = a.alpha().iter().map(ratio_to_f64).collect();
    let theta_f = ratio_to_f64(theta);
    // cheap float screen; anything near a boundary is decided exactly
    let mut plausible: Vec<&[i64]> = cands
        .iter()
        .map(|c| &c[1..])
        .filter(|q| shell.contains(q))
        .filter(|q| {
            let qn = q[n - 1] as f64;
            let mut near = false;
            let mut any_big = false;
            for i in 1..n {
                let g = (q[i - 1] as f64 + af[i] * qn).abs();
                near |= (g - 1.0).abs() < 1e-9;
                any_big |= g > 1.0;
            }
            near || (side == Side::Geq) == any_big
        })
        .filter(|q| {
            let s: f64 = q.iter().zip(&yf).map(|(qi, yi)| *qi as f64 * yi).sum();
            (s - s.round()).abs() < theta_f * (1.0 + 1e-6) + 1e-12
        })
        .collect();
    plausible.sort_by_key(|q| scan_key(q));
    Ok(plausible.into_iter().find_map(|q| accept(q, &y, a, shell, side, theta)))
}

/// Exact measure of `{x ∈ B : |p + q·y(x)| < θ for some p}` with the
/// quantities entering its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripMeasure {
    #[serde(with = "crate::serde_rational")]
    pub measure: Rational,
    /// `S² = Σ (q_i + α_i q_n)²`.
    #[serde(with = "crate::serde_rational")]
    pub s_squared: Rational,
    pub s: f64,
    /// `max_i |q_i + α_i q_n|`.
    #[serde(with = "crate::serde_rational")]
    pub max_gradient: Rational,
    /// Number of integers `p` whose strip meets `B` in positive measure.
    pub strip_count: u64,
    /// `2θ (len_j + 1/G) Π_{i≠j} len_i` with `G = |g_j|` the largest
    /// gradient entry; `vol(B)` when the form is constant.
    #[serde(with = "crate::serde_rational")]
    pub bound: Rational,
}

/// Largest number of strips summed exactly.
pub const MAX_STRIPS: u64 = 10_000_000;

pub fn strip_measure_exact(b: &ParamBox, q: &[i64], a: &Hyperplane, theta: &Rational) -> Result<StripMeasure> {
    if !theta.is_positive() {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    check_dim(a.param_dim(), b.dim())?;
    let f = shell_form(q, a)?;
    let s_squared = f.gradient.iter().fold(Rational::zero(), |acc, g| acc + g * g);
    let (j, g_max) = f
        .gradient
        .iter()
        .enumerate()
        .map(|(i, g)| (i, g.abs()))
        .max_by(|(i1, g1), (i2, g2)| g1.cmp(g2).then(i2.cmp(i1)))
        .expect("box has a coordinate");
    let lengths = b.lengths();
    let volume = b.volume();
    let bound = if g_max.is_zero() {
        volume.clone()
    } else {
        let others = lengths
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .fold(Rational::one(), |acc, (_, l)| acc * l);
        int(2) * theta * (&lengths[j] + g_max.recip()) * others
    };
    let base = StripMeasure {
        measure: Rational::zero(),
        s: ratio_to_f64(&s_squared).sqrt(),
        s_squared,
        max_gradient: g_max.clone(),
        strip_count: 0,
        bound,
    };
    if g_max.is_zero() {
        let hit = crate::scalar::dist_to_int(&f.constant) < *theta;
        return Ok(StripMeasure {
            measure: if hit { volume } else { Rational::zero() },
            strip_count: u64::from(hit),
            ..base
        });
    }
    if *theta >= rat(1, 2) {
        // strips cover B up to a null set
        return Ok(StripMeasure {
            measure: volume,
            strip_count: 0,
            ..base
        });
    }
    // range of f over B
    let (fmin, fmax) = b.intervals().iter().zip(&f.gradient).fold(
        (f.constant.clone(), f.constant.clone()),
        |(lo, hi), ((l, h), g)| {
            let (u, v) = (g * l, g * h);
            if u <= v {
                (lo + u, hi + v)
            } else {
                (lo + v, hi + u)
            }
        },
    );
    // strips with -p in (fmin - θ, fmax + θ)
    let p_lo = (-(&fmax + theta)).floor().to_integer();
    let p_hi = (-(&fmin - theta)).ceil().to_integer();
    let count = (&p_hi - &p_lo).to_u64().unwrap_or(u64::MAX);
    if count > MAX_STRIPS {
        return Err(Error::BudgetExceeded {
            needed: u128::from(count),
            budget: u128::from(MAX_STRIPS),
        });
    }
    let mut measure = Rational::zero();
    let mut strips = 0u64;
    let mut p = p_lo;
    while p <= p_hi {
        let shifted = AffineForm::new(&f.constant + big(&p), f.gradient.clone());
        let m = sublevel_measure(&shifted, b, theta)?;
        if m.is_positive() {
            strips += 1;
            measure += m;
        }
        p += 1;
    }
    Ok(StripMeasure {
        measure,
        strip_count: strips,
        ..base
    })
}

/// `C(n,B) = 2^{2n+1} (vol(B) + max_j Π_{i≠j} len_i)`, so that
/// `|M^≥(B,t,ψ)| <= C(n,B) ψ(2^t) 2^{nt}`: each `GEQ` shell vector has a
/// gradient entry of size at least 1, and the shell holds fewer than
/// `2^{2n} 2^{nt}` vectors.
pub fn shell_bound_constant(b: &ParamBox, n: usize) -> Result<Rational> {
    check_dim(n - 1, b.dim())?;
    let lengths = b.lengths();
    let face = (0..lengths.len())
        .map(|j| {
            lengths
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .fold(Rational::one(), |acc, (_, l)| acc * l)
        })
        .max()
        .expect("nonempty box");
    Ok(pow2(2 * n as i64 + 1) * (b.volume() + face))
}

/// Sampled measure of the side's shell set at level `t`.
pub fn estimate_region_measure(
    b: &ParamBox,
    a: &Hyperplane,
    t: u32,
    theta: &Rational,
    side: Side,
    sampler: &Sampler,
    budget: u128,
) -> Result<Estimate> {
    check_dim(a.param_dim(), b.dim())?;
    estimate_volume(sampler, b, |x| Ok(hit_test(x, a, t, theta, side, budget)?.is_some()))
}

/// Sampled measure of the strips of a single `q`.
pub fn estimate_strip_measure(
    b: &ParamBox,
    q: &[i64],
    a: &Hyperplane,
    theta: &Rational,
    sampler: &Sampler,
) -> Result<Estimate> {
    let f = shell_form(q, a)?;
    estimate_volume(sampler, b, |x| Ok(crate::scalar::dist_to_int(&f.eval(x)?) < *theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellBoundRow {
    pub t: u32,
    pub side: Side,
    pub estimate: Estimate,
    /// `C(n,B) ψ(2^t) 2^{nt}`.
    #[serde(with = "crate::serde_rational")]
    pub bound: Rational,
    /// `bound - estimate`.
    pub margin: f64,
    pub pass: bool,
}

/// Sampled `|M^≥(B,t,ψ)|` against its bound for each `t`.
pub fn shell_bound_report(
    b: &ParamBox,
    a: &Hyperplane,
    psi: &ApproxRate,
    ts: &[u32],
    sampler: &Sampler,
    budget: u128,
) -> Result<Vec<ShellBoundRow>> {
    let n = a.n();
    let c = shell_bound_constant(b, n)?;
    ts.iter()
        .map(|&t| {
            let theta = psi_threshold(psi, t)?;
            let estimate = estimate_region_measure(b, a, t, &theta, Side::Geq, sampler, budget)?;
            let bound = &c * &theta * pow2(n as i64 * i64::from(t));
            let margin = ratio_to_f64(&(&bound - &estimate.estimate));
            Ok(ShellBoundRow {
                t,
                side: Side::Geq,
                pass: estimate.estimate <= bound,
                estimate,
                bound,
                margin,
            })
        })
        .collect()
}

/// Outcome for the tail of a nonnegative series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum Tail {
    /// Exact tail.
    Exact {
        #[serde(with = "crate::serde_rational")]
        value: Rational,
    },
    /// Closed-form tail evaluated in floating point.
    Value { value: f64 },
    Divergent,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Number of terms summed; the tail starts at index `terms`.
    pub terms: u64,
    pub partial_sums: Vec<f64>,
    pub tail: Tail,
}

/// Exact partial sums of explicit terms `a_0, …, a_{T-1}`, with the tail
/// past `T` when the sequence is recognizably zero or exactly geometric.
pub fn borel_cantelli_tail(terms: &[Rational]) -> Result<(Vec<Rational>, TailReport)> {
    if let Some(v) = terms.iter().find(|v| v.is_negative()) {
        return Err(Error::InvalidParameter(format!("negative term {v}")));
    }
    let mut sums = Vec::with_capacity(terms.len());
    let mut acc = Rational::zero();
    for v in terms {
        acc += v;
        sums.push(acc.clone());
    }
    let tail = if terms.iter().all(Zero::is_zero) {
        Tail::Exact { value: Rational::zero() }
    } else if terms.len() >= 2 && !terms[0].is_zero() {
        let r = &terms[1] / &terms[0];
        let geometric = terms.windows(2).all(|w| w[1] == &w[0] * &r);
        if !geometric {
            Tail::Indeterminate
        } else if r >= Rational::one() {
            Tail::Divergent
        } else {
            let next = &terms[terms.len() - 1] * &r;
            Tail::Exact { value: next / (Rational::one() - r) }
        }
    } else {
        Tail::Indeterminate
    };
    let report = TailReport {
        terms: terms.len() as u64,
        partial_sums: sums.iter().map(ratio_to_f64).collect(),
        tail,
    };
    Ok((sums, report))
}

/// One branch `c·r^t` of a series whose terms are a maximum of geometric
/// sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricBranch {
    pub c: f64,
    pub r: f64,
}

/// `Σ_{t>=T} max_i c_i r_i^t` in closed form: explicit terms up to the
/// point after which one branch dominates, then that branch's geometric
/// tail.
pub fn max_geometric_tail(branches: &[GeometricBranch], start: u64) -> Result<Tail> {
    if branches.is_empty() {
        return Ok(Tail::Exact { value: Rational::zero() });
    }
    if let Some(b) = branches.iter().find(|b| !(b.c >= 0.0 && b.r >= 0.0)) {
        return Err(Error::InvalidParameter(format!("branch {b:?} is not nonnegative")));
    }
    let live: Vec<&GeometricBranch> = branches.iter().filter(|b| b.c > 0.0 && b.r > 0.0).collect();
    if live.is_empty() {
        return Ok(Tail::Value { value: 0.0 });
    }
    if live.iter().any(|b| b.r >= 1.0) {
        return Ok(Tail::Divergent);
    }
    let dom = live
        .iter()
        .copied()
        .max_by(|a, b| a.r.partial_cmp(&b.r).unwrap_or(Ordering::Equal).then(a.c.partial_cmp(&b.c).unwrap_or(Ordering::Equal)))
        .expect("nonempty");
    // dominance holds for t >= t*: c_D r_D^t >= c_j r_j^t
    let t_star = live
        .iter()
        .filter(|b| b.r < dom.r && b.c > dom.c)
        .map(|b| ((b.c / dom.c).ln() / (dom.r / b.r).ln()).ceil().max(0.0) as u64)
        .max()
        .unwrap_or(0);
    let term = |t: u64| {
        live.iter()
            .map(|b| b.c * b.r.powf(t as f64))
            .fold(0.0f64, f64::max)
    };
    let from = start.max(t_star);
    let head: f64 = (start..from).map(term).sum();
    Ok(Tail::Value { value: head + dom.c * dom.r.powf(from as f64) / (1.0 - dom.r) })
}
