//! The nondivergence side: the vectors `c_{I,w}`, lower bounds for
//! `sup_{x∈B} ‖D(ε,t) u_x Γ‖` over primitive subgroups `Γ ⊂ Λ`, the box
//! constant `C_B`, the quantitative nondivergence bound and its sampled
//! check, `(C,α)`-good checks, and the choice of `β`.
//!
//! Subgroups of `Λ` are handled through `Λ ≅ Z^{n+1}`, coordinates
//! `(p, q_1, …, q_n)`, and embedded into `R^{2n}` with
//! [`LambdaSpec`](crate::lattice::LambdaSpec) when the full flow is needed.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{sublevel_measure, sup_abs_over_box, AffineForm, AffineMultivector, ParamBox};
use crate::diophantine::{compare_scaled, exponent_records, ln_rational};
use crate::error::{check_dim, Error, Result};
use crate::exterior::{MultiIndex, Multivector};
use crate::flows::{build_p, build_u, build_u_hat, FlowParams, Hyperplane};
use crate::lattice::{combinations, enumerate_primitive_subgroups, IntegerSubgroup, LambdaSpec};
use crate::lp::minimize_free;
use crate::measure::{hit_test, GeometricBranch, Side};
use crate::sampling::{estimate_volume, Estimate, Sampler};
use crate::scalar::{from_f64, int, pow2, pow_rat, rat, ratio_to_f64, Rational};

/// `|{j ∈ I : 0 < j < i}|`.
pub fn l_count(index: &MultiIndex, i: usize) -> usize {
    index.indices().filter(|&j| 0 < j && j < i).count()
}

fn sign(l: usize) -> Rational {
    if l.is_multiple_of(2) {
        Rational::one()
    } else {
        -Rational::one()
    }
}

/// `c_{I,w} ∈ R^{n+1}` for `0 ∈ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    pub index: MultiIndex,
    pub c: Vec<Rational>,
}

impl CVector {
    /// First `n` entries.
    pub fn c_plus(&self) -> &[Rational] {
        &self.c[..self.c.len() - 1]
    }

    /// Last entry.
    pub fn c_minus(&self) -> &Rational {
        &self.c[self.c.len() - 1]
    }

    /// `P c = c⁺ + A c⁻`.
    pub fn projected(&self, a: &Hyperplane) -> Vec<Rational> {
        self.c_plus()
            .iter()
            .zip(a.alpha())
            .map(|(cp, al)| cp + al * self.c_minus())
            .collect()
    }

    /// `‖c⁺ + A c⁻‖_∞`.
    pub fn projected_norm(&self, a: &Hyperplane) -> Rational {
        self.projected(a)
            .into_iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Entry `0` is `w_I`; entry `i ∉ I` is `(-1)^{l(I,i)} w_{I ∪ {i} \ {0}}`;
/// entries `i ∈ I \ {0}` vanish.
pub fn c_vector(index: &MultiIndex, w: &Multivector) -> Result<CVector> {
    check_dim(w.dim(), index.dim())?;
    check_dim(w.grade(), index.grade())?;
    if !index.contains(0) {
        return Err(Error::InvalidMultiIndex(format!("{index} does not contain 0")));
    }
    let without_zero = index.remove(0).expect("contains 0");
    let c = (0..w.dim())
        .map(|i| {
            if i == 0 {
                w.coeff(index)
            } else if index.contains(i) {
                Rational::zero()
            } else {
                let k = without_zero.insert(i).expect("i not in I");
                sign(l_count(index, i)) * w.coeff(&k)
            }
        })
        .collect();
    Ok(CVector {
        index: *index,
        c,
    })
}

/// All `I ∋ 0` of the grade of `w`.
fn indices_with_zero(dim: usize, grade: usize) -> Vec<MultiIndex> {
    if grade == 0 {
        return Vec::new();
    }
    combinations(dim - 1, grade - 1)
        .into_iter()
        .map(|rest| {
            let idx: Vec<usize> = std::iter::once(0).chain(rest.into_iter().map(|i| i + 1)).collect();
            MultiIndex::new(&idx, dim).expect("valid")
        })
        .collect()
}

/// `max_{I ∋ 0} ‖c⁺_{I,w} + A c⁻_{I,w}‖_∞` and a maximizing `I`.
pub fn cvec_max(w: &Multivector, a: &Hyperplane) -> Result<(Rational, MultiIndex)> {
    check_dim(a.n() + 1, w.dim())?;
    let mut best: Option<(Rational, MultiIndex)> = None;
    for idx in indices_with_zero(w.dim(), w.grade()) {
        let v = c_vector(&idx, w)?.projected_norm(a);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, idx));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("grade 0 has no index containing 0".into()))
}

/// Checks at each `x` that every component `I ∋ 0` of `û_x w` equals
/// `x̃ P c_{I,w}` with `x̃ = (1, x)`.
pub fn nonconstant_orbit_identity_check(w: &Multivector, a: &Hyperplane, xs: &[Vec<Rational>]) -> Result<bool> {
    check_dim(a.n() + 1, w.dim())?;
    let orbit = build_u_hat(a).apply(w)?;
    let p = build_p(a);
    for x in xs {
        check_dim(a.param_dim(), x.len())?;
        let specialized = orbit.specialize(x)?;
        let x_tilde: Vec<Rational> = std::iter::once(Rational::one()).chain(x.iter().cloned()).collect();
        let row = p.left_apply(&x_tilde)?;
        for idx in indices_with_zero(w.dim(), w.grade()) {
            let cv = c_vector(&idx, w)?;
            let rhs: Rational = row.iter().zip(&cv.c).map(|(r, c)| r * c).sum();
            if specialized.coeff(&idx) != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A multivector whose `max_{I∋0} ‖c⁺ + A c⁻‖` falls below 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvecFinding {
    pub sample: usize,
    pub w: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvecReport {
    pub n: usize,
    pub j: usize,
    pub height: u64,
    pub samples: usize,
    /// Multivectors examined per sample (one per `±w` pair).
    pub examined: u64,
    #[serde(with = "crate::serde_rational")]
    pub min_value: Rational,
    pub min_value_f64: f64,
    pub witness_w: String,
    pub witness_index: String,
    pub witness_sample: usize,
    pub violations: Vec<CvecFinding>,
}

/// Serializes a grade-`k` multivector as its coordinates in lexicographic
/// index order, separated by `:`.
pub fn plucker_string(w: &Multivector) -> String {
    combinations(w.dim(), w.grade())
        .iter()
        .map(|c| crate::scalar::fmt_rational(&w.coeff_of(c)))
        .collect::<Vec<_>>()
        .join(":")
}

/// Integer grade-`j` multivectors on `R^{n+1}` with coordinates in
/// `[-H, H]`, coprime coordinates, first nonzero coordinate positive.
pub fn integer_multivectors(n: usize, j: usize, height: u64, budget: u128) -> Result<Vec<Multivector>> {
    let dim = n + 1;
    if j == 0 || j > dim {
        return Err(Error::InvalidParameter(format!("grade {j} not in 1..={dim}")));
    }
    let slots = combinations(dim, j);
    let h = i64::try_from(height).map_err(|_| Error::InvalidParameter("height too large".into()))?;
    let side = 2 * u128::from(height) + 1;
    let needed = side.checked_pow(slots.len() as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let indices: Vec<MultiIndex> = slots.iter().map(|s| MultiIndex::new(s, dim).expect("valid")).collect();
    let mut coords = vec![-h; slots.len()];
    let mut out = Vec::new();
    loop {
        let first = coords.iter().find(|&&c| c != 0);
        let gcd = coords.iter().fold(0i64, |g, &c| g.gcd(&c));
        if first.is_some_and(|&f| f > 0) && gcd == 1 {
            let terms: Vec<(MultiIndex, Rational)> = indices
                .iter()
                .zip(&coords)
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| (*i, int(c)))
                .collect();
            out.push(Multivector::from_terms(dim, j, terms)?);
        }
        let Some(pos) = (0..coords.len()).rev().find(|&i| coords[i] < h) else {
            break;
        };
        coords[pos] += 1;
        for c in coords.iter_mut().skip(pos + 1) {
            *c = -h;
        }
    }
    Ok(out)
}

/// `count` coefficient vectors with entries `num/den`, `1 <= den <= 20`,
/// drawn uniformly from the open interval `(-10, 10)`; stream `seed`.
pub fn random_rational_hyperplanes(n: usize, count: usize, seed: u64) -> Result<Vec<Hyperplane>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let alpha = (0..n)
                .map(|_| {
                    let den: i64 = rng.random_range(1..=20);
                    let num: i64 = rng.random_range(-10 * den + 1..10 * den);
                    rat(num, den)
                })
                .collect();
            Hyperplane::new(alpha)
        })
        .collect()
}

/// `min_w max_{I∋0} ‖c⁺_{I,w} + A c⁻_{I,w}‖` over every integer `w` from
/// [`integer_multivectors`] and every sampled `A`, with all `w` whose value
/// is below 1.
pub fn verify_cvec_bound(n: usize, j: usize, height: u64, samples: &[Hyperplane], budget: u128) -> Result<CvecReport> {
    if !(2..=n).contains(&j) {
        return Err(Error::InvalidParameter(format!("grade {j} outside 2..={n}")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no coefficient samples".into()));
    }
    for a in samples {
        check_dim(n, a.n())?;
    }
    let ws = integer_multivectors(n, j, height, budget)?;
    let per_sample: Vec<(Rational, usize, MultiIndex, Vec<CvecFinding>)> = samples
        .par_iter()
        .enumerate()
        .map(|(s, a)| {
            let mut best: Option<(Rational, usize, MultiIndex)> = None;
            let mut findings = Vec::new();
            for (k, w) in ws.iter().enumerate() {
                let (v, idx) = cvec_max(w, a)?;
                if v < Rational::one() {
                    findings.push(CvecFinding {
                        sample: s,
                        w: plucker_string(w),
                        value: ratio_to_f64(&v),
                    });
                }
                if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                    best = Some((v, k, idx));
                }
            }
            let (v, k, idx) = best.expect("at least one multivector");
            Ok((v, k, idx, findings))
        })
        .collect::<Result<_>>()?;
    let (s, (v, k, idx, _)) = per_sample
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| x.0.cmp(&y.0))
        .expect("nonempty");
    Ok(CvecReport {
        n,
        j,
        height,
        samples: samples.len(),
        examined: ws.len() as u64,
        min_value: v.clone(),
        min_value_f64: ratio_to_f64(v),
        witness_w: plucker_string(&ws[*k]),
        witness_index: idx.to_string(),
        witness_sample: s,
        violations: per_sample.iter().flat_map(|p| p.3.iter().cloned()).collect(),
    })
}

/// `inf { sup_{x∈B} |c + g·x| : max(|c|, ‖g‖_∞) = 1 }`, so that
/// `sup_B |c + g·x| >= C_B max(|c|, ‖g‖_∞)` for every affine form.
///
/// The supremum is attained at a vertex, and by symmetry one coordinate of
/// `(c, g)` may be fixed to `+1`; each choice is an exact LP.
pub fn minimax_box_constant(b: &ParamBox) -> Result<Rational> {
    let d = b.dim();
    if b.lengths().iter().any(|l| !l.is_positive()) {
        return Err(Error::InvalidParameter("degenerate box".into()));
    }
    // variables (c, g_1..g_d, z)
    let nv = d + 2;
    let mut cost = vec![Rational::zero(); nv];
    cost[nv - 1] = Rational::one();
    let mut rows = Vec::new();
    for x in b.vertices() {
        let mut row = vec![Rational::one()];
        row.extend(x.iter().cloned());
        row.push(-Rational::one());
        let neg: Vec<Rational> = row[..nv - 1].iter().map(|v| -v).chain([-Rational::one()]).collect();
        rows.push(row);
        rows.push(neg);
    }
    let mut rhs = vec![Rational::zero(); rows.len()];
    for k in 0..=d {
        let mut up = vec![Rational::zero(); nv];
        up[k] = Rational::one();
        let down: Vec<Rational> = up.iter().map(|v| -v).collect();
        rows.push(up);
        rows.push(down);
        rhs.push(Rational::one());
        rhs.push(Rational::one());
    }
    let mut best: Option<Rational> = None;
    for k in 0..=d {
        let mut fix = vec![Rational::zero(); nv];
        fix[k] = Rational::one();
        let v = minimize_free(&cost, &rows, &rhs, &[fix], &[Rational::one()])?.into_value()?;
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    Ok(best.expect("at least one coordinate"))
}

/// Whether `sup_B |f| >= c_b max(|c|, ‖g‖_∞)`.
pub fn minimax_holds(f: &AffineForm, b: &ParamBox, c_b: &Rational) -> Result<bool> {
    let (sup, _) = sup_abs_over_box(f, b)?;
    let scale = f
        .gradient
        .iter()
        .map(|g| g.abs())
        .chain([f.constant.abs()])
        .max()
        .expect("constant present");
    Ok(sup >= c_b * scale)
}

/// `C_d = 2^{d+2} / v_d` with `v_d` the volume of the unit ball in `R^d`.
pub fn good_constant(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    let v = std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0);
    2f64.powi(d as i32 + 2) / v
}

/// A rational no larger than `v` (and within a relative `2^{-40}`).
fn rational_below(v: f64) -> Rational {
    from_f64(if v >= 0.0 { v * (1.0 - 2f64.powi(-40)) } else { v * (1.0 + 2f64.powi(-40)) })
}

/// A rational no smaller than `v`.
fn rational_above(v: f64) -> Rational {
    crate::scalar::dyadic_upper(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondivConstants {
    pub n: usize,
    /// Minimax constant of the box.
    #[serde(with = "crate::serde_rational")]
    pub c_b: Rational,
    #[serde(with = "crate::serde_rational")]
    pub delta: Rational,
    /// Covering constant `N_d`; not determined here, default 1.
    #[serde(with = "crate::serde_rational")]
    pub n_d: Rational,
    /// `ρ = 1/k`.
    #[serde(with = "crate::serde_rational")]
    pub rho: Rational,
    /// Rank `n + 1` of `Λ`.
    pub k: usize,
    /// Parameter dimension `n - 1`.
    pub d: usize,
}

impl NondivConstants {
    pub fn new(b: &ParamBox, n: usize, delta: Rational) -> Result<Self> {
        check_dim(n - 1, b.dim())?;
        if !delta.is_positive() || delta >= int(n as i64) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, {n})")));
        }
        Ok(NondivConstants {
            n,
            c_b: minimax_box_constant(b)?,
            delta,
            n_d: Rational::one(),
            rho: rat(1, n as i64 + 1),
            k: n + 1,
            d: n - 1,
        })
    }

    pub fn with_covering_constant(mut self, n_d: Rational) -> Self {
        self.n_d = n_d;
        self
    }

    /// `n + 1 - δ`.
    fn gap(&self) -> Rational {
        int(self.n as i64 + 1) - &self.delta
    }

    /// `C_B^1 = C_B^{1/(n+1-δ)}`.
    pub fn c_b1(&self) -> f64 {
        (ln_rational(&self.c_b) / ratio_to_f64(&self.gap())).exp()
    }

    /// `C_B^3 = C_B`.
    pub fn c_b3(&self) -> Rational {
        self.c_b.clone()
    }

    /// `y_0 = (C_B 2^{t(n+1)})^{1/(n+1-δ)}`.
    pub fn y0(&self, t: u32) -> f64 {
        let ln = ln_rational(&self.c_b) + f64::from(t) * (self.n as f64 + 1.0) * std::f64::consts::LN_2;
        (ln / ratio_to_f64(&self.gap())).exp()
    }

    /// `δ/(n+1-δ)`.
    pub fn case1_exponent(&self) -> Rational {
        &self.delta / self.gap()
    }

    /// `ε min(C_B^1 2^{δt/(n+1-δ)}, 2^{(n-1)t} ε^n, C_B^3 2^t ε^{n-1})` in
    /// floating point, with the three branch values.
    pub fn bound(&self, eps: &Rational, t: u32) -> (f64, [f64; 3]) {
        let n = self.n as i64;
        let t64 = i64::from(t);
        let e = ratio_to_f64(eps);
        let b1 = self.c_b1() * 2f64.powf(ratio_to_f64(&self.case1_exponent()) * f64::from(t));
        let b2 = ratio_to_f64(&(pow2((n - 1) * t64) * pow_rat(eps, n)));
        let b3 = ratio_to_f64(&(&self.c_b * pow2(t64) * pow_rat(eps, n - 1)));
        (e * b1.min(b2).min(b3), [b1, b2, b3])
    }

    /// Exact test of `s >= ε min(…)`.
    pub fn bound_holds(&self, s: &Rational, eps: &Rational, t: u32) -> bool {
        let n = self.n as i64;
        let t64 = i64::from(t);
        let scaled = s / eps;
        if scaled >= pow2((n - 1) * t64) * pow_rat(eps, n) || scaled >= &self.c_b * pow2(t64) * pow_rat(eps, n - 1) {
            return true;
        }
        // scaled >= (C_B 2^{δt})^{1/(n+1-δ)}  <=>  scaled^{n+1-δ} / (C_B 2^{δt}) >= 1
        if !scaled.is_positive() {
            return false;
        }
        let gap = self.gap();
        let approx = ln_rational(&scaled) * ratio_to_f64(&gap)
            - ln_rational(&self.c_b)
            - ratio_to_f64(&self.delta) * f64::from(t) * std::f64::consts::LN_2;
        if approx > 1e-9 {
            return true;
        }
        if approx < -1e-9 {
            return false;
        }
        // with δ = a/b: scaled^{(n+1)b - a} >= C_B^b 2^{a t}
        let a = self.delta.numer().to_i64().expect("small δ");
        let b = self.delta.denom().to_i64().expect("small δ");
        pow_rat(&scaled, (n + 1) * b - a) >= pow_rat(&self.c_b, b) * pow2(a * t64)
    }
}

/// Values of `|q_n|` for which `min_p max_i |p_i + α_i q| > q^{-n+δ}` fails,
/// over `1 <= q <= up_to` (`q = 1` always fails when every `α_i` is at
/// distance below 1 from an integer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSet {
    pub qs: BTreeSet<u64>,
    pub checked_up_to: u64,
}

impl ExceptionalSet {
    pub fn compute(a: &Hyperplane, delta: &Rational, up_to: u64) -> Self {
        let e = int(a.n() as i64) - delta;
        let qs = exponent_records(a.alpha(), 1, up_to)
            .into_iter()
            .filter(|r| compare_scaled(&r.best_value, r.q, &e) != Ordering::Greater)
            .map(|r| r.q)
            .collect();
        ExceptionalSet {
            qs,
            checked_up_to: up_to,
        }
    }

    /// Exceptional, or beyond the checked range.
    pub fn flags(&self, q: u64) -> bool {
        q > self.checked_up_to || self.qs.contains(&q)
    }
}

/// Which lower-bound argument applies to a subgroup of rank `r`.
pub fn case_of_rank(rank: usize, n: usize) -> u8 {
    if rank == 1 {
        1
    } else if rank == n + 1 {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub t: u32,
    pub rank: usize,
    pub case: u8,
    /// Plücker coordinates of `Γ` in `Z^{n+1}`.
    pub w: String,
    #[serde(with = "crate::serde_rational")]
    pub sup: Rational,
    pub bound: f64,
    /// A rational upper bound of `bound`.
    #[serde(with = "crate::serde_rational")]
    pub bound_upper: Rational,
    /// `sup - bound`.
    pub margin: f64,
    /// Exact verdict of `sup >= bound`.
    pub pass: bool,
    /// Case 1 with `|q_n|` exceptional for `δ`.
    pub exceptional: bool,
    /// Case 1, `q_n ≠ 0`, not exceptional: whether the `e_0` coefficient
    /// satisfies `sup_B |·| >= ε 2^{nt} C_B |q_n|^{-n+δ}`.
    pub e0_bound: Option<bool>,
}

/// `u_x w` for `w = ∧Γ` embedded in `R^{2n}`, before the diagonal flow.
pub fn unipotent_orbit(g: &IntegerSubgroup, a: &Hyperplane) -> Result<AffineMultivector> {
    check_dim(a.n() + 1, g.ambient_dim())?;
    let spec = LambdaSpec::new(a.n())?;
    let w = spec.embed_multivector(&g.normalized_multivector()?)?;
    build_u(a).apply(&w)
}

/// `sup_{x∈B} ‖D(ε,t) u_x Γ‖` against `ε min(C_B^1 2^{δt/(n+1-δ)},
/// 2^{(n-1)t} ε^n, C_B^3 2^t ε^{n-1})`.
pub fn sup_orbit_lower_bound_check(
    g: &IntegerSubgroup,
    a: &Hyperplane,
    b: &ParamBox,
    params: &FlowParams,
    consts: &NondivConstants,
    exceptional: &ExceptionalSet,
) -> Result<OrbitRecord> {
    let orbit = unipotent_orbit(g, a)?;
    check_record(g, &orbit, a, b, params, consts, exceptional)
}

fn check_record(
    g: &IntegerSubgroup,
    orbit: &AffineMultivector,
    a: &Hyperplane,
    b: &ParamBox,
    params: &FlowParams,
    consts: &NondivConstants,
    exceptional: &ExceptionalSet,
) -> Result<OrbitRecord> {
    check_dim(a.n(), params.n)?;
    check_dim(a.n(), consts.n)?;
    let n = a.n();
    let flowed = orbit.scale_diagonal(&params.d_entries())?;
    let sup = flowed.sup_norm_over_box(b)?.value;
    let (bound, _) = consts.bound(&params.epsilon, params.t);
    let pass = consts.bound_holds(&sup, &params.epsilon, params.t);
    let rank = g.rank();
    let case = case_of_rank(rank, n);
    let (mut flagged, mut e0_bound) = (false, None);
    if case == 1 {
        let v = &g.basis()[0];
        let qn = v[n].abs().to_u64().unwrap_or(u64::MAX);
        if qn != 0 {
            flagged = exceptional.flags(qn);
            if !flagged {
                let e0 = flowed.coeff(&MultiIndex::new(&[0], 2 * n)?);
                let (e0_sup, _) = sup_abs_over_box(&e0, b)?;
                let ratio = e0_sup / (&params.epsilon * pow2(n as i64 * i64::from(params.t)) * &consts.c_b);
                let e = int(n as i64) - &consts.delta;
                e0_bound = Some(compare_scaled(&ratio, qn, &e) != Ordering::Less);
            }
        }
    }
    Ok(OrbitRecord {
        t: params.t,
        rank,
        case,
        w: plucker_string(&g.normalized_multivector()?),
        margin: ratio_to_f64(&sup) - bound,
        bound_upper: rational_above(bound),
        sup,
        bound,
        pass,
        exceptional: flagged,
        e0_bound,
    })
}

/// Every primitive `Γ ⊂ Λ` of the given ranks with Plücker height at most
/// `height`, at every `t`; records ordered by rank, subgroup, then `t`.
#[allow(clippy::too_many_arguments)]
pub fn orbit_bound_scan(
    a: &Hyperplane,
    b: &ParamBox,
    epsilon: &Rational,
    ts: &[u32],
    height: u64,
    ranks: &[usize],
    consts: &NondivConstants,
    exceptional: &ExceptionalSet,
    budget: u128,
) -> Result<Vec<OrbitRecord>> {
    let n = a.n();
    let params: Vec<FlowParams> = ts
        .iter()
        .map(|&t| FlowParams::new(epsilon.clone(), t, n))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &rank in ranks {
        let groups = enumerate_primitive_subgroups(n + 1, rank, height, budget)?;
        let rows: Vec<Vec<OrbitRecord>> = groups
            .par_iter()
            .map(|g| {
                let orbit = unipotent_orbit(g, a)?;
                params
                    .iter()
                    .map(|p| check_record(g, &orbit, a, b, p, consts, exceptional))
                    .collect()
            })
            .collect::<Result<_>>()?;
        out.extend(rows.into_iter().flatten());
    }
    Ok(out)
}

/// The coefficient of `e_0 ∧ e_{*1} ∧ … ∧ e_{*(n-1)} ∧ e_n` in
/// `D(ε,t) u_x (e_0 ∧ e_1 ∧ … ∧ e_n)`.
pub fn case2_top_term(a: &Hyperplane, params: &FlowParams) -> Result<AffineForm> {
    let n = a.n();
    let g = IntegerSubgroup::full(n + 1);
    let flowed = unipotent_orbit(&g, a)?.scale_diagonal(&params.d_entries())?;
    let idx: Vec<usize> = (0..n).chain([2 * n - 1]).collect();
    Ok(flowed.coeff(&MultiIndex::new(&idx, 2 * n)?))
}

/// `k (3^d N_d)^k C (ε/ρ)^α |B|`.
pub fn bkm_bound(consts: &NondivConstants, c: &Rational, alpha: u32, eps: &Rational, volume: &Rational) -> Result<Rational> {
    if !eps.is_positive() || *eps > consts.rho {
        return Err(Error::HypothesisViolation(format!(
            "need 0 < ε <= ρ = {}, got ε = {eps}",
            consts.rho
        )));
    }
    let k = consts.k as i64;
    let base = pow_rat(&int(3), consts.d as i64) * &consts.n_d;
    Ok(int(k) * pow_rat(&base, k) * c * pow_rat(&(eps / &consts.rho), i64::from(alpha)) * volume)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkmCheck {
    pub t: u32,
    #[serde(with = "crate::serde_rational")]
    pub beta: Rational,
    /// `ε = 2^{-βt}`.
    pub epsilon: f64,
    /// `ε <= ρ`, checked against a rational upper bound of `ε`.
    pub precondition: bool,
    /// Sampled measure of `{x : ‖D u_x λ‖ < ε for some λ ∈ Λ \ {0}}`.
    pub estimate: Estimate,
    /// Largest `‖q‖_∞` that can satisfy the condition, `2^t - 1`.
    pub q_height: u64,
    /// Bound with a rational lower bound of `ε` and of `C_{n-1}`.
    pub bound: Option<f64>,
    pub pass: bool,
}

/// `‖D(ε,t) u_x λ‖ < ε` for `λ = (p, q)` means `|p + q·y(x)| < 2^{-nt}`,
/// `|q_i + α_i q_n| < 1` and `‖q‖_∞ < 2^t`, independently of `ε`: a hit
/// in one of the `LESS` shells `0..t` at threshold `2^{-nt}`.
pub fn small_orbit_vector_exists(x: &[Rational], a: &Hyperplane, t: u32, budget: u128) -> Result<bool> {
    let theta = pow2(-(a.n() as i64) * i64::from(t));
    for s in 0..t {
        if hit_test(x, a, s, &theta, Side::Less, budget)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Direct version of [`small_orbit_vector_exists`] over every `λ ∈ Λ` with
/// `max(|p|, ‖q‖_∞) <= height`, evaluating `D(ε,t) u_x λ` exactly.
pub fn small_orbit_vector_bruteforce(
    x: &[Rational],
    a: &Hyperplane,
    params: &FlowParams,
    height: u64,
) -> Result<bool> {
    let spec = LambdaSpec::new(a.n())?;
    let m = crate::flows::flow_matrix_at(a, params, crate::flows::Space::Full, x)?;
    for lam in crate::lattice::lambda_members(&spec, height)? {
        let v: Vec<Rational> = lam.iter().map(|&c| int(c)).collect();
        if m.apply(&v)?.iter().all(|c| c.abs() < params.epsilon) {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn bkm_empirical_check(
    a: &Hyperplane,
    b: &ParamBox,
    t: u32,
    beta: &Rational,
    consts: &NondivConstants,
    sampler: &Sampler,
    budget: u128,
) -> Result<BkmCheck> {
    check_dim(a.param_dim(), b.dim())?;
    let eps = 2f64.powf(-ratio_to_f64(beta) * f64::from(t));
    let precondition = rational_above(eps) <= consts.rho;
    let estimate = estimate_volume(sampler, b, |x| small_orbit_vector_exists(x, a, t, budget))?;
    let bound = if precondition {
        let c = rational_below(good_constant(consts.d));
        Some(ratio_to_f64(&bkm_bound(consts, &c, 1, &rational_below(eps), &b.volume())?))
    } else {
        None
    };
    Ok(BkmCheck {
        t,
        beta: beta.clone(),
        epsilon: eps,
        precondition,
        q_height: (1u64 << t) - 1,
        pass: bound.is_some_and(|v| estimate.estimate_f64 <= v),
        bound,
        estimate,
    })
}

/// What [`good_check`] examines.
#[derive(Debug, Clone, PartialEq)]
pub enum GoodTarget {
    Affine(AffineForm),
    /// `x ↦ max_i |f_i(x)|`.
    MaxAbs(Vec<AffineForm>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodRow {
    #[serde(with = "crate::serde_rational")]
    pub eps: Rational,
    /// `|{x ∈ B : |f| < ε sup_B |f|}| / |B|`.
    pub ratio: f64,
    /// Upper confidence limit for sampled ratios; equal to `ratio` when
    /// exact.
    pub ratio_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodReport {
    pub rows: Vec<GoodRow>,
    pub worst_ratio: f64,
    /// `max ratio / ε`: the smallest `C` consistent with the grid.
    pub c_min: f64,
    pub pass: bool,
    /// The function vanishes on `B`, so the condition holds trivially.
    pub vacuous: bool,
}

/// `(C, α)`-good check on the box `B` over a grid of `ε`, exact for a
/// single affine form and sampled for a max-family.
pub fn good_check(target: &GoodTarget, b: &ParamBox, c: f64, alpha: f64, eps_grid: &[Rational], sampler: &Sampler) -> Result<GoodReport> {
    if let Some(e) = eps_grid.iter().find(|e| !e.is_positive() || **e > Rational::one()) {
        return Err(Error::InvalidParameter(format!("ε = {e} outside (0, 1]")));
    }
    let forms: &[AffineForm] = match target {
        GoodTarget::Affine(f) => std::slice::from_ref(f),
        GoodTarget::MaxAbs(fs) => fs,
    };
    let sup = forms
        .iter()
        .map(|f| sup_abs_over_box(f, b).map(|s| s.0))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or_else(Rational::zero);
    if sup.is_zero() {
        return Ok(GoodReport {
            rows: Vec::new(),
            worst_ratio: 0.0,
            c_min: 0.0,
            pass: true,
            vacuous: true,
        });
    }
    let volume = b.volume();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for eps in eps_grid {
        let level = eps * &sup;
        let row = match target {
            GoodTarget::Affine(f) => {
                let r = ratio_to_f64(&(sublevel_measure(f, b, &level)? / &volume));
                GoodRow {
                    eps: eps.clone(),
                    ratio: r,
                    ratio_hi: r,
                }
            }
            GoodTarget::MaxAbs(fs) => {
                let est = estimate_volume(sampler, b, |x| {
                    for f in fs {
                        if f.eval(x)?.abs() >= level {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                })?;
                let v = ratio_to_f64(&volume);
                GoodRow {
                    eps: eps.clone(),
                    ratio: est.estimate_f64 / v,
                    ratio_hi: est.ci_hi / v,
                }
            }
        };
        rows.push(row);
    }
    let worst_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let c_min = rows
        .iter()
        .map(|r| r.ratio / ratio_to_f64(&r.eps).powf(alpha))
        .fold(0.0, f64::max);
    Ok(GoodReport {
        pass: c_min <= c,
        rows,
        worst_ratio,
        c_min,
        vacuous: false,
    })
}

/// `min((n-1)/(n+1), δ/(n+1-δ), 1/n)`.
pub fn beta_threshold(n: usize, delta: &Rational) -> Result<Rational> {
    if !delta.is_positive() {
        return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
    }
    let nn = int(n as i64);
    let gap = &nn + int(1) - delta;
    if !gap.is_positive() {
        return Err(Error::InvalidParameter(format!("δ must be below n + 1, got {delta}")));
    }
    Ok([(&nn - int(1)) / (&nn + int(1)), delta / gap, nn.recip()]
        .into_iter()
        .min()
        .expect("three values"))
}

/// `c^{den} 2^{num} >= 1` for `e = num/den`, i.e. `c 2^e >= 1` (`c > 0`).
fn scaled_pow2_at_least_one(c: &Rational, e: &Rational) -> bool {
    let num = e.numer().to_i64().expect("small exponent");
    let den = e.denom().to_i64().expect("small exponent");
    pow_rat(c, den) * pow2(num) >= Rational::one()
}

/// `ε(t) min(…)` with `ε(t) = 2^{-βt}`, as three growth rates with
/// constants, and the closing series `Σ max(…)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosingSeries {
    pub n: usize,
    #[serde(with = "crate::serde_rational")]
    pub delta: Rational,
    #[serde(with = "crate::serde_rational")]
    pub beta: Rational,
    #[serde(with = "crate::serde_rational")]
    pub threshold: Rational,
    /// Branches `c r^t` of the terms `max((C_B^1)^{-1} 2^{-δt/(n+1-δ)},
    /// 2^{-(n-1)t} ε^{-n}, (C_B^3)^{-1} 2^{-t} ε^{-(n-1)})`.
    pub branches: Vec<GeometricBranch>,
    /// First `t` from which `ε(t) min(…) >= 1` at every later `t`.
    pub t0: u64,
}

/// `C_B^1` is given through `C_B` (it equals `C_B^{1/(n+1-δ)}`) so the
/// growth condition can be decided exactly.
pub fn closing_series(n: usize, delta: &Rational, beta: &Rational, c_b: &Rational, c_b3: &Rational) -> Result<ClosingSeries> {
    let threshold = beta_threshold(n, delta)?;
    if !beta.is_positive() || *beta >= threshold {
        return Err(Error::InvalidParameter(format!("β = {beta} must lie in (0, {threshold})")));
    }
    if !c_b.is_positive() || !c_b3.is_positive() {
        return Err(Error::InvalidParameter("constants must be positive".into()));
    }
    let nn = int(n as i64);
    let gap = &nn + int(1) - delta;
    let e1 = delta / &gap;
    let c_b1 = (ln_rational(c_b) / ratio_to_f64(&gap)).exp();
    let ln2 = std::f64::consts::LN_2;
    let r = |e: &Rational| (-ratio_to_f64(e) * ln2).exp();
    let branches = vec![
        GeometricBranch { c: 1.0 / c_b1, r: r(&e1) },
        GeometricBranch { c: 1.0, r: r(&(&nn - int(1) - beta * &nn)) },
        GeometricBranch {
            c: 1.0 / ratio_to_f64(c_b3),
            r: r(&(int(1) - beta * (&nn - int(1)))),
        },
    ];
    // growth exponents of ε(t) min(…); each is positive below the threshold
    let g1 = &e1 - beta;
    let g3 = int(1) - beta * &nn;
    let first = |ln_c: f64, g: &Rational| -> u64 {
        if ln_c >= 0.0 {
            0
        } else {
            (-ln_c / (ratio_to_f64(g) * ln2)).ceil().max(0.0) as u64
        }
    };
    let mut t0 = first(ln_rational(c_b) / ratio_to_f64(&gap), &g1).max(first(ln_rational(c_b3), &g3));
    let series = ClosingSeries {
        n,
        delta: delta.clone(),
        beta: beta.clone(),
        threshold,
        branches,
        t0,
    };
    // settle rounding in the closed form exactly
    while t0 > 0 && series.growth_holds(c_b, c_b3, t0 - 1) {
        t0 -= 1;
    }
    while !series.growth_holds(c_b, c_b3, t0) {
        t0 += 1;
    }
    Ok(ClosingSeries { t0, ..series })
}

impl ClosingSeries {
    /// Exact test of `ε(t) min(C_B^1 2^{δt/(n+1-δ)}, 2^{(n-1)t} ε^n,
    /// C_B^3 2^t ε^{n-1}) >= 1`.
    pub fn growth_holds(&self, c_b: &Rational, c_b3: &Rational, t: u64) -> bool {
        let nn = int(self.n as i64);
        let t = int(t as i64);
        let gap = &nn + int(1) - &self.delta;
        // (C_B^1 2^{(δ/gap - β) t})^{gap} = C_B 2^{(δ - β gap) t}
        let one = scaled_pow2_at_least_one(c_b, &((&self.delta - &self.beta * &gap) * &t));
        let two = ((&nn - int(1) - &self.beta * (&nn + int(1))) * &t) >= Rational::zero();
        let three = scaled_pow2_at_least_one(c_b3, &((int(1) - &self.beta * &nn) * &t));
        one && two && three
    }

    /// Tail of the closing series after `terms` terms.
    pub fn tail(&self, terms: u64) -> Result<crate::measure::Tail> {
        crate::measure::max_geometric_tail(&self.branches, terms)
    }
}

/// The chosen `β`: nine tenths of the threshold.
pub fn default_beta(threshold: &Rational) -> Rational {
    threshold * rat(9, 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Multivector;

    fn plane(a: &[Rational]) -> Hyperplane {
        Hyperplane::new(a.to_vec()).unwrap()
    }

    fn idx(i: &[usize], dim: usize) -> MultiIndex {
        MultiIndex::new(i, dim).unwrap()
    }

    fn e(i: &[usize], dim: usize) -> Multivector {
        Multivector::basis(idx(i, dim))
    }

    #[test]
    fn l_counts() {
        assert_eq!(l_count(&idx(&[0, 1], 3), 2), 1);
        assert_eq!(l_count(&idx(&[0], 2), 1), 0);
        assert_eq!(l_count(&idx(&[0, 1, 3], 5), 4), 2);
    }

    #[test]
    fn c_vector_examples() {
        let w = e(&[1, 2], 3);
        let c = c_vector(&idx(&[0, 2], 3), &w).unwrap();
        assert_eq!(c.c_plus(), &[int(0), int(1)]);
        assert_eq!(*c.c_minus(), int(0));
        let a = plane(&[rat(7, 10), rat(3, 10)]);
        assert_eq!(c.projected_norm(&a), int(1));
        let c = c_vector(&idx(&[0, 1], 3), &w).unwrap();
        assert_eq!(c.projected_norm(&a), rat(7, 10));
        assert_eq!(cvec_max(&w, &a).unwrap().0, int(1));
        let c = c_vector(&idx(&[0, 1], 3), &e(&[0, 1], 3)).unwrap();
        assert_eq!(c.c_plus(), &[int(1), int(0)]);
        assert_eq!(*c.c_minus(), int(0));
        assert!(c_vector(&idx(&[1, 2], 3), &w).is_err());
    }

    #[test]
    fn orbit_identity_small() {
        let a = plane(&[rat(1, 3), rat(-2, 5)]);
        let xs = vec![vec![rat(1, 7)], vec![int(2)], vec![rat(-5, 3)]];
        assert!(nonconstant_orbit_identity_check(&e(&[1, 2], 3), &a, &xs).unwrap());
        assert!(nonconstant_orbit_identity_check(&e(&[0, 1, 2], 3), &a, &xs).unwrap());
    }

    #[test]
    fn minimax_constants() {
        assert_eq!(minimax_box_constant(&ParamBox::unit(1)).unwrap(), rat(1, 2));
        assert_eq!(minimax_box_constant(&ParamBox::symmetric(2, int(1)).unwrap()).unwrap(), int(1));
        let shrunk = ParamBox::unit(1).scaled_about_center(&rat(1, 2)).unwrap();
        assert!(minimax_box_constant(&shrunk).unwrap() <= rat(1, 2));
    }

    #[test]
    fn bkm_formula() {
        let consts = NondivConstants::new(&ParamBox::unit(1), 2, rat(1, 2)).unwrap();
        let b = bkm_bound(&consts, &int(4), 1, &rat(1, 10), &int(1)).unwrap();
        assert_eq!(b, int(3) * int(27) * int(4) * int(3) * rat(1, 10));
        let at_rho = bkm_bound(&consts, &int(4), 1, &rat(1, 3), &int(1)).unwrap();
        assert_eq!(at_rho, int(3 * 27 * 4));
        assert!(bkm_bound(&consts, &int(4), 1, &rat(1, 2), &int(1)).is_err());
        assert!((good_constant(1) - 4.0).abs() < 1e-12);
        assert!((good_constant(2) - 16.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert_eq!(beta_threshold(2, &rat(1, 2)).unwrap(), rat(1, 5));
        assert_eq!(beta_threshold(3, &int(1)).unwrap(), rat(1, 3));
        assert!(beta_threshold(2, &int(0)).is_err());
    }

    #[test]
    fn closing_series_growth() {
        let s = closing_series(2, &rat(1, 2), &rat(1, 10), &int(1), &int(1)).unwrap();
        assert_eq!(s.t0, 0);
        for t in 0..=60 {
            assert!(s.growth_holds(&int(1), &int(1), t));
        }
        let s = closing_series(2, &rat(1, 2), &rat(1, 10), &rat(1, 2), &rat(1, 2)).unwrap();
        assert!(s.t0 > 0);
        assert!(!s.growth_holds(&rat(1, 2), &rat(1, 2), s.t0 - 1));
    }

    #[test]
    fn good_examples() {
        let b = ParamBox::unit(2);
        let f = AffineForm::coordinate(0, 2);
        let grid = [rat(1, 10), rat(1, 2), int(1)];
        let s = Sampler::Grid { per_axis: 4 };
        let r = good_check(&GoodTarget::Affine(f), &b, good_constant(2), 1.0, &grid, &s).unwrap();
        assert!((r.c_min - 1.0).abs() < 1e-12);
        assert!(r.pass);
        let k = AffineForm::constant(int(3), 2);
        let r = good_check(&GoodTarget::Affine(k), &b, 1.0, 1.0, &[rat(1, 2)], &s).unwrap();
        assert_eq!(r.worst_ratio, 0.0);
        let z = AffineForm::constant(int(0), 2);
        assert!(good_check(&GoodTarget::Affine(z), &b, 1.0, 1.0, &grid, &s).unwrap().vacuous);
    }

    #[test]
    fn case_two_term() {
        let a = plane(&[rat(1, 3), rat(2, 7), rat(-1, 5)]);
        let p = FlowParams::new(rat(1, 3), 2, 3).unwrap();
        let f = case2_top_term(&a, &p).unwrap();
        assert!(f.is_constant());
        assert_eq!(f.constant, pow_rat(&rat(1, 3), 4) * pow2(4));
    }

    #[test]
    fn small_vectors_agree_with_bruteforce() {
        let a = plane(&[rat(2, 5), rat(1, 3)]);
        let p = FlowParams::new(rat(1, 4), 2, 2).unwrap();
        for x in [rat(1, 9), rat(1, 2), rat(5, 7), rat(0, 1)] {
            let fast = small_orbit_vector_exists(std::slice::from_ref(&x), &a, 2, 1 << 30).unwrap();
            let slow = small_orbit_vector_bruteforce(std::slice::from_ref(&x), &a, &p, 4).unwrap();
            assert_eq!(fast, slow, "x = {x}");
        }
    }

    #[test]
    fn integer_multivector_enumeration() {
        let ws = integer_multivectors(2, 2, 1, 1 << 20).unwrap();
        // 3 coordinates in {-1,0,1}, nonzero, halved by sign: 13
        assert_eq!(ws.len(), 13);
    }
}
