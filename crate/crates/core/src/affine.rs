//! Affine functions of a parameter `x ∈ R^d` and multivectors whose
//! coefficients are affine in `x`.
//!
//! Suprema of `|f|` over a box are attained at a vertex, and the volume of
//! `{x ∈ B : |f(x)| < ε}` is a difference of two values of the
//! distribution function of a sum of independent uniforms, which is
//! piecewise polynomial with rational breakpoints. Both are therefore exact
//! over the rationals.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::exterior::{MultiIndex, Multivector};
use crate::linalg::Matrix;
use crate::scalar::{fmt_rational, int, parse_rational, Rational, Scalar};

/// `f(x) = constant + Σ gradient_i · x_i`.
#[derive(Clone, PartialEq)]
pub struct AffineForm<S = Rational> {
    pub constant: S,
    pub gradient: Vec<S>,
}

impl<S: Scalar> AffineForm<S> {
    pub fn new(constant: S, gradient: Vec<S>) -> Self {
        AffineForm { constant, gradient }
    }

    pub fn constant(value: S, param_dim: usize) -> Self {
        AffineForm {
            constant: value,
            gradient: vec![S::zero(); param_dim],
        }
    }

    /// The coordinate function `x ↦ x_i`.
    pub fn coordinate(i: usize, param_dim: usize) -> Self {
        let mut gradient = vec![S::zero(); param_dim];
        gradient[i] = S::one();
        AffineForm {
            constant: S::zero(),
            gradient,
        }
    }

    pub fn param_dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn is_constant(&self) -> bool {
        self.gradient.iter().all(Zero::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.is_constant()
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        check_dim(self.gradient.len(), x.len())?;
        Ok(self
            .gradient
            .iter()
            .zip(x)
            .fold(self.constant.clone(), |acc, (g, xi)| acc + g.clone() * xi.clone()))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.param_dim(), other.param_dim())?;
        Ok(AffineForm {
            constant: self.constant.clone() + other.constant.clone(),
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn scale(&self, factor: &S) -> Self {
        AffineForm {
            constant: factor.clone() * self.constant.clone(),
            gradient: self.gradient.iter().map(|g| factor.clone() * g.clone()).collect(),
        }
    }

    /// Product of two forms, defined only when at least one is constant.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.param_dim(), other.param_dim())?;
        if self.is_constant() {
            Ok(other.scale(&self.constant))
        } else if other.is_constant() {
            Ok(self.scale(&other.constant))
        } else {
            Err(Error::NotAffine)
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for AffineForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} | {:?}", self.constant, self.gradient)
    }
}

/// Rendered as `c | g1,g2,...` with every number as `num/den`.
impl fmt::Display for AffineForm<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let grad: Vec<String> = self.gradient.iter().map(fmt_rational).collect();
        write!(f, "{} | {}", fmt_rational(&self.constant), grad.join(","))
    }
}

impl FromStr for AffineForm<Rational> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (c, g) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("expected `c | g1,g2,...`, got `{s}`")))?;
        let gradient = g
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        Ok(AffineForm::new(parse_rational(c)?, gradient))
    }
}

/// Closed axis-aligned box `Π [lo_i, hi_i]` with `lo_i < hi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    intervals: Vec<(Rational, Rational)>,
}

impl ParamBox {
    pub fn new(intervals: Vec<(Rational, Rational)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidParameter("box needs at least one coordinate".into()));
        }
        if let Some((lo, hi)) = intervals.iter().find(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidParameter(format!(
                "degenerate interval [{lo}, {hi}]"
            )));
        }
        Ok(ParamBox { intervals })
    }

    pub fn unit(dim: usize) -> Self {
        ParamBox {
            intervals: vec![(int(0), int(1)); dim],
        }
    }

    /// `[-r, r]^dim`.
    pub fn symmetric(dim: usize, r: Rational) -> Result<Self> {
        Self::new(vec![(-r.clone(), r); dim])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn lengths(&self) -> Vec<Rational> {
        self.intervals.iter().map(|(lo, hi)| hi - lo).collect()
    }

    pub fn volume(&self) -> Rational {
        self.lengths().iter().fold(Rational::one(), |acc, l| acc * l)
    }

    /// Euclidean diameter (irrational in general, hence `f64`).
    pub fn diameter(&self) -> f64 {
        self.lengths()
            .iter()
            .map(|l| {
                let v = l.to_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<Rational> {
        self.intervals
            .iter()
            .map(|(lo, hi)| (lo + hi) / int(2))
            .collect()
    }

    /// Vertex selected by the bits of `mask` (bit `i` set picks `hi_i`).
    pub fn vertex(&self, mask: u64) -> Vec<Rational> {
        self.intervals
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| if mask >> i & 1 == 1 { hi.clone() } else { lo.clone() })
            .collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec<Rational>> + '_ {
        (0..1u64 << self.dim()).map(|m| self.vertex(m))
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim()
            && self
                .intervals
                .iter()
                .zip(x)
                .all(|((lo, hi), v)| lo <= v && v <= hi)
    }

    /// Box with the same center and all sides multiplied by `factor`.
    pub fn scaled_about_center(&self, factor: &Rational) -> Result<Self> {
        let c = self.center();
        Self::new(
            self.intervals
                .iter()
                .zip(c)
                .map(|((lo, hi), m)| {
                    let half = (hi - lo) / int(2) * factor;
                    (&m - &half, &m + &half)
                })
                .collect(),
        )
    }
}

impl fmt::Display for ParamBox {
    /// `lo,hi;lo,hi;...`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(lo, hi)| format!("{},{}", fmt_rational(lo), fmt_rational(hi)))
            .collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for ParamBox {
    type Err = Error;

    /// Accepts `lo,hi` per coordinate, coordinates separated by `;`.
    fn from_str(s: &str) -> Result<Self> {
        let intervals = s
            .split(';')
            .map(|part| {
                let (lo, hi) = part
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("expected `lo,hi`, got `{part}`")))?;
                Ok((parse_rational(lo)?, parse_rational(hi)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}

/// Supremum of `|f|` over the closed box, with a vertex attaining it.
pub fn sup_abs_over_box(f: &AffineForm, b: &ParamBox) -> Result<(Rational, Vec<Rational>)> {
    check_dim(b.dim(), f.param_dim())?;
    // vertices maximizing and minimizing f, coordinate by coordinate
    let mut hi_vertex = Vec::with_capacity(b.dim());
    let mut lo_vertex = Vec::with_capacity(b.dim());
    for (g, (lo, hi)) in f.gradient.iter().zip(b.intervals()) {
        if g.is_positive() {
            hi_vertex.push(hi.clone());
            lo_vertex.push(lo.clone());
        } else {
            hi_vertex.push(lo.clone());
            lo_vertex.push(hi.clone());
        }
    }
    let fmax = f.eval(&hi_vertex)?;
    let fmin = f.eval(&lo_vertex)?;
    if fmax.abs() >= fmin.abs() {
        Ok((fmax.abs(), hi_vertex))
    } else {
        Ok((fmin.abs(), lo_vertex))
    }
}

fn factorial(d: usize) -> Rational {
    (1..=d as i64).fold(Rational::one(), |acc, k| acc * int(k))
}

/// Volume of `{u ∈ Π [a_i, b_i] : Σ u_i ≤ s}` by inclusion–exclusion over
/// the vertices of the box.
pub fn uniform_sum_cdf_volume(a: &[Rational], b: &[Rational], s: &Rational) -> Rational {
    let d = a.len();
    if d == 0 {
        return if s.is_negative() { Rational::zero() } else { Rational::one() };
    }
    let mut total = Rational::zero();
    for mask in 0..1u64 << d {
        let corner: Rational = (0..d)
            .map(|i| if mask >> i & 1 == 1 { &b[i] } else { &a[i] })
            .fold(Rational::zero(), |acc, v| acc + v);
        let excess = s - corner;
        if excess.is_positive() {
            let term = num_traits::pow(excess, d);
            if mask.count_ones() % 2 == 1 {
                total -= term;
            } else {
                total += term;
            }
        }
    }
    total / factorial(d)
}

/// Exact volume of `{x ∈ B : |f(x)| < eps}`.
pub fn sublevel_measure(f: &AffineForm, b: &ParamBox, eps: &Rational) -> Result<Rational> {
    check_dim(b.dim(), f.param_dim())?;
    if !eps.is_positive() {
        return Err(Error::InvalidParameter(format!("sublevel threshold must be positive, got {eps}")));
    }
    let mut flat_volume = Rational::one();
    let mut jacobian = Rational::one();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (g, (l, h)) in f.gradient.iter().zip(b.intervals()) {
        if g.is_zero() {
            flat_volume *= h - l;
        } else {
            let (u0, u1) = (g * l, g * h);
            if u0 <= u1 {
                lo.push(u0);
                hi.push(u1);
            } else {
                lo.push(u1);
                hi.push(u0);
            }
            jacobian *= g.abs();
        }
    }
    if lo.is_empty() {
        return Ok(if f.constant.abs() < *eps { flat_volume } else { Rational::zero() });
    }
    let upper = uniform_sum_cdf_volume(&lo, &hi, &(eps - &f.constant));
    let lower = uniform_sum_cdf_volume(&lo, &hi, &(-eps - &f.constant));
    Ok((upper - lower) / jacobian * flat_volume)
}

/// Homogeneous multivector with affine coefficients in `x ∈ R^param_dim`.
#[derive(Clone, PartialEq)]
pub struct AffineMultivector<S = Rational> {
    dim: usize,
    grade: usize,
    param_dim: usize,
    terms: BTreeMap<MultiIndex, AffineForm<S>>,
}

/// Supremum of the sup-norm over a box with the coefficient and vertex
/// attaining it (`index` is `None` for the zero multivector).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSup {
    pub value: Rational,
    pub index: Option<MultiIndex>,
    pub vertex: Vec<Rational>,
}

impl<S: Scalar> AffineMultivector<S> {
    pub fn zero(dim: usize, grade: usize, param_dim: usize) -> Result<Self> {
        if grade > dim {
            return Err(Error::GradeOverflow { grade, dim });
        }
        Ok(AffineMultivector {
            dim,
            grade,
            param_dim,
            terms: BTreeMap::new(),
        })
    }

    pub fn from_multivector(w: &Multivector<S>, param_dim: usize) -> Self {
        AffineMultivector {
            dim: w.dim(),
            grade: w.grade(),
            param_dim,
            terms: w
                .terms()
                .map(|(i, c)| (*i, AffineForm::constant(c.clone(), param_dim)))
                .collect(),
        }
    }

    /// Sums repeated keys and drops zero coefficients.
    pub fn from_terms(
        dim: usize,
        grade: usize,
        param_dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, AffineForm<S>)>,
    ) -> Result<Self> {
        let mut out = Self::zero(dim, grade, param_dim)?;
        for (idx, c) in terms {
            check_dim(dim, idx.dim())?;
            check_dim(grade, idx.grade())?;
            check_dim(param_dim, c.param_dim())?;
            out.accumulate(idx, c)?;
        }
        Ok(out)
    }

    /// Grade-1 element with affine coordinates.
    pub fn vector(coords: Vec<AffineForm<S>>, param_dim: usize) -> Result<Self> {
        let dim = coords.len();
        let mut out = Self::zero(dim, 1, param_dim)?;
        for (i, c) in coords.into_iter().enumerate() {
            check_dim(param_dim, c.param_dim())?;
            out.accumulate(MultiIndex::new(&[i], dim)?, c)?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &AffineForm<S>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, index: &MultiIndex) -> AffineForm<S> {
        self.terms
            .get(index)
            .cloned()
            .unwrap_or_else(|| AffineForm::constant(S::zero(), self.param_dim))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, index: MultiIndex, c: AffineForm<S>) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let sum = match self.terms.get(&index) {
            Some(v) => v.try_add(&c)?,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&index);
        } else {
            self.terms.insert(index, sum);
        }
        Ok(())
    }

    /// Evaluates every coefficient at `x`.
    pub fn specialize(&self, x: &[S]) -> Result<Multivector<S>> {
        check_dim(self.param_dim, x.len())?;
        let terms = self
            .terms
            .iter()
            .map(|(i, f)| Ok((*i, f.eval(x)?)))
            .collect::<Result<Vec<_>>>()?;
        Multivector::from_terms(self.dim, self.grade, terms)
    }

    /// Wedge product; fails with [`Error::NotAffine`] if a coefficient of
    /// the result would be quadratic in `x`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.param_dim, other.param_dim)?;
        let grade = self.grade + other.grade;
        let mut out = Self::zero(self.dim, grade, self.param_dim)?;
        for (a, fa) in &self.terms {
            for (b, fb) in &other.terms {
                if let Some((negative, idx)) = a.wedge(b) {
                    let prod = fa.checked_mul(fb)?;
                    let signed = if negative { prod.scale(&-S::one()) } else { prod };
                    out.accumulate(idx, signed)?;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &S) -> Self {
        let mut out = AffineMultivector {
            dim: self.dim,
            grade: self.grade,
            param_dim: self.param_dim,
            terms: BTreeMap::new(),
        };
        for (i, f) in &self.terms {
            let g = f.scale(factor);
            if !g.is_zero() {
                out.terms.insert(*i, g);
            }
        }
        out
    }

    /// Action of `diag(d_0, …, d_{dim-1})`: `e_I ↦ (Π_{i∈I} d_i) e_I`.
    pub fn scale_diagonal(&self, diag: &[S]) -> Result<Self> {
        check_dim(self.dim, diag.len())?;
        let mut out = Self::zero(self.dim, self.grade, self.param_dim)?;
        for (i, f) in &self.terms {
            let factor = i.indices().fold(S::one(), |acc, k| acc * diag[k].clone());
            out.accumulate(*i, f.scale(&factor))?;
        }
        Ok(out)
    }
}

impl AffineMultivector<Rational> {
    /// `sup_{x ∈ B} ‖W(x)‖`, the maximum over coefficients of the vertex
    /// supremum of each affine coefficient.
    pub fn sup_norm_over_box(&self, b: &ParamBox) -> Result<BoxSup> {
        check_dim(self.param_dim, b.dim())?;
        let mut best = BoxSup {
            value: Rational::zero(),
            index: None,
            vertex: b.vertex(0),
        };
        for (i, f) in &self.terms {
            let (v, vertex) = sup_abs_over_box(f, b)?;
            if best.index.is_none() || v > best.value {
                best = BoxSup {
                    value: v,
                    index: Some(*i),
                    vertex,
                };
            }
        }
        Ok(best)
    }
}

impl<S: fmt::Debug> fmt::Debug for AffineMultivector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AffineMultivector(grade {}, dim {}) {{", self.grade, self.dim)?;
        for (k, (i, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {c:?}")?;
        }
        f.write_str("}")
    }
}

/// Matrix whose entries are affine in `x`.
#[derive(Clone, PartialEq)]
pub struct AffineMatrix<S = Rational> {
    rows: usize,
    cols: usize,
    param_dim: usize,
    entries: Vec<AffineForm<S>>,
}

impl<S: Scalar> AffineMatrix<S> {
    pub fn from_constant(m: &Matrix<S>, param_dim: usize) -> Self {
        AffineMatrix {
            rows: m.rows(),
            cols: m.cols(),
            param_dim,
            entries: (0..m.rows())
                .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
                .map(|(i, j)| AffineForm::constant(m[(i, j)].clone(), param_dim))
                .collect(),
        }
    }

    pub fn identity(n: usize, param_dim: usize) -> Self {
        Self::from_constant(&Matrix::identity(n), param_dim)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn get(&self, i: usize, j: usize) -> &AffineForm<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: AffineForm<S>) -> Result<()> {
        check_dim(self.param_dim, f.param_dim())?;
        self.entries[i * self.cols + j] = f;
        Ok(())
    }

    pub fn specialize(&self, x: &[S]) -> Result<Matrix<S>> {
        check_dim(self.param_dim, x.len())?;
        let values = self
            .entries
            .iter()
            .map(|f| f.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(self.rows, self.cols, |i, j| {
            values[i * self.cols + j].clone()
        }))
    }

    pub fn column(&self, j: usize) -> Vec<AffineForm<S>> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    /// Induced action on a constant multivector, coefficient-wise in `x`.
    pub fn apply(&self, w: &Multivector<S>) -> Result<AffineMultivector<S>> {
        check_dim(self.rows, self.cols)?;
        check_dim(self.cols, w.dim())?;
        let images = (0..self.cols)
            .map(|j| AffineMultivector::vector(self.column(j), self.param_dim))
            .collect::<Result<Vec<_>>>()?;
        let mut unit = AffineMultivector::zero(w.dim(), 0, self.param_dim)?;
        unit.accumulate(
            MultiIndex::empty(w.dim()),
            AffineForm::constant(S::one(), self.param_dim),
        )?;
        let mut memo: HashMap<u64, AffineMultivector<S>> = HashMap::new();
        memo.insert(0, unit);
        let mut out = AffineMultivector::zero(w.dim(), w.grade(), self.param_dim)?;
        for (idx, c) in w.terms() {
            let mut prefix = 0u64;
            for i in idx.indices() {
                let next = prefix | (1u64 << i);
                if !memo.contains_key(&next) {
                    let v = memo[&prefix].wedge(&images[i])?;
                    memo.insert(next, v);
                }
                prefix = next;
            }
            for (k, f) in memo[&prefix].terms() {
                out.accumulate(*k, f.scale(c))?;
            }
        }
        Ok(out)
    }
}

impl<S: fmt::Debug> fmt::Debug for AffineMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AffineMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.entries[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}
