//! Sparse exterior algebra over a [`Scalar`] field.
//!
//! A [`Multivector`] of grade `k` in `⋀^k(R^l)` is stored as a map from
//! [`MultiIndex`] to coefficient, with zero coefficients never stored. The
//! basis `e_I` for `I = {i_1 < … < i_k}` is `e_{i_1} ∧ … ∧ e_{i_k}` and the
//! empty index is the scalar `e_∅ = 1`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{fmt_rational, parse_rational, Rational, Scalar};

/// Largest supported ambient dimension (indices are packed into a `u64`).
pub const MAX_DIM: usize = 64;

/// Strictly increasing set of basis positions in `{0, …, dim-1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    bits: u64,
    dim: u8,
}

impl MultiIndex {
    pub fn new(indices: &[usize], dim: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::InvalidMultiIndex(format!(
                "ambient dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        let mut bits = 0u64;
        let mut last: Option<usize> = None;
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidMultiIndex(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if last.is_some_and(|l| l >= i) {
                return Err(Error::InvalidMultiIndex(format!(
                    "indices must be strictly increasing: {indices:?}"
                )));
            }
            last = Some(i);
            bits |= 1u64 << i;
        }
        Ok(MultiIndex { bits, dim: dim as u8 })
    }

    /// Builds an index from a bit set. `bits` must fit in `dim`.
    pub fn from_bits(bits: u64, dim: usize) -> Result<Self> {
        if dim > MAX_DIM || (dim < 64 && bits >> dim != 0) {
            return Err(Error::InvalidMultiIndex(format!(
                "bit set {bits:#b} does not fit dimension {dim}"
            )));
        }
        Ok(MultiIndex { bits, dim: dim as u8 })
    }

    pub fn empty(dim: usize) -> Self {
        MultiIndex { bits: 0, dim: dim as u8 }
    }

    /// `{0, 1, …, dim-1}`.
    pub fn full(dim: usize) -> Self {
        let bits = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
        MultiIndex { bits, dim: dim as u8 }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn grade(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 64 && self.bits & (1u64 << i) != 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }

    /// `I ∪ {i}`, or `None` when `i` is already present.
    pub fn insert(&self, i: usize) -> Option<Self> {
        (!self.contains(i) && i < self.dim()).then_some(MultiIndex {
            bits: self.bits | (1u64 << i),
            dim: self.dim,
        })
    }

    /// `I \ {i}`, or `None` when `i` is absent.
    pub fn remove(&self, i: usize) -> Option<Self> {
        self.contains(i).then_some(MultiIndex {
            bits: self.bits & !(1u64 << i),
            dim: self.dim,
        })
    }

    /// Number of elements of `self` strictly less than `i`.
    pub fn count_below(&self, i: usize) -> usize {
        let mask = if i >= 64 { u64::MAX } else { (1u64 << i) - 1 };
        (self.bits & mask).count_ones() as usize
    }

    /// `e_I ∧ e_J = sign · e_{I∪J}`, or `None` when the sets overlap.
    pub fn wedge(&self, other: &MultiIndex) -> Option<(bool, MultiIndex)> {
        if self.bits & other.bits != 0 {
            return None;
        }
        // one transposition per pair (i in I, j in J) with i > j
        let swaps: u32 = other
            .indices()
            .map(|j| (self.bits >> j).count_ones())
            .sum();
        Some((
            swaps % 2 == 1,
            MultiIndex {
                bits: self.bits | other.bits,
                dim: self.dim.max(other.dim),
            },
        ))
    }
}

impl Ord for MultiIndex {
    /// Lexicographic on the ascending index sequences.
    fn cmp(&self, other: &Self) -> Ordering {
        self.indices()
            .cmp(other.indices())
            .then(self.dim.cmp(&other.dim))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{self}")
    }
}

/// Homogeneous element of `⋀^grade(R^dim)` in canonical sparse form.
#[derive(Clone, PartialEq)]
pub struct Multivector<S = Rational> {
    dim: usize,
    grade: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> Multivector<S> {
    pub fn zero(dim: usize, grade: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::InvalidMultiIndex(format!(
                "ambient dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        if grade > dim {
            return Err(Error::GradeOverflow { grade, dim });
        }
        Ok(Multivector {
            dim,
            grade,
            terms: BTreeMap::new(),
        })
    }

    pub fn basis(index: MultiIndex) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(index, S::one());
        Multivector {
            dim: index.dim(),
            grade: index.grade(),
            terms,
        }
    }

    /// Grade-1 element with the given coordinates.
    pub fn vector(coords: &[S]) -> Self {
        let dim = coords.len();
        let terms = coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (MultiIndex { bits: 1u64 << i, dim: dim as u8 }, c.clone()))
            .collect();
        Multivector { dim, grade: 1, terms }
    }

    /// Grade-0 element `value · e_∅`.
    pub fn scalar(dim: usize, value: S) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(MultiIndex::empty(dim), value);
        }
        Multivector { dim, grade: 0, terms }
    }

    /// Sums repeated keys and drops zeros.
    pub fn from_terms(
        dim: usize,
        grade: usize,
        terms: impl IntoIterator<Item = (MultiIndex, S)>,
    ) -> Result<Self> {
        let mut out = Self::zero(dim, grade)?;
        for (idx, c) in terms {
            check_dim(dim, idx.dim())?;
            check_dim(grade, idx.grade())?;
            out.accumulate(idx, c);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coeff(&self, index: &MultiIndex) -> S {
        self.terms.get(index).cloned().unwrap_or_else(S::zero)
    }

    /// Coefficient by explicit index list; zero for malformed lists.
    pub fn coeff_of(&self, indices: &[usize]) -> S {
        MultiIndex::new(indices, self.dim)
            .map(|i| self.coeff(&i))
            .unwrap_or_else(|_| S::zero())
    }

    fn accumulate(&mut self, index: MultiIndex, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&index) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&index);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(index, c);
            }
        }
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.grade, other.grade)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.accumulate(*i, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(&-S::one()))
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, other: &Self, factor: &S) -> Result<()> {
        self.check_same_space(other)?;
        for (i, c) in &other.terms {
            self.accumulate(*i, factor.clone() * c.clone());
        }
        Ok(())
    }

    pub fn scale(&self, factor: &S) -> Self {
        if factor.is_zero() {
            return Multivector {
                dim: self.dim,
                grade: self.grade,
                terms: BTreeMap::new(),
            };
        }
        Multivector {
            dim: self.dim,
            grade: self.grade,
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (*i, factor.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let grade = self.grade + other.grade;
        if grade > self.dim {
            return Err(Error::GradeOverflow {
                grade,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim, grade)?;
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((negative, idx)) = a.wedge(b) {
                    let prod = ca.clone() * cb.clone();
                    out.accumulate(idx, if negative { -prod } else { prod });
                }
            }
        }
        Ok(out)
    }

    /// `max_I |w_I|`, zero for the zero multivector.
    pub fn sup_norm(&self) -> S {
        self.terms
            .values()
            .map(Scalar::abs_value)
            .fold(S::zero(), |m, v| if v > m { v } else { m })
    }

    /// Induced action of `m` on `⋀^grade`: `e_I ↦ (m e_{i_1}) ∧ … ∧ (m e_{i_k})`.
    ///
    /// Wedges of image columns are memoized by prefix, so index sets that
    /// share a prefix (adjacent in the sorted term map) reuse work.
    pub fn apply_linear_map(&self, m: &Matrix<S>) -> Result<Self> {
        check_dim(self.dim, m.rows())?;
        check_dim(self.dim, m.cols())?;
        let images: Vec<Multivector<S>> =
            (0..self.dim).map(|j| Multivector::vector(&m.column(j))).collect();
        let mut memo: HashMap<u64, Multivector<S>> = HashMap::new();
        memo.insert(0, Multivector::scalar(self.dim, S::one()));
        let mut out = Self::zero(self.dim, self.grade)?;
        for (idx, c) in &self.terms {
            let mut prefix = 0u64;
            for i in idx.indices() {
                let next = prefix | (1u64 << i);
                if !memo.contains_key(&next) {
                    let w = memo[&prefix].wedge(&images[i])?;
                    memo.insert(next, w);
                }
                prefix = next;
            }
            out.add_scaled(&memo[&prefix], c)?;
        }
        Ok(out)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Multivector<T> {
        let mut out = Multivector::<T> {
            dim: self.dim,
            grade: self.grade,
            terms: BTreeMap::new(),
        };
        for (i, c) in &self.terms {
            out.accumulate(*i, f(c));
        }
        out
    }
}

impl Multivector<Rational> {
    /// Float mirror of an exact multivector.
    pub fn to_float(&self) -> Multivector<f64> {
        self.map_coeffs(Scalar::to_f64)
    }
}

impl<S: Scalar> Add for &Multivector<S> {
    type Output = Multivector<S>;

    fn add(self, rhs: Self) -> Multivector<S> {
        self.try_add(rhs).expect("multivectors live in the same space")
    }
}

impl<S: Scalar> Sub for &Multivector<S> {
    type Output = Multivector<S>;

    fn sub(self, rhs: Self) -> Multivector<S> {
        self.try_sub(rhs).expect("multivectors live in the same space")
    }
}

impl<S: Scalar> Neg for &Multivector<S> {
    type Output = Multivector<S>;

    fn neg(self) -> Multivector<S> {
        self.scale(&-S::one())
    }
}

impl<S: fmt::Debug> fmt::Debug for Multivector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector(grade {}, dim {}) {{", self.grade, self.dim)?;
        for (k, (i, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {c:?}")?;
        }
        f.write_str("}")
    }
}

/// Canonical text form: `grade k; dim l; {i1,i2,...}: num/den; ...`.
impl fmt::Display for Multivector<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grade {}; dim {}", self.grade, self.dim)?;
        for (i, c) in &self.terms {
            write!(f, "; {i}: {}", fmt_rational(c))?;
        }
        Ok(())
    }
}

impl FromStr for Multivector<Rational> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';').map(str::trim).filter(|p| !p.is_empty());
        let header = |part: Option<&str>, key: &str| -> Result<usize> {
            part.and_then(|p| p.strip_prefix(key))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("expected `{key} <n>` in `{s}`")))
        };
        let grade = header(parts.next(), "grade")?;
        let dim = header(parts.next(), "dim")?;
        let mut terms = Vec::new();
        for part in parts {
            let (idx, value) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("malformed term `{part}`")))?;
            let inner = idx
                .trim()
                .strip_prefix('{')
                .and_then(|v| v.strip_suffix('}'))
                .ok_or_else(|| Error::Parse(format!("malformed index `{idx}`")))?;
            let indices = inner
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad index `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            terms.push((MultiIndex::new(&indices, dim)?, parse_rational(value)?));
        }
        Multivector::from_terms(dim, grade, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn e(indices: &[usize], dim: usize) -> Multivector {
        Multivector::basis(MultiIndex::new(indices, dim).unwrap())
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::new(&[0, 2, 1], 3).is_err());
        assert!(MultiIndex::new(&[0, 3], 3).is_err());
        assert!(MultiIndex::new(&[1, 1], 3).is_err());
        let i = MultiIndex::new(&[0, 2], 3).unwrap();
        assert_eq!(i.grade(), 2);
        assert_eq!(i.to_vec(), vec![0, 2]);
        assert_eq!(MultiIndex::new(&[], 4).unwrap().grade(), 0);
    }

    #[test]
    fn lexicographic_order() {
        let a = MultiIndex::new(&[0, 1], 3).unwrap();
        let b = MultiIndex::new(&[0, 2], 3).unwrap();
        let c = MultiIndex::new(&[1, 2], 3).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn wedge_of_basis_vectors() {
        assert_eq!(e(&[1], 3).wedge(&e(&[2], 3)).unwrap(), e(&[1, 2], 3));
        assert!(e(&[1], 3).wedge(&e(&[1], 3)).unwrap().is_zero());
        assert_eq!(e(&[2], 3).wedge(&e(&[1], 3)).unwrap(), -&e(&[1, 2], 3));
    }

    #[test]
    fn wedge_expands_bilinearly() {
        let a = Multivector::vector(&[int(1), int(0), int(2)]);
        let b = Multivector::vector(&[int(0), int(1), int(3)]);
        let w = a.wedge(&b).unwrap();
        assert_eq!(w.to_string(), "grade 2; dim 3; {0,1}: 1/1; {0,2}: 3/1; {1,2}: -2/1");
        assert_eq!(w.sup_norm(), int(3));
    }

    #[test]
    fn wedge_errors() {
        assert!(matches!(
            e(&[0], 3).wedge(&e(&[0], 4)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            e(&[0, 1], 3).wedge(&e(&[1, 2], 3)),
            Err(Error::GradeOverflow { .. })
        ));
    }

    #[test]
    fn sup_norm_examples() {
        let w = &e(&[0, 1], 3).scale(&int(3)) - &e(&[1, 2], 3).scale(&int(2));
        assert_eq!(w.sup_norm(), int(3));
        assert_eq!(Multivector::<Rational>::zero(3, 2).unwrap().sup_norm(), int(0));
    }

    #[test]
    fn diagonal_on_top_form() {
        let m = Matrix::diagonal(&[int(2), int(3)]);
        let w = e(&[0, 1], 2);
        assert_eq!(w.apply_linear_map(&m).unwrap(), w.scale(&int(6)));
        let id = Matrix::identity(2);
        assert_eq!(w.apply_linear_map(&id).unwrap(), w);
    }

    #[test]
    fn scalar_grade_is_fixed_by_maps() {
        let s = Multivector::scalar(3, rat(5, 2));
        let m = Matrix::diagonal(&[int(7), int(7), int(7)]);
        assert_eq!(s.apply_linear_map(&m).unwrap(), s);
    }

    #[test]
    fn text_round_trip() {
        let text = "grade 2; dim 3; {0,1}: 1/1; {0,2}: 3/1; {1,2}: -2/1";
        let w: Multivector = text.parse().unwrap();
        assert_eq!(w.to_string(), text);
        let zero: Multivector = "grade 1; dim 4".parse().unwrap();
        assert!(zero.is_zero());
        let messy: Multivector = "grade 1; dim 2; {1}: 2/4; {0}: 0/1; {1}: 1/2".parse().unwrap();
        assert_eq!(messy.to_string(), "grade 1; dim 2; {1}: 1/1");
        assert!("grade 1; dim 2; {2}: 1".parse::<Multivector>().is_err());
        assert!("dim 2; grade 1".parse::<Multivector>().is_err());
    }
}
