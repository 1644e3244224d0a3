//! Integer subgroups of `Z^m`: primitivity, representing multivectors,
//! canonical forms and enumeration by the height of the representing
//! multivector.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{check_dim, Error, Result};
use crate::exterior::{MultiIndex, Multivector};
use crate::linalg::Matrix;
use crate::scalar::{big, gcd_all, Rational};

type IntMatrix = Vec<Vec<BigInt>>;

/// Subgroup of `Z^ambient_dim` given by a basis of linearly independent
/// rows, with its row Hermite normal form as canonical key.
#[derive(Clone)]
pub struct IntegerSubgroup {
    ambient_dim: usize,
    basis: IntMatrix,
    hnf: IntMatrix,
}

impl IntegerSubgroup {
    pub fn new(basis: Vec<Vec<BigInt>>, ambient_dim: usize) -> Result<Self> {
        for row in &basis {
            check_dim(ambient_dim, row.len())?;
        }
        if rational_rank(&basis) != basis.len() {
            return Err(Error::RankDeficient);
        }
        let hnf = hermite_normal_form(&basis);
        Ok(IntegerSubgroup {
            ambient_dim,
            basis,
            hnf,
        })
    }

    pub fn from_i64(rows: &[&[i64]], ambient_dim: usize) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
            ambient_dim,
        )
    }

    /// The whole lattice `Z^m`.
    pub fn full(ambient_dim: usize) -> Self {
        let basis = (0..ambient_dim)
            .map(|i| {
                (0..ambient_dim)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        Self::new(basis, ambient_dim).expect("identity has full rank")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    /// Row Hermite normal form: echelon, positive pivots, entries above a
    /// pivot reduced into `[0, pivot)`. Two subgroups are equal iff their
    /// normal forms are.
    pub fn canonical_form(&self) -> &[Vec<BigInt>] {
        &self.hnf
    }

    /// Elementary divisors of the basis matrix.
    pub fn elementary_divisors(&self) -> Vec<BigInt> {
        smith_form(&self.basis, false).0
    }

    /// `Γ = Γ_R ∩ Z^m`, tested through the elementary divisors.
    pub fn is_primitive(&self) -> bool {
        self.elementary_divisors().iter().all(One::is_one)
    }

    /// Same test through the gcd of the maximal minors, computed by
    /// determinants rather than through the exterior algebra.
    pub fn is_primitive_by_minors(&self) -> bool {
        let k = self.rank();
        let mut g = BigInt::zero();
        for cols in combinations(self.ambient_dim, k) {
            let minor = Matrix::from_fn(k, k, |i, j| big(&self.basis[i][cols[j]]));
            let det = minor.determinant().expect("square");
            g = g.gcd(det.numer());
        }
        g.is_one()
    }

    /// `v_1 ∧ … ∧ v_k` for the stored basis; well defined up to sign.
    pub fn representing_multivector(&self) -> Result<Multivector> {
        if self.basis.is_empty() {
            return Err(Error::InvalidParameter("rank 0 subgroup has no representing multivector".into()));
        }
        let mut w = Multivector::scalar(self.ambient_dim, Rational::one());
        for row in &self.basis {
            let v: Vec<Rational> = row.iter().map(big).collect();
            w = w.wedge(&Multivector::vector(&v))?;
        }
        Ok(w)
    }

    /// Representing multivector with the first nonzero coordinate positive.
    pub fn normalized_multivector(&self) -> Result<Multivector> {
        Ok(normalize_sign(&self.representing_multivector()?))
    }

    /// Same subgroup with its canonical form as basis.
    pub fn canonical(&self) -> Self {
        IntegerSubgroup {
            ambient_dim: self.ambient_dim,
            basis: self.hnf.clone(),
            hnf: self.hnf.clone(),
        }
    }

    /// `Γ_R ∩ Z^m`.
    pub fn saturation(&self) -> Self {
        let (_, vinv) = smith_form(&self.basis, true);
        let rows = vinv.expect("tracked")[..self.rank()].to_vec();
        Self::new(rows, self.ambient_dim).expect("rows of a unimodular matrix are independent")
    }

    /// Image under a unimodular change of basis `B ↦ U B`; the subgroup is
    /// unchanged.
    pub fn rebased(&self, u: &[Vec<BigInt>]) -> Result<Self> {
        check_dim(self.rank(), u.len())?;
        let rows = u
            .iter()
            .map(|urow| {
                check_dim(self.rank(), urow.len())?;
                Ok((0..self.ambient_dim)
                    .map(|j| {
                        urow.iter()
                            .zip(&self.basis)
                            .map(|(c, b)| c * &b[j])
                            .sum::<BigInt>()
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<BigInt>>>>()?;
        Self::new(rows, self.ambient_dim)
    }
}

impl PartialEq for IntegerSubgroup {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim && self.hnf == other.hnf
    }
}

impl Eq for IntegerSubgroup {}

impl fmt::Debug for IntegerSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntegerSubgroup(Z^{}, {})", self.ambient_dim, self)
    }
}

/// Row-major integer list, e.g. `[[1,0,2],[0,1,3]]`.
impl fmt::Display for IntegerSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// All `k`-subsets of `0..m` in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < m - k + i) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn rational_rank(rows: &IntMatrix) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = Matrix::from_fn(rows.len(), rows[0].len(), |i, j| big(&rows[i][j]));
    m.rank()
}

/// Flips the sign so that the first nonzero coordinate is positive.
pub fn normalize_sign(w: &Multivector) -> Multivector {
    match w.terms().next() {
        Some((_, c)) if c.is_negative() => -w,
        _ => w.clone(),
    }
}

/// Diagonal of the Smith normal form of a `k × m` integer matrix, and
/// optionally the inverse `V^{-1}` of the column transform, so that
/// `U M V = diag(d)`. Only the first `rank` divisors are returned.
fn smith_form(m: &IntMatrix, track: bool) -> (Vec<BigInt>, Option<IntMatrix>) {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a = m.clone();
    let mut vinv: Option<IntMatrix> = track.then(|| {
        (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect()
    });
    let mut divisors = Vec::new();

    // column operations on `a` with the matching inverse row operation on V^{-1}
    fn swap_cols(a: &mut IntMatrix, vinv: &mut Option<IntMatrix>, x: usize, y: usize) {
        if x == y {
            return;
        }
        for row in a.iter_mut() {
            row.swap(x, y);
        }
        if let Some(v) = vinv {
            v.swap(x, y);
        }
    }
    // col_y -= q col_x
    fn sub_col(a: &mut IntMatrix, vinv: &mut Option<IntMatrix>, x: usize, y: usize, q: &BigInt) {
        for row in a.iter_mut() {
            let d = q * &row[x];
            row[y] -= d;
        }
        if let Some(v) = vinv {
            let add: Vec<BigInt> = v[y].iter().map(|e| q * e).collect();
            for (e, d) in v[x].iter_mut().zip(add) {
                *e += d;
            }
        }
    }

    for t in 0..rows.min(cols) {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !a[i][j].is_zero()
                        && pivot.is_none_or(|(pi, pj)| a[i][j].abs() < a[pi][pj].abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return (divisors, vinv);
            };
            a.swap(t, pi);
            swap_cols(&mut a, &mut vinv, t, pj);
            let mut clean = true;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    let pivot_row = a[t].clone();
                    for (e, p) in a[i].iter_mut().zip(&pivot_row) {
                        *e -= &q * p;
                    }
                    clean &= a[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    sub_col(&mut a, &mut vinv, t, j, &q);
                    clean &= a[t][j].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let p = a[t][t].clone();
            let offender = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_multiple_of(&p)));
            match offender {
                Some(i) => {
                    let r = a[i].clone();
                    for (e, v) in a[t].iter_mut().zip(r) {
                        *e += v;
                    }
                }
                None => {
                    divisors.push(p.abs());
                    break;
                }
            }
        }
    }
    (divisors, vinv)
}

/// Row Hermite normal form of a full-row-rank integer matrix.
pub fn hermite_normal_form(m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut a: IntMatrix = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Euclid on column c among rows r..
        loop {
            let nz: Vec<usize> = (r..rows).filter(|&i| !a[i][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| a[i][c].abs()).expect("nonempty");
            a.swap(r, p);
            if nz.len() == 1 {
                break;
            }
            for i in r + 1..rows {
                if !a[i][c].is_zero() {
                    let q = a[i][c].div_floor(&a[r][c]);
                    let pr = a[r].clone();
                    for (e, v) in a[i].iter_mut().zip(&pr) {
                        *e -= &q * v;
                    }
                }
            }
        }
        if a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            for e in a[r].iter_mut() {
                *e = -e.clone();
            }
        }
        for i in 0..r {
            let q = a[i][c].div_floor(&a[r][c]);
            if !q.is_zero() {
                let pr = a[r].clone();
                for (e, v) in a[i].iter_mut().zip(&pr) {
                    *e -= &q * v;
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Dimension of `{v : v ∧ w = 0}`; equals `grade(w)` exactly when a
/// nonzero `w` is decomposable.
fn annihilator_dim(w: &Multivector) -> usize {
    let m = w.dim();
    let k = w.grade();
    if k == m {
        return m;
    }
    let targets = combinations(m, k + 1);
    let images: Vec<Multivector> = (0..m)
        .map(|j| {
            Multivector::basis(MultiIndex::new(&[j], m).expect("in range"))
                .wedge(w)
                .expect("grade fits")
        })
        .collect();
    let mat = Matrix::from_fn(targets.len(), m, |r, j| images[j].coeff_of(&targets[r]));
    let (_, ker) = mat.kernel();
    ker.len()
}

/// The primitive subgroup represented by `w` (up to sign), if `w` is a
/// nonzero decomposable integral multivector with coprime coefficients.
pub fn subgroup_from_multivector(w: &Multivector) -> Option<IntegerSubgroup> {
    let m = w.dim();
    let k = w.grade();
    if w.is_zero() || k == 0 {
        return None;
    }
    let coeffs: Vec<BigInt> = w
        .terms()
        .map(|(_, c)| c.is_integer().then(|| c.to_integer()))
        .collect::<Option<_>>()?;
    if !gcd_all(&coeffs).is_one() {
        return None;
    }
    let rows: IntMatrix = if k == m {
        IntegerSubgroup::full(m).basis.clone()
    } else {
        let targets = combinations(m, k + 1);
        let images: Vec<Multivector> = (0..m)
            .map(|j| {
                Multivector::basis(MultiIndex::new(&[j], m).expect("in range"))
                    .wedge(w)
                    .expect("grade fits")
            })
            .collect();
        let mat = Matrix::from_fn(targets.len(), m, |r, j| images[j].coeff_of(&targets[r]));
        let (_, ker) = mat.kernel();
        if ker.len() != k {
            return None;
        }
        ker.iter().map(|v| integral_multiple(v)).collect()
    };
    let g = IntegerSubgroup::new(rows, m).ok()?.saturation().canonical();
    let rep = g.representing_multivector().ok()?;
    (rep == *w || rep == -w).then_some(g)
}

fn integral_multiple(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| (x * big(&l)).to_integer()).collect()
}

/// Default work budget for enumeration (candidate multivectors examined).
pub const DEFAULT_BUDGET: u128 = 50_000_000;

/// Every primitive rank-`k` subgroup of `Z^ambient` whose representing
/// multivector has sup-norm at most `height`, each exactly once, ordered
/// lexicographically by the sign-normalized Plücker coordinates (values
/// ascending from `-height`).
pub fn enumerate_primitive_subgroups(
    ambient: usize,
    k: usize,
    height: u64,
    budget: u128,
) -> Result<Vec<IntegerSubgroup>> {
    if k == 0 || k > ambient {
        return Err(Error::InvalidParameter(format!("rank {k} not in 1..={ambient}")));
    }
    if height == 0 {
        return Err(Error::InvalidParameter("height must be at least 1".into()));
    }
    if k == ambient {
        return Ok(vec![IntegerSubgroup::full(ambient)]);
    }
    let slots = combinations(ambient, k);
    let side = 2 * u128::from(height) + 1;
    let needed = u32::try_from(slots.len())
        .ok()
        .and_then(|e| side.checked_pow(e))
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let indices: Vec<MultiIndex> = slots
        .iter()
        .map(|s| MultiIndex::new(s, ambient).expect("valid subset"))
        .collect();
    let always_decomposable = k == 1 || k + 1 == ambient;
    let h = height as i64;
    let mut coords = vec![-h; slots.len()];
    let mut out = Vec::new();
    loop {
        let first = coords.iter().find(|&&c| c != 0);
        if first.is_some_and(|&c| c > 0) {
            let ints: Vec<BigInt> = coords.iter().map(|&c| BigInt::from(c)).collect();
            if gcd_all(&ints).is_one() {
                let w = Multivector::from_terms(
                    ambient,
                    k,
                    indices.iter().zip(&ints).map(|(i, c)| (*i, big(c))),
                )?;
                let candidate = if always_decomposable || annihilator_dim(&w) == k {
                    subgroup_from_multivector(&w)
                } else {
                    None
                };
                if let Some(g) = candidate {
                    out.push(g);
                }
            }
        }
        // odometer, last coordinate fastest
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

/// `Λ ⊂ Z^{2n}`: vectors `(p, 0, …, 0, q_1, …, q_n)` with zeros at the
/// starred positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaSpec {
    pub n: usize,
}

impl LambdaSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
        }
        Ok(LambdaSpec { n })
    }

    /// Position in `R^{2n}` of coordinate `j` of `Z^{n+1}` (`0 ↦ 0`,
    /// `i ↦ n - 1 + i`).
    pub fn position(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else {
            self.n - 1 + j
        }
    }

    pub fn embed(&self, v: &[i64]) -> Result<Vec<i64>> {
        check_dim(self.n + 1, v.len())?;
        let mut out = vec![0; 2 * self.n];
        for (j, x) in v.iter().enumerate() {
            out[self.position(j)] = *x;
        }
        Ok(out)
    }

    /// Transports a multivector on `R^{n+1}` to `R^{2n}` along the
    /// embedding. Positions are increasing, so no signs appear.
    pub fn embed_multivector(&self, w: &Multivector) -> Result<Multivector> {
        check_dim(self.n + 1, w.dim())?;
        let terms = w
            .terms()
            .map(|(i, c)| {
                let pos: Vec<usize> = i.indices().map(|j| self.position(j)).collect();
                Ok((MultiIndex::new(&pos, 2 * self.n)?, c.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Multivector::from_terms(2 * self.n, w.grade(), terms)
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        v.len() == 2 * self.n && (1..self.n).all(|i| v[i] == 0)
    }
}

/// Nonzero members of `Λ` with `max(|p|, ‖q‖_∞) <= height`, in
/// lexicographic order of `(p, q_1, …, q_n)`.
pub fn lambda_members(spec: &LambdaSpec, height: u64) -> Result<Vec<Vec<i64>>> {
    let h = i64::try_from(height).map_err(|_| Error::InvalidParameter("height too large".into()))?;
    let len = spec.n + 1;
    let side = (2 * height + 1) as u128;
    let count = side.checked_pow(len as u32).unwrap_or(u128::MAX);
    if count > DEFAULT_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget: DEFAULT_BUDGET,
        });
    }
    let mut v = vec![-h; len];
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    loop {
        if v.iter().any(|&c| c != 0) {
            out.push(spec.embed(&v)?);
        }
        let Some(pos) = (0..len).rev().find(|&i| v[i] < h) else {
            break;
        };
        v[pos] += 1;
        for c in v.iter_mut().skip(pos + 1) {
            *c = -h;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn primitivity_examples() {
        let g = IntegerSubgroup::from_i64(&[&[2, 0, 0]], 3).unwrap();
        assert!(!g.is_primitive());
        assert!(!g.is_primitive_by_minors());
        let g = IntegerSubgroup::from_i64(&[&[1, 0, 2], &[0, 1, 3]], 3).unwrap();
        assert_eq!(g.elementary_divisors(), vec![BigInt::from(1), BigInt::from(1)]);
        assert!(g.is_primitive());
        assert!(IntegerSubgroup::full(4).is_primitive());
        assert!(IntegerSubgroup::from_i64(&[&[1, 2], &[2, 4]], 2).is_err());
    }

    #[test]
    fn representing_multivector_example() {
        let g = IntegerSubgroup::from_i64(&[&[1, 0, 2], &[0, 1, 3]], 3).unwrap();
        let w = g.representing_multivector().unwrap();
        assert_eq!(w.to_string(), "grade 2; dim 3; {0,1}: 1/1; {0,2}: 3/1; {1,2}: -2/1");
        assert_eq!(w.sup_norm(), int(3));
    }

    #[test]
    fn smith_divisors_and_saturation() {
        let g = IntegerSubgroup::from_i64(&[&[2, 4, 4], &[-6, 6, 12]], 3).unwrap();
        assert_eq!(g.elementary_divisors(), vec![BigInt::from(2), BigInt::from(6)]);
        let s = g.saturation();
        assert!(s.is_primitive());
        let ws = s.normalized_multivector().unwrap();
        let wg = g.normalized_multivector().unwrap();
        // same line in the Grassmannian
        assert_eq!(wg, ws.scale(&int(12)));
    }

    #[test]
    fn hnf_is_basis_invariant() {
        let g = IntegerSubgroup::from_i64(&[&[1, 0, 2], &[0, 1, 3]], 3).unwrap();
        let u = vec![
            vec![BigInt::from(2), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(1)],
        ];
        let h = g.rebased(&u).unwrap();
        assert_eq!(g, h);
        assert_eq!(
            g.normalized_multivector().unwrap(),
            h.normalized_multivector().unwrap()
        );
    }

    #[test]
    fn enumeration_small_cases() {
        let rank1 = enumerate_primitive_subgroups(2, 1, 1, DEFAULT_BUDGET).unwrap();
        let shown: Vec<String> = rank1.iter().map(ToString::to_string).collect();
        assert_eq!(shown, vec!["[[0,1]]", "[[1,-1]]", "[[1,0]]", "[[1,1]]"]);
        assert_eq!(enumerate_primitive_subgroups(3, 1, 2, DEFAULT_BUDGET).unwrap().len(), 49);
        assert_eq!(enumerate_primitive_subgroups(3, 3, 1, DEFAULT_BUDGET).unwrap().len(), 1);
        assert!(matches!(
            enumerate_primitive_subgroups(5, 2, 50, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn lambda_membership() {
        let spec = LambdaSpec::new(2).unwrap();
        let members = lambda_members(&spec, 1).unwrap();
        assert_eq!(members.len(), 26);
        assert!(members.iter().all(|v| v[1] == 0 && spec.contains(v)));
        let spec3 = LambdaSpec::new(3).unwrap();
        assert_eq!(spec3.embed(&[5, 6, 7, 8]).unwrap(), vec![5, 0, 0, 6, 7, 8]);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
