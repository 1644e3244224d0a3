//! Exact linear programming: two-phase dense simplex with Bland's rule.
//!
//! Problems are `minimize c·x subject to A x <= b, x >= 0` over the
//! rationals; `b` may have any sign.

use num_traits::{One, Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn into_value(self) -> Result<Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Infeasible => Err(Error::Infeasible),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = col;
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if !row[j].is_zero() && !cost[b].is_zero() {
                r -= &cost[b] * &row[j];
            }
        }
        r
    }

    /// Minimizes `cost·x` using columns `< usable`; `false` when unbounded.
    fn optimize(&mut self, cost: &[Rational], usable: usize) -> bool {
        loop {
            // Bland: lowest-index improving column, lowest-index leaving row
            let Some(col) =
                (0..usable).find(|&j| !self.basis.contains(&j) && self.reduced_cost(cost, j).is_negative())
            else {
                return true;
            };
            let w = self.width;
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col].is_positive() {
                    let ratio = &row[w] / &row[col];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, col);
        }
    }
}

/// Solves `min c·x, A x <= b, x >= 0` exactly.
pub fn minimize(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Result<LpOutcome> {
    let nv = c.len();
    let m = a.len();
    check_dim(m, b.len())?;
    for row in a {
        check_dim(nv, row.len())?;
    }
    let na = b.iter().filter(|v| v.is_negative()).count();
    // columns: variables, slacks, artificials, then the right-hand side
    let width = nv + m + na;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = nv + m;
    for i in 0..m {
        let mut row = vec![Rational::zero(); width + 1];
        let flip = b[i].is_negative();
        let sign = if flip { -Rational::one() } else { Rational::one() };
        for j in 0..nv {
            row[j] = &a[i][j] * &sign;
        }
        row[nv + i] = sign.clone();
        row[width] = &b[i] * &sign;
        if flip {
            row[next_art] = Rational::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(nv + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, width };

    if na > 0 {
        let mut cost = vec![Rational::zero(); width];
        for v in cost.iter_mut().skip(nv + m) {
            *v = Rational::one();
        }
        t.optimize(&cost, width);
        let infeasibility: Rational = t
            .rows
            .iter()
            .zip(&t.basis)
            .filter(|(_, &b)| b >= nv + m)
            .map(|(row, _)| row[width].clone())
            .sum();
        if infeasibility.is_positive() {
            return Ok(LpOutcome::Infeasible);
        }
        // drive zero-level artificials out of the basis
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= nv + m {
                match (0..nv + m).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Rational::zero(); width];
    cost[..nv].clone_from_slice(c);
    if !t.optimize(&cost, nv + m) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![Rational::zero(); nv];
    for (row, &bcol) in t.rows.iter().zip(&t.basis) {
        if bcol < nv {
            x[bcol] = row[width].clone();
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { value, x })
}

/// Like [`minimize`] with every variable free and equality constraints
/// `E x = f` in addition; variables are split as `x = x⁺ - x⁻`.
pub fn minimize_free(
    c: &[Rational],
    a: &[Vec<Rational>],
    b: &[Rational],
    e: &[Vec<Rational>],
    f: &[Rational],
) -> Result<LpOutcome> {
    let nv = c.len();
    check_dim(e.len(), f.len())?;
    let split = |row: &[Rational]| -> Vec<Rational> { row.iter().cloned().chain(row.iter().map(|v| -v)).collect() };
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs = Vec::new();
    for (row, bi) in a.iter().zip(b) {
        check_dim(nv, row.len())?;
        rows.push(split(row));
        rhs.push(bi.clone());
    }
    for (row, fi) in e.iter().zip(f) {
        check_dim(nv, row.len())?;
        let s = split(row);
        rows.push(s.iter().map(|v| -v).collect());
        rows.push(s);
        rhs.push(-fi);
        rhs.push(fi.clone());
    }
    match minimize(&split(c), &rows, &rhs)? {
        LpOutcome::Optimal { value, x } => Ok(LpOutcome::Optimal {
            value,
            x: (0..nv).map(|j| &x[j] - &x[nv + j]).collect(),
        }),
        other => Ok(other),
    }
}
