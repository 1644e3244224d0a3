//! Small dense matrices over a [`Scalar`] field.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn diagonal(entries: &[S]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.len())?;
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn try_mul(&self, rhs: &Matrix<S>) -> Result<Matrix<S>> {
        check_dim(self.cols, rhs.rows)?;
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| {
                acc + self[(i, k)].clone() * rhs[(k, j)].clone()
            })
        }))
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[S]) -> Result<Vec<S>> {
        check_dim(self.rows, v.len())?;
        Ok((0..self.cols)
            .map(|j| {
                v.iter()
                    .enumerate()
                    .fold(S::zero(), |acc, (i, vi)| acc + vi.clone() * self[(i, j)].clone())
            })
            .collect())
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[S]) -> Result<Vec<S>> {
        check_dim(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// Gaussian elimination. Pivots on the entry of largest magnitude, which
    /// is harmless on the exact path and keeps the float mirror stable.
    pub fn determinant(&self) -> Result<S> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[(r, col)].is_zero())
                .max_by(|&x, &y| {
                    a[(x, col)]
                        .abs_value()
                        .partial_cmp(&a[(y, col)].abs_value())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            let Some(p) = pivot else {
                return Ok(S::zero());
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pv = a[(col, col)].clone();
            det = det * pv.clone();
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone() / pv.clone();
                for c in col..n {
                    let v = a[(r, c)].clone() - factor.clone() * a[(col, c)].clone();
                    a[(r, c)] = v;
                }
            }
        }
        Ok(det)
    }

    /// Rank and a basis of the right null space `{v : M v = 0}`.
    pub fn kernel(&self) -> (usize, Vec<Vec<S>>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !a[(r, col)].is_zero()) else {
                continue;
            };
            a.swap_rows(p, row);
            let pv = a[(row, col)].clone();
            for c in 0..self.cols {
                let v = a[(row, c)].clone() / pv.clone();
                a[(row, c)] = v;
            }
            for r in 0..self.rows {
                if r == row || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for c in 0..self.cols {
                    let v = a[(r, c)].clone() - factor.clone() * a[(row, c)].clone();
                    a[(r, c)] = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        let rank = pivots.len();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let basis = free
            .iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -a[(r, f)].clone();
                }
                v
            })
            .collect();
        (rank, basis)
    }

    pub fn rank(&self) -> usize {
        self.kernel().0
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;

    /// Panics on mismatched shapes; use [`Matrix::try_mul`] otherwise.
    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        self.try_mul(rhs).expect("matrix shapes agree")
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn determinant_small() {
        assert_eq!(m(&[&[2, 0], &[0, 3]]).determinant().unwrap(), int(6));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant().unwrap(), int(-1));
        assert_eq!(
            m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]).determinant().unwrap(),
            int(-3)
        );
        assert_eq!(m(&[&[1, 2], &[2, 4]]).determinant().unwrap(), int(0));
    }

    #[test]
    fn kernel_of_rank_one() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        let (rank, ker) = a.kernel();
        assert_eq!(rank, 1);
        assert_eq!(ker.len(), 2);
        for v in ker {
            assert!(a.apply(&v).unwrap().iter().all(|x| *x == int(0)));
        }
    }

    #[test]
    fn product_and_row_vector() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(&a * &b, m(&[&[2, 1], &[4, 3]]));
        assert_eq!(a.left_apply(&[int(1), rat(1, 2)]).unwrap(), vec![rat(5, 2), int(4)]);
        assert!(a.try_mul(&m(&[&[1, 2, 3]])).is_err());
    }
}
