//! The diagonal flows `D(ε,t)`, `D̂(ε,t)` and the unipotent matrices `u_x`,
//! `û_x` attached to a hyperplane, with `x` kept symbolic.
//!
//! Basis of `R^{2n}` in matrix order: `e_0, e_{*1}, …, e_{*(n-1)}, e_1, …,
//! e_n`, i.e. position `0`, `i`, and `n - 1 + i` respectively. The reduced
//! space `R^{n+1}` uses `e_0, e_1, …, e_n` at positions `0..=n`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::affine::{AffineForm, AffineMatrix, AffineMultivector};
use crate::error::{Error, Result};
use crate::exterior::Multivector;
use crate::linalg::Matrix;
use crate::scalar::{pow2, Rational, Scalar};

/// The hyperplane `y_n = α_0 + α_1 y_1 + … + α_{n-1} y_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    n: usize,
    alpha: Vec<Rational>,
    /// Bound on `|α_i - target_i|` when the coefficients approximate
    /// irrationals; `None` when they are exact.
    pub precision: Option<Rational>,
}

impl Hyperplane {
    pub fn new(alpha: Vec<Rational>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a hyperplane needs n >= 2 coefficients, got {}",
                alpha.len()
            )));
        }
        Ok(Hyperplane {
            n: alpha.len(),
            alpha,
            precision: None,
        })
    }

    pub fn with_precision(mut self, eta: Rational) -> Self {
        self.precision = Some(eta);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(α_0, …, α_{n-1})`.
    pub fn alpha(&self) -> &[Rational] {
        &self.alpha
    }

    /// `Ã = (α_1, …, α_{n-1})`.
    pub fn alpha_tilde(&self) -> &[Rational] {
        &self.alpha[1..]
    }

    /// Dimension `n - 1` of the parameter `x`.
    pub fn param_dim(&self) -> usize {
        self.n - 1
    }

    /// `x̃A = α_0 + Σ α_i x_i` as an affine form.
    pub fn height_form(&self) -> AffineForm {
        AffineForm::new(self.alpha[0].clone(), self.alpha_tilde().to_vec())
    }

    /// `(f̂_1, …, f̂_n)` with `f̂_i = x_i` for `i < n` and `f̂_n = x̃A`.
    pub fn f_hat(&self) -> Vec<AffineForm> {
        let d = self.param_dim();
        (0..d)
            .map(|i| AffineForm::coordinate(i, d))
            .chain(std::iter::once(self.height_form()))
            .collect()
    }
}

/// Parameters of `D(ε,t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub epsilon: Rational,
    pub t: u32,
    pub n: usize,
}

impl FlowParams {
    /// Requires `0 < ε < 1`.
    pub fn new(epsilon: Rational, t: u32, n: usize) -> Result<Self> {
        if !(epsilon > Rational::zero() && epsilon < Rational::one()) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        Self::unchecked(epsilon, t, n)
    }

    /// Also admits `ε = 1`, which makes `D(1, 0)` the identity.
    pub fn allowing_unit_epsilon(epsilon: Rational, t: u32, n: usize) -> Result<Self> {
        if !(epsilon > Rational::zero() && epsilon <= Rational::one()) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1], got {epsilon}")));
        }
        Self::unchecked(epsilon, t, n)
    }

    fn unchecked(epsilon: Rational, t: u32, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
        }
        Ok(FlowParams { epsilon, t, n })
    }

    /// Diagonal of `D(ε,t)`: `ε 2^{nt}`, then `n-1` copies of `ε`, then `n`
    /// copies of `ε 2^{-t}`.
    pub fn d_entries(&self) -> Vec<Rational> {
        let n = self.n;
        let t = i64::from(self.t);
        let mut d = vec![&self.epsilon * pow2(n as i64 * t)];
        d.extend(std::iter::repeat_n(self.epsilon.clone(), n - 1));
        d.extend(std::iter::repeat_n(&self.epsilon * pow2(-t), n));
        d
    }

    /// Diagonal of `D̂(ε,t)`: `ε 2^{nt}` then `n` copies of `ε 2^{-t}`.
    pub fn d_hat_entries(&self) -> Vec<Rational> {
        let n = self.n;
        let t = i64::from(self.t);
        let mut d = vec![&self.epsilon * pow2(n as i64 * t)];
        d.extend(std::iter::repeat_n(&self.epsilon * pow2(-t), n));
        d
    }
}

/// Label of a standard basis vector of `R^{2n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    E0,
    /// `e_{*i}`, `1 <= i <= n-1`.
    EStar(usize),
    /// `e_i`, `1 <= i <= n`.
    E(usize),
}

impl BasisLabel {
    pub fn position(self, n: usize) -> Result<usize> {
        match self {
            BasisLabel::E0 => Ok(0),
            BasisLabel::EStar(i) if (1..n).contains(&i) => Ok(i),
            BasisLabel::E(i) if (1..=n).contains(&i) => Ok(n - 1 + i),
            other => Err(Error::InvalidParameter(format!("{other} is not a basis label for n = {n}"))),
        }
    }

    pub fn from_position(pos: usize, n: usize) -> Result<Self> {
        match pos {
            0 => Ok(BasisLabel::E0),
            p if p < n => Ok(BasisLabel::EStar(p)),
            p if p < 2 * n => Ok(BasisLabel::E(p + 1 - n)),
            p => Err(Error::InvalidParameter(format!("position {p} out of range for n = {n}"))),
        }
    }

    /// Labels in matrix order.
    pub fn all(n: usize) -> Vec<BasisLabel> {
        (0..2 * n)
            .map(|p| Self::from_position(p, n).expect("in range"))
            .collect()
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::E0 => f.write_str("e0"),
            BasisLabel::EStar(i) => write!(f, "e*{i}"),
            BasisLabel::E(i) => write!(f, "e{i}"),
        }
    }
}

pub fn build_d(params: &FlowParams) -> Matrix<Rational> {
    Matrix::diagonal(&params.d_entries())
}

pub fn build_d_hat(params: &FlowParams) -> Matrix<Rational> {
    Matrix::diagonal(&params.d_hat_entries())
}

/// `u_x` as a `2n × 2n` matrix of affine forms in `x ∈ R^{n-1}`.
pub fn build_u(a: &Hyperplane) -> AffineMatrix {
    let n = a.n();
    let d = a.param_dim();
    let mut u = AffineMatrix::identity(2 * n, d);
    let konst = |v: Rational| AffineForm::constant(v, d);
    for i in 1..n {
        let e_i = n - 1 + i;
        u.set(0, e_i, AffineForm::coordinate(i - 1, d)).expect("dims");
        u.set(i, e_i, konst(Rational::one())).expect("dims");
        u.set(i, 2 * n - 1, konst(a.alpha()[i].clone())).expect("dims");
    }
    u.set(0, 2 * n - 1, a.height_form()).expect("dims");
    u
}

/// `û_x = [[1, f̂(x)], [0, I_n]]`.
pub fn build_u_hat(a: &Hyperplane) -> AffineMatrix {
    let n = a.n();
    let mut u = AffineMatrix::identity(n + 1, a.param_dim());
    for (i, f) in a.f_hat().into_iter().enumerate() {
        u.set(0, i + 1, f).expect("dims");
    }
    u
}

/// `P = (I_n | A)` with `A` the column `(α_0, …, α_{n-1})`.
pub fn build_p(a: &Hyperplane) -> Matrix<Rational> {
    let n = a.n();
    Matrix::from_fn(n, n + 1, |i, j| {
        if j == n {
            a.alpha()[i].clone()
        } else if i == j {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// Which space the orbit is computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// `D(ε,t) u_x` on `R^{2n}`.
    Full,
    /// `D̂(ε,t) û_x` on `R^{n+1}`.
    Projected,
}

impl Space {
    pub fn ambient_dim(self, n: usize) -> usize {
        match self {
            Space::Full => 2 * n,
            Space::Projected => n + 1,
        }
    }
}

/// `x ↦ D(ε,t) u_x w`, coefficient-wise affine in `x`.
pub fn flow_orbit(
    w: &Multivector,
    a: &Hyperplane,
    params: &FlowParams,
    space: Space,
) -> Result<AffineMultivector> {
    if params.n != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: params.n,
        });
    }
    let (u, diag) = match space {
        Space::Full => (build_u(a), params.d_entries()),
        Space::Projected => (build_u_hat(a), params.d_hat_entries()),
    };
    if w.dim() != u.rows() {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            found: w.dim(),
        });
    }
    u.apply(w)?.scale_diagonal(&diag)
}

/// The specialized matrix `D(ε,t) u_x` (or `D̂ û_x`) at a point `x`.
pub fn flow_matrix_at(
    a: &Hyperplane,
    params: &FlowParams,
    space: Space,
    x: &[Rational],
) -> Result<Matrix<Rational>> {
    let (u, d) = match space {
        Space::Full => (build_u(a), build_d(params)),
        Space::Projected => (build_u_hat(a), build_d_hat(params)),
    };
    d.try_mul(&u.specialize(x)?)
}

/// Float mirror of `D(ε,t) u_x` at `x`, for cheap screening.
pub fn flow_matrix_at_f64(a: &Hyperplane, params: &FlowParams, x: &[f64]) -> Result<Matrix<f64>> {
    let u = build_u(a);
    let d = build_d(params).map(|v| v.to_f64());
    let mut m = Matrix::<f64>::zeros(u.rows(), u.cols());
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            let f = u.get(i, j);
            let g = AffineForm::new(f.constant.to_f64(), f.gradient.iter().map(Scalar::to_f64).collect());
            m[(i, j)] = g.eval(x)?;
        }
    }
    d.try_mul(&m)
}
