//! Exact tools for Diophantine approximation on affine hyperplanes.
//!
//! Decisions are made in rational arithmetic ([`scalar::Rational`]); floats
//! serve as prefilters and in summaries. Long enumerations take a work
//! budget and fail with [`error::Error::BudgetExceeded`] instead of running
//! unbounded.
//!
//! ```
//! use diophlab::flows::Hyperplane;
//! use diophlab::measure::{hit_test, Side};
//! use diophlab::scalar::rat;
//!
//! let a = Hyperplane::new(vec![rat(1, 2), rat(1, 3)]).unwrap();
//! let w = hit_test(&[rat(0, 1)], &a, 1, &rat(1, 4), Side::Geq, 1_000_000).unwrap();
//! assert!(w.is_some());
//! ```

pub mod affine;
pub mod diophantine;
pub mod error;
pub mod exterior;
pub mod flows;
pub mod lattice;
pub mod linalg;
pub mod lp;
pub mod measure;
pub mod nondiv;
pub mod presets;
pub mod reduce;
pub mod sampling;
pub mod scalar;
pub mod serde_rational;
