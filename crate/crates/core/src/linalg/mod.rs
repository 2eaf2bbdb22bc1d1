//! Dense real linear algebra: LU with partial pivoting, the matrix
//! exponential, and SVD-based condition numbers.

mod expm;
mod lu;
mod matrix;
mod svd;

pub use expm::mat_exp;
pub use lu::{lu_factor, lu_factor_with_tol, LuFactors, DEFAULT_SINGULAR_TOL};
pub use matrix::DenseMatrix;
pub use svd::{cond2, singular_values};
