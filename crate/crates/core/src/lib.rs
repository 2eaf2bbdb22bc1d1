//! Solver for linear two-point boundary value systems
//!
//! ```text
//! Phi'(x) + p(x) Phi(x) = f(x),   A Phi(a) + C Phi(c) = gamma
//! ```
//!
//! The problem is rewritten as a second-kind Fredholm integral equation for a
//! density `sigma`, with `Phi = int G0(x, t) sigma(t) dt` for a background
//! Green's function `G0`. The equation is discretized with Chebyshev Nystrom
//! panels and solved by a hierarchical direct method whose cost is linear in the
//! number of panels. Degenerate boundary conditions (`det(A + C) = 0`) are
//! handled either by a constant-matrix background or by an automatically
//! constructed path transform `T(x)`.

pub mod background;
pub mod chebyshev;
pub mod error;
pub mod exprparse;
pub mod harness;
pub mod linalg;
pub mod solver;
pub mod system;
pub mod transform;

pub use background::{BackgroundGreen, BackgroundKind};
pub use chebyshev::ChebPanel;
pub use error::{Error, Result, Stage};
pub use linalg::DenseMatrix;
pub use solver::{solve, Formulation, Grid, Solution};
pub use system::{BvpSystem, Interval};
pub use transform::{PathTransform, Transform};
