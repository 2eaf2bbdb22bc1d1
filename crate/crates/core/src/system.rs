//! The linear boundary value problem `Phi' + p(x) Phi = f(x)`, `A Phi(a) + C Phi(c) = gamma`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};

pub type MatrixField = Arc<dyn Fn(f64) -> Result<DenseMatrix> + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub c: f64,
}

impl Interval {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && c.is_finite() && a < c) {
            return Err(Error::Invalid(format!("interval [{a}, {c}] is not valid")));
        }
        Ok(Interval { a, c })
    }

    pub fn len(&self) -> f64 {
        self.c - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.c
    }
}

#[derive(Clone)]
pub struct BvpSystem {
    pub n: usize,
    pub interval: Interval,
    pub coeff: MatrixField,
    pub rhs: VectorField,
    pub a: DenseMatrix,
    pub c: DenseMatrix,
    pub gamma: Vec<f64>,
}

impl fmt::Debug for BvpSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BvpSystem")
            .field("n", &self.n)
            .field("interval", &self.interval)
            .field("a", &self.a)
            .field("c", &self.c)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

impl BvpSystem {
    pub fn new(
        interval: Interval,
        coeff: MatrixField,
        rhs: VectorField,
        a: DenseMatrix,
        c: DenseMatrix,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || c.rows() != n || c.cols() != n || gamma.len() != n {
            return Err(Error::Dimension(format!(
                "boundary data must be {n}x{n}, {n}x{n} and length {n}"
            )));
        }
        if !a.is_finite() || !c.is_finite() || gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::Invalid("boundary data must be finite".into()));
        }
        Ok(BvpSystem {
            n,
            interval,
            coeff,
            rhs,
            a,
            c,
            gamma,
        })
    }

    /// Convenience constructor from plain closures.
    pub fn from_fns(
        interval: Interval,
        coeff: impl Fn(f64) -> DenseMatrix + Send + Sync + 'static,
        rhs: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        a: DenseMatrix,
        c: DenseMatrix,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            interval,
            Arc::new(move |x| Ok(coeff(x))),
            Arc::new(move |x| Ok(rhs(x))),
            a,
            c,
            gamma,
        )
    }

    pub fn p(&self, x: f64) -> Result<DenseMatrix> {
        let m = (self.coeff)(x)?;
        if m.rows() != self.n || m.cols() != self.n {
            return Err(Error::Dimension("coefficient matrix has the wrong shape".into()));
        }
        Ok(m)
    }

    pub fn f(&self, x: f64) -> Result<Vec<f64>> {
        let v = (self.rhs)(x)?;
        if v.len() != self.n {
            return Err(Error::Dimension("right-hand side has the wrong length".into()));
        }
        Ok(v)
    }

    /// Numerical rank of `[A | C]`; the BVP is solvable for every `gamma` only if it equals `n`.
    pub fn bc_rank(&self) -> usize {
        let n = self.n;
        let joined = DenseMatrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.a[(i, j)]
            } else {
                self.c[(i, j - n)]
            }
        });
        let s = singular_values(&joined).unwrap_or_default();
        let tol = s.first().copied().unwrap_or(0.0) * 1e-12 * (2 * n) as f64;
        s.iter().filter(|&&v| v > tol).count()
    }

    /// Same system with a different right-hand side.
    pub fn with_rhs(&self, rhs: VectorField) -> Self {
        BvpSystem {
            rhs,
            ..self.clone()
        }
    }

    pub fn with_gamma(&self, gamma: Vec<f64>) -> Self {
        BvpSystem {
            gamma,
            ..self.clone()
        }
    }
}
