use super::DenseMatrix;
use crate::error::{Error, Result};

const BLOCK: usize = 48;
const TILE: usize = 512;

/// Default pivot threshold, relative to the largest entry magnitude.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-13;

/// LU factors with partial pivoting, `P A = L U`, packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
    threshold: f64,
}

impl LuFactors {
    /// Factors `m` without rejecting small pivots. Only an exactly zero pivot fails.
    pub fn factor_unchecked(m: &DenseMatrix, rel_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let threshold = rel_tol * m.max_abs();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;

        // Right-looking blocked elimination: factor a column panel, then
        // update the trailing rows with one block of row operations.
        let data = lu.as_mut_slice();
        let mut k0 = 0;
        while k0 < n {
            let k1 = (k0 + BLOCK).min(n);
            for k in k0..k1 {
                let (p, pmax) = (k..n)
                    .map(|i| (i, data[i * n + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                min_pivot = min_pivot.min(pmax);
                if pmax == 0.0 {
                    return Err(Error::SingularMatrix {
                        pivot: 0.0,
                        threshold,
                    });
                }
                if p != k {
                    let (head, tail) = data.split_at_mut(p * n);
                    head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
                    perm.swap(p, k);
                }
                let pivot = data[k * n + k];
                let (upper, lower) = data.split_at_mut((k + 1) * n);
                let prow = &upper[k * n + k + 1..k * n + k1];
                for row in lower.chunks_exact_mut(n) {
                    let l = row[k] / pivot;
                    row[k] = l;
                    if l != 0.0 {
                        for (x, &u) in row[k + 1..k1].iter_mut().zip(prow) {
                            *x -= l * u;
                        }
                    }
                }
            }
            if k1 == n {
                break;
            }
            // U12 = L11^{-1} A12
            for r in k0 + 1..k1 {
                let (done, rest) = data.split_at_mut(r * n);
                let row = &mut rest[..n];
                for j in k0..r {
                    let l = row[j];
                    if l != 0.0 {
                        for (x, &u) in row[k1..].iter_mut().zip(&done[j * n + k1..(j + 1) * n]) {
                            *x -= l * u;
                        }
                    }
                }
            }
            // A22 -= L21 U12, tiled over columns to keep U12 in cache
            let (top, bottom) = data.split_at_mut(k1 * n);
            let u12 = &top[k0 * n..];
            let mut c0 = k1;
            while c0 < n {
                let c1 = (c0 + TILE).min(n);
                for row in bottom.chunks_exact_mut(n) {
                    let (lpart, rpart) = row.split_at_mut(k1);
                    let target = &mut rpart[c0 - k1..c1 - k1];
                    for (j, &l) in lpart[k0..k1].iter().enumerate() {
                        if l != 0.0 {
                            let src = &u12[j * n + c0..j * n + c1];
                            for (x, &u) in target.iter_mut().zip(src) {
                                *x -= l * u;
                            }
                        }
                    }
                }
                c0 = c1;
            }
            k0 = k1;
        }
        Ok(LuFactors {
            lu,
            perm,
            min_pivot,
            threshold,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// True when some pivot fell below the relative threshold.
    pub fn is_singular(&self) -> bool {
        self.min_pivot < self.threshold
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `M^T x = b`.
    pub fn solve_transposed_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        // M^T = U^T L^T P
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(j, i)] * z[j]).sum();
            z[i] = (z[i] - s) / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(j, i)] * z[j]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// Solves `M X = B` for a block of right-hand sides.
    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "right-hand side rows");
        let k = b.cols();
        let mut x = DenseMatrix::zeros(n, k);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        let data = x.as_mut_slice();
        for i in 0..n {
            let (done, rest) = data.split_at_mut(i * k);
            let xi = &mut rest[..k];
            for (j, &l) in self.lu.row(i)[..i].iter().enumerate() {
                if l != 0.0 {
                    for (a, &b) in xi.iter_mut().zip(&done[j * k..(j + 1) * k]) {
                        *a -= l * b;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * k);
            let xi = &mut head[i * k..];
            let row = self.lu.row(i);
            for (off, &u) in row[i + 1..].iter().enumerate() {
                if u != 0.0 {
                    let xj = &tail[off * k..(off + 1) * k];
                    for (a, &b) in xi.iter_mut().zip(xj) {
                        *a -= u * b;
                    }
                }
            }
            let d = row[i];
            for a in xi.iter_mut() {
                *a /= d;
            }
        }
        x
    }

    /// Explicit inverse; used only for the small n x n constants.
    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.dim()))
    }
}

/// Factors `m` and fails with `SingularMatrix` when a pivot is below
/// `DEFAULT_SINGULAR_TOL * max|m|`.
pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactors> {
    lu_factor_with_tol(m, DEFAULT_SINGULAR_TOL)
}

pub fn lu_factor_with_tol(m: &DenseMatrix, rel_tol: f64) -> Result<LuFactors> {
    let f = LuFactors::factor_unchecked(m, rel_tol)?;
    if f.is_singular() {
        return Err(Error::SingularMatrix {
            pivot: f.min_pivot,
            threshold: f.threshold,
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let f = lu_factor(&DenseMatrix::identity(3)).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(f.solve(&b), b);
    }

    #[test]
    fn permutation_solve() {
        let m = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let f = lu_factor(&m).unwrap();
        assert_eq!(f.solve_vec(&[1.0, 2.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn random_recovers_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = DenseMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        let x = DenseMatrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
        let b = &m * &x;
        let got = lu_factor(&m).unwrap().solve(&b);
        let err = got.max_abs_diff(&x) / x.max_abs();
        assert!(err < 1e-12, "{err}");
        let v = lu_factor(&m).unwrap().solve_vec(&b.column(1));
        for (a, e) in v.iter().zip(x.column(1)) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(lu_factor(&m), Err(Error::SingularMatrix { .. })));
        let m = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1e-15]]);
        assert!(matches!(lu_factor(&m), Err(Error::SingularMatrix { .. })));
        let f = LuFactors::factor_unchecked(&m, DEFAULT_SINGULAR_TOL).unwrap();
        assert!(f.is_singular());
    }

    #[test]
    fn non_square_rejected() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(matches!(lu_factor(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn blocked_sizes_and_transposed_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [BLOCK - 1, BLOCK, BLOCK + 1, 3 * BLOCK + 5, TILE + 7] {
            let m = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = lu_factor(&m).unwrap();
            let got = f.solve_vec(&m.matvec(&x));
            let err = got.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n}: {err}");
            let got = f.solve_transposed_vec(&m.matvec_transposed(&x));
            let err = got.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "transposed n={n}: {err}");
        }
    }
}
