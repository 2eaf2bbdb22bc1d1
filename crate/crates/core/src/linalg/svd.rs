//! Singular values by Householder bidiagonalization followed by implicit
//! shifted QR sweeps on the bidiagonal (Golub-Kahan / Golub-Reinsch).

use super::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 75;

/// All singular values of `m`, in decreasing order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let a = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (mut d, mut e) = bidiagonalize(a);
    bidiagonal_qr(&mut d, &mut e)?;
    d.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(d)
}

/// 2-norm condition number `sigma_max / sigma_min`; `+inf` for rank-deficient input.
pub fn cond2(m: &DenseMatrix) -> f64 {
    match singular_values(m) {
        Ok(s) => {
            let smin = *s.last().unwrap();
            if smin == 0.0 {
                f64::INFINITY
            } else {
                s[0] / smin
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Reduces `a` (rows >= cols) to upper bidiagonal form. Returns the diagonal and
/// the superdiagonal, the latter shifted so `e[i]` couples `d[i-1]` and `d[i]`
/// (`e[0] = 0`).
fn bidiagonalize(mut a: DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let m = a.rows();
    let n = a.cols();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; m.max(n)];
    let mut w = vec![0.0; m.max(n)];

    for k in 0..n {
        // Left reflector zeroes a[k+1.., k].
        let mut norm2 = 0.0;
        for i in k..m {
            let x = a[(i, k)];
            norm2 += x * x;
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            d[k] = 0.0;
        } else {
            let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
            for i in k..m {
                v[i] = a[(i, k)];
            }
            v[k] -= alpha;
            let vnorm2 = norm2 - a[(k, k)] * a[(k, k)] + v[k] * v[k];
            let beta = 2.0 / vnorm2;
            // w = v^T a[k.., k+1..]
            let wtail = &mut w[k + 1..n];
            wtail.iter_mut().for_each(|x| *x = 0.0);
            for i in k..m {
                let vi = v[i];
                if vi != 0.0 {
                    for (wj, &aij) in wtail.iter_mut().zip(&a.row(i)[k + 1..]) {
                        *wj += vi * aij;
                    }
                }
            }
            for i in k..m {
                let s = beta * v[i];
                if s != 0.0 {
                    for (aij, &wj) in a.row_mut(i)[k + 1..].iter_mut().zip(wtail.iter()) {
                        *aij -= s * wj;
                    }
                }
            }
            d[k] = alpha;
        }

        // Right reflector zeroes a[k, k+2..].
        if k + 1 < n {
            let row = &a.row(k)[k + 1..];
            let norm2: f64 = row.iter().map(|x| x * x).sum();
            let norm = norm2.sqrt();
            if norm == 0.0 {
                e[k + 1] = 0.0;
            } else {
                let first = row[0];
                let alpha = if first > 0.0 { -norm } else { norm };
                let u = &mut v[k + 1..n];
                u.copy_from_slice(row);
                u[0] -= alpha;
                let unorm2 = norm2 - first * first + u[0] * u[0];
                let beta = 2.0 / unorm2;
                for i in k + 1..m {
                    let r = &mut a.row_mut(i)[k + 1..];
                    let dot: f64 = r.iter().zip(u.iter()).map(|(x, y)| x * y).sum();
                    let s = beta * dot;
                    if s != 0.0 {
                        for (x, &y) in r.iter_mut().zip(u.iter()) {
                            *x -= s * y;
                        }
                    }
                }
                e[k + 1] = alpha;
            }
        }
    }
    (d, e)
}

/// Diagonalizes the bidiagonal `(d, e)` in place; on return `d` holds the
/// (nonnegative) singular values.
fn bidiagonal_qr(w: &mut [f64], rv1: &mut [f64]) -> Result<()> {
    let n = w.len();
    if n == 0 {
        return Ok(());
    }
    let anorm = w
        .iter()
        .zip(rv1.iter())
        .fold(0.0f64, |mx, (a, b)| mx.max(a.abs() + b.abs()));
    let tol = f64::EPSILON * anorm;

    for k in (0..n).rev() {
        let mut its = 0;
        loop {
            // Find l such that rv1[l] is negligible; flag records whether w[l-1] is.
            let mut l = k;
            let mut cancel = true;
            loop {
                if rv1[l].abs() <= tol {
                    cancel = false;
                    break;
                }
                if w[l - 1].abs() <= tol {
                    break;
                }
                l -= 1;
            }
            if cancel {
                // w[l-1] negligible: chase rv1[l] out with Givens rotations.
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if f.abs() <= tol {
                        break;
                    }
                    let g = w[i];
                    let h = f.hypot(g);
                    w[i] = h;
                    c = g / h;
                    s = -f / h;
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                }
                break;
            }
            its += 1;
            if its > MAX_SWEEPS {
                return Err(Error::Invalid("bidiagonal QR did not converge".into()));
            }
            // Wilkinson-type shift from the trailing 2x2.
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + g.copysign(f))) - h)) / x;
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = f.hypot(h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                z = f.hypot(h);
                w[j] = z;
                if z != 0.0 {
                    c = f / z;
                    s = h / z;
                }
                f = c * g + s * y;
                x = c * y - s * g;
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        assert!((cond2(&DenseMatrix::identity(4)) - 1.0).abs() < 1e-15);
        let c = cond2(&DenseMatrix::from_diag(&[10.0, 0.1]));
        assert!((c - 100.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn singular_is_infinite() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        assert!(cond2(&m).is_infinite());
    }

    #[test]
    fn known_2x2() {
        // [[1, -1], [0, -1]] has singular values golden ratio and its inverse.
        let m = DenseMatrix::from_rows(&[[1.0, -1.0], [0.0, -1.0]]);
        let s = singular_values(&m).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s[0] - phi).abs() < 1e-15 && (s[1] - 1.0 / phi).abs() < 1e-15, "{s:?}");
    }

    #[test]
    fn rectangular_matches_gram_eigenvalues() {
        // For a 3x2 matrix compare with the closed-form eigenvalues of the 2x2 Gram matrix.
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let g = &m.transpose() * &m;
        let tr = g[(0, 0)] + g[(1, 1)];
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let disc = (tr * tr / 4.0 - det).sqrt();
        let want = [(tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).sqrt()];
        for mm in [m.clone(), m.transpose()] {
            let s = singular_values(&mm).unwrap();
            assert_eq!(s.len(), 2);
            for (a, b) in s.iter().zip(want) {
                assert!(((a - b) / b).abs() < 1e-12, "{s:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn frobenius_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DenseMatrix::from_fn(40, 30, |_, _| rng.gen_range(-1.0..1.0));
        let s = singular_values(&m).unwrap();
        let sum2: f64 = s.iter().map(|x| x * x).sum();
        assert!((sum2 - m.norm_fro().powi(2)).abs() < 1e-11 * sum2);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }
}
