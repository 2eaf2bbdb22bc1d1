//! Reference computations for the integration tests. Nothing here goes
//! through the library's Chebyshev, LU or tree code.
#![allow(dead_code)]

pub mod elimination;

use std::f64::consts::PI;

use greenbvp::background::BackgroundGreen;
use greenbvp::{BvpSystem, DenseMatrix, Grid};

/// Gauss-Legendre nodes and weights on [-1, 1], Newton on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// First-kind Chebyshev points on [-1, 1].
pub fn cheb_points(p: usize) -> Vec<f64> {
    (0..p).map(|j| ((2 * j + 1) as f64 * PI / (2 * p) as f64).cos()).collect()
}

/// Lagrange basis polynomial `l_m` through `nodes`, evaluated at `s`.
pub fn lagrange(nodes: &[f64], m: usize, s: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != m)
        .map(|(_, &t)| (s - t) / (nodes[m] - t))
        .product()
}

/// `int_{lo}^{hi} l_m` with enough Gauss points to be exact.
pub fn integrate_lagrange(nodes: &[f64], m: usize, lo: f64, hi: f64) -> f64 {
    let (gx, gw) = gauss_legendre(nodes.len() / 2 + 2);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    gx.iter()
        .zip(&gw)
        .map(|(x, w)| w * half * lagrange(nodes, m, mid + half * x))
        .sum()
}

/// Reference-interval integration matrices: `(left[j][m], right[j][m], weights[m])`.
pub fn integration_matrices(p: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let t = cheb_points(p);
    let left = (0..p)
        .map(|j| (0..p).map(|m| integrate_lagrange(&t, m, -1.0, t[j])).collect())
        .collect();
    let right = (0..p)
        .map(|j| (0..p).map(|m| integrate_lagrange(&t, m, t[j], 1.0)).collect())
        .collect();
    let w = (0..p).map(|m| integrate_lagrange(&t, m, -1.0, 1.0)).collect();
    (left, right, w)
}

/// Gaussian elimination with partial pivoting on a row-major copy.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            if l != 0.0 {
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Dense Nystrom discretization of `sigma + (p - p0) int G0 sigma = f` on `grid`.
pub struct DenseOracle {
    pub nodes: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// `(p - p0) Gamma0` at every node, stacked node-major (`N n x n`).
    pub psi: Vec<Vec<f64>>,
}

impl DenseOracle {
    pub fn new(sys: &BvpSystem, bg: &BackgroundGreen, grid: &Grid) -> Self {
        let n = sys.n;
        let p = grid.order();
        let (left, right, w) = integration_matrices(p);
        let t = cheb_points(p);
        let p0 = bg.p0();
        let mut xs = Vec::new();
        let mut hs = Vec::new();
        for win in grid.breakpoints().windows(2) {
            let (a, c) = (win[0], win[1]);
            for &s in &t {
                xs.push(0.5 * (a + c) + 0.5 * (c - a) * s);
                hs.push(0.5 * (c - a));
            }
        }
        let total = xs.len() * n;
        let g0: Vec<DenseMatrix> = xs.iter().map(|&x| bg.gamma0(x).unwrap()).collect();
        let nus: Vec<(DenseMatrix, DenseMatrix)> = xs.iter().map(|&x| bg.nu_factors(x).unwrap()).collect();
        let mut a = vec![vec![0.0; total]; total];
        let mut rhs = vec![0.0; total];
        let mut psi_rows = vec![vec![0.0; n]; total];
        for (i, &x) in xs.iter().enumerate() {
            let pt = &sys.p(x).unwrap() - &p0;
            let psi = &pt * &g0[i];
            let f = sys.f(x).unwrap();
            let (pi, ji) = (i / p, i % p);
            for r in 0..n {
                a[i * n + r][i * n + r] += 1.0;
                rhs[i * n + r] = f[r];
                psi_rows[i * n + r] = psi.row(r).to_vec();
            }
            for k in 0..xs.len() {
                let (pk, mk) = (k / p, k % p);
                let h = hs[k];
                let (wl, wr) = if pk < pi {
                    (h * w[mk], 0.0)
                } else if pk > pi {
                    (0.0, h * w[mk])
                } else {
                    (h * left[ji][mk], h * right[ji][mk])
                };
                let (nl, nr) = &nus[k];
                let kern = &(&psi * nl).scale(wl) + &(&psi * nr).scale(wr);
                for r in 0..n {
                    for s in 0..n {
                        a[i * n + r][k * n + s] += kern[(r, s)];
                    }
                }
            }
        }
        DenseOracle {
            nodes: xs,
            matrix: a,
            rhs,
            psi: psi_rows,
        }
    }

    pub fn sigma(&self) -> Vec<f64> {
        gauss_solve(self.matrix.clone(), self.rhs.clone())
    }

    /// `P^{-1} Psi`, as `n` columns of length `N n`.
    pub fn varphi(&self) -> Vec<Vec<f64>> {
        let n = self.psi[0].len();
        (0..n)
            .map(|s| gauss_solve(self.matrix.clone(), self.psi.iter().map(|r| r[s]).collect()))
            .collect()
    }
}

pub fn dense_sigma(sys: &BvpSystem, bg: &BackgroundGreen, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let o = DenseOracle::new(sys, bg, grid);
    let s = o.sigma();
    (o.nodes, s)
}

pub fn inv2(m: &DenseMatrix) -> DenseMatrix {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    DenseMatrix::from_rows(&[[m[(1, 1)] / det, -m[(0, 1)] / det], [-m[(1, 0)] / det, m[(0, 0)] / det]])
}

/// Adaptive Simpson quadrature to an absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Fourth-order central difference of a vector function.
pub fn derivative(f: &dyn Fn(f64) -> Vec<f64>, x: f64, h: f64) -> Vec<f64> {
    let (a, b, c, d) = (f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
    (0..a.len())
        .map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
        .collect()
}

pub fn rel_l2(reference: &[f64], approx: &[f64]) -> f64 {
    let num: f64 = reference.iter().zip(approx).map(|(r, a)| (r - a) * (r - a)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    (num / den).sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
