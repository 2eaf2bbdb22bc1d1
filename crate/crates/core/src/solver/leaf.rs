//! Per-panel samples, the local Nystrom matrix and the leaf solve.

use crate::background::BackgroundGreen;
use crate::chebyshev::{cheb_nodes, SpectralOps};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix, LuFactors};
use crate::system::BvpSystem;

/// Everything sampled at the nodes of one panel.
#[derive(Debug, Clone)]
pub struct LeafData {
    pub a: f64,
    pub c: f64,
    pub nodes: Vec<f64>,
    pub gamma0: Vec<DenseMatrix>,
    pub nu_l: Vec<DenseMatrix>,
    pub nu_r: Vec<DenseMatrix>,
    /// `(p(x) - p0) G(x)` at each node.
    pub psi: Vec<DenseMatrix>,
    /// Right-hand side at the nodes, node-major (`p * n`).
    pub rhs: Vec<f64>,
}

impl LeafData {
    pub fn sample(sys: &BvpSystem, bg: &BackgroundGreen, p0: &DenseMatrix, a: f64, c: f64, order: usize) -> Result<Self> {
        let nodes = cheb_nodes(order, a, c);
        let mut gamma0 = Vec::with_capacity(order);
        let mut nu_l = Vec::with_capacity(order);
        let mut nu_r = Vec::with_capacity(order);
        let mut psi = Vec::with_capacity(order);
        let mut rhs = Vec::with_capacity(order * sys.n);
        for &x in &nodes {
            let g = bg.gamma0(x)?;
            let (l, r) = bg.nu_factors(x)?;
            let pt = &sys.p(x)? - p0;
            let f = sys.f(x)?;
            if !pt.is_finite() || f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("coefficients are not finite at x = {x}")));
            }
            psi.push(&pt * &g);
            gamma0.push(g);
            nu_l.push(l);
            nu_r.push(r);
            rhs.extend(f);
        }
        Ok(LeafData {
            a,
            c,
            nodes,
            gamma0,
            nu_l,
            nu_r,
            psi,
            rhs,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.gamma0[0].rows()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.c - self.a)
    }

    /// `Psi` stacked node-major into a `p n x n` matrix.
    pub fn psi_stacked(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(self.order() * n, n);
        for (j, b) in self.psi.iter().enumerate() {
            m.set_block(j * n, 0, b);
        }
        m
    }

    /// Local Nystrom matrix: block `(j, m)` is
    /// `delta_jm I + h Psi_j (IL[j,m] nu_L(t_m) + IR[j,m] nu_R(t_m))`.
    pub fn nystrom_matrix(&self, ops: &SpectralOps) -> DenseMatrix {
        let n = self.dim();
        let p = self.order();
        let h = self.half_width();
        let mut out = DenseMatrix::identity(p * n);
        let mut k = DenseMatrix::zeros(n, n);
        for j in 0..p {
            for m in 0..p {
                let (wl, wr) = (h * ops.left[(j, m)], h * ops.right[(j, m)]);
                for (o, (&l, &r)) in k
                    .as_mut_slice()
                    .iter_mut()
                    .zip(self.nu_l[m].as_slice().iter().zip(self.nu_r[m].as_slice()))
                {
                    *o = wl * l + wr * r;
                }
                let blk = &self.psi[j] * &k;
                for r in 0..n {
                    for s in 0..n {
                        out[(j * n + r, m * n + s)] += blk[(r, s)];
                    }
                }
            }
        }
        out
    }

    /// `int nu sigma` over the panel for node-major samples (`p * n`).
    pub fn integrate_vec(&self, ops: &SpectralOps, nu: &[DenseMatrix], v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let h = self.half_width();
        let mut out = vec![0.0; n];
        for (m, w) in ops.weights.iter().enumerate() {
            let t = nu[m].matvec(&v[m * n..(m + 1) * n]);
            for (o, x) in out.iter_mut().zip(t) {
                *o += h * w * x;
            }
        }
        out
    }

    /// `int nu phi` over the panel for a stacked `p n x k` sample matrix.
    pub fn integrate_mat(&self, ops: &SpectralOps, nu: &[DenseMatrix], v: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        let h = self.half_width();
        let mut out = DenseMatrix::zeros(n, v.cols());
        for (m, w) in ops.weights.iter().enumerate() {
            let t = &nu[m] * &v.block(m * n, 0, n, v.cols());
            out.axpy(h * w, &t);
        }
        out
    }
}

/// Local solutions `eta`, `phi` and the four leaf constants.
#[derive(Debug, Clone)]
pub struct LeafSolution {
    /// `P^{-1} f` at the nodes, node-major.
    pub eta: Vec<f64>,
    /// `P^{-1} Psi`, stacked `p n x n`.
    pub phi: DenseMatrix,
    pub alpha_l: DenseMatrix,
    pub alpha_r: DenseMatrix,
    pub delta_l: Vec<f64>,
    pub delta_r: Vec<f64>,
    /// Factors of the local Nystrom matrix, kept for further right-hand sides.
    pub lu: LuFactors,
}

impl LeafSolution {
    /// `eta` and the two deltas for another right-hand side on the same leaf.
    pub fn resolve(&self, leaf: &LeafData, ops: &SpectralOps, rhs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let eta = self.lu.solve_vec(rhs);
        let dl = leaf.integrate_vec(ops, &leaf.nu_l, &eta);
        let dr = leaf.integrate_vec(ops, &leaf.nu_r, &eta);
        (eta, dl, dr)
    }
}

pub fn leaf_solve(leaf: &LeafData, ops: &SpectralOps, index: usize) -> Result<LeafSolution> {
    let mat = leaf.nystrom_matrix(ops);
    let lu = lu_factor(&mat).map_err(|_| Error::SingularLeaf { leaf: index })?;
    let eta = lu.solve_vec(&leaf.rhs);
    let phi = lu.solve(&leaf.psi_stacked());
    Ok(LeafSolution {
        alpha_l: leaf.integrate_mat(ops, &leaf.nu_l, &phi),
        alpha_r: leaf.integrate_mat(ops, &leaf.nu_r, &phi),
        delta_l: leaf.integrate_vec(ops, &leaf.nu_l, &eta),
        delta_r: leaf.integrate_vec(ops, &leaf.nu_r, &eta),
        eta,
        phi,
        lu,
    })
}
