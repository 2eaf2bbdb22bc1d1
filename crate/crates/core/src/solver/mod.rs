//! The integral-equation solver.
//!
//! Pipeline: optional transform, background Green's function, homogenization,
//! leaf Nystrom solves, upward merges, downward sweep, recovery of `Phi`.

mod grid;
mod leaf;
mod tree;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::background::{homogenize, BackgroundGreen, BackgroundKind};
use crate::chebyshev::{ChebPanel, SpectralOps};
use crate::error::{Error, Result, Stage, StageExt};
use crate::linalg::{DenseMatrix, LuFactors, DEFAULT_SINGULAR_TOL};
use crate::system::BvpSystem;
use crate::transform::{apply_transform, PathTransform, Transform};

pub use grid::{Grid, GridKind};
pub use leaf::{leaf_solve, LeafData, LeafSolution};
pub use tree::{merge, MergeTree, NodeConstants};

/// Seed for the random orthogonal basis of the automatic constant-matrix background.
pub const DEFAULT_Q0_SEED: u64 = 1234;

#[derive(Clone)]
pub enum Formulation {
    /// Solve directly against the given background.
    Background(BackgroundKind),
    /// Constant-matrix background `U diag(i / (c - a)) U^T` with a seeded random `U`.
    Q0Auto { seed: u64 },
    /// Automatic path transform followed by the trivial background.
    TransformAuto,
    /// User transform followed by the trivial background.
    TransformGiven(Arc<dyn Transform>),
}

impl Formulation {
    pub fn trivial() -> Self {
        Formulation::Background(BackgroundKind::Trivial)
    }

    pub fn scalar(lambda: f64) -> Self {
        Formulation::Background(BackgroundKind::ScalarDecay { lambda })
    }

    pub fn q0_auto() -> Self {
        Formulation::Q0Auto { seed: DEFAULT_Q0_SEED }
    }

    pub fn label(&self) -> String {
        match self {
            Formulation::Background(k) => k.label(),
            Formulation::Q0Auto { .. } => "q0:auto".into(),
            Formulation::TransformAuto => "transform-auto".into(),
            Formulation::TransformGiven(t) => t.label(),
        }
    }
}

impl fmt::Debug for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A system brought into the form the discretization works on.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub original: BvpSystem,
    /// Homogeneous-BC system for the transformed unknown.
    pub system: BvpSystem,
    pub background: Arc<BackgroundGreen>,
    /// `D0^{-1} gamma`.
    pub offset: Vec<f64>,
    pub transform: Option<Arc<dyn Transform>>,
    pub label: String,
}

pub fn prepare(sys: &BvpSystem, formulation: &Formulation) -> Result<Prepared> {
    let (transform, kind): (Option<Arc<dyn Transform>>, BackgroundKind) = match formulation {
        Formulation::Background(k) => (None, k.clone()),
        Formulation::Q0Auto { seed } => (None, BackgroundKind::auto_q0(sys.n, sys.interval, *seed)),
        Formulation::TransformAuto => {
            let t = PathTransform::for_system(sys).stage(Stage::Transform)?;
            let t: Option<Arc<dyn Transform>> = if t.is_identity() { None } else { Some(Arc::new(t)) };
            (t, BackgroundKind::Trivial)
        }
        Formulation::TransformGiven(t) => (Some(t.clone()), BackgroundKind::Trivial),
    };
    let transformed = match &transform {
        Some(t) => apply_transform(sys, t.clone()).stage(Stage::Transform)?,
        None => sys.clone(),
    };
    let background = Arc::new(BackgroundGreen::for_system(kind, &transformed).stage(Stage::Background)?);
    let h = homogenize(&transformed, &background).stage(Stage::Homogenize)?;
    Ok(Prepared {
        original: sys.clone(),
        system: h.system,
        background,
        offset: h.offset,
        transform,
        label: formulation.label(),
    })
}

/// Node samples for every panel of a grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Grid,
    n: usize,
    ops: SpectralOps,
    leaves: Vec<LeafData>,
}

impl Discretization {
    pub fn new(prepared: &Prepared, grid: &Grid) -> Result<Self> {
        let iv = prepared.system.interval;
        let gi = grid.interval();
        if gi.a != iv.a || gi.c != iv.c {
            return Err(Error::Invalid(format!(
                "grid covers [{}, {}] but the problem lives on [{}, {}]",
                gi.a, gi.c, iv.a, iv.c
            )));
        }
        let p0 = prepared.background.p0();
        let leaves = (0..grid.panels())
            .map(|i| {
                let (a, c) = grid.span(i);
                LeafData::sample(&prepared.system, &prepared.background, &p0, a, c, grid.order())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Discretization {
            grid: grid.clone(),
            n: prepared.system.n,
            ops: SpectralOps::new(grid.order()),
            leaves,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn leaves(&self) -> &[LeafData] {
        &self.leaves
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn unknowns(&self) -> usize {
        self.n * self.grid.order() * self.grid.panels()
    }

    pub fn solve_leaves(&self) -> Result<Vec<LeafSolution>> {
        self.leaves
            .iter()
            .enumerate()
            .map(|(i, l)| leaf_solve(l, &self.ops, i))
            .collect()
    }

    pub fn merge_tree(&self, sols: &[LeafSolution]) -> Result<MergeTree> {
        let spans: Vec<_> = (0..self.grid.panels()).map(|i| self.grid.span(i)).collect();
        MergeTree::build(sols, &spans)
    }

    /// `int G0 sigma` in the background's factored form, sampled at the nodes of every leaf,
    /// with the values at both ends of each leaf from the panel quadratures.
    pub fn brackets(&self, sigma: &[f64]) -> (Vec<Vec<f64>>, Vec<[Vec<f64>; 2]>) {
        let n = self.n;
        let p = self.grid.order();
        let block = n * p;
        let ops = &self.ops;
        let leaves = &self.leaves;
        let mut inner = Vec::with_capacity(leaves.len());
        let mut tot_l = Vec::with_capacity(leaves.len());
        let mut tot_r = Vec::with_capacity(leaves.len());
        for (i, l) in leaves.iter().enumerate() {
            let s = &sigma[i * block..(i + 1) * block];
            let h = l.half_width();
            let vl: Vec<Vec<f64>> = (0..p).map(|m| l.nu_l[m].matvec(&s[m * n..(m + 1) * n])).collect();
            let vr: Vec<Vec<f64>> = (0..p).map(|m| l.nu_r[m].matvec(&s[m * n..(m + 1) * n])).collect();
            let mut g = vec![0.0; block];
            let mut tl = vec![0.0; n];
            let mut tr = vec![0.0; n];
            for m in 0..p {
                for r in 0..n {
                    tl[r] += h * ops.weights[m] * vl[m][r];
                    tr[r] += h * ops.weights[m] * vr[m][r];
                }
            }
            for j in 0..p {
                for m in 0..p {
                    let (a, b) = (h * ops.left[(j, m)], h * ops.right[(j, m)]);
                    for r in 0..n {
                        g[j * n + r] += a * vl[m][r] + b * vr[m][r];
                    }
                }
            }
            inner.push(g);
            tot_l.push(tl);
            tot_r.push(tr);
        }
        let mut suffix = vec![vec![0.0; n]; leaves.len()];
        for i in (0..leaves.len().saturating_sub(1)).rev() {
            suffix[i] = suffix[i + 1].iter().zip(&tot_r[i + 1]).map(|(x, y)| x + y).collect();
        }
        let mut prefix = vec![0.0; n];
        let mut edges = Vec::with_capacity(leaves.len());
        for (i, g) in inner.iter_mut().enumerate() {
            for j in 0..p {
                for r in 0..n {
                    g[j * n + r] += prefix[r] + suffix[i][r];
                }
            }
            let edge = |own: &[f64]| -> Vec<f64> { (0..n).map(|r| prefix[r] + own[r] + suffix[i][r]).collect() };
            edges.push([edge(&tot_r[i]), edge(&tot_l[i])]);
            for r in 0..n {
                prefix[r] += tot_l[i][r];
            }
        }
        (inner, edges)
    }

    /// The Nystrom operator applied to `sigma` in O(N).
    pub fn apply(&self, sigma: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (brackets, _) = self.brackets(sigma);
        let mut out = sigma.to_vec();
        for (i, (l, g)) in self.leaves.iter().zip(&brackets).enumerate() {
            for (j, psi) in l.psi.iter().enumerate() {
                let at = (i * l.order() + j) * n;
                for (o, v) in out[at..at + n].iter_mut().zip(psi.matvec(&g[j * n..(j + 1) * n])) {
                    *o += v;
                }
            }
        }
        out
    }

    /// Global right-hand side, leaf-major then node-major.
    pub fn rhs(&self) -> Vec<f64> {
        self.leaves.iter().flat_map(|l| l.rhs.iter().copied()).collect()
    }

    /// `Psi` at every node, stacked into an `N x n` matrix.
    pub fn psi(&self) -> DenseMatrix {
        let block = self.n * self.grid.order();
        let mut m = DenseMatrix::zeros(self.unknowns(), self.n);
        for (i, l) in self.leaves.iter().enumerate() {
            m.set_block(i * block, 0, &l.psi_stacked());
        }
        m
    }

    /// The global Nystrom matrix. Off-diagonal blocks couple node `j` of leaf `i`
    /// with node `m` of leaf `k` through `Psi_j w_m nu_L(t_m)` (`k < i`) or
    /// `Psi_j w_m nu_R(t_m)` (`k > i`).
    pub fn dense_matrix(&self) -> DenseMatrix {
        let n = self.n;
        let p = self.grid.order();
        let block = n * p;
        let total = self.unknowns();
        let mut out = DenseMatrix::zeros(total, total);
        // Row q of `wl` holds row q of h_k w_m nu_L(t_m) for every column (k, m, s).
        let mut wl = DenseMatrix::zeros(n, total);
        let mut wr = DenseMatrix::zeros(n, total);
        for (k, l) in self.leaves.iter().enumerate() {
            let h = l.half_width();
            for (m, w) in self.ops.weights.iter().enumerate() {
                let col = k * block + m * n;
                wl.set_block(0, col, &l.nu_l[m].scale(h * w));
                wr.set_block(0, col, &l.nu_r[m].scale(h * w));
            }
        }
        for (i, li) in self.leaves.iter().enumerate() {
            let (lo, hi) = (i * block, (i + 1) * block);
            for (j, psi) in li.psi.iter().enumerate() {
                for r in 0..n {
                    let row = out.row_mut(lo + j * n + r);
                    for q in 0..n {
                        let c = psi[(r, q)];
                        if c == 0.0 {
                            continue;
                        }
                        for (o, &v) in row[..lo].iter_mut().zip(&wl.row(q)[..lo]) {
                            *o += c * v;
                        }
                        for (o, &v) in row[hi..].iter_mut().zip(&wr.row(q)[hi..]) {
                            *o += c * v;
                        }
                    }
                }
            }
            out.set_block(lo, lo, &li.nystrom_matrix(&self.ops));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub formulation: String,
    pub panels: usize,
    pub order: usize,
    pub unknowns: usize,
    /// `max |A Phi(a) + C Phi(c) - gamma|`.
    pub bc_residual: f64,
    pub seconds: f64,
}

/// Computed density and solution.
#[derive(Clone, Debug)]
pub struct Solution {
    n: usize,
    grid: Grid,
    sigma: Vec<f64>,
    nodes: Vec<f64>,
    values: Vec<f64>,
    bracket: Vec<ChebPanel>,
    /// Brackets at the two ends of every leaf, from the full panel quadratures.
    edges: Vec<[Vec<f64>; 2]>,
    background: Arc<BackgroundGreen>,
    offset: Vec<f64>,
    transform: Option<Arc<dyn Transform>>,
    diagnostics: Diagnostics,
}

impl Solution {
    /// Recovers `Phi` from the density: on leaf `i`,
    /// `Phi~(x) = G(x) [L_i + int_{a_i}^x nu_L sigma + int_x^{c_i} nu_R sigma + R_i]`
    /// with `L_i`, `R_i` the totals over the leaves to the left and right.
    pub fn from_sigma(prepared: &Prepared, disc: &Discretization, sigma: Vec<f64>, started: Instant) -> Result<Self> {
        let n = disc.n;
        let p = disc.grid.order();
        let leaves = &disc.leaves;
        if sigma.len() != disc.unknowns() {
            return Err(Error::Dimension("density has the wrong length".into()));
        }
        let (brackets, edges) = disc.brackets(&sigma);
        let mut bracket = Vec::with_capacity(leaves.len());
        let mut nodes = Vec::with_capacity(p * leaves.len());
        let mut values = Vec::with_capacity(disc.unknowns());
        let back = |x: f64, v: Vec<f64>| -> Result<Vec<f64>> {
            match &prepared.transform {
                Some(t) => Ok(t.eval(x)?.t.matvec(&v)),
                None => Ok(v),
            }
        };
        for (l, g) in leaves.iter().zip(brackets) {
            for (j, &x) in l.nodes.iter().enumerate() {
                let shifted: Vec<f64> = (0..n).map(|r| g[j * n + r] + prepared.offset[r]).collect();
                values.extend(back(x, l.gamma0[j].matvec(&shifted))?);
                nodes.push(x);
            }
            bracket.push(ChebPanel::from_values(l.a, l.c, n, g)?);
        }
        let mut sol = Solution {
            n,
            grid: disc.grid.clone(),
            sigma,
            nodes,
            values,
            bracket,
            edges,
            background: prepared.background.clone(),
            offset: prepared.offset.clone(),
            transform: prepared.transform.clone(),
            diagnostics: Diagnostics {
                formulation: prepared.label.clone(),
                panels: disc.grid.panels(),
                order: p,
                unknowns: disc.unknowns(),
                bc_residual: 0.0,
                seconds: 0.0,
            },
        };
        let sys = &prepared.original;
        let (a, c) = (sys.interval.a, sys.interval.c);
        let lhs: Vec<f64> = sys
            .a
            .matvec(&sol.phi(a)?)
            .iter()
            .zip(sys.c.matvec(&sol.phi(c)?))
            .map(|(x, y)| x + y)
            .collect();
        sol.diagnostics.bc_residual = lhs
            .iter()
            .zip(&sys.gamma)
            .map(|(x, g)| (x - g).abs())
            .fold(0.0, f64::max);
        sol.diagnostics.seconds = started.elapsed().as_secs_f64();
        Ok(sol)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Density of the homogenized (and transformed) problem at every node,
    /// leaf-major then node-major.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Per-leaf Chebyshev panels of the density.
    pub fn sigma_panels(&self) -> Vec<ChebPanel> {
        let block = self.n * self.grid.order();
        (0..self.grid.panels())
            .map(|i| {
                let (a, c) = self.grid.span(i);
                ChebPanel::from_values(a, c, self.n, self.sigma[i * block..(i + 1) * block].to_vec())
                    .expect("panel shape")
            })
            .collect()
    }

    /// All collocation nodes, panel by panel.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `Phi` at every node, flattened like [`Solution::sigma`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn phi(&self, x: f64) -> Result<Vec<f64>> {
        let iv = self.grid.interval();
        let i = self.grid.locate(x).ok_or(Error::OutOfDomain { x, a: iv.a, c: iv.c })?;
        // At a breakpoint the kernel is smooth on both sides, so the quadrature totals are exact
        // for the discrete density and the boundary condition holds to round-off.
        let (lo, hi) = self.grid.span(i);
        let g = if x == lo {
            self.edges[i][0].clone()
        } else if x == hi {
            self.edges[i][1].clone()
        } else {
            self.bracket[i].eval_at(x)?
        };
        let shifted: Vec<f64> = g.iter().zip(&self.offset).map(|(u, v)| u + v).collect();
        let v = self.background.gamma0(x)?.matvec(&shifted);
        match &self.transform {
            Some(t) => Ok(t.eval(x)?.t.matvec(&v)),
            None => Ok(v),
        }
    }
}

/// Knobs for the hierarchical solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Steps of iterative refinement after the direct solve, each reusing the
    /// leaf factors and the tree. Zero reproduces the plain direct solver.
    pub refinement_steps: usize,
}

/// `eta + phi lambda` on every leaf, concatenated.
fn combine<'a>(sols: &[LeafSolution], etas: impl Iterator<Item = &'a Vec<f64>>, lambdas: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for ((s, e), lambda) in sols.iter().zip(etas).zip(lambdas) {
        out.extend(e.iter().zip(s.phi.matvec(lambda)).map(|(e, c)| e + c));
    }
    out
}

/// Full pipeline with the hierarchical solver.
pub fn solve(sys: &BvpSystem, grid: &Grid, formulation: &Formulation) -> Result<Solution> {
    let started = Instant::now();
    let prepared = prepare(sys, formulation)?;
    solve_prepared_from(&prepared, grid, SolveOptions::default(), started)
}

pub fn solve_prepared(prepared: &Prepared, grid: &Grid) -> Result<Solution> {
    solve_prepared_from(prepared, grid, SolveOptions::default(), Instant::now())
}

pub fn solve_prepared_with(prepared: &Prepared, grid: &Grid, opts: SolveOptions) -> Result<Solution> {
    solve_prepared_from(prepared, grid, opts, Instant::now())
}

fn solve_prepared_from(prepared: &Prepared, grid: &Grid, opts: SolveOptions, started: Instant) -> Result<Solution> {
    let disc = Discretization::new(prepared, grid).stage(Stage::LeafSolve)?;
    let sols = disc.solve_leaves().stage(Stage::LeafSolve)?;
    let tree = disc.merge_tree(&sols).stage(Stage::Merge)?;
    let couplings = tree.sweep();
    let mut sigma = combine(&sols, sols.iter().map(|s| &s.eta), &couplings);
    for _ in 0..opts.refinement_steps {
        // r = b - P sigma, reusing the leaf factors and the tree
        let residual: Vec<f64> = disc.rhs().iter().zip(disc.apply(&sigma)).map(|(b, a)| b - a).collect();
        let block = disc.dim() * grid.order();
        let mut etas = Vec::with_capacity(sols.len());
        let mut deltas = Vec::with_capacity(sols.len());
        for (i, (s, l)) in sols.iter().zip(disc.leaves()).enumerate() {
            let (eta, dl, dr) = s.resolve(l, disc.ops(), &residual[i * block..(i + 1) * block]);
            etas.push(eta);
            deltas.push((dl, dr));
        }
        let lambdas = tree.sweep_with(&deltas);
        let correction = combine(&sols, etas.iter(), &lambdas);
        for (s, c) in sigma.iter_mut().zip(correction) {
            *s += c;
        }
    }
    drop(sols);
    Solution::from_sigma(prepared, &disc, sigma, started).stage(Stage::Recover)
}

/// Dense global solve, used as an oracle and for condition numbers.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub matrix: DenseMatrix,
    pub lu: LuFactors,
    pub solution: Solution,
}

pub fn dense_solve(prepared: &Prepared, grid: &Grid) -> Result<DenseSolution> {
    let started = Instant::now();
    let disc = Discretization::new(prepared, grid).stage(Stage::Dense)?;
    let matrix = disc.dense_matrix();
    // Ill-conditioned formulations are solved anyway; that is what the dense path measures.
    let lu = LuFactors::factor_unchecked(&matrix, DEFAULT_SINGULAR_TOL).stage(Stage::Dense)?;
    let sigma = lu.solve_vec(&disc.rhs());
    let solution = Solution::from_sigma(prepared, &disc, sigma, started).stage(Stage::Recover)?;
    Ok(DenseSolution { matrix, lu, solution })
}
