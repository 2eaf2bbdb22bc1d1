//! Upward merges of the leaf constants and the downward coupling sweep.
//!
//! For a node `N = A u B` with coupling `lambda` (the local density is
//! `F = eta_N + phi_N lambda`), the children couple through
//!
//! ```text
//! lambda_A = D2^{-1} (lambda - aR_B (lambda - dL_A) - dR_B)
//! lambda_B = D1^{-1} (lambda - aL_A (lambda - dR_B) - dL_A)
//! D1 = I - aL_A aR_B,   D2 = I - aR_B aL_A
//! ```
//!
//! Taking `lambda = 0` in these gives `eta_N`, and `lambda = I` with the deltas
//! dropped gives `phi_N`; integrating those against `nu_L`, `nu_R` yields the
//! parent constants below. The root has `lambda = 0`.

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix, LuFactors};

use super::leaf::LeafSolution;

#[derive(Debug, Clone)]
pub struct NodeConstants {
    pub alpha_l: DenseMatrix,
    pub alpha_r: DenseMatrix,
    pub delta_l: Vec<f64>,
    pub delta_r: Vec<f64>,
}

impl NodeConstants {
    fn of_leaf(s: &LeafSolution) -> Self {
        NodeConstants {
            alpha_l: s.alpha_l.clone(),
            alpha_r: s.alpha_r.clone(),
            delta_l: s.delta_l.clone(),
            delta_r: s.delta_r.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    a: f64,
    c: f64,
    constants: NodeConstants,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf(usize),
    Inner {
        left: usize,
        right: usize,
        d1: LuFactors,
        d2: LuFactors,
    },
}

/// Balanced binary merge tree over the ordered panels.
#[derive(Debug, Clone)]
pub struct MergeTree {
    nodes: Vec<Node>,
    root: usize,
    n: usize,
    leaves: usize,
}

fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Parent constants and the factored `D1`, `D2` for adjacent children.
pub fn merge(a: &NodeConstants, b: &NodeConstants, span: (f64, f64)) -> Result<(NodeConstants, LuFactors, LuFactors)> {
    let n = a.alpha_l.rows();
    let eye = DenseMatrix::identity(n);
    let singular = || Error::SingularMerge { a: span.0, c: span.1 };
    let d1 = lu_factor(&(&eye - &(&a.alpha_l * &b.alpha_r))).map_err(|_| singular())?;
    let d2 = lu_factor(&(&eye - &(&b.alpha_r * &a.alpha_l))).map_err(|_| singular())?;

    // phi_N = phi_A D2^{-1}(I - aR_B) on A, phi_B D1^{-1}(I - aL_A) on B
    let ca = d2.solve(&(&eye - &b.alpha_r));
    let cb = d1.solve(&(&eye - &a.alpha_l));
    let alpha_l = &(&a.alpha_l * &ca) + &(&b.alpha_l * &cb);
    let alpha_r = &(&a.alpha_r * &ca) + &(&b.alpha_r * &cb);

    let (delta_l, delta_r) = merge_deltas(a, b, (&a.delta_l, &a.delta_r), (&b.delta_l, &b.delta_r), &d1, &d2);
    Ok((
        NodeConstants {
            alpha_l,
            alpha_r,
            delta_l,
            delta_r,
        },
        d1,
        d2,
    ))
}

/// Parent deltas from child deltas; only the alphas of `a`, `b` are used.
fn merge_deltas(
    a: &NodeConstants,
    b: &NodeConstants,
    (dla, dra): (&[f64], &[f64]),
    (dlb, drb): (&[f64], &[f64]),
    d1: &LuFactors,
    d2: &LuFactors,
) -> (Vec<f64>, Vec<f64>) {
    // eta_N = eta_A + phi_A la on A, eta_B + phi_B lb on B
    let la = d2.solve_vec(&sub_vec(&b.alpha_r.matvec(dla), drb));
    let lb = d1.solve_vec(&sub_vec(&a.alpha_l.matvec(drb), dla));
    let delta_l = add_vec(&add_vec(dla, dlb), &add_vec(&a.alpha_l.matvec(&la), &b.alpha_l.matvec(&lb)));
    let delta_r = add_vec(&add_vec(dra, drb), &add_vec(&a.alpha_r.matvec(&la), &b.alpha_r.matvec(&lb)));
    (delta_l, delta_r)
}

impl MergeTree {
    /// `spans[i]` is the interval of leaf `i`.
    pub fn build(leaves: &[LeafSolution], spans: &[(f64, f64)]) -> Result<Self> {
        assert_eq!(leaves.len(), spans.len());
        assert!(!leaves.is_empty());
        let n = leaves[0].alpha_l.rows();
        let mut nodes = Vec::with_capacity(2 * leaves.len());
        let root = Self::build_range(&mut nodes, leaves, spans, 0, leaves.len())?;
        Ok(MergeTree {
            nodes,
            root,
            n,
            leaves: leaves.len(),
        })
    }

    fn build_range(
        nodes: &mut Vec<Node>,
        leaves: &[LeafSolution],
        spans: &[(f64, f64)],
        lo: usize,
        hi: usize,
    ) -> Result<usize> {
        if hi - lo == 1 {
            nodes.push(Node {
                a: spans[lo].0,
                c: spans[lo].1,
                constants: NodeConstants::of_leaf(&leaves[lo]),
                kind: NodeKind::Leaf(lo),
            });
            return Ok(nodes.len() - 1);
        }
        let mid = (lo + hi) / 2;
        let left = Self::build_range(nodes, leaves, spans, lo, mid)?;
        let right = Self::build_range(nodes, leaves, spans, mid, hi)?;
        let span = (nodes[left].a, nodes[right].c);
        let (constants, d1, d2) = merge(&nodes[left].constants, &nodes[right].constants, span)?;
        nodes.push(Node {
            a: span.0,
            c: span.1,
            constants,
            kind: NodeKind::Inner { left, right, d1, d2 },
        });
        Ok(nodes.len() - 1)
    }

    pub fn root_constants(&self) -> &NodeConstants {
        &self.nodes[self.root].constants
    }

    pub fn depth(&self) -> usize {
        fn go(t: &MergeTree, i: usize) -> usize {
            match &t.nodes[i].kind {
                NodeKind::Leaf(_) => 0,
                NodeKind::Inner { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, self.root)
    }

    /// Per-leaf coupling vectors from the root coupling `lambda = 0`.
    pub fn sweep(&self) -> Vec<Vec<f64>> {
        let deltas: Vec<(Vec<f64>, Vec<f64>)> = self
            .nodes
            .iter()
            .map(|nd| (nd.constants.delta_l.clone(), nd.constants.delta_r.clone()))
            .collect();
        self.sweep_deltas(&deltas)
    }

    /// As [`MergeTree::sweep`] for a new right-hand side, given the deltas of every leaf.
    /// The alphas and the factored `D1`, `D2` are reused.
    pub fn sweep_with(&self, leaf_deltas: &[(Vec<f64>, Vec<f64>)]) -> Vec<Vec<f64>> {
        assert_eq!(leaf_deltas.len(), self.leaves);
        // children are stored before their parents
        let mut deltas: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.nodes.len());
        for nd in &self.nodes {
            let d = match &nd.kind {
                NodeKind::Leaf(k) => leaf_deltas[*k].clone(),
                NodeKind::Inner { left, right, d1, d2 } => {
                    let (l, r) = (&deltas[*left], &deltas[*right]);
                    merge_deltas(
                        &self.nodes[*left].constants,
                        &self.nodes[*right].constants,
                        (&l.0, &l.1),
                        (&r.0, &r.1),
                        d1,
                        d2,
                    )
                }
            };
            deltas.push(d);
        }
        self.sweep_deltas(&deltas)
    }

    fn sweep_deltas(&self, deltas: &[(Vec<f64>, Vec<f64>)]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.leaves];
        let mut stack = vec![(self.root, vec![0.0; self.n])];
        while let Some((i, lambda)) = stack.pop() {
            match &self.nodes[i].kind {
                NodeKind::Leaf(k) => out[*k] = lambda,
                NodeKind::Inner { left, right, d1, d2 } => {
                    let a = &self.nodes[*left].constants;
                    let b = &self.nodes[*right].constants;
                    let (dla, _) = &deltas[*left];
                    let (_, drb) = &deltas[*right];
                    let ta = sub_vec(&sub_vec(&lambda, &b.alpha_r.matvec(&sub_vec(&lambda, dla))), drb);
                    let tb = sub_vec(&sub_vec(&lambda, &a.alpha_l.matvec(&sub_vec(&lambda, drb))), dla);
                    stack.push((*left, d2.solve_vec(&ta)));
                    stack.push((*right, d1.solve_vec(&tb)));
                }
            }
        }
        out
    }

    /// Matrix-valued sweep from `lambda = I` with the deltas dropped; leaf `i` of the
    /// global `phi` is `phi_i C_i`.
    pub fn sweep_matrix(&self) -> Vec<DenseMatrix> {
        let eye = DenseMatrix::identity(self.n);
        let mut out = vec![eye.clone(); self.leaves];
        let mut stack = vec![(self.root, eye.clone())];
        while let Some((i, lambda)) = stack.pop() {
            match &self.nodes[i].kind {
                NodeKind::Leaf(k) => out[*k] = lambda,
                NodeKind::Inner { left, right, d1, d2 } => {
                    let a = &self.nodes[*left].constants;
                    let b = &self.nodes[*right].constants;
                    stack.push((*left, d2.solve(&(&(&eye - &b.alpha_r) * &lambda))));
                    stack.push((*right, d1.solve(&(&(&eye - &a.alpha_l) * &lambda))));
                }
            }
        }
        out
    }
}
