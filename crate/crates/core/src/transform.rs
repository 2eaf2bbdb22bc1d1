//! Change of unknown `Phi = T(x) phi` that turns a degenerate boundary condition
//! (`det(A + C) = 0`) into one with `det(A T(a) + C T(c)) != 0`.
//!
//! The automatic construction picks `n` independent columns from `[A | C]`,
//! builds a signed permutation `P` from disjoint planar rotations that sweep
//! from `I` at `x = a` to `P` at `x = c`, and follows it with a linear diagonal
//! path from `I` to `diag(lambda_k)`, doubling `lambda` until `A + C P Lambda`
//! is well conditioned. `T(a) = I`, and `T(x)` stays nonsingular on `[a, c]`.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{cond2, singular_values, DenseMatrix};
use crate::system::{BvpSystem, Interval};

/// Acceptance threshold for `sigma_min / sigma_max` of the transformed BC matrix.
pub const BC_ACCEPT_RATIO: f64 = 1e-8;
/// Largest scaling tried before giving up.
pub const MAX_SCALING: f64 = (1u64 << 30) as f64;

const TIE_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-12;

/// `T(x)`, `T'(x)` and `T(x)^{-1}`.
#[derive(Debug, Clone)]
pub struct TransformEval {
    pub t: DenseMatrix,
    pub dt: DenseMatrix,
    pub inv: DenseMatrix,
}

pub trait Transform: Debug + Send + Sync {
    fn interval(&self) -> Interval;

    fn dim(&self) -> usize;

    fn eval(&self, x: f64) -> Result<TransformEval>;

    fn label(&self) -> String;

    /// Largest `cond_2(T(x))` over `samples` equispaced points including both ends.
    fn max_cond(&self, samples: usize) -> f64 {
        let iv = self.interval();
        let m = samples.max(2);
        (0..m)
            .map(|i| {
                let x = iv.a + iv.len() * i as f64 / (m - 1) as f64;
                match self.eval(x) {
                    Ok(e) => cond2(&e.t),
                    Err(_) => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Result of the column selection on `[A | C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSelection {
    /// Indices of the chosen columns of `A`.
    pub a_cols: Vec<usize>,
    /// Indices of the chosen columns of `C`.
    pub c_cols: Vec<usize>,
    /// Involution with `perm[k] in c_cols` for every `k` not in `a_cols`.
    pub perm: Vec<usize>,
}

impl ColumnSelection {
    /// The disjoint transpositions making up `perm`, each as `(s, k)` with `s < k`.
    pub fn transpositions(&self) -> Vec<(usize, usize)> {
        self.perm
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < j)
            .map(|(i, &j)| (i, j))
            .collect()
    }
}

/// Greedy column-pivoted QR over `[a_1..a_n, c_1..c_n]`; among columns whose
/// residual norms tie (relative `1e-10`) the earliest is taken, so `A` wins.
pub fn select_columns(a: &DenseMatrix, c: &DenseMatrix) -> Result<ColumnSelection> {
    let n = a.rows();
    if !a.is_square() || c.rows() != n || c.cols() != n {
        return Err(Error::Dimension("A and C must be n x n".into()));
    }
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).chain((0..n).map(|j| c.column(j))).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = cols.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut taken = vec![false; 2 * n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for rank in 0..n {
        let norms: Vec<f64> = cols.iter().map(|v| norm(v)).collect();
        let best = (0..2 * n).filter(|&j| !taken[j]).map(|j| norms[j]).fold(0.0, f64::max);
        if scale == 0.0 || best <= RANK_TOL * scale * n as f64 {
            return Err(Error::DegenerateBc { rank, n });
        }
        let pick = (0..2 * n)
            .find(|&j| !taken[j] && norms[j] >= best * (1.0 - TIE_TOL))
            .unwrap();
        taken[pick] = true;
        let q: Vec<f64> = cols[pick].iter().map(|x| x / norms[pick]).collect();
        for (j, v) in cols.iter_mut().enumerate() {
            if taken[j] {
                continue;
            }
            // twice for orthogonality to roundoff
            for _ in 0..2 {
                let d: f64 = v.iter().zip(&q).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(&q) {
                    *x -= d * y;
                }
            }
        }
        basis.push(q);
    }
    let a_cols: Vec<usize> = (0..n).filter(|&j| taken[j]).collect();
    let c_cols: Vec<usize> = (0..n).filter(|&j| taken[n + j]).collect();

    // K = complement of a_cols. Pair K \ J with J \ K in sorted order.
    let in_a = |k: usize| a_cols.contains(&k);
    let in_c = |k: usize| c_cols.contains(&k);
    let k_not_j: Vec<usize> = (0..n).filter(|&k| !in_a(k) && !in_c(k)).collect();
    let j_not_k: Vec<usize> = c_cols.iter().copied().filter(|&k| in_a(k)).collect();
    debug_assert_eq!(k_not_j.len(), j_not_k.len());
    let mut perm: Vec<usize> = (0..n).collect();
    for (&u, &v) in k_not_j.iter().zip(&j_not_k) {
        perm[u] = v;
        perm[v] = u;
    }
    Ok(ColumnSelection { a_cols, c_cols, perm })
}

/// Rotation product `R(x)` and `R'(x)` for disjoint planes.
fn rotations_at(n: usize, planes: &[(usize, usize)], theta: f64, rate: f64) -> (DenseMatrix, DenseMatrix) {
    let mut r = DenseMatrix::identity(n);
    let mut dr = DenseMatrix::zeros(n, n);
    let (s, c) = theta.sin_cos();
    for &(i, k) in planes {
        r[(i, i)] = c;
        r[(i, k)] = -s;
        r[(k, i)] = s;
        r[(k, k)] = c;
        dr[(i, i)] = -s * rate;
        dr[(i, k)] = -c * rate;
        dr[(k, i)] = c * rate;
        dr[(k, k)] = -s * rate;
    }
    (r, dr)
}

/// Diagonal targets and the final scaling for the selection.
pub fn build_scaling(a: &DenseMatrix, c: &DenseMatrix, sel: &ColumnSelection) -> Result<(Vec<f64>, f64)> {
    let n = a.rows();
    let (r_end, _) = rotations_at(n, &sel.transpositions(), FRAC_PI_2, 0.0);
    let cr = c * &r_end;
    let mut lambda = 1.0;
    loop {
        let targets: Vec<f64> = (0..n)
            .map(|k| if sel.a_cols.contains(&k) { 1.0 / lambda } else { lambda })
            .collect();
        let d = a + &(&cr * &DenseMatrix::from_diag(&targets));
        let s = singular_values(&d)?;
        if s[0] > 0.0 && *s.last().unwrap() >= BC_ACCEPT_RATIO * s[0] {
            return Ok((targets, lambda));
        }
        lambda *= 2.0;
        if lambda > MAX_SCALING {
            return Err(Error::ScalingDiverged { lambda });
        }
    }
}

/// The automatically constructed path `T(x) = R(x) Lambda(x)`.
#[derive(Debug, Clone)]
pub struct PathTransform {
    interval: Interval,
    n: usize,
    rotations: Vec<(usize, usize)>,
    diag_targets: Vec<f64>,
    lambda: f64,
    selection: ColumnSelection,
}

impl PathTransform {
    pub fn build(a: &DenseMatrix, c: &DenseMatrix, interval: Interval) -> Result<Self> {
        let selection = select_columns(a, c)?;
        let (diag_targets, lambda) = build_scaling(a, c, &selection)?;
        Ok(PathTransform {
            interval,
            n: a.rows(),
            rotations: selection.transpositions(),
            diag_targets,
            lambda,
            selection,
        })
    }

    pub fn for_system(sys: &BvpSystem) -> Result<Self> {
        Self::build(&sys.a, &sys.c, sys.interval)
    }

    pub fn rotations(&self) -> &[(usize, usize)] {
        &self.rotations
    }

    pub fn diag_targets(&self) -> &[f64] {
        &self.diag_targets
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn selection(&self) -> &ColumnSelection {
        &self.selection
    }

    pub fn is_identity(&self) -> bool {
        self.rotations.is_empty() && self.diag_targets.iter().all(|&t| t == 1.0)
    }
}

impl Transform for PathTransform {
    fn interval(&self) -> Interval {
        self.interval
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: f64) -> Result<TransformEval> {
        let Interval { a, c } = self.interval;
        let len = c - a;
        let s = x - a;
        let rate = FRAC_PI_2 / len;
        let (r, dr) = rotations_at(self.n, &self.rotations, rate * s, rate);
        let diag: Vec<f64> = self.diag_targets.iter().map(|&t| (t - 1.0) / len * s + 1.0).collect();
        let slope: Vec<f64> = self.diag_targets.iter().map(|&t| (t - 1.0) / len).collect();
        let d = DenseMatrix::from_diag(&diag);
        let t = &r * &d;
        let dt = &(&dr * &d) + &(&r * &DenseMatrix::from_diag(&slope));
        let dinv: Vec<f64> = diag.iter().map(|v| 1.0 / v).collect();
        let inv = &DenseMatrix::from_diag(&dinv) * &r.transpose();
        Ok(TransformEval { t, dt, inv })
    }

    fn label(&self) -> String {
        "transform-auto".into()
    }
}

/// `T(x) = I + slope (x - a) e_row e_col^T` with `row != col`.
#[derive(Debug, Clone)]
pub struct ShearTransform {
    interval: Interval,
    n: usize,
    row: usize,
    col: usize,
    slope: f64,
}

impl ShearTransform {
    pub fn new(interval: Interval, n: usize, row: usize, col: usize, slope: f64) -> Result<Self> {
        if row == col || row >= n || col >= n || !slope.is_finite() {
            return Err(Error::Invalid("shear needs distinct in-range indices and a finite slope".into()));
        }
        Ok(ShearTransform {
            interval,
            n,
            row,
            col,
            slope,
        })
    }
}

impl Transform for ShearTransform {
    fn interval(&self) -> Interval {
        self.interval
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: f64) -> Result<TransformEval> {
        let v = self.slope * (x - self.interval.a);
        let mut t = DenseMatrix::identity(self.n);
        let mut inv = DenseMatrix::identity(self.n);
        let mut dt = DenseMatrix::zeros(self.n, self.n);
        t[(self.row, self.col)] = v;
        inv[(self.row, self.col)] = -v;
        dt[(self.row, self.col)] = self.slope;
        Ok(TransformEval { t, dt, inv })
    }

    fn label(&self) -> String {
        format!("shear:{}", self.slope)
    }
}

/// The system for `phi = T^{-1} Phi`: coefficient `T^{-1}(T' + p T)`, right-hand
/// side `T^{-1} f`, boundary matrices `A T(a)`, `C T(c)`, same `gamma`.
pub fn apply_transform(sys: &BvpSystem, t: Arc<dyn Transform>) -> Result<BvpSystem> {
    if t.dim() != sys.n {
        return Err(Error::Dimension("transform dimension does not match the system".into()));
    }
    let Interval { a, c } = sys.interval;
    let a_t = &sys.a * &t.eval(a)?.t;
    let c_t = &sys.c * &t.eval(c)?.t;
    let (inner_p, tp) = (sys.clone(), t.clone());
    let coeff = Arc::new(move |x: f64| -> Result<DenseMatrix> {
        let e = tp.eval(x)?;
        let m = &e.dt + &(&inner_p.p(x)? * &e.t);
        Ok(&e.inv * &m)
    });
    let (inner_f, tf) = (sys.clone(), t);
    let rhs = Arc::new(move |x: f64| -> Result<Vec<f64>> {
        let e = tf.eval(x)?;
        Ok(e.inv.matvec(&inner_f.f(x)?))
    });
    BvpSystem::new(sys.interval, coeff, rhs, a_t, c_t, sys.gamma.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows)
    }

    fn iv() -> Interval {
        Interval::new(0.0, 600.0).unwrap()
    }

    #[test]
    fn selection_identity_cases() {
        let s = select_columns(&DenseMatrix::identity(3), &DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(s.a_cols, vec![0, 1, 2]);
        assert!(s.c_cols.is_empty());
        assert_eq!(s.perm, vec![0, 1, 2]);

        let s = select_columns(&DenseMatrix::zeros(3, 3), &DenseMatrix::identity(3)).unwrap();
        assert!(s.a_cols.is_empty());
        assert_eq!(s.c_cols, vec![0, 1, 2]);
        assert_eq!(s.perm, vec![0, 1, 2]);
    }

    #[test]
    fn selection_degenerate_2x2() {
        let a = m(&[[1.0, 0.0], [0.0, 0.0]]);
        let c = m(&[[0.0, 0.0], [1.0, 0.0]]);
        let s = select_columns(&a, &c).unwrap();
        assert_eq!(s.a_cols, vec![0]);
        assert_eq!(s.c_cols, vec![0]);
        assert_eq!(s.perm, vec![1, 0]);
        let (targets, lambda) = build_scaling(&a, &c, &s).unwrap();
        assert_eq!(lambda, 1.0);
        assert_eq!(targets, vec![1.0, 1.0]);
    }

    #[test]
    fn rank_deficient_bc() {
        let a = m(&[[1.0, 0.0], [0.0, 0.0]]);
        let r = select_columns(&a, &a);
        assert!(matches!(r, Err(Error::DegenerateBc { rank: 1, n: 2 })));
    }

    #[test]
    fn scaling_needs_doubling() {
        // perm = identity, and A + C is singular, so lambda must grow.
        let a = m(&[[1.0, 0.0], [0.0, 0.0]]);
        let c = m(&[[-1.0, 1.0], [0.0, 1.0]]);
        let s = select_columns(&a, &c).unwrap();
        assert_eq!(s.perm, vec![0, 1]);
        let (targets, lambda) = build_scaling(&a, &c, &s).unwrap();
        assert_eq!(lambda, 2.0);
        assert_eq!(targets, vec![0.5, 2.0]);
        let t = PathTransform::build(&a, &c, iv()).unwrap();
        let d = &(&a * &t.eval(0.0).unwrap().t) + &(&c * &t.eval(600.0).unwrap().t);
        let sv = singular_values(&d).unwrap();
        assert!(sv[1] >= BC_ACCEPT_RATIO * sv[0]);
    }

    #[test]
    fn path_endpoints() {
        let a = m(&[[1.0, 0.0], [0.0, 0.0]]);
        let c = m(&[[0.0, 0.0], [1.0, 0.0]]);
        let t = PathTransform::build(&a, &c, iv()).unwrap();
        let e = t.eval(0.0).unwrap();
        assert_eq!(e.t, DenseMatrix::identity(2));
        assert_eq!(e.inv, DenseMatrix::identity(2));
        let end = t.eval(600.0).unwrap().t;
        assert!(end.max_abs_diff(&m(&[[0.0, -1.0], [1.0, 0.0]])) < 1e-15);
        assert!((t.max_cond(200) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let a = m(&[[1.0, 0.0], [0.0, 0.0]]);
        let c = m(&[[-1.0, 1.0], [0.0, 1.0]]);
        let t = PathTransform::build(&a, &c, Interval::new(-1.0, 2.0).unwrap()).unwrap();
        let h = 1e-6;
        for x in [-0.5, 0.3, 1.7] {
            let fd = (&t.eval(x + h).unwrap().t - &t.eval(x - h).unwrap().t).scale(0.5 / h);
            assert!(fd.max_abs_diff(&t.eval(x).unwrap().dt) < 1e-6);
        }
    }

    #[test]
    fn shear_matches_manual() {
        let t = ShearTransform::new(iv(), 2, 0, 1, 1.0).unwrap();
        let e = t.eval(600.0).unwrap();
        assert_eq!(e.t, m(&[[1.0, 600.0], [0.0, 1.0]]));
        assert_eq!(&e.t * &e.inv, DenseMatrix::identity(2));
        let k = t.max_cond(200);
        assert!(k > 3.5e5 && k < 3.7e5, "{k}");
    }

    #[test]
    fn identity_transform_leaves_system() {
        let sys = BvpSystem::from_fns(
            Interval::new(0.0, 1.0).unwrap(),
            |x| m(&[[x, 1.0], [2.0, -x]]),
            |x| vec![x.sin(), 1.0],
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            vec![1.0, 2.0],
        )
        .unwrap();
        let t = PathTransform::for_system(&sys).unwrap();
        assert!(t.is_identity());
        let st = apply_transform(&sys, Arc::new(t)).unwrap();
        for x in [0.0, 0.4, 1.0] {
            assert!(st.p(x).unwrap().max_abs_diff(&sys.p(x).unwrap()) < 1e-15);
            assert_eq!(st.f(x).unwrap(), sys.f(x).unwrap());
        }
        assert_eq!(st.a, sys.a);
        assert_eq!(st.c, sys.c);
    }
}
