//! Two-panel block elimination written out by hand, in the derived form and in
//! the form printed in the lemmas.

use greenbvp::solver::{prepare, Discretization, LeafSolution};
use greenbvp::{BvpSystem, DenseMatrix, Formulation, Grid, Interval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{inv2, DenseOracle};

pub fn eye() -> DenseMatrix {
    DenseMatrix::identity(2)
}

pub fn random_system(seed: u64) -> BvpSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = || rng.gen_range(-1.0..1.0);
    let c: [f64; 8] = std::array::from_fn(|_| r());
    let g: [f64; 4] = std::array::from_fn(|_| r());
    let c_bc = DenseMatrix::from_rows(&[[0.3 * g[0], 0.2 * g[1]], [0.1 * g[2], 0.25 * g[3]]]);
    BvpSystem::from_fns(
        Interval::new(0.0, 1.0).unwrap(),
        move |x| {
            DenseMatrix::from_rows(&[
                [c[0] + c[1] * x, 1.5 * c[2] * (x + 0.3).sin()],
                [c[3] * x * x - 0.8, c[4] + c[5] * (2.0 * x).cos()],
            ])
        },
        move |x| vec![(c[6] * x).exp(), c[7] + x],
        eye(),
        c_bc,
        vec![0.5, -1.0],
    )
    .unwrap()
}

/// Rows `[m0 * n, m1 * n)` of a node-major column set.
pub fn panel_rows(cols: &[Vec<f64>], rows: std::ops::Range<usize>) -> Vec<f64> {
    rows.flat_map(|i| cols.iter().map(move |c| c[i])).collect()
}

pub fn vec_of(m: &DenseMatrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

pub struct TwoPanel {
    pub a: LeafSolution,
    pub b: LeafSolution,
    pub oracle: DenseOracle,
    pub rows_a: usize,
}

pub fn two_panel(seed: u64, split: f64, order: usize) -> TwoPanel {
    let sys = random_system(seed);
    let prepared = prepare(&sys, &Formulation::trivial()).unwrap();
    let grid = Grid::new(vec![0.0, split, 1.0], order).unwrap();
    let disc = Discretization::new(&prepared, &grid).unwrap();
    let mut sols = disc.solve_leaves().unwrap();
    let b = sols.pop().unwrap();
    let a = sols.pop().unwrap();
    let oracle = DenseOracle::new(&prepared.system, &prepared.background, &grid);
    TwoPanel {
        a,
        b,
        oracle,
        rows_a: order * 2,
    }
}

pub fn mat_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    m.matvec(v)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// sigma on each panel from the leaf data, with either elimination formula.
pub fn sigma_from_leaves(t: &TwoPanel, literal: bool) -> Vec<f64> {
    let (a, b) = (&t.a, &t.b);
    let d1 = &eye() - &(&a.alpha_l * &b.alpha_r);
    let d2 = &eye() - &(&b.alpha_r * &a.alpha_l);
    let ka = sub(&mat_vec(&b.alpha_r, &a.delta_l), &b.delta_r);
    let kb = sub(&mat_vec(&a.alpha_l, &b.delta_r), &a.delta_l);
    let (ca, cb) = if literal {
        // as printed: minus sign, and Delta1 on A / Delta2 on B
        (
            mat_vec(&inv2(&d1), &ka).iter().map(|v| -v).collect::<Vec<_>>(),
            mat_vec(&inv2(&d2), &kb).iter().map(|v| -v).collect::<Vec<_>>(),
        )
    } else {
        (mat_vec(&inv2(&d2), &ka), mat_vec(&inv2(&d1), &kb))
    };
    let mut out = add(&a.eta, &a.phi.matvec(&ca));
    out.extend(add(&b.eta, &b.phi.matvec(&cb)));
    out
}

pub fn varphi_from_leaves(t: &TwoPanel, literal: bool) -> (DenseMatrix, DenseMatrix) {
    let (a, b) = (&t.a, &t.b);
    let d1 = &eye() - &(&a.alpha_l * &b.alpha_r);
    let d2 = &eye() - &(&b.alpha_r * &a.alpha_l);
    let (ia, ib) = if literal { (inv2(&d1), inv2(&d2)) } else { (inv2(&d2), inv2(&d1)) };
    (
        &a.phi * &(&ia * &(&eye() - &b.alpha_r)),
        &b.phi * &(&ib * &(&eye() - &a.alpha_l)),
    )
}
