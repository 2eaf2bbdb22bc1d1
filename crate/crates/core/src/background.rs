//! Background problems `Phi' + p0 Phi = 0` with known fundamental matrices, and
//! the Green's functions they induce for given boundary matrices.
//!
//! For a fundamental matrix `G(x)` (`G' + p0 G = 0`) and the boundary condition
//! matrix `D0 = A G(a) + C G(c)`, the Green's function separates as
//!
//! ```text
//! G0(x, t) = G(x) nu_L(t)   for t <= x
//!            G(x) nu_R(t)   for t >  x
//! nu_R(t) = -D0^{-1} C G(c) G^{-1}(t),    nu_L(t) = G^{-1}(t) + nu_R(t)
//! ```

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, mat_exp, singular_values, DenseMatrix, LuFactors};
use crate::system::{BvpSystem, Interval};

/// Upper bound on `||Q0||_2 (c - a)` for the constant-matrix background.
pub const MAX_Q0_STIFFNESS: f64 = 50.0;

/// Orthogonal eigenbasis and eigenvalues of a symmetric `Q0 = U diag(lambda) U^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactor {
    pub u: DenseMatrix,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundKind {
    /// `p0 = 0`, `G = I`.
    Trivial,
    /// `p0 = lambda I`, `G(x) = exp(-lambda (x - a)) I`.
    ScalarDecay { lambda: f64 },
    /// `p0 = Q0`, `G(x) = exp(-Q0 (x - a))`.
    ConstantMatrix {
        q0: DenseMatrix,
        spectral: Option<SpectralFactor>,
    },
}

impl BackgroundKind {
    pub fn constant_matrix(q0: DenseMatrix) -> Self {
        BackgroundKind::ConstantMatrix { q0, spectral: None }
    }

    /// `Q0 = U diag(lambdas) U^T` for orthogonal `U`.
    pub fn from_spectral(u: DenseMatrix, lambdas: Vec<f64>) -> Self {
        let q0 = &(&u * &DenseMatrix::from_diag(&lambdas)) * &u.transpose();
        BackgroundKind::ConstantMatrix {
            q0,
            spectral: Some(SpectralFactor { u, lambdas }),
        }
    }

    /// Random orthogonal `U` (QR of a seeded Gaussian-like matrix) with
    /// eigenvalues `i / (c - a)`, `i = 1..n`.
    pub fn auto_q0(n: usize, interval: Interval, seed: u64) -> Self {
        let u = random_orthogonal(n, seed);
        let lambdas = (1..=n).map(|i| i as f64 / interval.len()).collect();
        Self::from_spectral(u, lambdas)
    }

    pub fn p0(&self, n: usize) -> DenseMatrix {
        match self {
            BackgroundKind::Trivial => DenseMatrix::zeros(n, n),
            BackgroundKind::ScalarDecay { lambda } => DenseMatrix::identity(n).scale(*lambda),
            BackgroundKind::ConstantMatrix { q0, .. } => q0.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BackgroundKind::Trivial => "trivial".into(),
            BackgroundKind::ScalarDecay { lambda } => format!("scalar:{lambda}"),
            BackgroundKind::ConstantMatrix { .. } => "q0".into(),
        }
    }

    fn exp_at(&self, n: usize, s: f64) -> Result<DenseMatrix> {
        // exp(-p0 s)
        match self {
            BackgroundKind::Trivial => Ok(DenseMatrix::identity(n)),
            BackgroundKind::ScalarDecay { lambda } => {
                let v = (-lambda * s).exp();
                if !v.is_finite() {
                    return Err(Error::Overflow);
                }
                Ok(DenseMatrix::identity(n).scale(v))
            }
            BackgroundKind::ConstantMatrix { q0, spectral } => match spectral {
                Some(SpectralFactor { u, lambdas }) => {
                    let d: Vec<f64> = lambdas.iter().map(|l| (-l * s).exp()).collect();
                    if d.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Overflow);
                    }
                    Ok(&(u * &DenseMatrix::from_diag(&d)) * &u.transpose())
                }
                None => mat_exp(&q0.scale(-s)),
            },
        }
    }
}

/// Fundamental matrix `G(x)` of the background equation, normalized so `G(a) = I`.
pub fn fundamental_matrix(kind: &BackgroundKind, n: usize, x: f64, interval: Interval) -> Result<DenseMatrix> {
    kind.exp_at(n, x - interval.a)
}

fn fundamental_inverse(kind: &BackgroundKind, n: usize, t: f64, interval: Interval) -> Result<DenseMatrix> {
    kind.exp_at(n, -(t - interval.a))
}

fn random_orthogonal(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    // modified Gram-Schmidt on the columns, twice for orthogonality to roundoff
    let mut q = m;
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let dot: f64 = (0..n).map(|i| q[(i, j)] * q[(i, k)]).sum();
                for i in 0..n {
                    q[(i, j)] -= dot * q[(i, k)];
                }
            }
            let norm: f64 = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
            for i in 0..n {
                q[(i, j)] /= norm;
            }
        }
    }
    q
}

/// A background Green's function bound to boundary matrices `A`, `C`.
#[derive(Debug, Clone)]
pub struct BackgroundGreen {
    kind: BackgroundKind,
    n: usize,
    interval: Interval,
    a: DenseMatrix,
    c: DenseMatrix,
    d0: DenseMatrix,
    d0_lu: LuFactors,
    j0_factor: DenseMatrix,
}

/// `D0 = A G(a) + C G(c)` and its factorization.
pub fn bc_matrix(
    kind: &BackgroundKind,
    a: &DenseMatrix,
    c: &DenseMatrix,
    interval: Interval,
) -> Result<(DenseMatrix, LuFactors)> {
    let n = a.rows();
    let ga = fundamental_matrix(kind, n, interval.a, interval)?;
    let gc = fundamental_matrix(kind, n, interval.c, interval)?;
    let d0 = &(a * &ga) + &(c * &gc);
    let lu = match lu_factor(&d0) {
        Ok(lu) => lu,
        Err(Error::SingularMatrix { .. }) => return Err(Error::SingularD0),
        Err(e) => return Err(e),
    };
    Ok((d0, lu))
}

impl BackgroundGreen {
    pub fn new(kind: BackgroundKind, a: &DenseMatrix, c: &DenseMatrix, interval: Interval) -> Result<Self> {
        let n = a.rows();
        if let BackgroundKind::ConstantMatrix { q0, .. } = &kind {
            if q0.rows() != n || q0.cols() != n || !q0.is_finite() {
                return Err(Error::Dimension("Q0 must be a finite n x n matrix".into()));
            }
            let norm2 = singular_values(q0)?[0];
            if norm2 * interval.len() > MAX_Q0_STIFFNESS {
                return Err(Error::Invalid(format!(
                    "||Q0||_2 (c - a) = {:.3e} exceeds {MAX_Q0_STIFFNESS}",
                    norm2 * interval.len()
                )));
            }
        }
        let (d0, d0_lu) = bc_matrix(&kind, a, c, interval)?;
        let gc = fundamental_matrix(&kind, n, interval.c, interval)?;
        let j0_factor = d0_lu.solve(&(c * &gc)).scale(-1.0);
        Ok(BackgroundGreen {
            kind,
            n,
            interval,
            a: a.clone(),
            c: c.clone(),
            d0,
            d0_lu,
            j0_factor,
        })
    }

    pub fn for_system(kind: BackgroundKind, sys: &BvpSystem) -> Result<Self> {
        Self::new(kind, &sys.a, &sys.c, sys.interval)
    }

    pub fn kind(&self) -> &BackgroundKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn d0(&self) -> &DenseMatrix {
        &self.d0
    }

    pub fn d0_lu(&self) -> &LuFactors {
        &self.d0_lu
    }

    pub fn bc(&self) -> (&DenseMatrix, &DenseMatrix) {
        (&self.a, &self.c)
    }

    pub fn p0(&self) -> DenseMatrix {
        self.kind.p0(self.n)
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, BackgroundKind::Trivial)
    }

    pub fn gamma0(&self, x: f64) -> Result<DenseMatrix> {
        fundamental_matrix(&self.kind, self.n, x, self.interval)
    }

    pub fn gamma0_inv(&self, t: f64) -> Result<DenseMatrix> {
        fundamental_inverse(&self.kind, self.n, t, self.interval)
    }

    /// `(nu_L(t), nu_R(t))`.
    pub fn nu_factors(&self, t: f64) -> Result<(DenseMatrix, DenseMatrix)> {
        let ginv = self.gamma0_inv(t)?;
        let nu_r = &self.j0_factor * &ginv;
        let nu_l = &ginv + &nu_r;
        Ok((nu_l, nu_r))
    }

    /// `G0(x, t)`; at `t == x` the `t <= x` branch is taken.
    pub fn green_eval(&self, x: f64, t: f64) -> Result<DenseMatrix> {
        let (nu_l, nu_r) = self.nu_factors(t)?;
        let g = self.gamma0(x)?;
        Ok(if t <= x { &g * &nu_l } else { &g * &nu_r })
    }
}

/// A system with homogeneous boundary data plus the offset `Phi_b` that restores
/// the original data: `Phi = Phi_tilde + Phi_b`.
#[derive(Clone, Debug)]
pub struct Homogenized {
    pub system: BvpSystem,
    /// `D0^{-1} gamma`, so that `Phi_b(x) = G(x) D0^{-1} gamma`.
    pub offset: Vec<f64>,
    bg: Arc<BackgroundGreen>,
}

impl Homogenized {
    pub fn phi_b(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.bg.gamma0(x)?.matvec(&self.offset))
    }
}

/// Splits off `Phi_b = G(x) D0^{-1} gamma`; the remainder solves the same ODE with
/// right-hand side `f - (p - p0) Phi_b` and homogeneous boundary conditions.
pub fn homogenize(sys: &BvpSystem, bg: &Arc<BackgroundGreen>) -> Result<Homogenized> {
    let offset = bg.d0_lu().solve_vec(&sys.gamma);
    if sys.gamma.iter().all(|&g| g == 0.0) {
        return Ok(Homogenized {
            system: sys.clone(),
            offset,
            bg: bg.clone(),
        });
    }
    let p0 = bg.p0();
    let inner = sys.clone();
    let bgc = bg.clone();
    let off = offset.clone();
    let rhs = Arc::new(move |x: f64| -> Result<Vec<f64>> {
        let mut f = inner.f(x)?;
        let ptilde = &inner.p(x)? - &p0;
        let phib = bgc.gamma0(x)?.matvec(&off);
        for (fi, v) in f.iter_mut().zip(ptilde.matvec(&phib)) {
            *fi -= v;
        }
        Ok(f)
    });
    let mut system = sys.with_rhs(rhs);
    system.gamma = vec![0.0; sys.n];
    Ok(Homogenized {
        system,
        offset,
        bg: bg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, c: f64) -> Interval {
        Interval::new(a, c).unwrap()
    }

    fn degenerate_bc() -> (DenseMatrix, DenseMatrix) {
        (
            DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]),
            DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]),
        )
    }

    #[test]
    fn fundamental_matrices() {
        let i = iv(0.0, 1.0);
        assert_eq!(fundamental_matrix(&BackgroundKind::Trivial, 3, 0.7, i).unwrap(), DenseMatrix::identity(3));
        let k = BackgroundKind::ScalarDecay { lambda: 1.0 };
        assert_eq!(fundamental_matrix(&k, 2, 0.0, i).unwrap(), DenseMatrix::identity(2));
        let g1 = fundamental_matrix(&k, 2, 1.0, i).unwrap();
        assert!((g1[(0, 0)] - (-1f64).exp()).abs() < 1e-16 && g1[(0, 1)] == 0.0);

        let i600 = iv(0.0, 600.0);
        let th: f64 = 0.4;
        let r = DenseMatrix::from_rows(&[[th.cos(), -th.sin()], [th.sin(), th.cos()]]);
        let k = BackgroundKind::from_spectral(r, vec![1.0 / 600.0, 2.0 / 600.0]);
        let ga = fundamental_matrix(&k, 2, 0.0, i600).unwrap();
        assert!(ga.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn spectral_and_expm_routes_agree() {
        let i = iv(0.0, 600.0);
        let BackgroundKind::ConstantMatrix { q0, .. } = BackgroundKind::auto_q0(3, i, 11) else {
            unreachable!()
        };
        let spectral = BackgroundKind::auto_q0(3, i, 11);
        let plain = BackgroundKind::constant_matrix(q0);
        for x in [0.0, 150.0, 600.0] {
            let a = fundamental_matrix(&spectral, 3, x, i).unwrap();
            let b = fundamental_matrix(&plain, 3, x, i).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-13, "{x}");
        }
    }

    #[test]
    fn trivial_d0_is_a_plus_c() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 1.0]]);
        let c = DenseMatrix::from_rows(&[[0.5, 0.0], [1.0, 3.0]]);
        let (d0, _) = bc_matrix(&BackgroundKind::Trivial, &a, &c, iv(0.0, 1.0)).unwrap();
        assert_eq!(d0, &a + &c);
    }

    #[test]
    fn degenerate_bc_needs_nontrivial_q0() {
        let (a, c) = degenerate_bc();
        let i = iv(0.0, 1.0);
        assert!(matches!(bc_matrix(&BackgroundKind::Trivial, &a, &c, i), Err(Error::SingularD0)));
        for lambda in [-2.0, 0.5, 3.0] {
            let k = BackgroundKind::ScalarDecay { lambda };
            assert!(matches!(bc_matrix(&k, &a, &c, i), Err(Error::SingularD0)));
        }
        let k = BackgroundKind::constant_matrix(DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]));
        assert!(bc_matrix(&k, &a, &c, i).is_ok());
    }

    #[test]
    fn nu_factors_trivial_cases() {
        let i = iv(0.0, 1.0);
        let bg = BackgroundGreen::new(BackgroundKind::Trivial, &DenseMatrix::identity(2), &DenseMatrix::zeros(2, 2), i).unwrap();
        let (l, r) = bg.nu_factors(0.3).unwrap();
        assert_eq!(l, DenseMatrix::identity(2));
        assert_eq!(r, DenseMatrix::zeros(2, 2));
        // causal propagator
        assert_eq!(bg.green_eval(0.5, 0.2).unwrap(), DenseMatrix::identity(2));
        assert_eq!(bg.green_eval(0.2, 0.5).unwrap(), DenseMatrix::zeros(2, 2));

        let a = DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]);
        let c = DenseMatrix::from_rows(&[[0.2, 0.0], [1.0, 1.0]]);
        let bg = BackgroundGreen::new(BackgroundKind::Trivial, &a, &c, i).unwrap();
        let want = crate::linalg::lu_factor(&(&a + &c)).unwrap().solve(&c).scale(-1.0);
        for t in [0.0, 0.4, 1.0] {
            let (_, r) = bg.nu_factors(t).unwrap();
            assert!(r.max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn scalar_decay_matches_printed_formula_on_unit_interval() {
        let lambda: f64 = 2.0;
        let a = DenseMatrix::identity(2);
        let c = DenseMatrix::identity(2);
        let bg = BackgroundGreen::new(BackgroundKind::ScalarDecay { lambda }, &a, &c, iv(0.0, 1.0)).unwrap();
        let m = crate::linalg::lu_factor(&(&a + &c.scale((-lambda).exp())))
            .unwrap()
            .solve(&c);
        for &(x, t) in &[(0.7, 0.2), (0.2, 0.7), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0)] {
            let want = if t <= x {
                &DenseMatrix::identity(2).scale((lambda * (t - x)).exp()) - &m.scale((lambda * (t - x - 1.0)).exp())
            } else {
                m.scale(-(lambda * (t - x - 1.0)).exp())
            };
            let got = bg.green_eval(x, t).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-14, "({x},{t}): {got:?} vs {want:?}");
        }
        // With exp(lambda (t - 1)) in the t <= x branch, as displayed in print, the
        // branches no longer differ by the unit jump and d/dx G + lambda G != 0.
        let (x, t) = (0.7, 0.2);
        let literal = &DenseMatrix::identity(2).scale((lambda * (t - x)).exp()) - &m.scale((lambda * (t - 1.0)).exp());
        assert!(bg.green_eval(x, t).unwrap().max_abs_diff(&literal) > 1e-2);
    }

    #[test]
    fn homogenize_zero_gamma_is_identity() {
        let sys = BvpSystem::from_fns(
            iv(0.0, 1.0),
            |x| DenseMatrix::from_rows(&[[x, 1.0], [0.0, 2.0]]),
            |x| vec![x, 1.0],
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            vec![0.0, 0.0],
        )
        .unwrap();
        let bg = Arc::new(BackgroundGreen::for_system(BackgroundKind::Trivial, &sys).unwrap());
        let h = homogenize(&sys, &bg).unwrap();
        assert_eq!(h.phi_b(0.3).unwrap(), vec![0.0, 0.0]);
        assert_eq!(h.system.f(0.3).unwrap(), sys.f(0.3).unwrap());
    }

    #[test]
    fn homogenize_trivial_constant_offset() {
        let a = DenseMatrix::from_rows(&[[0.5, 0.0], [0.0, 1.0]]);
        let c = DenseMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.0]]);
        let sys = BvpSystem::from_fns(
            iv(0.0, 1.0),
            |_| DenseMatrix::zeros(2, 2),
            |_| vec![0.0; 2],
            a,
            c,
            vec![3.0, -1.0],
        )
        .unwrap();
        let bg = Arc::new(BackgroundGreen::for_system(BackgroundKind::Trivial, &sys).unwrap());
        let h = homogenize(&sys, &bg).unwrap();
        for x in [0.0, 0.5, 1.0] {
            let v = h.phi_b(x).unwrap();
            assert!((v[0] - 3.0).abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15);
        }
        assert_eq!(h.system.gamma, vec![0.0, 0.0]);
    }

    #[test]
    fn q0_stiffness_guard() {
        let k = BackgroundKind::constant_matrix(DenseMatrix::identity(2).scale(1.0));
        let (a, c) = degenerate_bc();
        assert!(matches!(BackgroundGreen::new(k, &a, &c, iv(0.0, 100.0)), Err(Error::Invalid(_))));
    }
}
