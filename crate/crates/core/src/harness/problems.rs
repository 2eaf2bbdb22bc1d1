//! Problem specifications and the built-in benchmark registry.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprparse::Expr;
use crate::harness::special::{bessel_j, erf};
use crate::linalg::DenseMatrix;
use crate::solver::Grid;
use crate::system::{BvpSystem, Interval};

#[derive(Debug, Clone, PartialEq)]
pub enum ExactSolution {
    /// One expression per component.
    Exprs(Vec<Expr>),
    /// `(J_nu(x), J_nu'(x)) / J_nu(x_end)`.
    Bessel { nu: u32, x_end: f64 },
}

impl ExactSolution {
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        match self {
            ExactSolution::Exprs(es) => es.iter().map(|e| e.eval(x)).collect(),
            ExactSolution::Bessel { nu, x_end } => {
                let s = bessel_j(*nu, *x_end);
                let j = bessel_j(*nu, x);
                let dj = if *nu == 0 {
                    -bessel_j(1, x)
                } else {
                    0.5 * (bessel_j(nu - 1, x) - bessel_j(nu + 1, x))
                };
                Ok(vec![j / s, dj / s])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridHint {
    Uniform(usize),
    Dyadic { m: usize, x0: f64 },
}

impl GridHint {
    pub fn build(&self, interval: Interval, order: usize) -> Result<Grid> {
        match *self {
            GridHint::Uniform(m) => Grid::uniform(interval, m, order),
            GridHint::Dyadic { m, x0 } => Grid::dyadic(interval, m, x0, order),
        }
    }

    /// Parses `uniform:<M>` or `dyadic:<M>@<x0>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("grid `{s}` is not uniform:<M> or dyadic:<M>@<x0>"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "uniform" => Ok(GridHint::Uniform(rest.trim().parse().map_err(|_| bad())?)),
            "dyadic" => {
                let (m, x0) = rest.split_once('@').ok_or_else(bad)?;
                Ok(GridHint::Dyadic {
                    m: m.trim().parse().map_err(|_| bad())?,
                    x0: x0.trim().parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for GridHint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridHint::Uniform(m) => write!(f, "uniform:{m}"),
            GridHint::Dyadic { m, x0 } => write!(f, "dyadic:{m}@{x0}"),
        }
    }
}

/// A problem stated with closed-form coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub interval: Interval,
    /// Row-major `n x n`.
    pub p: Vec<Expr>,
    pub f: Vec<Expr>,
    pub a: DenseMatrix,
    pub c: DenseMatrix,
    pub gamma: Vec<f64>,
    pub exact: Option<ExactSolution>,
    pub grid: Option<GridHint>,
    pub order: Option<usize>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0
            || self.p.len() != n * n
            || self.f.len() != n
            || self.a.rows() != n
            || self.a.cols() != n
            || self.c.rows() != n
            || self.c.cols() != n
            || self.gamma.len() != n
        {
            return Err(Error::Dimension(format!("problem `{}` is not consistently {n}-dimensional", self.name)));
        }
        if let Some(ExactSolution::Exprs(es)) = &self.exact {
            if es.len() != n {
                return Err(Error::Dimension("exact solution has the wrong number of entries".into()));
            }
        }
        Ok(())
    }

    pub fn to_system(&self) -> Result<BvpSystem> {
        self.validate()?;
        let n = self.n;
        let p = self.p.clone();
        let f = self.f.clone();
        let constant_p = p.iter().all(Expr::is_constant);
        let p_const = if constant_p {
            Some(DenseMatrix::from_row_major(n, n, p.iter().map(|e| e.eval(0.0)).collect::<Result<_>>()?)?)
        } else {
            None
        };
        let coeff = Arc::new(move |x: f64| -> Result<DenseMatrix> {
            if let Some(m) = &p_const {
                return Ok(m.clone());
            }
            let v = p.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
            DenseMatrix::from_row_major(n, n, v)
        });
        let rhs = Arc::new(move |x: f64| -> Result<Vec<f64>> { f.iter().map(|e| e.eval(x)).collect() });
        BvpSystem::new(self.interval, coeff, rhs, self.a.clone(), self.c.clone(), self.gamma.clone())
    }

    pub fn exact_at(&self, x: f64) -> Option<Result<Vec<f64>>> {
        self.exact.as_ref().map(|e| e.eval(x))
    }

    pub fn default_order(&self) -> usize {
        self.order.unwrap_or(16)
    }

    pub fn default_grid(&self) -> Result<Grid> {
        self.grid
            .unwrap_or(GridHint::Uniform(16))
            .build(self.interval, self.default_order())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

/// `sum coeff_d u^(d)(endpoint) = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub at: Endpoint,
    pub terms: Vec<(usize, f64)>,
    pub value: f64,
}

impl Constraint {
    pub fn derivative(at: Endpoint, order: usize, value: f64) -> Self {
        Constraint {
            at,
            terms: vec![(order, 1.0)],
            value,
        }
    }
}

/// `u^(k) + sum_{j<k} q_j(x) u^(j) = g(x)` with `k` boundary constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarOde {
    pub name: String,
    pub interval: Interval,
    /// `q_0 .. q_{k-1}`; the length fixes the order `k`.
    pub q: Vec<Expr>,
    pub g: Expr,
    pub constraints: Vec<Constraint>,
    /// `u, u', .., u^(k-1)` when known.
    pub exact: Option<ExactSolution>,
}

/// Companion-form reduction with `Phi = (u, u', .., u^(k-1))`.
pub fn scalar_to_system(ode: &ScalarOde) -> Result<ProblemSpec> {
    let k = ode.q.len();
    if k == 0 {
        return Err(Error::Invalid("scalar equation has order 0".into()));
    }
    if ode.constraints.len() != k {
        return Err(Error::MalformedBc(format!(
            "order-{k} equation needs {k} boundary constraints, got {}",
            ode.constraints.len()
        )));
    }
    let zero = Expr::Num(0.0);
    let mut p = vec![zero.clone(); k * k];
    for i in 0..k - 1 {
        p[i * k + i + 1] = Expr::Num(-1.0);
    }
    for (j, q) in ode.q.iter().enumerate() {
        p[(k - 1) * k + j] = q.clone();
    }
    let mut f = vec![zero; k];
    f[k - 1] = ode.g.clone();
    let mut a = DenseMatrix::zeros(k, k);
    let mut c = DenseMatrix::zeros(k, k);
    let mut gamma = vec![0.0; k];
    for (r, con) in ode.constraints.iter().enumerate() {
        for &(d, w) in &con.terms {
            if d >= k {
                return Err(Error::MalformedBc(format!(
                    "constraint {r} references u^({d}) in an order-{k} equation"
                )));
            }
            match con.at {
                Endpoint::Left => a[(r, d)] += w,
                Endpoint::Right => c[(r, d)] += w,
            }
        }
        gamma[r] = con.value;
    }
    Ok(ProblemSpec {
        name: ode.name.clone(),
        n: k,
        interval: ode.interval,
        p,
        f,
        a,
        c,
        gamma,
        exact: ode.exact.clone(),
        grid: None,
        order: None,
    })
}

fn ex(s: &str) -> Expr {
    Expr::parse(s).expect("built-in expression")
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub const BUILTIN_NAMES: [&str; 7] = [
    "bessel",
    "sin-fast",
    "sin-slow",
    "viscous-shock",
    "seventh-order-1",
    "seventh-order-2",
    "beam",
];

/// Looks up a built-in problem by name.
pub fn builtin(name: &str) -> Option<ProblemSpec> {
    Some(match name {
        "bessel" => bessel(),
        "sin-fast" => sin_fast(),
        "sin-slow" => sin_slow(),
        "viscous-shock" => viscous_shock(1e-5),
        "seventh-order-1" => seventh_order_1(),
        "seventh-order-2" => seventh_order_2(),
        "beam" => beam(),
        _ => return None,
    })
}

pub fn builtins() -> Vec<ProblemSpec> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect()
}

fn dirichlet_2x2() -> (DenseMatrix, DenseMatrix) {
    (
        DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]),
        DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]),
    )
}

fn with_hints(mut p: ProblemSpec, grid: GridHint, order: usize) -> ProblemSpec {
    p.grid = Some(grid);
    p.order = Some(order);
    p
}

/// `u'' + u'/x + (1 - 100^2/x^2) u = 0` on `[0, 600]`, `u(0) = 0`, `u(600) = 1`.
pub fn bessel() -> ProblemSpec {
    let ode = ScalarOde {
        name: "bessel".into(),
        interval: Interval { a: 0.0, c: 600.0 },
        q: vec![ex("(x^2 - 10000)/x^2"), ex("1/x")],
        g: Expr::Num(0.0),
        constraints: vec![
            Constraint::derivative(Endpoint::Left, 0, 0.0),
            Constraint::derivative(Endpoint::Right, 0, 1.0),
        ],
        exact: Some(ExactSolution::Bessel { nu: 100, x_end: 600.0 }),
    };
    with_hints(scalar_to_system(&ode).unwrap(), GridHint::Uniform(200), 16)
}

fn rotation_problem(name: &str, rate: f64, panels: usize) -> ProblemSpec {
    let (a, c) = dirichlet_2x2();
    let r = num(rate);
    ProblemSpec {
        name: name.into(),
        n: 2,
        interval: Interval { a: 0.0, c: 600.0 },
        p: vec![Expr::Num(0.0), Expr::Num(-rate), Expr::Num(rate), Expr::Num(0.0)],
        f: vec![Expr::Num(0.0), Expr::Num(0.0)],
        a,
        c,
        gamma: vec![0.0, (600.0 * rate).sin()],
        exact: Some(ExactSolution::Exprs(vec![ex(&format!("sin({r}*x)")), ex(&format!("cos({r}*x)"))])),
        grid: Some(GridHint::Uniform(panels)),
        order: Some(16),
    }
}

/// `Phi = (sin x, cos x)` on `[0, 600]`.
pub fn sin_fast() -> ProblemSpec {
    rotation_problem("sin-fast", 1.0, 200)
}

/// `Phi = (sin(x/600), cos(x/600))` on `[0, 600]`.
pub fn sin_slow() -> ProblemSpec {
    rotation_problem("sin-slow", 1.0 / 600.0, 50)
}

/// `eps u'' + 2x u' = 0` on `[-1, 1]`, `u(-1) = -1`, `u(1) = 1`.
pub fn viscous_shock(eps: f64) -> ProblemSpec {
    let rs = eps.sqrt();
    let norm = erf(1.0 / rs);
    let slope = 2.0 / (std::f64::consts::PI * eps).sqrt() / norm;
    let ode = ScalarOde {
        name: "viscous-shock".into(),
        interval: Interval { a: -1.0, c: 1.0 },
        q: vec![Expr::Num(0.0), ex(&format!("2*x/{}", num(eps)))],
        g: Expr::Num(0.0),
        constraints: vec![
            Constraint::derivative(Endpoint::Left, 0, -1.0),
            Constraint::derivative(Endpoint::Right, 0, 1.0),
        ],
        exact: Some(ExactSolution::Exprs(vec![
            ex(&format!("erf(x/{})/{}", num(rs), num(norm))),
            ex(&format!("{}*exp(-x^2/{})", num(slope), num(eps))),
        ])),
    };
    with_hints(scalar_to_system(&ode).unwrap(), GridHint::Dyadic { m: 9, x0: 0.0 }, 16)
}

/// `u^(7) + u = -e^x (35 + 12x + 2x^2)` on `[0, 1]`, exact `x(1-x)e^x`.
pub fn seventh_order_1() -> ProblemSpec {
    let e = std::f64::consts::E;
    let mut q = vec![Expr::Num(0.0); 7];
    q[0] = Expr::Num(1.0);
    let exact = (0..7)
        .map(|m| {
            let m = m as f64;
            // d^m/dx^m (x - x^2) e^x = e^x (x - x^2 + m (1 - 2x) - m (m - 1))
            ex(&format!("exp(x)*(x - x^2 + {} - {}*x)", num(m - m * (m - 1.0)), num(2.0 * m)))
        })
        .collect();
    let ode = ScalarOde {
        name: "seventh-order-1".into(),
        interval: Interval { a: 0.0, c: 1.0 },
        q,
        g: ex("-exp(x)*(35 + 12*x + 2*x^2)"),
        constraints: vec![
            Constraint::derivative(Endpoint::Left, 0, 0.0),
            Constraint::derivative(Endpoint::Left, 1, 1.0),
            Constraint::derivative(Endpoint::Left, 2, 0.0),
            Constraint::derivative(Endpoint::Left, 3, -3.0),
            Constraint::derivative(Endpoint::Right, 0, 0.0),
            Constraint::derivative(Endpoint::Right, 1, -e),
            Constraint::derivative(Endpoint::Right, 2, -4.0 * e),
        ],
        exact: Some(ExactSolution::Exprs(exact)),
    };
    with_hints(scalar_to_system(&ode).unwrap(), GridHint::Uniform(16), 8)
}

/// `u^(7) = x u + e^x (-6 - 2x + x^2)` on `[0, 10]`, exact `(1-x)e^x`.
pub fn seventh_order_2() -> ProblemSpec {
    let e10 = 10f64.exp();
    let mut q = vec![Expr::Num(0.0); 7];
    q[0] = ex("-x");
    // d^m/dx^m (1 - x) e^x = e^x (1 - m - x)
    let exact = (0..7).map(|m| ex(&format!("exp(x)*({} - x)", num(1.0 - m as f64)))).collect();
    let ode = ScalarOde {
        name: "seventh-order-2".into(),
        interval: Interval { a: 0.0, c: 10.0 },
        q,
        g: ex("exp(x)*(-6 - 2*x + x^2)"),
        constraints: vec![
            Constraint::derivative(Endpoint::Left, 0, 1.0),
            Constraint::derivative(Endpoint::Left, 1, 0.0),
            Constraint::derivative(Endpoint::Left, 2, -1.0),
            Constraint::derivative(Endpoint::Left, 3, -2.0),
            Constraint::derivative(Endpoint::Right, 0, -9.0 * e10),
            Constraint::derivative(Endpoint::Right, 1, -10.0 * e10),
            Constraint::derivative(Endpoint::Right, 2, -11.0 * e10),
        ],
        exact: Some(ExactSolution::Exprs(exact)),
    };
    with_hints(scalar_to_system(&ode).unwrap(), GridHint::Uniform(127), 8)
}

pub const BEAM_L: f64 = 1.2e2;
pub const BEAM_E: f64 = 3.0e7;
pub const BEAM_I: f64 = 3.0e3;
pub const BEAM_Q: f64 = 4.34e4;
pub const BEAM_K: f64 = 2.604e3;

/// `y'''' + (k/EI) y = q/EI` on `[0, L]`, `y(0) = y'(0) = y(L) = y''(L) = 0`.
pub fn beam() -> ProblemSpec {
    let ei = BEAM_E * BEAM_I;
    let mut q = vec![Expr::Num(0.0); 4];
    q[0] = Expr::Num(BEAM_K / ei);
    let ode = ScalarOde {
        name: "beam".into(),
        interval: Interval { a: 0.0, c: BEAM_L },
        q,
        g: Expr::Num(BEAM_Q / ei),
        constraints: vec![
            Constraint::derivative(Endpoint::Left, 0, 0.0),
            Constraint::derivative(Endpoint::Left, 1, 0.0),
            Constraint::derivative(Endpoint::Right, 0, 0.0),
            Constraint::derivative(Endpoint::Right, 2, 0.0),
        ],
        exact: None,
    };
    with_hints(scalar_to_system(&ode).unwrap(), GridHint::Uniform(63), 8)
}
