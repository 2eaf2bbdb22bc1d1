//! Order-`p` Chebyshev panels: nodes, value/coefficient transforms, left and
//! right indefinite integration, definite integration and Clenshaw evaluation.
//!
//! Node `j` (1-based) sits at `cos((2j - 1) pi / (2p))` on the reference
//! interval, so nodes are listed from right to left. Coefficient tables are
//! `p x width` in row-major order: row `k` carries the `T_k` coefficient of
//! every column.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// The `p` scaled Chebyshev nodes on `[a, c]` (roots of `T_p`).
pub fn cheb_nodes(p: usize, a: f64, c: f64) -> Vec<f64> {
    let mid = 0.5 * (a + c);
    let half = 0.5 * (c - a);
    (1..=p)
        .map(|j| mid + half * ((2 * j - 1) as f64 * PI / (2 * p) as f64).cos())
        .collect()
}

fn node_angle(p: usize, j: usize) -> f64 {
    (2 * j + 1) as f64 * PI / (2 * p) as f64
}

/// Chebyshev coefficients of one column of node values.
pub fn vals_to_coeffs(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let mut out = vec![0.0; p];
    for (k, o) in out.iter_mut().enumerate() {
        let s: f64 = values
            .iter()
            .enumerate()
            .map(|(j, v)| v * (k as f64 * node_angle(p, j)).cos())
            .sum();
        *o = if k == 0 { s / p as f64 } else { 2.0 * s / p as f64 };
    }
    out
}

/// Node values from Chebyshev coefficients.
pub fn coeffs_to_vals(coeffs: &[f64]) -> Vec<f64> {
    let p = coeffs.len();
    (0..p)
        .map(|j| {
            let th = node_angle(p, j);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (k as f64 * th).cos())
                .sum()
        })
        .collect()
}

/// Coefficients of `F(x) = int_a^x f` for `f` given by `coeffs` on an interval of
/// length `len`. The degree-`p` term is dropped; it vanishes at the nodes.
pub fn integrate_left(coeffs: &[f64], len: f64) -> Vec<f64> {
    let p = coeffs.len();
    assert!(p >= 2, "integration needs at least two coefficients");
    let at = |k: usize| if k < p { coeffs[k] } else { 0.0 };
    let mut out = vec![0.0; p];
    out[1] = (2.0 * at(0) - at(2)) / 2.0;
    for k in 2..p {
        out[k] = (at(k - 1) - at(k + 1)) / (2 * k) as f64;
    }
    // F(a) = 0, counting the dropped T_p term: T_p(-1) = (-1)^p.
    let top = at(p - 1) / (2 * p) as f64;
    out[0] = (1..p)
        .map(|k| if k % 2 == 1 { out[k] } else { -out[k] })
        .sum::<f64>()
        + if p % 2 == 1 { top } else { -top };
    let h = 0.5 * len;
    out.iter_mut().for_each(|v| *v *= h);
    out
}

/// Coefficients of `F(x) = int_x^c f`; same conventions as [`integrate_left`].
pub fn integrate_right(coeffs: &[f64], len: f64) -> Vec<f64> {
    let p = coeffs.len();
    assert!(p >= 2, "integration needs at least two coefficients");
    let at = |k: usize| if k < p { coeffs[k] } else { 0.0 };
    let mut out = vec![0.0; p];
    out[1] = (-2.0 * at(0) + at(2)) / 2.0;
    for k in 2..p {
        out[k] = (at(k + 1) - at(k - 1)) / (2 * k) as f64;
    }
    // F(c) = 0, with T_p(1) = 1 and the dropped coefficient -c_{p-1} / 2p.
    out[0] = -(1..p).map(|k| out[k]).sum::<f64>() + at(p - 1) / (2 * p) as f64;
    let h = 0.5 * len;
    out.iter_mut().for_each(|v| *v *= h);
    out
}

/// `int_{-1}^{1} T_k`.
pub fn chebyshev_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (1.0 - (k * k) as f64)
    }
}

/// Integral of the series over an interval of length `len`.
pub fn definite_integral(coeffs: &[f64], len: f64) -> f64 {
    0.5 * len
        * coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * chebyshev_moment(k))
            .sum::<f64>()
}

/// Clenshaw evaluation of the series at `x` in `[a, c]`.
pub fn eval_at(coeffs: &[f64], a: f64, c: f64, x: f64) -> Result<f64> {
    let s = reference_coordinate(a, c, x)?;
    Ok(clenshaw(coeffs, s))
}

pub(crate) fn reference_coordinate(a: f64, c: f64, x: f64) -> Result<f64> {
    let slack = 8.0 * f64::EPSILON * a.abs().max(c.abs()).max(c - a);
    if !(x >= a - slack && x <= c + slack) {
        return Err(Error::OutOfPanel { x, a, c });
    }
    Ok((2.0 * (x - a) / (c - a) - 1.0).clamp(-1.0, 1.0))
}

pub(crate) fn clenshaw(coeffs: &[f64], s: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = a + 2.0 * s * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + s * b1 - b2
}

/// Clenshaw over every column of a `p x width` coefficient table.
pub(crate) fn clenshaw_table(coeffs: &[f64], width: usize, s: f64, out: &mut [f64]) {
    let p = coeffs.len() / width;
    let mut b1 = vec![0.0; width];
    let mut b2 = vec![0.0; width];
    for k in (1..p).rev() {
        let row = &coeffs[k * width..(k + 1) * width];
        for w in 0..width {
            let b0 = row[w] + 2.0 * s * b1[w] - b2[w];
            b2[w] = b1[w];
            b1[w] = b0;
        }
    }
    for w in 0..width {
        out[w] = coeffs[w] + s * b1[w] - b2[w];
    }
}

fn map_columns(table: &[f64], width: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let p = table.len() / width;
    let mut out = vec![0.0; table.len()];
    let mut col = vec![0.0; p];
    for w in 0..width {
        for k in 0..p {
            col[k] = table[k * width + w];
        }
        for (k, v) in f(&col).into_iter().enumerate() {
            out[k * width + w] = v;
        }
    }
    out
}

/// One panel's Chebyshev representation of a scalar-, vector- or matrix-valued function.
#[derive(Debug)]
pub struct ChebPanel {
    a: f64,
    c: f64,
    order: usize,
    width: usize,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<f64>>,
}

impl Clone for ChebPanel {
    fn clone(&self) -> Self {
        let coeffs = OnceLock::new();
        if let Some(c) = self.coeffs.get() {
            let _ = coeffs.set(c.clone());
        }
        ChebPanel {
            a: self.a,
            c: self.c,
            order: self.order,
            width: self.width,
            values: self.values.clone(),
            coeffs,
        }
    }
}

impl ChebPanel {
    /// `values` is `order x width`, row `j` holding the sample at node `j`.
    pub fn from_values(a: f64, c: f64, width: usize, values: Vec<f64>) -> Result<Self> {
        if !(a < c) {
            return Err(Error::Invalid(format!("panel [{a}, {c}] is empty")));
        }
        if width == 0 || values.is_empty() || values.len() % width != 0 {
            return Err(Error::Dimension(format!(
                "{} values do not tile width {width}",
                values.len()
            )));
        }
        let order = values.len() / width;
        if order < 2 {
            return Err(Error::Invalid("panel order must be at least 2".into()));
        }
        Ok(ChebPanel {
            a,
            c,
            order,
            width,
            values,
            coeffs: OnceLock::new(),
        })
    }

    pub fn from_coeffs(a: f64, c: f64, width: usize, coeffs: Vec<f64>) -> Result<Self> {
        let values = map_columns(&coeffs, width, coeffs_to_vals);
        let panel = Self::from_values(a, c, width, values)?;
        let _ = panel.coeffs.set(coeffs);
        Ok(panel)
    }

    /// Samples `f` at the nodes; `f` returns `width` values.
    pub fn sample(
        a: f64,
        c: f64,
        order: usize,
        width: usize,
        mut f: impl FnMut(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(order * width);
        for x in cheb_nodes(order, a, c) {
            let v = f(x);
            if v.len() != width {
                return Err(Error::Dimension("sampler returned the wrong width".into()));
            }
            values.extend(v);
        }
        Self::from_values(a, c, width, values)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.c)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn nodes(&self) -> Vec<f64> {
        cheb_nodes(self.order, self.a, self.c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs
            .get_or_init(|| map_columns(&self.values, self.width, vals_to_coeffs))
    }

    pub fn integrate_left(&self) -> ChebPanel {
        let len = self.c - self.a;
        let co = map_columns(self.coeffs(), self.width, |col| integrate_left(col, len));
        Self::from_coeffs(self.a, self.c, self.width, co).expect("shape preserved")
    }

    pub fn integrate_right(&self) -> ChebPanel {
        let len = self.c - self.a;
        let co = map_columns(self.coeffs(), self.width, |col| integrate_right(col, len));
        Self::from_coeffs(self.a, self.c, self.width, co).expect("shape preserved")
    }

    /// Per-column definite integrals over the panel.
    pub fn definite_integral(&self) -> Vec<f64> {
        let co = self.coeffs();
        let len = self.c - self.a;
        (0..self.width)
            .map(|w| {
                0.5 * len
                    * (0..self.order)
                        .map(|k| co[k * self.width + w] * chebyshev_moment(k))
                        .sum::<f64>()
            })
            .collect()
    }

    /// Evaluates every column at `x`.
    pub fn eval_at(&self, x: f64) -> Result<Vec<f64>> {
        let s = reference_coordinate(self.a, self.c, x)?;
        let mut out = vec![0.0; self.width];
        clenshaw_table(self.coeffs(), self.width, s, &mut out);
        Ok(out)
    }
}

/// Precomputed node-space operators for one panel order on the reference
/// interval `[-1, 1]`. Scale by the half-width for a physical panel.
#[derive(Clone, Debug)]
pub struct SpectralOps {
    pub order: usize,
    /// Values at nodes to Chebyshev coefficients.
    pub to_coeffs: DenseMatrix,
    /// Node values of `f` to node values of `int_{-1}^x f`.
    pub left: DenseMatrix,
    /// Node values of `f` to node values of `int_x^1 f`.
    pub right: DenseMatrix,
    /// Quadrature weights: `sum_j w_j f(t_j) = int_{-1}^1 f`.
    pub weights: Vec<f64>,
}

impl SpectralOps {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "panel order must be at least 2");
        let p = order;
        let to_coeffs = DenseMatrix::from_fn(p, p, |k, j| {
            let scale = if k == 0 { 1.0 } else { 2.0 };
            scale / p as f64 * (k as f64 * node_angle(p, j)).cos()
        });
        let from_coeffs = DenseMatrix::from_fn(p, p, |j, k| (k as f64 * node_angle(p, j)).cos());
        let unit = |f: fn(&[f64], f64) -> Vec<f64>| {
            let mut m = DenseMatrix::zeros(p, p);
            for k in 0..p {
                let mut e = vec![0.0; p];
                e[k] = 1.0;
                for (i, v) in f(&e, 2.0).into_iter().enumerate() {
                    m[(i, k)] = v;
                }
            }
            m
        };
        let left = &(&from_coeffs * &unit(integrate_left)) * &to_coeffs;
        let right = &(&from_coeffs * &unit(integrate_right)) * &to_coeffs;
        let moments: Vec<f64> = (0..p).map(chebyshev_moment).collect();
        let weights = to_coeffs.matvec_transposed(&moments);
        SpectralOps {
            order,
            to_coeffs,
            left,
            right,
            weights,
        }
    }
}
