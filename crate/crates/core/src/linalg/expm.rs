//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degrees 3, 5, 7, 9, 13), following Higham's 2005 parameter choices.

use super::{lu_factor, DenseMatrix};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^M` for square `M`.
pub fn mat_exp(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("mat_exp needs a square matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::Overflow);
    }
    let n = m.rows();
    let norm = m.norm_1();
    if norm == 0.0 {
        return Ok(DenseMatrix::identity(n));
    }
    for &(deg, theta) in &THETA {
        if norm <= theta {
            let (u, v) = match deg {
                3 => pade_low(m, &B3),
                5 => pade_low(m, &B5),
                7 => pade_low(m, &B7),
                _ => pade_low(m, &B9),
            };
            return finish(&u, &v, 0);
        }
    }
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    if s > 1000 {
        return Err(Error::Overflow);
    }
    let scaled = m.scale(0.5f64.powi(s));
    let (u, v) = pade13(&scaled);
    finish(&u, &v, s as u32)
}

fn pade_low(a: &DenseMatrix, b: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let a2 = a * a;
    let mut powers = vec![DenseMatrix::identity(n), a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut uo = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        uo.axpy(b[2 * k + 1], p);
        v.axpy(b[2 * k], p);
    }
    (a * &uo, v)
}

fn pade13(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let id = DenseMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;

    let mut w1 = a6.scale(b[13]);
    w1.axpy(b[11], &a4);
    w1.axpy(b[9], &a2);
    let mut u = &a6 * &w1;
    u.axpy(b[7], &a6);
    u.axpy(b[5], &a4);
    u.axpy(b[3], &a2);
    u.axpy(b[1], &id);
    let u = a * &u;

    let mut z1 = a6.scale(b[12]);
    z1.axpy(b[10], &a4);
    z1.axpy(b[8], &a2);
    let mut v = &a6 * &z1;
    v.axpy(b[6], &a6);
    v.axpy(b[4], &a4);
    v.axpy(b[2], &a2);
    v.axpy(b[0], &id);
    (u, v)
}

/// Solves `(V - U) R = (V + U)` then squares `s` times.
fn finish(u: &DenseMatrix, v: &DenseMatrix, s: u32) -> Result<DenseMatrix> {
    let den = v - u;
    let num = v + u;
    let lu = lu_factor(&den).map_err(|_| Error::Overflow)?;
    let mut r = lu.solve(&num);
    for _ in 0..s {
        r = &r * &r;
        if !r.is_finite() {
            return Err(Error::Overflow);
        }
    }
    if !r.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(r)
}
