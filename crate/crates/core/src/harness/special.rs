//! Special functions needed by the built-in exact solutions.

use crate::error::{Error, Result};

/// Bessel function of the first kind `J_nu(x)` for integer order.
///
/// Miller's downward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` from a trial
/// order well above both `nu` and `x`, normalized with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(nu, -x);
        return if nu % 2 == 0 { v } else { -v };
    }
    let nu = nu as usize;
    let mut start = x.ceil() as usize + nu + 40 + 16 * (x.cbrt().ceil() as usize);
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k == nu {
            want = cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    // cur = J_0
    norm += cur;
    if nu == 0 {
        want = cur;
    }
    want / norm
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Inverse error function on `(-1, 1)`.
pub fn erfinv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::Domain(format!("erfinv argument {y} outside (-1, 1)")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    // Winitzki's approximation as a starting guess.
    let a = 0.147;
    let ln = (1.0 - y * y).ln();
    let t = 2.0 / (std::f64::consts::PI * a) + ln / 2.0;
    let mut x = (((t * t) - ln / a).sqrt() - t).sqrt().copysign(y);
    let scale = 2.0 / std::f64::consts::PI.sqrt();
    for _ in 0..60 {
        let r = erf(x) - y;
        let d = scale * (-x * x).exp();
        if d == 0.0 {
            break;
        }
        let step = r / d;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}
