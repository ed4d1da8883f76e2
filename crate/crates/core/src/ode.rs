//! Classical fixed-step fourth-order Runge–Kutta.

use crate::error::{Error, Result};

/// Integrate `y' = f(x, y)` from `y(0) = y0` over `steps` uniform steps of
/// size `h`, returning the `steps + 1` states including the initial one.
pub fn rk4<const D: usize, F>(f: F, y0: [f64; D], h: f64, steps: usize) -> Result<Vec<[f64; D]>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for i in 0..steps {
        let x = i as f64 * h;
        y = rk4_step(&f, x, &y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite state at x = {}", x + h)));
        }
        out.push(y);
    }
    Ok(out)
}

#[inline]
pub fn rk4_step<const D: usize, F>(f: &F, x: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let axpy = |a: &[f64; D], s: f64, b: &[f64; D]| -> [f64; D] {
        let mut r = *a;
        for k in 0..D {
            r[k] += s * b[k];
        }
        r
    };
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(x + h, &axpy(y, h, &k3));
    let mut r = *y;
    for k in 0..D {
        r[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    r
}
