//! Scalar root-finding and minimization on brackets.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent–Dekker root of `f` in `[a, b]`; requires `f(a)` and `f(b)` of
/// opposite sign (or one of them zero). Terminates when the bracket is
/// narrower than `2 * (4 eps |x| + xtol)`.
pub fn brent_root<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Bracket(format!("function is NaN at {b}")));
        }
    }
    Err(Error::Bracket(format!(
        "Brent iteration limit on [{}, {}]",
        b.min(c),
        b.max(c)
    )))
}

/// Golden-section search for a minimum of `f` inside `[a, b]`, stopping
/// once the bracket is narrower than `xtol`. Returns `(x, f(x))`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> Result<(f64, f64)> {
    if !(a < b) || !(xtol > 0.0) {
        return Err(Error::Bracket(format!("invalid bracket [{a}, {b}]")));
    }
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iter = 0;
    while b - a > xtol {
        iter += 1;
        if iter > 10 * MAX_ITER {
            return Err(Error::Bracket("golden-section iteration limit".into()));
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}
