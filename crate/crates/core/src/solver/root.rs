//! Bracketed scalar root finding (Brent–Dekker: bisection safeguarding
//! secant and inverse quadratic steps).

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 200;

/// A root of `f` on `[a, b]`, which must bracket a sign change.
/// Returns the root and the number of iterations used.
pub(crate) fn brent<F>(mut f: F, a: f64, b: f64) -> Result<(f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok((a, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0));
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{a}, {b}]: f = ({fa:e}, {fb:e})"
        )));
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=MAX_ITER {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok((b, iter));
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
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(Error::Convergence(format!("non-finite function value at {b}")));
        }
    }
    Err(Error::Convergence(format!("no convergence within {MAX_ITER} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let (r, _) = brent(|x| Ok(x * x - 2.0), 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let (r, _) = brent(|x| Ok(x.cos() - x), 0.0, 1.0).unwrap();
        assert!((r.cos() - r).abs() < 1e-15);
        let (r, _) = brent(|x| Ok((x - 1.0).powi(3)), -3.0, 2.5).unwrap();
        assert!((r - 1.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_missing_bracket() {
        assert!(matches!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0), Err(Error::Convergence(_))));
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(brent(|x| Ok(x - 1.0), 1.0, 3.0).unwrap().0, 1.0);
    }
}
