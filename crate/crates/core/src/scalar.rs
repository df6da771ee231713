//! One-dimensional helpers: Brent maximization and Richardson differences.

use crate::error::{Error, Result};

/// Maximizes a unimodal `f` on `[a, b]` by Brent's method (golden section
/// with parabolic steps). Returns `(argmax, max)`.
pub fn brent_max(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = -f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, -fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = -f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Solver("Brent search did not converge".into()))
}

/// Maximizes a concave-in-`log x` function of `x > 0` starting from a guess:
/// widen a geometric bracket until the interior beats both ends, then run
/// Brent in `log x`.
pub fn max_over_positive(mut f: impl FnMut(f64) -> Result<f64>, guess: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let mut lo = guess.ln() - 4f64.ln();
    let mut hi = guess.ln() + 4f64.ln();
    let mid = guess.ln();
    let fm = f(mid.exp())?;
    let mut flo = f(lo.exp())?;
    let mut fhi = f(hi.exp())?;
    let mut guard = 0;
    while flo >= fm && guard < 40 {
        lo -= 2f64.ln() * 2.0;
        flo = f(lo.exp())?;
        guard += 1;
    }
    while fhi >= fm && guard < 80 {
        hi += 2f64.ln() * 2.0;
        fhi = f(hi.exp())?;
        guard += 1;
    }
    if guard >= 80 {
        return Err(Error::Solver("could not bracket the maximum".into()));
    }
    let (lx, v) = brent_max(|l| f(l.exp()), lo, hi, rel_tol)?;
    Ok((lx.exp(), v))
}

/// Central difference with Richardson extrapolation over steps `x·1e-5` and
/// `x·5e-6`. Value functions of polyhedral problems are only piecewise `C²`,
/// so the step is kept short of any nearby change of active set.
pub fn richardson_derivative(mut f: impl FnMut(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h1 = x * 1e-5;
    let h2 = x * 5e-6;
    let d1 = (f(x + h1)? - f(x - h1)?) / (2.0 * h1);
    let d2 = (f(x + h2)? - f(x - h2)?) / (2.0 * h2);
    Ok((4.0 * d2 - d1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_peak() {
        let (x, v) = brent_max(|x| Ok(-(x - 1.3) * (x - 1.3) + 2.0), -5.0, 5.0, 1e-10).unwrap();
        assert!((x - 1.3).abs() < 1e-8 && (v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn positive_search_expands_bracket() {
        // log x - x y peaks at 1/y
        let y = 1e-3;
        let (x, v) = max_over_positive(|x| Ok(x.ln() - x * y), 1.0, 1e-10).unwrap();
        assert!((x - 1e3).abs() < 1e-4 * 1e3);
        assert!((v - ((1e3f64).ln() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn richardson_on_exp() {
        let d = richardson_derivative(|x| Ok(x.exp()), 1.0).unwrap();
        assert!((d - 1f64.exp()).abs() < 1e-9);
    }
}
