//! One-dimensional bracketing searches shared by the optimizers.

use crate::error::Result;

/// `1/φ`, the golden-section shrink factor.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LineOptimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` (or after `max_iter`
/// shrinks) and reports the bracket midpoint.
pub(crate) fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LineOptimum> {
    let (mut a, mut b) = (lo, hi);
    if b - a <= tol {
        let x = 0.5 * (a + b);
        return Ok(LineOptimum { x, fx: f(x)?, iterations: 0 });
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while b - a > tol && iterations < max_iter {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    Ok(LineOptimum { x, fx: f(x)?, iterations })
}

/// Brent's minimizer: golden-section steps accelerated by parabolic
/// interpolation when the function is smooth near the minimum. Returns a
/// point within about `tol` of a local minimum of `f` on `[lo, hi]`.
pub(crate) fn brent_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LineOptimum> {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut iterations = 0;
    while iterations < max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = 0.5 * tol + 1e-15 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        iterations += 1;
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
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u)?;
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
    Ok(LineOptimum { x, fx, iterations })
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`, also
/// comparing against both end points. Ties keep the leftmost point.
pub(crate) fn golden_max_closed(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LineOptimum> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let inner = golden_min(|x| f(x).map(|y| -y), lo, hi, tol, max_iter)?;
    let mut best = LineOptimum { x: lo, fx: f_lo, iterations: inner.iterations };
    if -inner.fx > best.fx {
        best = LineOptimum { x: inner.x, fx: -inner.fx, iterations: inner.iterations };
    }
    if f_hi > best.fx {
        best = LineOptimum { x: hi, fx: f_hi, iterations: inner.iterations };
    }
    Ok(best)
}
