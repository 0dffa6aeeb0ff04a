//! Bracketed scalar root finding: bisection to narrow the bracket, then
//! Newton steps that are rejected whenever they leave it.

use crate::error::{Error, Result};

/// A located root together with the residual |f(x)| there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
}

const MAX_ITER: usize = 200;

/// Find a root of `f` in `[a, b]` where `f(a)` and `f(b)` have opposite signs.
///
/// Iterates until `|f(x)| <= ftol` or the bracket collapses to machine width.
pub fn bracketed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ftol: f64) -> Result<Root> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::numerical("non-finite function value at bracket end", f64::NAN));
    }
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::numerical(
            format!("no sign change on [{lo}, {hi}]"),
            flo.abs().min(fhi.abs()),
        ));
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..MAX_ITER {
        if fx.abs() <= ftol {
            return Ok(Root { x, residual: fx.abs() });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(Root { x, residual: fx.abs() });
        }

        // Newton candidate with a central-difference slope.
        let h = (1e-7 * x.abs().max(1e-3)).min(0.25 * width);
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        let newton = x - fx / slope;
        x = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        fx = f(x);
        if !fx.is_finite() {
            x = 0.5 * (lo + hi);
            fx = f(x);
        }
    }
    if fx.abs() <= ftol.max(1e3 * f64::EPSILON) {
        Ok(Root { x, residual: fx.abs() })
    } else {
        Err(Error::numerical("root search did not converge", fx.abs()))
    }
}

/// Scan `[a, b]` on `n` uniform cells and return every bracketed root.
/// Sign changes across a divergence (|f| jumping past `jump`) are skipped.
pub fn scan_all<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, jump: f64, ftol: f64) -> Vec<Root> {
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (f0, f1) = (fs[i], fs[i + 1]);
        if !f0.is_finite() || !f1.is_finite() || f0.signum() == f1.signum() {
            continue;
        }
        if (f0 - f1).abs() > jump {
            continue;
        }
        if let Ok(r) = bracketed(&f, xs[i], xs[i + 1], ftol) {
            out.push(r);
        }
    }
    out
}
