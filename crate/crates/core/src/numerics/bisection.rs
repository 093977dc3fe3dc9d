//! Bisection for nonincreasing scalar functions.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionSpec {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionResult {
    pub x: f64,
    pub value: f64,
    /// Final bracket, with `f(lo) >= target >= f(hi)`.
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    /// Bracket width before each iteration.
    pub widths: Vec<f64>,
}

/// Finds `x` with `f(x)` within `tol` of `target` for nonincreasing `f`.
///
/// Requires `f(lo) >= target >= f(hi)`. Stops on the value tolerance, on a
/// bracket narrower than a few ulps, or after `max_iter` halvings.
pub fn bisect_monotone<F: FnMut(f64) -> f64>(mut f: F, spec: BisectionSpec) -> Result<BisectionResult> {
    let BisectionSpec {
        mut lo,
        mut hi,
        target,
        tol,
        max_iter,
    } = spec;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "bisection needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo >= target && target >= f_hi) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo,
            f_hi,
            target,
        });
    }
    if (f_lo - target).abs() <= tol {
        return Ok(BisectionResult {
            x: lo,
            value: f_lo,
            lo,
            hi,
            iterations: 0,
            widths: vec![],
        });
    }
    if (f_hi - target).abs() <= tol {
        return Ok(BisectionResult {
            x: hi,
            value: f_hi,
            lo,
            hi,
            iterations: 0,
            widths: vec![],
        });
    }
    let mut widths = Vec::new();
    let mut x = 0.5 * (lo + hi);
    let mut value = f(x);
    let mut iterations = 0;
    while iterations < max_iter {
        widths.push(hi - lo);
        iterations += 1;
        x = 0.5 * (lo + hi);
        value = f(x);
        if (value - target).abs() <= tol {
            break;
        }
        if value > target {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(BisectionResult {
        x,
        value,
        lo,
        hi,
        iterations,
        widths,
    })
}
