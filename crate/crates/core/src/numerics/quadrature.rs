//! Quadrature rules.

use std::f64::consts::PI;

use crate::linalg::{c, C64};

/// Midpoint rule over the disk of radius `radius` in polar coordinates:
/// `sum kernel(r_i, phi_j) r_i dr dphi`. Summation order is fixed (radial
/// outer, angular inner).
pub fn polar_midpoint_integrate<F: FnMut(f64, f64) -> C64>(
    mut kernel: F,
    radius: f64,
    n_r: usize,
    n_phi: usize,
) -> C64 {
    let dr = radius / n_r as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut total = c(0.0, 0.0);
    for i in 0..n_r {
        let r = (i as f64 + 0.5) * dr;
        let mut ring = c(0.0, 0.0);
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            ring += kernel(r, phi);
        }
        total += ring * (r * dr * dphi);
    }
    total
}

/// Adaptive Simpson integration of `f` on `[a, b]` to relative tolerance
/// `rel_tol` (with a small absolute floor against vanishing integrals).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // coarse composite estimate fixes the absolute tolerance
    let n = 64;
    let h = (b - a) / n as f64;
    let mut coarse = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * h;
        coarse += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    let eps = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * h;
        let x1 = x0 + h;
        let fa = f(x0);
        let fb = f(x1);
        let fm = f(0.5 * (x0 + x1));
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_rec(&f, x0, x1, fa, fm, fb, whole, eps / n as f64, 48);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}
