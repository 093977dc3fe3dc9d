//! Central finite differences.
//!
//! For a real function of a complex matrix the returned gradient is
//! `df/dRe(X) + j df/dIm(X)`, which equals `2 df/dX*` in Wirtinger terms.

use crate::linalg::{c, CMat};

pub fn finite_difference_gradient<F: FnMut(&CMat) -> f64>(mut f: F, x: &CMat, h: f64) -> CMat {
    let mut g = CMat::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for idx in 0..x.len() {
        let orig = probe[idx];
        probe[idx] = orig + c(h, 0.0);
        let fp = f(&probe);
        probe[idx] = orig - c(h, 0.0);
        let fm = f(&probe);
        let dre = (fp - fm) / (2.0 * h);
        probe[idx] = orig + c(0.0, h);
        let fp = f(&probe);
        probe[idx] = orig - c(0.0, h);
        let fm = f(&probe);
        let dim = (fp - fm) / (2.0 * h);
        probe[idx] = orig;
        g[idx] = c(dre, dim);
    }
    g
}

pub fn finite_difference_gradient_real<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let fp = f(&probe);
            probe[i] = orig - h;
            let fm = f(&probe);
            probe[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{power, rel_frobenius};

    fn sample() -> CMat {
        CMat::from_fn(3, 2, |i, j| c(0.3 * i as f64 - 0.2, 0.1 + j as f64 * 0.7))
    }

    #[test]
    fn squared_norm() {
        let x = sample();
        let g = finite_difference_gradient(|m| power(m), &x, 1e-5);
        assert!(rel_frobenius(&g, &(x.clone() * c(2.0, 0.0))) < 1e-6);
    }

    #[test]
    fn linear_functional() {
        let a = CMat::from_fn(3, 2, |i, j| c(i as f64 - j as f64, 0.5 * (i + j) as f64));
        let x = sample();
        let g = finite_difference_gradient(|m| (a.adjoint() * m).trace().re, &x, 1e-5);
        assert!(rel_frobenius(&g, &a) < 1e-9);
    }

    #[test]
    fn hermitian_quadratic() {
        // f = Re tr(X^H A X) + Re tr(B^H X), gradient 2 A X + B
        let m = CMat::from_fn(3, 3, |i, j| c((i * j) as f64 * 0.3 + 1.0, i as f64 - j as f64));
        let a = &m * m.adjoint();
        let b = CMat::from_fn(3, 2, |i, j| c(j as f64, -(i as f64)));
        let x = sample();
        let g = finite_difference_gradient(
            |m| (m.adjoint() * &a * m).trace().re + (b.adjoint() * m).trace().re,
            &x,
            1e-5,
        );
        let analytic = &a * &x * c(2.0, 0.0) + &b;
        assert!(rel_frobenius(&g, &analytic) < 1e-6);
    }

    #[test]
    fn real_gradient() {
        let g = finite_difference_gradient_real(|v| v[0] * v[0] + 3.0 * v[1], &[2.0, 5.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
