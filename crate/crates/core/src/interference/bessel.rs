//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

/// Below this the power series is used; above it the Hankel asymptotic
/// expansion (optimally truncated) is accurate to better than 1e-12.
const SERIES_LIMIT: f64 = 12.0;

/// `J0(x)`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        1.0 - series_one_minus(x)
    } else {
        hankel(x)
    }
}

/// `1 - J0(x)` without cancellation for small `x`.
pub fn one_minus_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series_one_minus(x)
    } else {
        1.0 - hankel(x)
    }
}

/// `1 - J0(x) = -sum_{k>=1} (-x^2/4)^k / (k!)^2`.
fn series_one_minus(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    // compensated summation: terms reach ~1e4 near the series limit
    let mut comp = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -sum
}

fn hankel(x: f64) -> f64 {
    // P ~ sum (-1)^k a_{2k} / x^{2k}, Q ~ -sum (-1)^k a_{2k+1} / x^{2k+1},
    // a_k = prod_{i=1..k} (2i-1)^2 / (k! 8^k)
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let term = a / x.powi(k);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
        let kk = (k + 1) as f64;
        let odd = 2.0 * kk - 1.0;
        a *= odd * odd / (kk * 8.0);
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(1/pi) int_0^pi cos(x sin t) dt` by the trapezoid rule, which is
    /// spectrally accurate for this periodic integrand.
    fn integral_oracle(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + (x * PI.sin()).cos());
        for i in 1..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn origin_and_symmetry() {
        assert_eq!(bessel_j0(0.0), 1.0);
        for x in [0.3, 2.0, 11.9, 12.1, 37.0, 500.0] {
            assert_eq!(bessel_j0(-x), bessel_j0(x));
        }
    }

    #[test]
    fn first_zero() {
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-9);
        // refine the root by bisection on the implementation
        let (mut lo, mut hi) = (2.3, 2.5);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if bessel_j0(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn matches_integral_representation() {
        let mut x = 0.0;
        while x <= 1000.0 {
            let err = (bessel_j0(x) - integral_oracle(x)).abs();
            assert!(err < 1e-10, "x={x}: {err:e}");
            x += if x < 30.0 { 0.173 } else { 7.31 };
        }
    }

    #[test]
    fn one_minus_is_accurate_near_zero() {
        let x: f64 = 1e-4;
        let expected = x * x / 4.0 - x.powi(4) / 64.0;
        assert!((one_minus_j0(x) - expected).abs() < 1e-16 * expected);
        assert!((one_minus_j0(5.0) - (1.0 - bessel_j0(5.0))).abs() < 1e-15);
    }
}
