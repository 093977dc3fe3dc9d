//! Squared error between the integral interference covariance and its
//! base-station approximation, for a single cell at the sub-satellite point
//! with uniformly distributed users.

use std::f64::consts::PI;

use super::bessel::one_minus_j0;
use crate::numerics::adaptive_simpson;
use crate::units::SPEED_OF_LIGHT;

/// Inputs of [`approximation_error_element`] other than `omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxErrorParams {
    pub cell_radius_m: f64,
    /// User density per square meter.
    pub user_density_per_m2: f64,
    pub carrier_frequency_hz: f64,
    pub orbit_altitude_m: f64,
    pub coverage_radius_m: f64,
    pub tx_gain_linear: f64,
    pub rx_gain_linear: f64,
}

/// `eta^2 |pi R^2 / h^2 - int_0^R 2 pi r J0(pi r omega / R_sat) / (h^2 + r^2) dr|^2`
/// with `eta = G_T G_R c^2 rho / (4 pi f)^2`.
///
/// The difference is integrated as one nonnegative integrand
/// `2 pi r (r^2 + h^2 (1 - J0)) / (h^2 (h^2 + r^2))` so that no cancellation
/// occurs for small cells.
pub fn approximation_error_element(omega: f64, p: &ApproxErrorParams) -> f64 {
    let r_bs = p.cell_radius_m;
    if r_bs <= 0.0 {
        return 0.0;
    }
    let h2 = p.orbit_altitude_m * p.orbit_altitude_m;
    let a = PI * omega / p.coverage_radius_m;
    let integrand = |r: f64| {
        2.0 * PI * r * (r * r + h2 * one_minus_j0(a * r)) / (h2 * (h2 + r * r))
    };
    let diff = adaptive_simpson(integrand, 0.0, r_bs, 1e-8 * 1e-3);
    let eta = p.tx_gain_linear * p.rx_gain_linear * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        * p.user_density_per_m2
        / (4.0 * PI * p.carrier_frequency_hz).powi(2);
    eta * eta * diff * diff
}

/// Full `M_S x M_S` squared-error matrix; element `(i, j)` depends on the
/// array index offsets only. Index `m * m_y + n` as for steering vectors.
pub fn approximation_error_matrix(m_x: usize, m_y: usize, p: &ApproxErrorParams) -> Vec<Vec<f64>> {
    let mut cache = std::collections::HashMap::new();
    let n = m_x * m_y;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dm = (i / m_y).abs_diff(j / m_y);
            let dn = (i % m_y).abs_diff(j % m_y);
            let v = *cache.entry((dm, dn)).or_insert_with(|| {
                approximation_error_element(((dm * dm + dn * dn) as f64).sqrt(), p)
            });
            out[i][j] = v;
        }
    }
    out
}

/// Mean of the squared-error matrix entries.
pub fn approximation_mse(m_x: usize, m_y: usize, p: &ApproxErrorParams) -> f64 {
    let m = approximation_error_matrix(m_x, m_y, p);
    let n = (m_x * m_y) as f64;
    m.iter().flatten().sum::<f64>() / (n * n)
}
