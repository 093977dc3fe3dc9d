//! Satellite geometry, UPA steering vectors, Rician gain statistics and
//! link-budget conversions.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::linalg::{c, cexp_i, CMat, CVec, C64};
use crate::units::{
    db_to_linear, free_space_path_loss, linear_to_db, BOLTZMANN, SPEED_OF_LIGHT,
    STANDARD_TEMPERATURE_K,
};

/// Physical and link-budget parameters of the satellite downlink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub carrier_frequency_hz: f64,
    /// Orbit altitude `h_sat`.
    pub orbit_altitude_m: f64,
    /// Radius of the coverage area `R_sat`; ground offsets are mapped to
    /// direction cosines by dividing by it.
    pub coverage_radius_m: f64,
    pub m_x: usize,
    pub m_y: usize,
    pub tx_power_w: f64,
    pub rician_factor_linear: f64,
    pub per_antenna_tx_gain_linear: f64,
    pub rx_gain_linear: f64,
    pub noise_figure_linear: f64,
    pub antenna_temp_k: f64,
    pub bandwidth_hz: f64,
    /// `d / lambda`.
    pub element_spacing_ratio: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 2e9,
            orbit_altitude_m: 600e3,
            coverage_radius_m: 630e3,
            m_x: 8,
            m_y: 8,
            tx_power_w: db_to_linear(25.0),
            rician_factor_linear: db_to_linear(10.0),
            per_antenna_tx_gain_linear: db_to_linear(6.0),
            rx_gain_linear: db_to_linear(0.0),
            noise_figure_linear: db_to_linear(9.0),
            antenna_temp_k: 290.0,
            bandwidth_hz: 20e6,
            element_spacing_ratio: 0.5,
        }
    }
}

impl SystemConfig {
    pub fn num_antennas(&self) -> usize {
        self.m_x * self.m_y
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("orbit_altitude_m", self.orbit_altitude_m),
            ("coverage_radius_m", self.coverage_radius_m),
            ("tx_power_w", self.tx_power_w),
            ("per_antenna_tx_gain_linear", self.per_antenna_tx_gain_linear),
            ("rx_gain_linear", self.rx_gain_linear),
            ("noise_figure_linear", self.noise_figure_linear),
            ("antenna_temp_k", self.antenna_temp_k),
            ("bandwidth_hz", self.bandwidth_hz),
            ("element_spacing_ratio", self.element_spacing_ratio),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.rician_factor_linear.is_finite() || self.rician_factor_linear == f64::INFINITY)
            || self.rician_factor_linear < 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "rician_factor_linear must be nonnegative, got {}",
                self.rician_factor_linear
            )));
        }
        if self.m_x == 0 || self.m_y == 0 {
            return Err(Error::InvalidParameter(format!(
                "array dimensions must be positive, got {}x{}",
                self.m_x, self.m_y
            )));
        }
        Ok(())
    }

    /// Free-space power gain `M_S G_T G_R c^2 / (4 pi f d)^2` at distance `d`.
    pub fn gain_power(&self, distance_m: f64) -> f64 {
        self.num_antennas() as f64 * self.per_antenna_tx_gain_linear * self.rx_gain_linear
            / free_space_path_loss(self.carrier_frequency_hz, distance_m)
    }

    /// Power gain at the sub-satellite point, the reference for SNR.
    pub fn reference_gain_power(&self) -> f64 {
        self.gain_power(self.orbit_altitude_m)
    }

    /// Common noise power giving the requested per-user SNR at the
    /// sub-satellite point when `P_T` is split evenly over `k_s` users.
    pub fn noise_power_for_snr(&self, snr_db: f64, k_s: usize) -> f64 {
        self.tx_power_w * self.reference_gain_power() / (k_s.max(1) as f64 * db_to_linear(snr_db))
    }

    /// Thermal noise power `k_B [T + (F-1) T0] B`.
    pub fn thermal_noise_power_w(&self) -> f64 {
        BOLTZMANN
            * (self.antenna_temp_k + (self.noise_figure_linear - 1.0) * STANDARD_TEMPERATURE_K)
            * self.bandwidth_hz
    }

    /// Link-budget SNR (dB) at the sub-satellite point with thermal noise.
    pub fn link_budget_snr_db(&self, k_s: usize) -> f64 {
        linear_to_db(
            self.tx_power_w * self.reference_gain_power()
                / (k_s.max(1) as f64 * self.thermal_noise_power_w()),
        )
    }
}

/// Position of one satellite UT seen from the satellite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatUserGeometry {
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
    pub distance_m: f64,
}

impl SatUserGeometry {
    /// Geometry of a ground point at offset `(x, y)` from the sub-satellite
    /// point. Direction cosines are `x / R_sat` and `y / R_sat`.
    pub fn from_ground_offset(x_m: f64, y_m: f64, config: &SystemConfig) -> Result<Self> {
        let tx = x_m / config.coverage_radius_m;
        let ty = y_m / config.coverage_radius_m;
        if tx * tx + ty * ty > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "ground offset ({x_m}, {y_m}) lies outside the coverage radius"
            )));
        }
        let (elevation_rad, azimuth_rad) = angles_from_cosines(tx, ty);
        Ok(Self {
            elevation_rad,
            azimuth_rad,
            distance_m: (config.orbit_altitude_m.powi(2) + x_m * x_m + y_m * y_m).sqrt(),
        })
    }

    pub fn direction_cosines(&self) -> (f64, f64) {
        direction_cosines(self.elevation_rad, self.azimuth_rad)
    }
}

/// Inverse of [`direction_cosines`] with `theta in [0, pi]`, `phi in [0, pi]`.
pub fn angles_from_cosines(tx: f64, ty: f64) -> (f64, f64) {
    let theta = ty.clamp(-1.0, 1.0).acos();
    let s = theta.sin();
    let phi = if s > 1e-15 {
        (tx / s).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    (theta, phi)
}

/// `(sin(theta) cos(phi), cos(theta))`.
pub fn direction_cosines(elevation_rad: f64, azimuth_rad: f64) -> (f64, f64) {
    (elevation_rad.sin() * azimuth_rad.cos(), elevation_rad.cos())
}

/// Unit-norm UPA response `v(tx) kron v(ty)`; entry `m * m_y + n` is
/// `exp(-j 2 pi s (m tx + n ty)) / sqrt(m_x m_y)`.
pub fn upa_steering(tx: f64, ty: f64, m_x: usize, m_y: usize, spacing_ratio: f64) -> Result<CVec> {
    if m_x == 0 || m_y == 0 {
        return Err(Error::InvalidParameter(format!(
            "array dimensions must be positive, got {m_x}x{m_y}"
        )));
    }
    let amp = 1.0 / ((m_x * m_y) as f64).sqrt();
    let k = -2.0 * PI * spacing_ratio;
    let vx: Vec<C64> = (0..m_x).map(|m| cexp_i(k * m as f64 * tx)).collect();
    let vy: Vec<C64> = (0..m_y).map(|n| cexp_i(k * n as f64 * ty)).collect();
    Ok(CVec::from_iterator(
        m_x * m_y,
        vx.iter()
            .flat_map(|a| vy.iter().map(move |b| a * b * amp)),
    ))
}

/// Steering vector toward `geometry` for the configured array.
pub fn steering_for(geometry: &SatUserGeometry, config: &SystemConfig) -> CVec {
    let (tx, ty) = geometry.direction_cosines();
    upa_steering(tx, ty, config.m_x, config.m_y, config.element_spacing_ratio)
        .expect("validated config has positive dimensions")
}

/// LoS mean `gamma sqrt(kappa / (2 (kappa + 1))) (1 + j)`.
pub fn rician_mean_gain(gamma: f64, kappa: f64) -> C64 {
    let a = if kappa.is_infinite() {
        gamma * 0.5f64.sqrt()
    } else {
        gamma * (kappa / (2.0 * (kappa + 1.0))).sqrt()
    };
    c(a, a)
}

/// One Rician gain draw: real and imaginary parts i.i.d. Gaussian with mean
/// `Re(rician_mean_gain)` and variance `gamma^2 / (2 (kappa + 1))`.
pub fn sample_rician_gain<R: Rng + ?Sized>(gamma: f64, kappa: f64, rng: &mut R) -> C64 {
    let mean = rician_mean_gain(gamma, kappa);
    let std = if kappa.is_infinite() {
        0.0
    } else {
        gamma / (2.0 * (kappa + 1.0)).sqrt()
    };
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    mean + c(std * a, std * b)
}

/// Statistical CSI of one satellite UT.
#[derive(Clone, Debug, PartialEq)]
pub struct SatUserStats {
    pub steering: CVec,
    /// `gamma^2`.
    pub gain_power: f64,
    /// `g_bar`; its phase may differ from pi/4 if the caller rotates it.
    pub mean_gain: C64,
    pub noise_power_w: f64,
    pub weight: f64,
    pub rician_factor: f64,
}

impl SatUserStats {
    /// `h_bar = g_bar v`.
    pub fn mean_channel(&self) -> CVec {
        &self.steering * self.mean_gain
    }

    /// Copy with the mean gain rotated by `exp(j psi)`.
    pub fn with_phase(&self, psi: f64) -> Self {
        Self {
            mean_gain: self.mean_gain * cexp_i(psi),
            ..self.clone()
        }
    }
}

/// Builds the statistical CSI of one user with a common noise power chosen
/// for `snr_db` at the sub-satellite point over `k_s` users.
pub fn build_sat_user_stats(
    geometry: &SatUserGeometry,
    config: &SystemConfig,
    snr_db: f64,
    k_s: usize,
) -> Result<SatUserStats> {
    if !(geometry.distance_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "user distance must be positive, got {}",
            geometry.distance_m
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("snr_db must be finite, got {snr_db}")));
    }
    config.validate()?;
    let gain_power = config.gain_power(geometry.distance_m);
    Ok(SatUserStats {
        steering: steering_for(geometry, config),
        gain_power,
        mean_gain: rician_mean_gain(gain_power.sqrt(), config.rician_factor_linear),
        noise_power_w: config.noise_power_for_snr(snr_db, k_s),
        weight: 1.0,
        rician_factor: config.rician_factor_linear,
    })
}

fn check_users(stats: &[SatUserStats]) -> Result<usize> {
    let first = stats
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty user list".into()))?;
    let m = first.steering.len();
    for s in stats {
        if s.steering.len() != m {
            return Err(Error::DimensionMismatch {
                context: "user steering vectors",
                expected: dims(m, 1),
                actual: dims(s.steering.len(), 1),
            });
        }
    }
    Ok(m)
}

/// `(H_bar, Upsilon_ss)`: the mean channel matrix and `sum_k gamma_k^2 v_k v_k^H`.
pub fn aggregate_ss_stats(stats: &[SatUserStats]) -> Result<(CMat, CMat)> {
    let m = check_users(stats)?;
    let mut h = CMat::zeros(m, stats.len());
    let mut ups = CMat::zeros(m, m);
    for (k, s) in stats.iter().enumerate() {
        h.set_column(k, &s.mean_channel());
        ups += (&s.steering * s.steering.adjoint()) * c(s.gain_power, 0.0);
    }
    Ok((h, crate::linalg::hermitian_part(&ups)))
}

/// Phase-stripped channels `b_k = g_k v_k`, one column per user.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub matrix: CMat,
}

/// Draws one channel matrix. The scattered component of user `k` is rotated
/// together with its mean so that a phase rotation of `g_bar_k` rotates the
/// whole draw.
pub fn sample_channel_matrix<R: Rng + ?Sized>(
    stats: &[SatUserStats],
    rng: &mut R,
) -> Result<ChannelRealization> {
    let m = check_users(stats)?;
    let mut b = CMat::zeros(m, stats.len());
    for (k, s) in stats.iter().enumerate() {
        let g = sample_user_gain(s, rng);
        b.set_column(k, &(&s.steering * g));
    }
    Ok(ChannelRealization { matrix: b })
}

/// One gain draw for `s`, co-rotated with its mean.
pub fn sample_user_gain<R: Rng + ?Sized>(s: &SatUserStats, rng: &mut R) -> C64 {
    let g = sample_rician_gain(s.gain_power.sqrt(), s.rician_factor, rng);
    if s.mean_gain.norm() > 0.0 {
        g * cexp_i(s.mean_gain.arg() - FRAC_PI_4)
    } else {
        g
    }
}
