//! Physical constants and dB conversions.
//!
//! Everything inside the library is in linear SI units; these helpers are
//! only used at the scenario/CLI boundary and in reports.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Standard noise reference temperature T0 (K).
pub const STANDARD_TEMPERATURE_K: f64 = 290.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Free-space path loss `(4 pi f d / c)^2` as a linear power ratio (> 1).
#[inline]
pub fn free_space_path_loss(carrier_frequency_hz: f64, distance_m: f64) -> f64 {
    let x = 4.0 * std::f64::consts::PI * carrier_frequency_hz * distance_m / SPEED_OF_LIGHT;
    x * x
}
