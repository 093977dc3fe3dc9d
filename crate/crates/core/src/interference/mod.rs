//! Satellite-to-terrestrial interference covariance.
//!
//! Terrestrial users are not known individually; only the base-station
//! positions and a user density per cell are. The covariance is either
//! integrated over each cell disk or approximated by the channel toward the
//! cell center.

pub mod approx_error;
pub mod bessel;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use approx_error::{
    approximation_error_element, approximation_error_matrix, approximation_mse, ApproxErrorParams,
};
pub use bessel::{bessel_j0, one_minus_j0};

use crate::error::{dims, Error, Result};
use crate::geometry::{upa_steering, SystemConfig};
use crate::linalg::{c, cexp_i, check_hermitian_psd, quad_trace, rel_frobenius, CMat, C64};
use crate::numerics::polar_midpoint_integrate;
use crate::units::SPEED_OF_LIGHT;

/// One terrestrial base station in polar coordinates around the
/// sub-satellite point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub distance_m: f64,
    pub polar_angle_rad: f64,
}

/// User density inside a cell, as a function of `(r, phi)` relative to the
/// cell center. Must integrate to one over the disk.
#[derive(Clone)]
pub enum Density {
    Uniform,
    /// `3 (1 - r/R) / (pi R^2)`: users concentrated near the base station.
    LinearFalloff,
    Custom {
        name: String,
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
}

impl Density {
    pub fn name(&self) -> &str {
        match self {
            Density::Uniform => "uniform",
            Density::LinearFalloff => "linear_falloff",
            Density::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(Density::Uniform),
            "linear_falloff" => Ok(Density::LinearFalloff),
            other => Err(Error::InvalidParameter(format!(
                "unknown density `{other}` (expected uniform or linear_falloff)"
            ))),
        }
    }

    pub fn eval(&self, r: f64, phi: f64, cell_radius_m: f64) -> f64 {
        let area = PI * cell_radius_m * cell_radius_m;
        match self {
            Density::Uniform => 1.0 / area,
            Density::LinearFalloff => 3.0 * (1.0 - r / cell_radius_m).max(0.0) / area,
            Density::Custom { f, .. } => f(r, phi),
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({})", self.name())
    }
}

#[derive(Clone, Debug)]
pub struct TerrestrialLayout {
    pub stations: Vec<Station>,
    pub cell_radius_m: f64,
    /// `K_bar_G`.
    pub users_per_bs: usize,
    pub density: Density,
}

impl TerrestrialLayout {
    /// `K_G = N_G K_bar_G`.
    pub fn total_users(&self) -> usize {
        self.stations.len() * self.users_per_bs
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::InvalidParameter("terrestrial layout has no stations".into()));
        }
        if self.users_per_bs == 0 {
            return Err(Error::InvalidParameter("users_per_bs must be positive".into()));
        }
        if !(self.cell_radius_m >= 0.0 && self.cell_radius_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell radius must be nonnegative, got {}",
                self.cell_radius_m
            )));
        }
        for s in &self.stations {
            if !(s.distance_m >= 0.0) || !s.polar_angle_rad.is_finite() {
                return Err(Error::InvalidParameter(format!("invalid station {s:?}")));
            }
        }
        Ok(())
    }

    /// Hex digest identifying the layout together with the array geometry.
    pub fn fingerprint(&self, config: &SystemConfig) -> String {
        let mut h = Sha256::new();
        for s in &self.stations {
            h.update(s.distance_m.to_le_bytes());
            h.update(s.polar_angle_rad.to_le_bytes());
        }
        h.update(self.cell_radius_m.to_le_bytes());
        h.update((self.users_per_bs as u64).to_le_bytes());
        h.update(self.density.name().as_bytes());
        for v in [
            config.carrier_frequency_hz,
            config.orbit_altitude_m,
            config.coverage_radius_m,
            config.element_spacing_ratio,
            config.per_antenna_tx_gain_linear,
            config.rx_gain_linear,
        ] {
            h.update(v.to_le_bytes());
        }
        h.update((config.m_x as u64).to_le_bytes());
        h.update((config.m_y as u64).to_le_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Midpoint polar grid used for the cell integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self {
            n_radial: 32,
            n_angular: 64,
        }
    }
}

impl PolarGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_radial < 4 || self.n_angular < 4 {
            return Err(Error::InvalidParameter(format!(
                "polar grid must be at least 4x4, got {}x{}",
                self.n_radial, self.n_angular
            )));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Integral {
        grid: PolarGrid,
        /// Relative Frobenius change when the grid is doubled.
        quadrature_error_estimate: f64,
    },
    PositionAided,
}

/// `Upsilon_sg`, Hermitian PSD, such that the average interference per
/// terrestrial user is `Tr(P^H Upsilon_sg P) / K_G`.
#[derive(Clone, Debug)]
pub struct InterferenceModel {
    pub matrix: CMat,
    pub provenance: Provenance,
    pub fingerprint: String,
    pub total_users: usize,
}

impl InterferenceModel {
    pub fn is_position_aided(&self) -> bool {
        matches!(self.provenance, Provenance::PositionAided)
    }
}

/// Slant range from the satellite to a point at `(r, phi)` in the cell of a
/// station at `(R_n, psi_n)`.
pub fn propagation_distance(h_sat: f64, r_n: f64, psi_n: f64, r: f64, phi: f64) -> f64 {
    (h_sat * h_sat + r_n * r_n + r * r + 2.0 * r_n * r * (psi_n - phi).cos()).sqrt()
}

/// `G_T G_R c^2 / (4 pi f d)^2`: per-element power gain without array gain.
fn element_gain(config: &SystemConfig, d: f64) -> f64 {
    config.per_antenna_tx_gain_linear * config.rx_gain_linear * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (4.0 * PI * config.carrier_frequency_hz * d).powi(2)
}

/// Toeplitz-block accumulator indexed by array offsets `(dm, dn)`.
struct OffsetTable {
    m_x: usize,
    m_y: usize,
    values: Vec<C64>,
}

impl OffsetTable {
    fn new(m_x: usize, m_y: usize) -> Self {
        Self {
            m_x,
            m_y,
            values: vec![c(0.0, 0.0); (2 * m_x - 1) * (2 * m_y - 1)],
        }
    }

    fn idx(&self, dm: isize, dn: isize) -> usize {
        let w = 2 * self.m_y - 1;
        (dm + self.m_x as isize - 1) as usize * w + (dn + self.m_y as isize - 1) as usize
    }

    /// Adds `weight * exp(-j 2 pi s (dm tx + dn ty))` for all offsets.
    fn add_point(&mut self, weight: f64, tx: f64, ty: f64, spacing: f64, ex: &mut [C64], ey: &mut [C64]) {
        let k = -2.0 * PI * spacing;
        let (mx, my) = (self.m_x as isize, self.m_y as isize);
        for (i, dm) in (-(mx - 1)..mx).enumerate() {
            ex[i] = cexp_i(k * dm as f64 * tx) * weight;
        }
        for (i, dn) in (-(my - 1)..my).enumerate() {
            ey[i] = cexp_i(k * dn as f64 * ty);
        }
        let w = 2 * self.m_y - 1;
        for (i, a) in ex.iter().enumerate() {
            let row = &mut self.values[i * w..(i + 1) * w];
            for (slot, b) in row.iter_mut().zip(ey.iter()) {
                *slot += a * b;
            }
        }
    }

    fn add(&mut self, other: &OffsetTable) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// Expands to the full matrix; the upper triangle is the conjugate of
    /// the lower so the result is exactly Hermitian.
    fn to_matrix(&self) -> CMat {
        let n = self.m_x * self.m_y;
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let dm = (i / self.m_y) as isize - (j / self.m_y) as isize;
                let dn = (i % self.m_y) as isize - (j % self.m_y) as isize;
                let v = self.values[self.idx(dm, dn)];
                if i == j {
                    out[(i, i)] = c(v.re, 0.0);
                } else {
                    out[(i, j)] = v;
                    out[(j, i)] = v.conj();
                }
            }
        }
        out
    }
}

fn density_mass(layout: &TerrestrialLayout, grid: &PolarGrid) -> f64 {
    let r_bs = layout.cell_radius_m;
    polar_midpoint_integrate(
        |r, phi| c(layout.density.eval(r, phi, r_bs), 0.0),
        r_bs,
        grid.n_radial,
        grid.n_angular,
    )
    .re
}

fn integrate_on_grid(layout: &TerrestrialLayout, config: &SystemConfig, grid: &PolarGrid, mass: f64) -> CMat {
    let (m_x, m_y) = (config.m_x, config.m_y);
    let r_bs = layout.cell_radius_m;
    let dr = r_bs / grid.n_radial as f64;
    let dphi = 2.0 * PI / grid.n_angular as f64;
    let r_sat = config.coverage_radius_m;
    let h = config.orbit_altitude_m;
    let scale = layout.users_per_bs as f64 / mass;
    let per_station: Vec<OffsetTable> = layout
        .stations
        .par_iter()
        .map(|st| {
            let mut table = OffsetTable::new(m_x, m_y);
            let mut ex = vec![c(0.0, 0.0); 2 * m_x - 1];
            let mut ey = vec![c(0.0, 0.0); 2 * m_y - 1];
            let (cx, cy) = (st.distance_m * st.polar_angle_rad.cos(), st.distance_m * st.polar_angle_rad.sin());
            for i in 0..grid.n_radial {
                let r = (i as f64 + 0.5) * dr;
                for j in 0..grid.n_angular {
                    let phi = (j as f64 + 0.5) * dphi;
                    let d = propagation_distance(h, st.distance_m, st.polar_angle_rad, r, phi);
                    let weight = scale
                        * element_gain(config, d)
                        * layout.density.eval(r, phi, r_bs)
                        * r
                        * dr
                        * dphi;
                    let tx = (cx + r * phi.cos()) / r_sat;
                    let ty = (cy + r * phi.sin()) / r_sat;
                    table.add_point(weight, tx, ty, config.element_spacing_ratio, &mut ex, &mut ey);
                }
            }
            table
        })
        .collect();
    // fixed station order regardless of thread count
    let mut total = OffsetTable::new(m_x, m_y);
    for t in &per_station {
        total.add(t);
    }
    total.to_matrix()
}

/// Integral-form covariance over all cells, midpoint rule on `grid`.
///
/// A density whose discrete mass differs from one by more than `1e-3` is
/// renormalized with a warning. The relative change under grid doubling is
/// recorded in the provenance.
pub fn integral_interference_matrix(
    layout: &TerrestrialLayout,
    config: &SystemConfig,
    grid: &PolarGrid,
) -> Result<InterferenceModel> {
    layout.validate()?;
    grid.validate()?;
    config.validate()?;
    if layout.cell_radius_m == 0.0 {
        // a point cell has no area to integrate over; its limit is the
        // position-aided matrix
        let mut model = pa_interference_matrix(layout, config)?;
        model.provenance = Provenance::Integral {
            grid: *grid,
            quadrature_error_estimate: 0.0,
        };
        return Ok(model);
    }
    let mut mass = density_mass(layout, grid);
    if (mass - 1.0).abs() > 1e-3 {
        log::warn!(
            "density `{}` integrates to {mass:.6} over the cell; renormalizing",
            layout.density.name()
        );
    } else {
        mass = 1.0;
    }
    let fine_grid = grid.doubled();
    let fine_mass = if mass == 1.0 { 1.0 } else { density_mass(layout, &fine_grid) };
    let matrix = integrate_on_grid(layout, config, grid, mass);
    let fine = integrate_on_grid(layout, config, &fine_grid, fine_mass);
    let estimate = rel_frobenius(&matrix, &fine);
    if estimate > 1e-3 {
        log::warn!("interference quadrature on {}x{} grid has estimated relative error {estimate:.2e}", grid.n_radial, grid.n_angular);
    }
    check_hermitian_psd(&matrix)?;
    Ok(InterferenceModel {
        matrix,
        provenance: Provenance::Integral {
            grid: *grid,
            quadrature_error_estimate: estimate,
        },
        fingerprint: layout.fingerprint(config),
        total_users: layout.total_users(),
    })
}

/// Base-station approximation `K_bar_G sum_n gamma_n^2 v_n v_n^H` with
/// steering and gain toward each cell center.
pub fn pa_interference_matrix(layout: &TerrestrialLayout, config: &SystemConfig) -> Result<InterferenceModel> {
    layout.validate()?;
    config.validate()?;
    let (m_x, m_y) = (config.m_x, config.m_y);
    let mut total = OffsetTable::new(m_x, m_y);
    let mut ex = vec![c(0.0, 0.0); 2 * m_x - 1];
    let mut ey = vec![c(0.0, 0.0); 2 * m_y - 1];
    for st in &layout.stations {
        let d = propagation_distance(config.orbit_altitude_m, st.distance_m, st.polar_angle_rad, 0.0, 0.0);
        let tx = st.distance_m * st.polar_angle_rad.cos() / config.coverage_radius_m;
        let ty = st.distance_m * st.polar_angle_rad.sin() / config.coverage_radius_m;
        total.add_point(
            layout.users_per_bs as f64 * element_gain(config, d),
            tx,
            ty,
            config.element_spacing_ratio,
            &mut ex,
            &mut ey,
        );
    }
    let matrix = total.to_matrix();
    check_hermitian_psd(&matrix)?;
    Ok(InterferenceModel {
        matrix,
        provenance: Provenance::PositionAided,
        fingerprint: layout.fingerprint(config),
        total_users: layout.total_users(),
    })
}

/// Steering vector toward the center of `station`.
pub fn station_steering(station: &Station, config: &SystemConfig) -> crate::linalg::CVec {
    let tx = station.distance_m * station.polar_angle_rad.cos() / config.coverage_radius_m;
    let ty = station.distance_m * station.polar_angle_rad.sin() / config.coverage_radius_m;
    upa_steering(tx, ty, config.m_x, config.m_y, config.element_spacing_ratio)
        .expect("validated config has positive dimensions")
}

/// `Tr(P^H Upsilon P) / K_G` in watts.
pub fn average_interference_power(p: &CMat, model: &InterferenceModel, k_g: usize) -> Result<f64> {
    if p.nrows() != model.matrix.nrows() {
        return Err(Error::DimensionMismatch {
            context: "precoder vs interference covariance",
            expected: dims(model.matrix.nrows(), p.ncols()),
            actual: dims(p.nrows(), p.ncols()),
        });
    }
    if k_g == 0 {
        return Err(Error::InvalidParameter("K_G must be at least 1".into()));
    }
    Ok(quad_trace(p, &model.matrix).max(0.0) / k_g as f64)
}
