//! Scenario files: system parameters, satellite UT positions and the
//! terrestrial layout, stored as TOML with units in the key names.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_sat_user_stats, SatUserGeometry, SystemConfig};
use crate::interference::{
    integral_interference_matrix, pa_interference_matrix, Density, InterferenceModel, PolarGrid, Station,
    TerrestrialLayout,
};
use crate::problem::{RobustProblem, Users};
use crate::rng::SimRng;
use crate::units::{db_to_linear, linear_to_db};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    pub carrier_frequency_hz: f64,
    pub orbit_altitude_m: f64,
    pub coverage_radius_m: f64,
    pub m_x: usize,
    pub m_y: usize,
    pub p_t_dbw: f64,
    pub rician_factor_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub antenna_temp_k: f64,
    pub bandwidth_hz: f64,
    pub element_spacing_wavelengths: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self::from_config(&SystemConfig::default())
    }
}

impl SystemSection {
    pub fn from_config(c: &SystemConfig) -> Self {
        Self {
            carrier_frequency_hz: c.carrier_frequency_hz,
            orbit_altitude_m: c.orbit_altitude_m,
            coverage_radius_m: c.coverage_radius_m,
            m_x: c.m_x,
            m_y: c.m_y,
            p_t_dbw: linear_to_db(c.tx_power_w),
            rician_factor_db: linear_to_db(c.rician_factor_linear),
            tx_gain_dbi: linear_to_db(c.per_antenna_tx_gain_linear),
            rx_gain_dbi: linear_to_db(c.rx_gain_linear),
            noise_figure_db: linear_to_db(c.noise_figure_linear),
            antenna_temp_k: c.antenna_temp_k,
            bandwidth_hz: c.bandwidth_hz,
            element_spacing_wavelengths: c.element_spacing_ratio,
        }
    }

    pub fn to_config(&self) -> Result<SystemConfig> {
        let c = SystemConfig {
            carrier_frequency_hz: self.carrier_frequency_hz,
            orbit_altitude_m: self.orbit_altitude_m,
            coverage_radius_m: self.coverage_radius_m,
            m_x: self.m_x,
            m_y: self.m_y,
            tx_power_w: db_to_linear(self.p_t_dbw),
            rician_factor_linear: db_to_linear(self.rician_factor_db),
            per_antenna_tx_gain_linear: db_to_linear(self.tx_gain_dbi),
            rx_gain_linear: db_to_linear(self.rx_gain_dbi),
            noise_figure_linear: db_to_linear(self.noise_figure_db),
            antenna_temp_k: self.antenna_temp_k,
            bandwidth_hz: self.bandwidth_hz,
            element_spacing_ratio: self.element_spacing_wavelengths,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub snr_db: f64,
    /// `inf` disables the constraint.
    pub i_thr_dbw: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self {
            snr_db: 10.0,
            i_thr_dbw: -150.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericsSection {
    pub grid_n_r: usize,
    pub grid_n_phi: usize,
    pub mc_samples: usize,
    pub tolerance: f64,
    pub iter_max: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let g = PolarGrid::default();
        Self {
            grid_n_r: g.n_radial,
            grid_n_phi: g.n_angular,
            mc_samples: 2000,
            tolerance: 1e-4,
            iter_max: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationEntry {
    pub distance_m: f64,
    pub polar_angle_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrestrialSection {
    pub cell_radius_m: f64,
    pub users_per_bs: usize,
    /// `uniform` or `linear_falloff`.
    pub density: String,
    pub stations: Vec<StationEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatUserEntry {
    /// Ground offset from the sub-satellite point.
    pub x_m: f64,
    pub y_m: f64,
    pub weight: f64,
}

/// Everything needed to rebuild a problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub seed: u64,
    pub system: SystemSection,
    pub operating_point: OperatingPoint,
    pub numerics: NumericsSection,
    pub terrestrial: TerrestrialSection,
    pub satellite_users: Vec<SatUserEntry>,
}

impl ScenarioFile {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("cannot serialize scenario: {e}")))
    }

    /// Parses TOML text; syntax and schema errors report a 1-based line.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn layout(&self) -> Result<TerrestrialLayout> {
        let t = &self.terrestrial;
        let layout = TerrestrialLayout {
            stations: t
                .stations
                .iter()
                .map(|s| Station {
                    distance_m: s.distance_m,
                    polar_angle_rad: s.polar_angle_rad,
                })
                .collect(),
            cell_radius_m: t.cell_radius_m,
            users_per_bs: t.users_per_bs,
            density: Density::from_name(&t.density)?,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn grid(&self) -> PolarGrid {
        PolarGrid {
            n_radial: self.numerics.grid_n_r,
            n_angular: self.numerics.grid_n_phi,
        }
    }
}

/// Placement knobs of [`generate_scenario`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorOptions {
    pub k_s: usize,
    pub seed: u64,
    /// Distance of the cluster center from the sub-satellite point.
    pub cluster_distance_m: f64,
    pub cluster_polar_angle_rad: f64,
    /// Distance of the six ring stations from the cluster center.
    pub ring_radius_m: f64,
    /// Number of stations: one at the cluster center, the rest on the ring.
    pub n_g: usize,
    pub cell_radius_m: f64,
    pub users_per_bs: usize,
    /// Satellite UTs are kept this far from the cluster center.
    pub guard_radius_m: f64,
    pub system: SystemConfig,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        let system = SystemConfig::default();
        Self {
            k_s: 12,
            seed: 1,
            cluster_distance_m: 0.75 * system.coverage_radius_m,
            cluster_polar_angle_rad: 0.0,
            ring_radius_m: 25e3,
            n_g: 7,
            cell_radius_m: 500.0,
            users_per_bs: 10,
            guard_radius_m: 200e3,
            system,
        }
    }
}

/// Terrestrial cluster around `(d, angle)` in polar station coordinates.
pub fn cluster_stations(opts: &GeneratorOptions) -> Vec<StationEntry> {
    let (cx, cy) = (
        opts.cluster_distance_m * opts.cluster_polar_angle_rad.cos(),
        opts.cluster_distance_m * opts.cluster_polar_angle_rad.sin(),
    );
    let ring = opts.n_g.saturating_sub(1);
    std::iter::once((cx, cy))
        .chain((0..ring).map(|i| {
            let a = 2.0 * PI * i as f64 / ring as f64;
            (cx + opts.ring_radius_m * a.cos(), cy + opts.ring_radius_m * a.sin())
        }))
        .take(opts.n_g)
        .map(|(x, y)| StationEntry {
            distance_m: x.hypot(y),
            polar_angle_rad: y.atan2(x),
        })
        .collect()
}

/// Seed-deterministic scenario: satellite UTs uniform over the coverage disk
/// outside the guard zone, stations as a center plus ring.
pub fn generate_scenario(opts: &GeneratorOptions) -> Result<ScenarioFile> {
    opts.system.validate()?;
    if opts.k_s == 0 || opts.n_g == 0 || opts.users_per_bs == 0 {
        return Err(Error::InvalidParameter("k_s, n_g and users_per_bs must be positive".into()));
    }
    let r = opts.system.coverage_radius_m;
    let (cx, cy) = (
        opts.cluster_distance_m * opts.cluster_polar_angle_rad.cos(),
        opts.cluster_distance_m * opts.cluster_polar_angle_rad.sin(),
    );
    let mut rng = SimRng::new(opts.seed).split(0);
    let mut users = Vec::with_capacity(opts.k_s);
    let mut attempts = 0usize;
    while users.len() < opts.k_s {
        attempts += 1;
        if attempts > 1000 * opts.k_s {
            return Err(Error::InvalidParameter(
                "guard zone leaves too little of the coverage area for the satellite UTs".into(),
            ));
        }
        let x = rng.random_range(-r..r);
        let y = rng.random_range(-r..r);
        if x * x + y * y > r * r || (x - cx).hypot(y - cy) < opts.guard_radius_m {
            continue;
        }
        users.push(SatUserEntry { x_m: x, y_m: y, weight: 1.0 });
    }
    Ok(ScenarioFile {
        seed: opts.seed,
        system: SystemSection::from_config(&opts.system),
        operating_point: OperatingPoint::default(),
        numerics: NumericsSection::default(),
        terrestrial: TerrestrialSection {
            cell_radius_m: opts.cell_radius_m,
            users_per_bs: opts.users_per_bs,
            density: "uniform".into(),
            stations: cluster_stations(opts),
        },
        satellite_users: users,
    })
}

/// A scenario with its covariance models computed once.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub file: ScenarioFile,
    pub config: SystemConfig,
    pub layout: TerrestrialLayout,
    pub geometries: Vec<SatUserGeometry>,
    pub integral: InterferenceModel,
    pub position_aided: InterferenceModel,
}

impl PreparedScenario {
    pub fn new(file: ScenarioFile) -> Result<Self> {
        let config = file.system.to_config()?;
        let layout = file.layout()?;
        if file.satellite_users.is_empty() {
            return Err(Error::InvalidParameter("scenario has no satellite users".into()));
        }
        let geometries = file
            .satellite_users
            .iter()
            .map(|u| SatUserGeometry::from_ground_offset(u.x_m, u.y_m, &config))
            .collect::<Result<Vec<_>>>()?;
        let integral = integral_interference_matrix(&layout, &config, &file.grid())?;
        let position_aided = pa_interference_matrix(&layout, &config)?;
        Ok(Self {
            file,
            config,
            layout,
            geometries,
            integral,
            position_aided,
        })
    }

    pub fn max_users(&self) -> usize {
        self.geometries.len()
    }

    /// Statistics of the first `k_s` users with the noise set for `snr_db`.
    pub fn users(&self, snr_db: f64, k_s: usize) -> Result<Users> {
        if k_s == 0 || k_s > self.max_users() {
            return Err(Error::InvalidParameter(format!(
                "k_s = {k_s} outside 1..={} available satellite users",
                self.max_users()
            )));
        }
        let stats = self.geometries[..k_s]
            .iter()
            .zip(&self.file.satellite_users)
            .map(|(g, u)| {
                let mut s = build_sat_user_stats(g, &self.config, snr_db, k_s)?;
                s.weight = u.weight;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Users::from_stats(&stats)
    }

    /// Problem instance; `position_aided` selects the base-station model.
    pub fn problem(&self, snr_db: f64, i_thr_dbw: f64, k_s: usize, position_aided: bool) -> Result<RobustProblem> {
        let model = if position_aided { &self.position_aided } else { &self.integral };
        let mut p = RobustProblem::new(
            self.users(snr_db, k_s)?,
            model.clone(),
            db_to_linear(i_thr_dbw),
            self.config.tx_power_w,
        )?;
        p.tolerance = self.file.numerics.tolerance;
        p.iter_max = self.file.numerics.iter_max;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let s = generate_scenario(&GeneratorOptions::default()).unwrap();
        let text = s.to_toml().unwrap();
        let back = ScenarioFile::from_toml(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn infinite_threshold_round_trips() {
        let mut s = generate_scenario(&GeneratorOptions::default()).unwrap();
        s.operating_point.i_thr_dbw = f64::INFINITY;
        let back = ScenarioFile::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(back.operating_point.i_thr_dbw, f64::INFINITY);
    }

    #[test]
    fn same_seed_same_bytes_and_k_s_respected() {
        let opts = GeneratorOptions {
            k_s: 24,
            seed: 7,
            ..Default::default()
        };
        let a = generate_scenario(&opts).unwrap().to_toml().unwrap();
        let b = generate_scenario(&opts).unwrap().to_toml().unwrap();
        assert_eq!(a, b);
        assert_eq!(generate_scenario(&opts).unwrap().satellite_users.len(), 24);
        let other = generate_scenario(&GeneratorOptions { seed: 8, ..opts }).unwrap();
        assert_ne!(other.to_toml().unwrap(), a);
    }

    #[test]
    fn placement_respects_coverage_and_guard() {
        let opts = GeneratorOptions {
            k_s: 200,
            ..Default::default()
        };
        let s = generate_scenario(&opts).unwrap();
        let r = opts.system.coverage_radius_m;
        for u in &s.satellite_users {
            assert!(u.x_m.hypot(u.y_m) <= r);
            assert!((u.x_m - opts.cluster_distance_m).hypot(u.y_m) >= opts.guard_radius_m);
        }
        let st = &s.terrestrial.stations;
        assert_eq!(st.len(), 7);
        assert!((st[0].distance_m - opts.cluster_distance_m).abs() < 1e-6);
        for e in &st[1..] {
            let (x, y) = (e.distance_m * e.polar_angle_rad.cos(), e.distance_m * e.polar_angle_rad.sin());
            assert!(((x - opts.cluster_distance_m).hypot(y) - opts.ring_radius_m).abs() < 1e-6);
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let s = generate_scenario(&GeneratorOptions::default()).unwrap();
        let text = s.to_toml().unwrap();
        let target = text.lines().position(|l| l.starts_with("m_x")).unwrap();
        let broken: Vec<String> = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i == target { "m_x = \"eight\"".to_string() } else { l.to_string() })
            .collect();
        match ScenarioFile::from_toml(&broken.join("\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, target + 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match ScenarioFile::from_toml("seed = 1\nsystem = [") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn prepared_scenario_builds_both_models() {
        let s = generate_scenario(&GeneratorOptions::default()).unwrap();
        let p = PreparedScenario::new(s).unwrap();
        assert_eq!(p.integral.total_users, 70);
        assert!(p.position_aided.is_position_aided());
        let prob = p.problem(10.0, -150.0, 12, false).unwrap();
        assert_eq!(prob.users.num_users(), 12);
        assert!(p.users(10.0, 13).is_err());
    }
}
