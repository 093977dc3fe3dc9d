//! Operating-point runs, parameter sweeps and the figure presets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::ergodic_sum_rate;
use super::scenario::PreparedScenario;
use crate::baseline::{Algorithm, PrecoderResult};
use crate::error::{Error, Result};
use crate::interference::{approximation_mse, average_interference_power, ApproxErrorParams};
use crate::rng::SimRng;
use crate::robust::run_algorithm;
use crate::units::linear_to_db;

/// Slack on the threshold before a record is marked as violating it.
pub const THRESHOLD_SLACK_DB: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub snr_db: f64,
    pub i_thr_dbw: f64,
    pub k_s: usize,
}

/// One algorithm at one operating point. Numeric fields are NaN when the
/// run failed; `error` then holds the message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub algorithm: String,
    pub snr_db: f64,
    pub i_thr_dbw: f64,
    pub sum_rate: f64,
    pub sum_rate_stderr: f64,
    pub lb_rate: f64,
    /// Under the model the algorithm designed against.
    pub i_avg_dbw: f64,
    /// Under the integral model.
    pub i_avg_true_dbw: f64,
    pub iters: usize,
    pub converged: bool,
    pub seconds: Option<f64>,
    pub figure: String,
    pub k_s: usize,
    pub flags: String,
    pub error: Option<String>,
}

/// Runs and audits one algorithm. `mc_stream` selects the channel draws so
/// that every algorithm at a point sees the same ones.
pub fn run_point(
    prepared: &PreparedScenario,
    algorithm: Algorithm,
    point: PointSpec,
    mc_samples: usize,
    seed: u64,
    mc_stream: u64,
) -> (EvalRecord, Option<PrecoderResult>) {
    let mut rec = EvalRecord {
        algorithm: algorithm.name().to_string(),
        snr_db: point.snr_db,
        i_thr_dbw: point.i_thr_dbw,
        sum_rate: f64::NAN,
        sum_rate_stderr: f64::NAN,
        lb_rate: f64::NAN,
        i_avg_dbw: f64::NAN,
        i_avg_true_dbw: f64::NAN,
        iters: 0,
        converged: false,
        seconds: None,
        figure: String::new(),
        k_s: point.k_s,
        flags: String::new(),
        error: None,
    };
    let start = Instant::now();
    let outcome = (|| -> Result<PrecoderResult> {
        let problem = prepared.problem(point.snr_db, point.i_thr_dbw, point.k_s, algorithm.is_position_aided())?;
        let result = run_algorithm(algorithm, &problem)?;
        rec.seconds = Some(start.elapsed().as_secs_f64());
        let mut rng = SimRng::new(seed).split(mc_stream);
        let (mean, stderr) = ergodic_sum_rate(&result.p, &problem.users, mc_samples, &mut rng)?;
        rec.sum_rate = mean;
        rec.sum_rate_stderr = stderr;
        rec.lb_rate = problem.users.lower_bound_rate(&result.p);
        rec.i_avg_dbw = linear_to_db(problem.avg_interference(&result.p));
        rec.i_avg_true_dbw =
            linear_to_db(average_interference_power(&result.p, &prepared.integral, problem.k_g)?);
        rec.iters = result.iterations;
        rec.converged = result.converged;
        let mut flags = result.flags.clone();
        if algorithm.is_interference_aware() && rec.i_avg_dbw > point.i_thr_dbw + THRESHOLD_SLACK_DB {
            rec.converged = false;
            flags.push(format!("threshold exceeded by {:.3} dB", rec.i_avg_dbw - point.i_thr_dbw));
        }
        rec.flags = flags.join("; ");
        Ok(result)
    })();
    match outcome {
        Ok(r) => (rec, Some(r)),
        Err(e) => {
            rec.error = Some(e.to_string());
            (rec, None)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    IThrDbw,
    KS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub monte_carlo_samples: usize,
    pub seed: u64,
    pub figure: String,
    pub record_timing: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("sweep has no algorithms".into()));
        }
        if self.monte_carlo_samples < 100 {
            return Err(Error::InvalidParameter(format!(
                "at least 100 Monte Carlo samples required, got {}",
                self.monte_carlo_samples
            )));
        }
        if self.variable == SweepVariable::KS && self.grid.iter().any(|&k| !(k >= 1.0 && k.fract() == 0.0)) {
            return Err(Error::InvalidParameter("k_s grid must hold positive integers".into()));
        }
        Ok(())
    }

    fn point(&self, base: PointSpec, value: f64) -> PointSpec {
        match self.variable {
            SweepVariable::SnrDb => PointSpec { snr_db: value, ..base },
            SweepVariable::IThrDbw => PointSpec { i_thr_dbw: value, ..base },
            SweepVariable::KS => PointSpec { k_s: value as usize, ..base },
        }
    }
}

/// Every (grid point, algorithm) pair, in grid order then algorithm order.
/// All runs share one Monte Carlo stream, so differences along the grid are
/// not masked by sampling noise. Failed runs are recorded and the sweep
/// continues.
pub fn run_sweep(spec: &SweepSpec, prepared: &PreparedScenario, base: PointSpec) -> Result<Vec<EvalRecord>> {
    spec.validate()?;
    let jobs: Vec<(usize, Algorithm)> = (0..spec.grid.len())
        .flat_map(|i| spec.algorithms.iter().map(move |&a| (i, a)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, alg)| {
            let point = spec.point(base, spec.grid[i]);
            let (mut rec, _) = run_point(prepared, alg, point, spec.monte_carlo_samples, spec.seed, 1);
            rec.figure = spec.figure.clone();
            if !spec.record_timing {
                rec.seconds = None;
            }
            if let Some(e) = &rec.error {
                log::warn!("{} at {:?} failed: {e}", alg.name(), point);
            }
            rec
        })
        .collect())
}

/// Sweeps that reproduce the numerical figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Approximation MSE against cell radius.
    Fig3,
    /// Average interference against SNR.
    Fig5,
    /// Sum rate against SNR.
    Fig6,
    /// Convergence traces.
    Fig7,
    /// Interference and rate against the threshold.
    Fig8,
    /// Sum rate against the number of satellite UTs.
    Fig9,
    /// True interference of the position-aided designs.
    Fig10,
    /// Sum rate of the position-aided designs against SNR.
    Fig11,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::Fig3,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
        Figure::Fig11,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
            Figure::Fig11 => "fig11",
        }
    }

    /// Default sweep; `None` for the figures that are not record sweeps.
    pub fn sweep(&self, mc_samples: usize, seed: u64) -> Option<SweepSpec> {
        use Algorithm::*;
        let snr: Vec<f64> = (0..=4).map(|i| 5.0 * i as f64).collect();
        let reference = vec![Mrt, Zf, Mmse, Wmmse, Mmseia, Wweia, Wqtia];
        let (variable, grid, algorithms) = match self {
            Figure::Fig5 | Figure::Fig6 => (SweepVariable::SnrDb, snr, reference),
            Figure::Fig8 => (
                SweepVariable::IThrDbw,
                (0..=6).map(|i| -140.0 - 5.0 * i as f64).collect(),
                vec![Mmse, Wmmse, Mmseia, Wweia, Wqtia],
            ),
            Figure::Fig9 => (
                SweepVariable::KS,
                (1..=12).map(|i| 4.0 * i as f64).collect(),
                vec![Mmse, Wmmse, Mmseia, Wweia],
            ),
            Figure::Fig10 => (SweepVariable::SnrDb, vec![10.0], vec![Mmseia, MmseiaPa, Wweia, WweiaPa, Wqtia, WqtiaPa]),
            Figure::Fig11 => (SweepVariable::SnrDb, snr, vec![Mmseia, MmseiaPa, Wweia, WweiaPa, Wqtia, WqtiaPa]),
            Figure::Fig3 | Figure::Fig7 => return None,
        };
        Some(SweepSpec {
            variable,
            grid,
            algorithms,
            monte_carlo_samples: mc_samples,
            seed,
            figure: self.tag().into(),
            record_timing: false,
        })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Figure::ALL
            .into_iter()
            .find(|f| f.tag() == t)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown figure `{s}` (expected one of fig3, fig5..fig11)")))
    }
}

/// One approximation-error value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub figure: String,
    pub carrier_frequency_hz: f64,
    pub user_density_per_m2: f64,
    pub r_bs_m: f64,
    pub mse: f64,
}

/// Approximation MSE of a single cell at the sub-satellite point over
/// `R_bs in {100, ..., 1000}` m, `f in {2, 4, 6}` GHz, two densities.
pub fn approximation_error_table(prepared: &PreparedScenario) -> Vec<MseRow> {
    let cfg = &prepared.config;
    let mut rows = Vec::new();
    for &rho in &[1e-4, 2e-4] {
        for &f in &[2e9, 4e9, 6e9] {
            for i in 1..=10 {
                let r_bs = 100.0 * i as f64;
                let params = ApproxErrorParams {
                    cell_radius_m: r_bs,
                    user_density_per_m2: rho,
                    carrier_frequency_hz: f,
                    orbit_altitude_m: cfg.orbit_altitude_m,
                    coverage_radius_m: cfg.coverage_radius_m,
                    tx_gain_linear: cfg.per_antenna_tx_gain_linear,
                    rx_gain_linear: cfg.rx_gain_linear,
                };
                rows.push(MseRow {
                    figure: "fig3".into(),
                    carrier_frequency_hz: f,
                    user_density_per_m2: rho,
                    r_bs_m: r_bs,
                    mse: approximation_mse(cfg.m_x, cfg.m_y, &params),
                });
            }
        }
    }
    rows
}

/// One outer iteration of an iterative design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub figure: String,
    pub algorithm: String,
    pub snr_db: f64,
    pub iteration: usize,
    /// Lower-bound rate for WQTIA, weighted MSE cost for WWEIA/WMMSE.
    pub objective: f64,
    pub i_avg_dbw: f64,
}

/// Objective traces of WQTIA, WWEIA and WMMSE at SNR 0, 10 and 20 dB.
pub fn convergence_traces(prepared: &PreparedScenario, i_thr_dbw: f64, k_s: usize) -> Vec<TraceRow> {
    let jobs: Vec<(f64, Algorithm)> = [0.0, 10.0, 20.0]
        .iter()
        .flat_map(|&s| [Algorithm::Wqtia, Algorithm::Wweia, Algorithm::Wmmse].map(|a| (s, a)))
        .collect();
    jobs.par_iter()
        .map(|&(snr, alg)| {
            let run = prepared
                .problem(snr, i_thr_dbw, k_s, false)
                .and_then(|p| run_algorithm(alg, &p));
            match run {
                Ok(r) => r
                    .trace
                    .iter()
                    .map(|t| TraceRow {
                        figure: "fig7".into(),
                        algorithm: alg.name().into(),
                        snr_db: snr,
                        iteration: t.iteration,
                        objective: t.objective,
                        i_avg_dbw: linear_to_db(t.avg_interference_w),
                    })
                    .collect(),
                Err(e) => {
                    log::warn!("{} at {snr} dB failed: {e}", alg.name());
                    Vec::new()
                }
            }
        })
        .collect::<Vec<Vec<TraceRow>>>()
        .concat()
}

/// Serializes rows with a header line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
