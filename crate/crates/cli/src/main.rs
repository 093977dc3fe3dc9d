//! `satbeam`: scenario generation, single runs, figure sweeps and beam
//! patterns for interference-aware satellite beamforming.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use satbeam::baseline::Algorithm;
use satbeam::error::{Error, Result};
use satbeam::evaluation::{
    approximation_error_table, beam_pattern, convergence_traces, generate_scenario, run_point, run_sweep, write_csv,
    Figure, GeneratorOptions, PointSpec, PreparedScenario, ScenarioFile, SweepSpec,
};
use satbeam::geometry::SystemConfig;
use satbeam::robust::run_algorithm;

const ALGORITHM_NAMES: [&str; 10] = [
    "mrt", "zf", "mmse", "wmmse", "wqtia", "wweia", "mmseia", "wqtia-pa", "wweia-pa", "mmseia-pa",
];

fn algorithm_parser() -> impl TypedValueParser<Value = Algorithm> {
    PossibleValuesParser::new(ALGORITHM_NAMES).map(|s| s.parse::<Algorithm>().expect("listed names parse"))
}

const BUILD_ID: &str = concat!("satbeam-", env!("CARGO_PKG_VERSION"));

#[derive(Parser, Debug)]
#[command(name = "satbeam", version, about = "Interference-aware satellite transmit beamforming")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a scenario file with the default system parameters.
    Scenario(ScenarioArgs),
    /// Run one algorithm at one operating point.
    Run(RunArgs),
    /// Run a figure sweep.
    Sweep(SweepArgs),
    /// Write the beam pattern of one precoder over the coverage area.
    Pattern(PatternArgs),
    /// Repeat a run, sweep or pattern from its JSON sidecar.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(short, long, default_value = "scenario.toml")]
    out: PathBuf,
    #[arg(long, default_value_t = 12)]
    k_s: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Distance of the terrestrial cluster from the sub-satellite point.
    #[arg(long)]
    cluster_distance_m: Option<f64>,
    #[arg(long)]
    ring_radius_m: Option<f64>,
    #[arg(long)]
    guard_radius_m: Option<f64>,
    #[arg(long)]
    r_bs_m: Option<f64>,
    #[arg(long)]
    n_g: Option<usize>,
    #[arg(long)]
    users_per_bs: Option<usize>,
}

/// Options shared by every command that reads a scenario.
#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(long)]
    snr_db: Option<f64>,
    /// `inf` disables the interference constraint.
    #[arg(long, allow_hyphen_values = true)]
    i_thr_dbw: Option<f64>,
    /// Use only the first `k_s` satellite UTs of the scenario.
    #[arg(long)]
    k_s: Option<usize>,
    /// Seed of the Monte Carlo draws (defaults to the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    grid_n_r: Option<usize>,
    #[arg(long)]
    grid_n_phi: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    iter_max: Option<usize>,
    /// Include wall time in the records (breaks byte-identical reruns).
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, long, value_parser = algorithm_parser(), ignore_case = true)]
    algorithm: Algorithm,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, long)]
    figure: Figure,
    /// Replace the figure's default grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Replace the figure's default algorithm list.
    #[arg(long, value_delimiter = ',', value_parser = algorithm_parser(), ignore_case = true)]
    algorithms: Option<Vec<Algorithm>>,
}

#[derive(Args, Debug)]
struct PatternArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, long, value_parser = algorithm_parser(), ignore_case = true)]
    algorithm: Algorithm,
    /// Grid points per axis across the coverage diameter.
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Debug)]
struct RerunArgs {
    sidecar: PathBuf,
    /// Defaults to `rerun/` next to the sidecar.
    #[arg(short, long)]
    out_dir: Option<PathBuf>,
}

/// What was run; together with the resolved scenario this reproduces the
/// outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Invocation {
    Run {
        algorithm: Algorithm,
        k_s: usize,
        seed: u64,
        record_timing: bool,
    },
    Sweep {
        figure: Figure,
        k_s: usize,
        seed: u64,
        spec: Option<SweepSpec>,
    },
    Pattern {
        algorithm: Algorithm,
        k_s: usize,
        points: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    build_id: String,
    invocation: Invocation,
    /// Resolved scenario, overrides applied, as TOML text.
    scenario_toml: String,
}

/// Successful exit, or completion with flagged non-convergence.
enum Outcome {
    Converged,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            if !informational {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    match dispatch(cli.command) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Scenario(a) => cmd_scenario(a),
        Command::Run(a) => {
            let (file, seed, k_s) = resolve(&a.common)?;
            let inv = Invocation::Run {
                algorithm: a.algorithm,
                k_s,
                seed,
                record_timing: a.common.record_timing,
            };
            execute(&inv, file, &a.common.out_dir)
        }
        Command::Sweep(a) => {
            let (file, seed, k_s) = resolve(&a.common)?;
            let spec = match a.figure.sweep(file.numerics.mc_samples, seed) {
                Some(mut spec) => {
                    if let Some(g) = a.grid {
                        spec.grid = g;
                    }
                    if let Some(algs) = a.algorithms {
                        spec.algorithms = algs;
                    }
                    spec.record_timing = a.common.record_timing;
                    spec.validate()?;
                    Some(spec)
                }
                None if a.grid.is_some() || a.algorithms.is_some() => {
                    return Err(Error::InvalidParameter(format!(
                        "{} has a fixed grid; --grid and --algorithms do not apply",
                        a.figure
                    )))
                }
                None => None,
            };
            let inv = Invocation::Sweep {
                figure: a.figure,
                k_s,
                seed,
                spec,
            };
            execute(&inv, file, &a.common.out_dir)
        }
        Command::Pattern(a) => {
            let (file, _, k_s) = resolve(&a.common)?;
            if a.points < 2 {
                return Err(Error::InvalidParameter("--points must be at least 2".into()));
            }
            let inv = Invocation::Pattern {
                algorithm: a.algorithm,
                k_s,
                points: a.points,
            };
            execute(&inv, file, &a.common.out_dir)
        }
        Command::Rerun(a) => {
            let text = std::fs::read_to_string(&a.sidecar)?;
            let sidecar: Sidecar = serde_json::from_str(&text)?;
            if sidecar.build_id != BUILD_ID {
                log::warn!("sidecar was written by {}, this is {BUILD_ID}", sidecar.build_id);
            }
            let file = ScenarioFile::from_toml(&sidecar.scenario_toml)?;
            let out_dir = a.out_dir.unwrap_or_else(|| {
                a.sidecar.parent().unwrap_or(Path::new(".")).join("rerun")
            });
            execute(&sidecar.invocation, file, &out_dir)
        }
    }
}

fn cmd_scenario(a: ScenarioArgs) -> Result<Outcome> {
    let d = GeneratorOptions::default();
    let opts = GeneratorOptions {
        k_s: a.k_s,
        seed: a.seed,
        cluster_distance_m: a.cluster_distance_m.unwrap_or(d.cluster_distance_m),
        ring_radius_m: a.ring_radius_m.unwrap_or(d.ring_radius_m),
        guard_radius_m: a.guard_radius_m.unwrap_or(d.guard_radius_m),
        cell_radius_m: a.r_bs_m.unwrap_or(d.cell_radius_m),
        n_g: a.n_g.unwrap_or(d.n_g),
        users_per_bs: a.users_per_bs.unwrap_or(d.users_per_bs),
        system: SystemConfig::default(),
        ..d
    };
    let s = generate_scenario(&opts)?;
    s.save(&a.out)?;
    log::info!("wrote {} with {} satellite UTs", a.out.display(), s.satellite_users.len());
    Ok(Outcome::Converged)
}

/// Loads the scenario and folds the command-line overrides into it.
fn resolve(c: &Common) -> Result<(ScenarioFile, u64, usize)> {
    let mut file = ScenarioFile::load(&c.scenario).map_err(|e| match e {
        Error::Io(io) => Error::InvalidParameter(format!("cannot read {}: {io}", c.scenario.display())),
        other => other,
    })?;
    let op = &mut file.operating_point;
    op.snr_db = c.snr_db.unwrap_or(op.snr_db);
    op.i_thr_dbw = c.i_thr_dbw.unwrap_or(op.i_thr_dbw);
    let n = &mut file.numerics;
    n.grid_n_r = c.grid_n_r.unwrap_or(n.grid_n_r);
    n.grid_n_phi = c.grid_n_phi.unwrap_or(n.grid_n_phi);
    n.mc_samples = c.mc_samples.unwrap_or(n.mc_samples);
    n.tolerance = c.tolerance.unwrap_or(n.tolerance);
    n.iter_max = c.iter_max.unwrap_or(n.iter_max);
    let seed = c.seed.unwrap_or(file.seed);
    let k_s = c.k_s.unwrap_or(file.satellite_users.len());
    Ok((file, seed, k_s))
}

fn write_sidecar(path: &Path, invocation: &Invocation, file: &ScenarioFile) -> Result<()> {
    let sidecar = Sidecar {
        build_id: BUILD_ID.into(),
        invocation: invocation.clone(),
        scenario_toml: file.to_toml()?,
    };
    std::fs::write(path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

fn execute(inv: &Invocation, file: ScenarioFile, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)?;
    let op = file.operating_point.clone();
    match inv {
        Invocation::Run {
            algorithm,
            k_s,
            seed,
            record_timing,
        } => {
            let mc = file.numerics.mc_samples;
            let prepared = PreparedScenario::new(file.clone())?;
            let point = PointSpec {
                snr_db: op.snr_db,
                i_thr_dbw: op.i_thr_dbw,
                k_s: *k_s,
            };
            let (mut rec, _) = run_point(&prepared, *algorithm, point, mc, *seed, 1);
            rec.figure = "run".into();
            if !record_timing {
                rec.seconds = None;
            }
            let stem = format!("run_{}", algorithm.name().to_ascii_lowercase());
            write_csv(&out_dir.join(format!("{stem}.csv")), std::slice::from_ref(&rec))?;
            write_sidecar(&out_dir.join(format!("{stem}.json")), inv, &file)?;
            if let Some(e) = rec.error {
                return Err(Error::InvalidParameter(format!("{} failed: {e}", algorithm.name())));
            }
            println!(
                "{}: sum rate {:.4} +/- {:.4} bit/s/Hz, lower bound {:.4}, I_avg {:.3} dBW (integral model {:.3} dBW), {} iterations{}",
                rec.algorithm,
                rec.sum_rate,
                rec.sum_rate_stderr,
                rec.lb_rate,
                rec.i_avg_dbw,
                rec.i_avg_true_dbw,
                rec.iters,
                if rec.converged { "" } else { ", NOT converged" }
            );
            Ok(if rec.converged { Outcome::Converged } else { Outcome::NotConverged })
        }
        Invocation::Sweep { figure, k_s, spec, .. } => {
            let stem = figure.tag();
            let prepared = PreparedScenario::new(file.clone())?;
            let outcome = match (figure, spec) {
                (Figure::Fig3, _) => {
                    write_csv(&out_dir.join(format!("{stem}.csv")), &approximation_error_table(&prepared))?;
                    Outcome::Converged
                }
                (Figure::Fig7, _) => {
                    let rows = convergence_traces(&prepared, op.i_thr_dbw, *k_s);
                    write_csv(&out_dir.join(format!("{stem}.csv")), &rows)?;
                    Outcome::Converged
                }
                (_, Some(spec)) => {
                    let base = PointSpec {
                        snr_db: op.snr_db,
                        i_thr_dbw: op.i_thr_dbw,
                        k_s: *k_s,
                    };
                    let recs = run_sweep(spec, &prepared, base)?;
                    write_csv(&out_dir.join(format!("{stem}.csv")), &recs)?;
                    let bad = recs.iter().filter(|r| !r.converged || r.error.is_some()).count();
                    if bad > 0 {
                        eprintln!("{bad} of {} runs failed or did not converge", recs.len());
                        Outcome::NotConverged
                    } else {
                        Outcome::Converged
                    }
                }
                (_, None) => return Err(Error::InvalidParameter(format!("{figure} needs a sweep spec"))),
            };
            write_sidecar(&out_dir.join(format!("{stem}.json")), inv, &file)?;
            println!("wrote {}", out_dir.join(format!("{stem}.csv")).display());
            Ok(outcome)
        }
        Invocation::Pattern { algorithm, k_s, points } => {
            let prepared = PreparedScenario::new(file.clone())?;
            let problem = prepared.problem(op.snr_db, op.i_thr_dbw, *k_s, algorithm.is_position_aided())?;
            let result = run_algorithm(*algorithm, &problem)?;
            let r = prepared.config.coverage_radius_m;
            let axis: Vec<f64> = (0..*points)
                .map(|i| -r + 2.0 * r * i as f64 / (*points - 1) as f64)
                .collect();
            let mut rows = Vec::new();
            for &y in &axis {
                let xs: Vec<f64> = axis.iter().copied().filter(|x| x * x + y * y <= r * r).collect();
                if xs.is_empty() {
                    continue;
                }
                let values = beam_pattern(&result.p, &prepared.config, &xs, &[y])?;
                rows.extend(xs.iter().zip(&values[0]).map(|(&x, &v)| PatternRow {
                    x_m: x,
                    y_m: y,
                    pattern_db: v,
                }));
            }
            let stem = format!("pattern_{}", algorithm.name().to_ascii_lowercase());
            write_csv(&out_dir.join(format!("{stem}.csv")), &rows)?;
            write_sidecar(&out_dir.join(format!("{stem}.json")), inv, &file)?;
            println!("wrote {}", out_dir.join(format!("{stem}.csv")).display());
            Ok(if result.converged { Outcome::Converged } else { Outcome::NotConverged })
        }
    }
}

#[derive(Serialize)]
struct PatternRow {
    x_m: f64,
    y_m: f64,
    pattern_db: f64,
}
