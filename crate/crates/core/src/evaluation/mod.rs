//! Monte Carlo rates, interference audits, beam patterns, scenario files and
//! parameter sweeps.

pub mod metrics;
pub mod scenario;
pub mod sweep;

pub use metrics::{beam_pattern, ergodic_sum_rate, lower_bound_rate, sample_gain};
pub use scenario::{
    cluster_stations, generate_scenario, GeneratorOptions, NumericsSection, OperatingPoint, PreparedScenario,
    SatUserEntry, ScenarioFile, StationEntry, SystemSection, TerrestrialSection,
};
pub use sweep::{
    approximation_error_table, convergence_traces, csv_string, run_point, run_sweep, write_csv, EvalRecord, Figure,
    MseRow, PointSpec, SweepSpec, SweepVariable, TraceRow, THRESHOLD_SLACK_DB,
};
