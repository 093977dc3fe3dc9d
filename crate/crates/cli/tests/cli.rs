use std::path::Path;
use std::process::{Command, Output};

fn satbeam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satbeam"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header-keyed rows of a CSV without quoted fields.
fn rows(path: &Path) -> Vec<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field(row: &[(String, String)], key: &str) -> String {
    row.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

fn scenario(dir: &Path, extra: &[&str]) {
    let mut args = vec!["scenario", "--out", "s.toml"];
    args.extend_from_slice(extra);
    let o = satbeam(&args, dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

const FAST: [&str; 6] = ["--grid-n-r", "8", "--grid-n-phi", "16", "--mc-samples", "200"];

#[test]
fn scenario_defaults_seed_and_user_count() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &["--seed", "7", "--k-s", "24"]);
    let a = std::fs::read(dir.path().join("s.toml")).unwrap();
    scenario(dir.path(), &["--seed", "7", "--k-s", "24"]);
    assert_eq!(a, std::fs::read(dir.path().join("s.toml")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.matches("[[satellite_users]]").count(), 24);
    for key in ["p_t_dbw = 25.0", "rician_factor_db = 10.0", "m_x = 8", "cell_radius_m = 500.0", "users_per_bs = 10"] {
        assert!(text.contains(key), "missing {key}");
    }
    assert_eq!(text.matches("[[terrestrial.stations]]").count(), 7);
}

#[test]
fn run_meets_threshold_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &[]);
    let mut args = vec!["run", "-s", "s.toml", "-a", "mmseia", "-o", "a"];
    args.extend_from_slice(&FAST);
    let o = satbeam(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    args[6] = "b";
    assert_eq!(satbeam(&args, dir.path()).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("a/run_mmseia.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b/run_mmseia.csv")).unwrap());
    let r = rows(&dir.path().join("a/run_mmseia.csv"));
    assert_eq!(r.len(), 1);
    let i: f64 = field(&r[0], "i_avg_dbw").parse().unwrap();
    assert!(i <= -150.0 + 0.05, "I_avg {i}");
    assert_eq!(field(&r[0], "converged"), "true");
    assert_eq!(field(&r[0], "seconds"), "");

    // rerun from the sidecar reproduces the bytes
    let o = satbeam(&["rerun", "a/run_mmseia.json", "-o", "c"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(a, std::fs::read(dir.path().join("c/run_mmseia.csv")).unwrap());
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &[]);
    let mut args = vec!["run", "-s", "s.toml", "-a", "mmse", "--record-timing"];
    args.extend_from_slice(&FAST);
    assert_eq!(satbeam(&args, dir.path()).status.code(), Some(0));
    let r = rows(&dir.path().join("run_mmse.csv"));
    assert!(field(&r[0], "seconds").parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &[]);
    let o = satbeam(&["run", "-s", "s.toml", "-a", "bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert!(stderr(&o).contains("wqtia-pa"));
    let o = satbeam(&["sweep", "-s", "s.toml", "-f", "fig6", "--grid", ""], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = satbeam(&["sweep", "-s", "s.toml", "-f", "fig4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = satbeam(&["run", "-s", "missing.toml", "-a", "mmse"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.toml"));
}

#[test]
fn malformed_scenario_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &[]);
    let text = std::fs::read_to_string(dir.path().join("s.toml")).unwrap();
    let line = text.lines().position(|l| l.starts_with("snr_db")).unwrap() + 1;
    std::fs::write(dir.path().join("s.toml"), text.replace("snr_db = 10.0", "snr_db = ten")).unwrap();
    let o = satbeam(&["run", "-s", "s.toml", "-a", "mmse"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!("line {line}")), "{}", stderr(&o));
}

#[test]
fn fig3_table_is_monotone_in_radius() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &[]);
    let o = satbeam(&["sweep", "-s", "s.toml", "-f", "fig3", "--grid-n-r", "8", "--grid-n-phi", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&dir.path().join("fig3.csv"));
    assert_eq!(r.len(), 60);
    let mse: Vec<f64> = r.iter().map(|row| field(row, "mse").parse().unwrap()).collect();
    for chunk in mse.chunks(10) {
        assert!(chunk.windows(2).all(|w| w[1] > w[0]));
    }
    assert!(r.iter().all(|row| field(row, "figure") == "fig3"));
}

#[test]
fn fig6_sweep_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &["--k-s", "6"]);
    let mut args = vec!["sweep", "-s", "s.toml", "-f", "fig6", "--grid", "0,10", "--algorithms", "mmse,MMSEIA"];
    args.extend_from_slice(&FAST);
    let o = satbeam(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&dir.path().join("fig6.csv"));
    let keys: Vec<(String, String)> = r.iter().map(|row| (field(row, "snr_db"), field(row, "algorithm"))).collect();
    assert_eq!(
        keys,
        [("0.0", "MMSE"), ("0.0", "MMSEIA"), ("10.0", "MMSE"), ("10.0", "MMSEIA")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
    let header = std::fs::read_to_string(dir.path().join("fig6.csv")).unwrap();
    assert!(header.starts_with(
        "algorithm,snr_db,i_thr_dbw,sum_rate,sum_rate_stderr,lb_rate,i_avg_dbw,i_avg_true_dbw,iters,converged,seconds"
    ));
    let o = satbeam(&["rerun", "fig6.json", "-o", "again"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(dir.path().join("fig6.csv")).unwrap(),
        std::fs::read(dir.path().join("again/fig6.csv")).unwrap()
    );
}

#[test]
fn pattern_covers_the_disk() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), &["--k-s", "4"]);
    let o = satbeam(
        &["pattern", "-s", "s.toml", "-a", "mmse", "--points", "11", "--grid-n-r", "8", "--grid-n-phi", "16"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&dir.path().join("pattern_mmse.csv"));
    assert!(!r.is_empty() && r.len() < 121);
    for row in &r {
        let x: f64 = field(row, "x_m").parse().unwrap();
        let y: f64 = field(row, "y_m").parse().unwrap();
        assert!(x.hypot(y) <= 630e3 + 1e-6);
        assert!(field(row, "pattern_db").parse::<f64>().unwrap().is_finite());
    }
}
