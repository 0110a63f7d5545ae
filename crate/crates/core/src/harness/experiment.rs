//! Running scenarios and writing their artifacts.
//!
//! A run directory holds `trajectory.csv`, `metrics.toml` and `verdict.toml`.
//! Scenarios with a `[robustness]` section are also flown in the other plant
//! mode; that run goes to `reference_trajectory.csv` and the comparison into
//! the verdict.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::export::{write_planar_csv, write_toml, write_trajectory_csv};
use super::scenario::Scenario;
use super::{io_err, HarnessResult};
use crate::aero::AeroMode;
use crate::analysis::{compute_metrics, robustness_compare, tracking_errors, RobustnessReport, RunMetrics};
use crate::canonical_2d::{PlanarSample, PlanarSystem};
use crate::closed_loop::TrajectoryLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    /// The worse of two outcomes.
    pub fn worst(self, other: Status) -> Status {
        if self.exit_code() >= other.exit_code() {
            self
        } else {
            other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureInfo>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessReport<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub scenario: String,
    pub plant: AeroMode,
    pub metrics: RunMetrics<f64>,
}

/// Logs and verdict of one experiment, kept in memory for callers that want
/// more than the files.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub verdict: Verdict,
    pub log: TrajectoryLog<f64>,
    pub reference: Option<TrajectoryLog<f64>>,
    pub metrics: Option<RunMetrics<f64>>,
}

/// Pass/fail checks of a single log against the scenario's tolerances.
pub fn evaluate(scenario: &Scenario, log: &TrajectoryLog<f64>) -> (Vec<Check>, Option<RunMetrics<f64>>) {
    let tol = &scenario.tolerances;
    let mut checks = vec![Check {
        name: "completed".into(),
        passed: log.completed(),
        detail: match &log.failure {
            None => format!("reached t = {}", log.last().map_or(0.0, |r| r.t)),
            Some(f) => format!("stopped at t = {}: {}", f.t, f.error),
        },
    }];
    let metrics = compute_metrics(log, &scenario.program).ok();
    if let Some(m) = &metrics {
        let worst_final = m.final_path_error.max(m.final_attitude_error);
        checks.push(Check {
            name: "final_error".into(),
            passed: worst_final <= tol.final_error,
            detail: format!("max(|θ̄|, |ϑ̄|) at the end = {worst_final:e}, limit {:e}", tol.final_error),
        });
        if let Some(limit) = tol.max_error {
            let worst = m.sup_path_error.max(m.sup_attitude_error);
            checks.push(Check {
                name: "max_error".into(),
                passed: worst <= limit,
                detail: format!("sup max(|θ̄|, |ϑ̄|) = {worst:e}, limit {limit:e}"),
            });
        }
    }
    (checks, metrics)
}

/// Runs `scenario` and writes its artifacts into `out/<name>`.
pub fn run_experiment(scenario: &Scenario, out: &Path) -> HarnessResult<Outcome> {
    run_experiment_in(scenario, &out.join(&scenario.name))
}

/// Runs `scenario` and writes its artifacts into `dir`.
pub fn run_experiment_in(scenario: &Scenario, dir: &Path) -> HarnessResult<Outcome> {
    let sim = scenario.simulation()?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let log = sim.run();
    write_trajectory_csv(&log, &dir.join("trajectory.csv"))?;
    let (mut checks, metrics) = evaluate(scenario, &log);
    if let Some(m) = metrics {
        write_toml(
            &MetricsSummary { scenario: scenario.name.clone(), plant: scenario.plant, metrics: m },
            &dir.join("metrics.toml"),
        )?;
    }

    let mut reference = None;
    let mut robustness = None;
    if let Some(tol) = &scenario.robustness {
        let other = match scenario.plant {
            AeroMode::Full => AeroMode::Simplified,
            AeroMode::Simplified => AeroMode::Full,
        };
        let ref_log = scenario.with_plant(other).simulation()?.run();
        write_trajectory_csv(&ref_log, &dir.join("reference_trajectory.csv"))?;
        let (simplified, full) = match scenario.plant {
            AeroMode::Full => (&ref_log, &log),
            AeroMode::Simplified => (&log, &ref_log),
        };
        let report = robustness_compare(simplified, full, &scenario.program, tol)?;
        checks.push(Check {
            name: "robustness".into(),
            passed: report.passed,
            detail: match report.first_exceedance {
                Some((c, t)) => format!("{} difference first exceeded its limit at t = {t}", c.name()),
                None => format!(
                    "simplified converged: {}, full converged: {}",
                    report.simplified_converged, report.full_converged
                ),
            },
        });
        robustness = Some(report);
        reference = Some(ref_log);
    }

    let failure = log.failure.as_ref().map(|f| FailureInfo { t: f.t, message: f.error.to_string() });
    let status = if failure.is_some() {
        Status::Error
    } else if checks.iter().all(|c| c.passed) {
        Status::Pass
    } else {
        Status::Fail
    };
    let verdict = Verdict { scenario: scenario.name.clone(), status, failure, checks, robustness };
    write_toml(&verdict, &dir.join("verdict.toml"))?;
    Ok(Outcome { dir: dir.to_path_buf(), verdict, log, reference, metrics })
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: Status,
    pub final_path_error: Option<f64>,
    pub final_attitude_error: Option<f64>,
    pub path_decay_rate: Option<f64>,
}

/// Runs one copy of `scenario` per value of `param`, in parallel. Each run
/// writes to `out/<name>/<param>=<value>/`; the summary goes to
/// `out/<name>/sweep.csv`.
pub fn run_sweep(scenario: &Scenario, param: &str, values: &[f64], out: &Path) -> HarnessResult<Vec<SweepRow>> {
    let base = out.join(&scenario.name);
    let variants =
        values.iter().map(|&v| scenario.with_param(param, v).map(|s| (v, s))).collect::<HarnessResult<Vec<_>>>()?;
    let rows = variants
        .par_iter()
        .map(|(value, s)| {
            let outcome = run_experiment_in(s, &base.join(format!("{param}={value}")))?;
            let m = outcome.metrics;
            Ok(SweepRow {
                value: *value,
                status: outcome.verdict.status,
                final_path_error: m.map(|m| m.final_path_error),
                final_attitude_error: m.map(|m| m.final_attitude_error),
                path_decay_rate: m.and_then(|m| m.path_decay_rate),
            })
        })
        .collect::<HarnessResult<Vec<_>>>()?;

    let path = base.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["value", "status", "final_path_error", "final_attitude_error", "path_decay_rate"])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:.16e}"));
    for r in &rows {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        };
        w.write_record([
            format!("{:.16e}", r.value),
            status.to_string(),
            opt(r.final_path_error),
            opt(r.final_attitude_error),
            opt(r.path_decay_rate),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(rows)
}

/// Shaping gains, start point and horizon of the built-in planar demo.
pub const DEMO2D_GAINS: [f64; 2] = [-1.0, -2.0];
pub const DEMO2D_START: [f64; 2] = [1.0, 1.0];
pub const DEMO2D_T_FINAL: f64 = 10.0;
pub const DEMO2D_DT: f64 = 1e-3;

/// Runs the planar demo and writes `out/demo2d/trajectory.csv`.
pub fn run_demo2d(out: &Path) -> HarnessResult<(PathBuf, Vec<PlanarSample<f64>>)> {
    let dir = out.join("demo2d");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let sys = PlanarSystem::demo(DEMO2D_GAINS);
    sys.validate()?;
    let samples = sys.simulate(DEMO2D_START, DEMO2D_T_FINAL, DEMO2D_DT)?;
    let path = dir.join("trajectory.csv");
    write_planar_csv(&samples, &path)?;
    Ok((path, samples))
}

/// `(θ̄, ϑ̄)` at every logged step.
pub fn error_series(log: &TrajectoryLog<f64>, scenario: &Scenario) -> Vec<(f64, f64, f64)> {
    log.records
        .iter()
        .map(|r| {
            let (p, a) = tracking_errors(r, &scenario.program);
            (r.t, p, a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;

    fn short(name: &str) -> Scenario {
        Scenario { t_final: 0.5, ..preset(name).unwrap() }
    }

    #[test]
    fn baseline_run_passes_and_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&short("baseline"), dir.path()).unwrap();
        assert_eq!(outcome.verdict.status, Status::Pass, "{:?}", outcome.verdict);
        for f in ["trajectory.csv", "metrics.toml", "verdict.toml"] {
            assert!(dir.path().join("baseline").join(f).is_file(), "{f}");
        }
    }

    #[test]
    fn robustness_run_writes_reference_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&short("robustness"), dir.path()).unwrap();
        assert!(outcome.verdict.robustness.is_some());
        assert!(dir.path().join("robustness/reference_trajectory.csv").is_file());
        let text = std::fs::read_to_string(dir.path().join("robustness/verdict.toml")).unwrap();
        assert!(text.contains("[robustness"), "{text}");
    }

    #[test]
    fn unmet_tolerance_fails() {
        let mut s = short("tracking");
        s.tolerances.final_error = 1e-9;
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_experiment(&s, dir.path()).unwrap().verdict.status, Status::Fail);
    }

    #[test]
    fn mid_run_failure_is_an_error_with_its_time() {
        let mut s = short("tracking");
        s.aircraft.thrust_max = 1.0e6;
        s.thrust = crate::closed_loop::ThrustSchedule::step(56_500.0, 0.2, 0.0);
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&s, dir.path()).unwrap();
        assert_eq!(outcome.verdict.status, Status::Error);
        let failure = outcome.verdict.failure.unwrap();
        assert!(failure.t >= 0.2, "{failure:?}");
    }

    #[test]
    fn identical_scenarios_give_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let s = short("tracking");
        run_experiment_in(&s, &dir.path().join("a")).unwrap();
        run_experiment_in(&s, &dir.path().join("b")).unwrap();
        let a = std::fs::read(dir.path().join("a/trajectory.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/trajectory.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_writes_one_directory_per_value() {
        let dir = tempfile::tempdir().unwrap();
        let rows = run_sweep(&short("gain_sweep"), "gains.a1", &[-0.3, -0.4], dir.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(dir.path().join("gain_sweep/gains.a1=-0.3/trajectory.csv").is_file());
        assert!(dir.path().join("gain_sweep/sweep.csv").is_file());
    }

    #[test]
    fn demo2d_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let (path, samples) = run_demo2d(dir.path()).unwrap();
        assert!(path.is_file());
        assert!(samples.last().unwrap().clf < 1e-8);
    }
}
