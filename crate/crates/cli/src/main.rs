//! `clf`: run scenarios, the planar demo, sweeps and the acceptance checks.
//!
//! Exit status: 0 pass, 1 fail, 2 error (bad input or a simulation error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clf_core::harness::experiment::{run_demo2d, run_experiment, run_sweep, Status};
use clf_core::harness::presets::{load_scenario, PRESETS};
use clf_core::harness::{verify, HarnessError, HarnessResult, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "clf", version, about = "Attractor-cascade flight control with a canonical Lyapunov function")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file or preset and write its artifacts.
    Run {
        /// Scenario TOML file or preset name.
        scenario: String,
    },
    /// Planar canonization demo.
    Demo2d,
    /// Run the nine acceptance checks.
    Verify {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run a scenario for each value of one parameter.
    Sweep {
        scenario: String,
        /// Dotted parameter path, e.g. `gains.a1` or `aircraft.mass`.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, num_args = 1.., value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// List the built-in presets.
    Presets,
}

fn run(cli: Cli) -> HarnessResult<Status> {
    match cli.command {
        Command::Run { scenario } => {
            let sc = load_scenario(&scenario)?;
            let outcome = run_experiment(&sc, &cli.out)?;
            let v = &outcome.verdict;
            for c in &v.checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if let Some(f) = &v.failure {
                println!("simulation stopped at t = {}: {}", f.t, f.message);
            }
            println!("{}: {:?}, artifacts in {}", v.scenario, v.status, outcome.dir.display());
            Ok(v.status)
        }
        Command::Demo2d => {
            let (path, samples) = run_demo2d(&cli.out)?;
            let last = samples.last().expect("demo produces samples");
            println!(
                "t = {}, y = ({:e}, {:e}), V = {:e}; wrote {}",
                last.t,
                last.y[0],
                last.y[1],
                last.clf,
                path.display()
            );
            Ok(Status::Pass)
        }
        Command::Verify { seed } => {
            let results = verify::run_all(seed)?;
            for r in &results {
                println!("{r}");
            }
            let passed = results.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", results.len());
            Ok(if passed == results.len() { Status::Pass } else { Status::Fail })
        }
        Command::Sweep { scenario, param, values } => {
            let sc = load_scenario(&scenario)?;
            let (param, values) = match (param, &sc.sweep) {
                (Some(p), _) if !values.is_empty() => (p, values),
                (None, Some(sw)) if values.is_empty() => (sw.param.clone(), sw.values.clone()),
                _ => {
                    return Err(HarnessError::Parse(
                        "sweep needs --param and --values, or a [sweep] section in the scenario".into(),
                    ))
                }
            };
            let rows = run_sweep(&sc, &param, &values, &cli.out)?;
            let mut status = Status::Pass;
            for r in &rows {
                println!(
                    "{param} = {}: {:?}, final path error {}, decay rate {}",
                    r.value,
                    r.status,
                    r.final_path_error.map_or("n/a".into(), |e| format!("{e:.3e}")),
                    r.path_decay_rate.map_or("n/a".into(), |e| format!("{e:.5}"))
                );
                status = status.worst(r.status);
            }
            Ok(status)
        }
        Command::Presets => {
            for (name, text) in PRESETS {
                let summary = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name:16} {summary}");
            }
            Ok(Status::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Error.exit_code() as u8)
        }
    }
}
