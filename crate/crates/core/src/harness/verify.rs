//! The acceptance suite: nine pass/fail checks over the whole stack.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::presets::preset;
use super::scenario::Scenario;
use super::HarnessResult;
use crate::aero::{air_density, AeroMode};
use crate::analysis::{compute_metrics, first_clf_increase, robustness_compare, tracking_errors, CLF_NOISE_FLOOR};
use crate::canonical_2d::{Curve, PlanarSystem};
use crate::closed_loop::TrajectoryLog;
use crate::integrate::rk4_integrate;
use crate::manifold::{find_alpha_root, residual_g, solve_alpha_command, Gains, ManifoldArgs};

/// Gain sets flown from the off-manifold start.
pub const TRACKING_GAINS: [Gains<f64>; 3] = [
    Gains { a1: -0.5, a2: -2.0, a3: -4.0, a4: -1.0 },
    Gains { a1: -0.3, a2: -1.5, a3: -3.0, a4: -0.6 },
    Gains { a1: -0.4, a2: -3.0, a3: -8.0, a4: -2.0 },
];

pub const SOLVER_SAMPLES: usize = 1000;
pub const RESIDUAL_LIMIT: f64 = 1e-10;
pub const PARTIAL_REL_LIMIT: f64 = 1e-5;
/// Relative steps of the five-point difference stencil, tried in order until
/// every shifted state still has a root.
pub const FD_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const IDENTITY_LIMIT: f64 = 1e-9;
pub const DECAY_RATE_REL_LIMIT: f64 = 0.05;
pub const TRACKING_FINAL_LIMIT: f64 = 1e-3;
pub const INVARIANCE_LIMIT: f64 = 1e-6;
pub const PLANAR_ORACLE_LIMIT: f64 = 1e-6;
pub const PLANAR_INVARIANCE_LIMIT: f64 = 1e-9;
pub const PLANAR_INSTANCES: usize = 100;
pub const MIN_RK4_ORDER: f64 = 3.9;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}. {}: {}", self.id, self.title, self.detail)
    }
}

fn result(id: u8, title: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { id, title, passed, detail }
}

/// `air_density(0)` is exactly the sea-level value and the density strictly
/// decreases on a 1 m grid up to 20 km.
pub fn atmosphere_fidelity() -> CriterionResult {
    let sea = air_density(0.0f64);
    let exact = sea == Ok(1.2256);
    let mut first_violation = None;
    let mut prev = 1.2256;
    for h in 1..=20_000 {
        match air_density(h as f64) {
            Ok(rho) if rho < prev => prev = rho,
            _ => {
                first_violation = Some(h);
                break;
            }
        }
    }
    let detail = format!(
        "rho(0) = {:?}; strictly decreasing on [0, 20000] m: {}",
        sea,
        first_violation.map_or("yes".to_string(), |h| format!("no, fails at {h} m"))
    );
    result(1, "atmosphere fidelity", exact && first_violation.is_none(), detail)
}

/// Random envelope states for the angle-of-attack solver check.
fn envelope_args(rng: &mut StdRng, s: &Scenario) -> ManifoldArgs<f64> {
    let p = &s.aircraft;
    ManifoldArgs {
        t: rng.gen_range(0.0..=s.t_final),
        v: rng.gen_range(80.0..=300.0),
        theta: rng.gen_range(-0.3..=0.3),
        h: rng.gen_range(0.0..=12_000.0),
        delta_p: rng.gen_range(-p.delta_p_max..=p.delta_p_max),
        thrust: rng.gen_range(p.thrust_min..=p.thrust_max),
    }
}

/// Whether `G` changes sign anywhere on a fine grid over the solver bracket.
fn has_sign_change(s: &Scenario, args: &ManifoldArgs<f64>) -> bool {
    let ctrl = s.controller();
    let (lo, hi) = (ctrl.solver.bracket_lo, ctrl.solver.bracket_hi);
    let n = 4096;
    let g = |a: f64| residual_g(a, args, &s.program, s.gains.a1, &ctrl.model).unwrap_or(f64::NAN);
    let mut prev = g(lo);
    (1..=n).any(|k| {
        let cur = g(lo + (hi - lo) * k as f64 / n as f64);
        let change = prev * cur <= 0.0;
        prev = cur;
        change
    })
}

/// Largest relative error of the five implicit partials against five-point
/// central differences of re-solved roots, for one state.
fn partials_error(s: &Scenario, args: &ManifoldArgs<f64>, phi: f64, analytic: [f64; 5]) -> crate::Result<f64> {
    let ctrl = s.controller();
    let solve =
        |a: &ManifoldArgs<f64>| find_alpha_root(a, &s.program, s.gains.a1, &ctrl.model, Some(phi), &ctrl.solver);
    let mut worst = 0.0f64;
    for (i, an) in analytic.iter().enumerate() {
        let base = [args.t, args.v, args.h, args.theta, args.delta_p][i];
        let shifted = |d: f64| {
            let mut a = *args;
            match i {
                0 => a.t += d,
                1 => a.v += d,
                2 => a.h += d,
                3 => a.theta += d,
                _ => a.delta_p += d,
            }
            a
        };
        let stencil = |step: f64| -> crate::Result<f64> {
            Ok((8.0 * (solve(&shifted(step))? - solve(&shifted(-step))?)
                - (solve(&shifted(2.0 * step))? - solve(&shifted(-2.0 * step))?))
                / (12.0 * step))
        };
        let scale = base.abs().max(1.0);
        let mut fd = stencil(FD_STEPS[0] * scale);
        for rel in &FD_STEPS[1..] {
            if fd.is_err() {
                fd = stencil(rel * scale);
            }
        }
        let fd = fd?;
        // Below this size a partial is compared in absolute terms.
        let floor = 1e-9 / base.abs().max(1.0);
        worst = worst.max((an - fd).abs() / an.abs().max(floor));
    }
    Ok(worst)
}

/// Residual and sensitivity accuracy of the angle-of-attack solver on random
/// states of the flight envelope. States where `G` has no root in the
/// bracket are counted separately after confirming that no sign change
/// exists on a fine grid; sampling continues until `samples` roots have been
/// checked.
pub fn manifold_solver(seed: u64, samples: usize) -> CriterionResult {
    let s = Scenario::default();
    let ctrl = s.controller();
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut solved, mut rootless, mut problems) = (0usize, 0usize, Vec::new());
    let (mut worst_residual, mut worst_partial) = (0.0f64, 0.0f64);
    let mut attempts = 0;
    while solved < samples && attempts < 100 * samples {
        attempts += 1;
        let args = envelope_args(&mut rng, &s);
        match solve_alpha_command(&args, &s.program, s.gains.a1, &ctrl.model, None, &ctrl.solver) {
            Ok(cmd) => {
                solved += 1;
                worst_residual = worst_residual.max(cmd.residual);
                let p = cmd.partials;
                match partials_error(&s, &args, cmd.phi, [p.t, p.v, p.h, p.theta, p.delta_p]) {
                    Ok(e) => worst_partial = worst_partial.max(e),
                    Err(e) => problems.push(format!("finite difference at {args:?}: {e}")),
                }
            }
            Err(crate::Error::NoRootInBracket { .. }) if !has_sign_change(&s, &args) => rootless += 1,
            Err(e) => problems.push(format!("{args:?}: {e}")),
        }
    }
    let passed = solved >= samples
        && problems.is_empty()
        && worst_residual <= RESIDUAL_LIMIT
        && worst_partial <= PARTIAL_REL_LIMIT;
    let mut detail = format!(
        "{solved} roots, {rootless} states without a root skipped; max |G(phi)| = {worst_residual:.2e} (limit {RESIDUAL_LIMIT:e}); \
         max partial rel. error = {worst_partial:.2e} (limit {PARTIAL_REL_LIMIT:e})"
    );
    if let Some(first) = problems.first() {
        detail.push_str(&format!("; {} solver problems, first: {first}", problems.len()));
    }
    result(2, "manifold solver", passed, detail)
}

/// Closed-loop runs shared by several criteria.
pub struct AcceptanceRuns {
    pub baseline: (Scenario, TrajectoryLog<f64>),
    pub tracking: Vec<(Scenario, TrajectoryLog<f64>)>,
    pub robustness: (Scenario, TrajectoryLog<f64>),
    pub robustness_reference: TrajectoryLog<f64>,
}

impl AcceptanceRuns {
    pub fn compute() -> HarnessResult<Self> {
        let baseline = preset("baseline")?;
        let tracking_base = preset("tracking")?;
        let robust = preset("robustness")?;
        let mut jobs = vec![baseline.clone()];
        jobs.extend(TRACKING_GAINS.iter().map(|g| Scenario { gains: *g, ..tracking_base.clone() }));
        jobs.push(robust.clone());
        jobs.push(robust.with_plant(AeroMode::Simplified));
        let mut logs = jobs
            .par_iter()
            .map(|s| s.simulation().map(|sim| sim.run()))
            .collect::<crate::Result<Vec<_>>>()?
            .into_iter();
        let mut next = || logs.next().expect("one log per job");
        let baseline_log = next();
        let tracking = jobs[1..=TRACKING_GAINS.len()].iter().map(|s| (s.clone(), next())).collect();
        let robust_log = next();
        let reference = next();
        Ok(Self {
            baseline: (baseline, baseline_log),
            tracking,
            robustness: (robust, robust_log),
            robustness_reference: reference,
        })
    }
}

fn failure_note(log: &TrajectoryLog<f64>) -> String {
    log.failure.as_ref().map_or(String::new(), |f| format!(" (run stopped at t = {}: {})", f.t, f.error))
}

/// `q_cmd = a₄ ϑ̄` and the two law residuals at every step of the nominal
/// off-manifold run.
pub fn cascade_identity(runs: &AcceptanceRuns) -> CriterionResult {
    let (s, log) = &runs.tracking[0];
    let (mut q, mut att, mut pitch) = (0.0f64, 0.0f64, 0.0f64);
    for r in &log.records {
        let (_, attitude_error) = tracking_errors(r, &s.program);
        q = q.max((r.q_cmd - s.gains.a4 * attitude_error).abs());
        att = att.max(r.attitude_residual.abs());
        pitch = pitch.max(r.pitch_residual.abs());
    }
    let worst = q.max(att).max(pitch);
    let passed = log.completed() && worst <= IDENTITY_LIMIT;
    let detail = format!(
        "max |q_cmd - a4*att_err| = {q:.2e}, nozzle-law residual = {att:.2e}, stabilizer-law residual = {pitch:.2e} \
         over {} steps (limit {IDENTITY_LIMIT:e}){}",
        log.records.len(),
        failure_note(log)
    );
    result(3, "cascade identity", passed, detail)
}

/// Decay rate of `θ̄` and final errors for each tracking gain set.
pub fn terminal_attractor(runs: &AcceptanceRuns) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();
    for (s, log) in &runs.tracking {
        let a1 = s.gains.a1;
        match compute_metrics(log, &s.program) {
            Ok(m) => {
                let rate_ok = m.path_decay_rate.is_some_and(|r| ((r - a1) / a1).abs() <= DECAY_RATE_REL_LIMIT);
                let final_ok =
                    m.final_path_error <= TRACKING_FINAL_LIMIT && m.final_attitude_error <= TRACKING_FINAL_LIMIT;
                passed &= rate_ok && final_ok && log.completed();
                parts.push(format!(
                    "a1 = {a1}: rate {}, final |path err| {:.1e}, |att err| {:.1e}{}",
                    m.path_decay_rate.map_or("n/a".into(), |r| format!("{r:.5}")),
                    m.final_path_error,
                    m.final_attitude_error,
                    failure_note(log)
                ));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("a1 = {a1}: {e}"));
            }
        }
    }
    result(4, "terminal attractor", passed, parts.join("; "))
}

/// Starting on all manifolds keeps both errors at round-off level.
pub fn invariant_start(runs: &AcceptanceRuns) -> CriterionResult {
    let (s, log) = &runs.baseline;
    let worst = log.records.iter().fold(0.0f64, |m, r| {
        let (p, a) = tracking_errors(r, &s.program);
        m.max(p.abs()).max(a.abs())
    });
    let passed = log.completed() && worst <= INVARIANCE_LIMIT;
    let detail =
        format!("sup max(|path err|, |att err|) = {worst:.2e} (limit {INVARIANCE_LIMIT:e}){}", failure_note(log));
    result(5, "invariant-manifold start", passed, detail)
}

/// Simplified-design control on the perturbed full plant.
pub fn robustness(runs: &AcceptanceRuns) -> CriterionResult {
    let (s, full) = &runs.robustness;
    let tol = s.robustness.unwrap_or_default();
    match robustness_compare(&runs.robustness_reference, full, &s.program, &tol) {
        Ok(report) => {
            let d = report.sup_difference;
            let final_err = full.last().map_or(f64::NAN, |r| {
                let (p, a) = tracking_errors(r, &s.program);
                p.abs().max(a.abs())
            });
            let detail = format!(
                "full-plant final max error {final_err:.2e} (limit {:e}); sup differences v {:.3}, theta {:.2e}, alpha {:.2e}, \
                 q {:.2e}, h {:.2}, delta_p {:.2e}; first exceedance {:?}{}",
                tol.final_error,
                d.v,
                d.theta,
                d.alpha,
                d.q,
                d.h,
                d.delta_p,
                report.first_exceedance,
                failure_note(full)
            );
            result(6, "robustness proxy", report.passed, detail)
        }
        Err(e) => result(6, "robustness proxy", false, e.to_string()),
    }
}

/// `V` never rises (beyond round-off) after five slowest time constants.
pub fn clf_monotonicity(runs: &AcceptanceRuns) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();
    let checked = runs.tracking.iter().map(|(s, l)| ("tracking", s, l)).chain(std::iter::once((
        "robustness",
        &runs.robustness.0,
        &runs.robustness.1,
    )));
    for (label, s, log) in checked {
        let from = 5.0 * s.gains.slowest_time_constant();
        let rise = first_clf_increase(log, from, CLF_NOISE_FLOOR);
        passed &= rise.is_none() && log.completed();
        parts.push(match rise {
            None => format!("{label} a1 = {}: non-increasing from t = {from}", s.gains.a1),
            Some(t) => {
                let tail = log.records.iter().filter(|r| r.t >= from);
                let (lo, hi) = tail.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.clf), hi.max(r.clf)));
                format!(
                    "{label} a1 = {}: V rises at t = {t} (window starts at {from}; V ranges over [{lo:.1e}, {hi:.1e}] in the window)",
                    s.gains.a1
                )
            }
        });
    }
    result(7, "CLF monotonicity", passed, parts.join("; "))
}

/// Random smooth planar instance: cubic drifts, trigonometric curve and
/// strictly decreasing shaping.
fn random_planar(rng: &mut StdRng) -> PlanarSystem<f64> {
    let mut cubic = || {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        move |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]))
    };
    let (f1, f2) = (cubic(), cubic());
    let mut curve = || {
        let (amp, freq, phase, offset) =
            (rng.gen_range(0.1..=2.0), rng.gen_range(0.1..=3.0), rng.gen_range(0.0..=6.3), rng.gen_range(-1.0..=1.0));
        Curve::new(
            move |t: f64| amp * (freq * t + phase).sin() + offset,
            move |t: f64| amp * freq * (freq * t + phase).cos(),
        )
    };
    let (chi1, chi2) = (curve(), curve());
    let mut shaping = || {
        let (lin, cub) = (rng.gen_range(0.2..=3.0), rng.gen_range(0.0..=1.0));
        move |y: f64| -lin * y - cub * y * y * y
    };
    let (g1, g2) = (shaping(), shaping());
    PlanarSystem { f1: Box::new(f1), f2: Box::new(f2), chi1, chi2, g1: Box::new(g1), g2: Box::new(g2) }
}

/// Exponential oracle, invariance of the target curve and the sign of the
/// Lyapunov derivative along closed-loop trajectories.
pub fn planar_demo(seed: u64) -> CriterionResult {
    let dt = 1e-3;
    let t_final = 10.0;
    let a: [f64; 2] = [-1.0, -2.0];
    let demo = PlanarSystem::demo(a);
    let y0: [f64; 2] = [0.5, -0.3];
    let oracle_err = demo
        .simulate(demo.uncanonize(y0, 0.0), t_final, dt)
        .map(|log| {
            log.iter().fold(0.0f64, |m, p| {
                m.max((p.y[0] - y0[0] * (a[0] * p.t).exp()).abs()).max((p.y[1] - y0[1] * (a[1] * p.t).exp()).abs())
            })
        })
        .unwrap_or(f64::INFINITY);

    let mut rng = StdRng::seed_from_u64(seed);
    let mut invariance_err = 0.0f64;
    let mut max_rate = f64::NEG_INFINITY;
    let mut invalid = 0;
    let mut systems = vec![demo];
    systems.extend((0..PLANAR_INSTANCES).map(|_| random_planar(&mut rng)));
    let mut offsets =
        (0..systems.len()).map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]).collect::<Vec<_>>();
    offsets[0] = y0;
    for (sys, y_start) in systems.iter().zip(&offsets) {
        if sys.validate().is_err() {
            invalid += 1;
            continue;
        }
        match sys.simulate(sys.uncanonize([0.0, 0.0], 0.0), t_final, dt) {
            Ok(log) => {
                invariance_err = log.iter().fold(invariance_err, |m, p| m.max(p.y[0].abs()).max(p.y[1].abs()));
            }
            Err(_) => invariance_err = f64::INFINITY,
        }
        match sys.simulate(sys.uncanonize(*y_start, 0.0), t_final, dt) {
            Ok(log) => {
                for p in &log {
                    let rates = sys.closed_loop_rates(p.x, p.t);
                    let ydot = [rates[0] - (sys.chi1.rate)(p.t), rates[1] - (sys.chi2.rate)(p.t)];
                    max_rate = max_rate.max(2.0 * (p.y[0] * ydot[0] + p.y[1] * ydot[1]));
                }
            }
            Err(_) => max_rate = f64::INFINITY,
        }
    }
    let passed = oracle_err <= PLANAR_ORACLE_LIMIT
        && invariance_err <= PLANAR_INVARIANCE_LIMIT
        && max_rate <= 0.0
        && invalid == 0;
    let detail = format!(
        "exponential oracle sup error {oracle_err:.2e} (limit {PLANAR_ORACLE_LIMIT:e}); start on curve: sup |y| = {invariance_err:.2e} \
         (limit {PLANAR_INVARIANCE_LIMIT:e}); max dV/dt over {} instances = {max_rate:.2e}",
        systems.len()
    );
    result(8, "planar canonization", passed, detail)
}

/// Observed order of RK4 on `dv/dt = −v` from three step sizes.
pub fn rk4_order() -> f64 {
    let run = |dt: f64, steps: usize| rk4_integrate(|_, x: &[f64; 1]| Ok([-x[0]]), 0.0, [1.0], dt, steps).map(|x| x[0]);
    let (a, b, c) = match (run(0.1, 10), run(0.05, 20), run(0.025, 40)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return f64::NAN,
    };
    ((a - b) / (b - c)).abs().log2()
}

pub fn integrator_order() -> CriterionResult {
    let order = rk4_order();
    result(
        9,
        "integrator order",
        order >= MIN_RK4_ORDER,
        format!("observed order {order:.4} (minimum {MIN_RK4_ORDER})"),
    )
}

/// Runs all nine checks. Fails only if the shared runs cannot be set up.
pub fn run_all(seed: u64) -> HarnessResult<Vec<CriterionResult>> {
    let (runs, (c2, c8)) = rayon::join(AcceptanceRuns::compute, || {
        rayon::join(|| manifold_solver(seed, SOLVER_SAMPLES), || planar_demo(seed))
    });
    let runs = runs?;
    Ok(vec![
        atmosphere_fidelity(),
        c2,
        cascade_identity(&runs),
        terminal_attractor(&runs),
        invariant_start(&runs),
        robustness(&runs),
        clf_monotonicity(&runs),
        c8,
        integrator_order(),
    ])
}
