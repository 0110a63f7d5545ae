//! Lyapunov monitoring, tracking metrics and the simplified-versus-full plant
//! comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_loop::{ExtendedState, StepRecord, TrajectoryLog};
use crate::manifold::ManeuverProgram;
use crate::num::Real;

/// Increases of `V` smaller than this are treated as round-off, rad².
///
/// Equal to the square of the 1e-6 rad band within which a trajectory counts
/// as lying on the terminal manifolds.
pub const CLF_NOISE_FLOOR: f64 = 1e-12;

/// Bounds of the `|θ̄|` window used for decay-rate fits.
pub const DECAY_WINDOW: (f64, f64) = (1e-8, 1e-2);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trajectory log is empty")]
    EmptyLog,
    #[error("no samples inside the decay window [{lo:e}, {hi:e}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("logs are on different time grids: {0}")]
    GridMismatch(String),
}

/// `V = θ̄² + ϑ̄²`.
pub fn clf_value<T: Real>(x: &ExtendedState<T>, t: T, prog: &ManeuverProgram<T>) -> T {
    let path = prog.path_error(x.state.theta, t);
    let attitude = prog.attitude_error(x.state.pitch_attitude());
    path * path + attitude * attitude
}

/// `(θ̄, ϑ̄)` at a logged step.
pub fn tracking_errors<T: Real>(r: &StepRecord<T>, prog: &ManeuverProgram<T>) -> (T, T) {
    (prog.path_error(r.x.state.theta, r.t), prog.attitude_error(r.x.state.pitch_attitude()))
}

/// Least-squares slope of `ln|e(t)|` over the samples with `|e|` inside
/// `[lo, hi]`.
pub fn decay_rate<T: Real>(samples: impl IntoIterator<Item = (T, T)>, lo: T, hi: T) -> Result<T, AnalysisError> {
    let (mut n, mut st, mut sy, mut stt, mut sty) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (t, e) in samples {
        let a = e.abs();
        if a >= lo && a <= hi {
            let y = a.ln();
            n = n + T::one();
            st = st + t;
            sy = sy + y;
            stt = stt + t * t;
            sty = sty + t * y;
        }
    }
    let denom = n * stt - st * st;
    if n < T::lit(2.0) || denom <= T::zero() {
        return Err(AnalysisError::EmptyWindow {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((n * sty - st * sy) / denom)
}

/// Earliest logged time from which `V` never rises by more than `tolerance`
/// between consecutive samples until the end of the log.
pub fn clf_monotone_after<T: Real>(log: &TrajectoryLog<T>, tolerance: T) -> Option<T> {
    let recs = &log.records;
    let first = recs.first()?;
    let last_rise = recs.windows(2).rposition(|w| w[1].clf > w[0].clf + tolerance);
    Some(match last_rise {
        Some(i) => recs[i + 1].t,
        None => first.t,
    })
}

/// First time at or after `from` where `V` rises by more than `tolerance`.
pub fn first_clf_increase<T: Real>(log: &TrajectoryLog<T>, from: T, tolerance: T) -> Option<T> {
    log.records.windows(2).find(|w| w[0].t >= from && w[1].clf > w[0].clf + tolerance).map(|w| w[1].t)
}

/// Fraction of logged steps in which each channel was clipped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SaturationDuty {
    pub delta_m: f64,
    pub delta_p: f64,
    pub thrust: f64,
}

/// Summary of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics<T> {
    pub completed: bool,
    pub final_time: T,
    pub final_path_error: T,
    pub final_attitude_error: T,
    pub sup_path_error: T,
    pub sup_attitude_error: T,
    pub final_clf: T,
    pub clf_monotone_after: Option<T>,
    pub path_decay_rate: Option<T>,
    pub attitude_decay_rate: Option<T>,
    pub saturation: SaturationDuty,
}

pub fn compute_metrics<T: Real>(
    log: &TrajectoryLog<T>,
    prog: &ManeuverProgram<T>,
) -> Result<RunMetrics<T>, AnalysisError> {
    let last = log.records.last().ok_or(AnalysisError::EmptyLog)?;
    let errors: Vec<(T, T, T)> = log
        .records
        .iter()
        .map(|r| {
            let (p, a) = tracking_errors(r, prog);
            (r.t, p, a)
        })
        .collect();
    let sup = |f: fn(&(T, T, T)) -> T| errors.iter().map(f).fold(T::zero(), |m, e| m.max(e.abs()));
    let (lo, hi) = (T::lit(DECAY_WINDOW.0), T::lit(DECAY_WINDOW.1));
    let n = log.records.len() as f64;
    let duty = |pick: fn(&StepRecord<T>) -> bool| log.records.iter().filter(|r| pick(r)).count() as f64 / n;
    let (_, final_path, final_attitude) = *errors.last().expect("non-empty");

    Ok(RunMetrics {
        completed: log.completed(),
        final_time: last.t,
        final_path_error: final_path.abs(),
        final_attitude_error: final_attitude.abs(),
        sup_path_error: sup(|e| e.1),
        sup_attitude_error: sup(|e| e.2),
        final_clf: last.clf,
        clf_monotone_after: clf_monotone_after(log, T::lit(CLF_NOISE_FLOOR)),
        path_decay_rate: decay_rate(errors.iter().map(|e| (e.0, e.1)), lo, hi).ok(),
        attitude_decay_rate: decay_rate(errors.iter().map(|e| (e.0, e.2)), lo, hi).ok(),
        saturation: SaturationDuty {
            delta_m: duty(|r| r.saturation.delta_m),
            delta_p: duty(|r| r.saturation.delta_p),
            thrust: duty(|r| r.saturation.thrust),
        },
    })
}

/// State channels compared between runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    V,
    Theta,
    Alpha,
    Q,
    H,
    DeltaP,
}

impl Channel {
    pub const ALL: [Channel; 6] = [Channel::V, Channel::Theta, Channel::Alpha, Channel::Q, Channel::H, Channel::DeltaP];

    pub fn name(self) -> &'static str {
        match self {
            Channel::V => "v",
            Channel::Theta => "theta",
            Channel::Alpha => "alpha",
            Channel::Q => "q",
            Channel::H => "h",
            Channel::DeltaP => "delta_p",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Per-channel values in [`Channel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelValues<T> {
    pub v: T,
    pub theta: T,
    pub alpha: T,
    pub q: T,
    pub h: T,
    pub delta_p: T,
}

impl<T: Real> ChannelValues<T> {
    pub fn to_array(&self) -> [T; 6] {
        [self.v, self.theta, self.alpha, self.q, self.h, self.delta_p]
    }

    pub fn from_array(a: [T; 6]) -> Self {
        Self { v: a[0], theta: a[1], alpha: a[2], q: a[3], h: a[4], delta_p: a[5] }
    }

    pub fn get(&self, c: Channel) -> T {
        self.to_array()[c.index()]
    }
}

/// Limits for the robustness comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RobustnessTolerances<T> {
    /// Channelwise bound on `sup |x_full − x_simplified|`.
    pub sup_difference: ChannelValues<T>,
    /// Bound on the final `|θ̄|` and `|ϑ̄|` of each run, rad.
    pub final_error: T,
}

impl<T: Real> Default for RobustnessTolerances<T> {
    fn default() -> Self {
        Self {
            sup_difference: ChannelValues {
                v: T::lit(10.0),
                theta: T::lit(0.05),
                alpha: T::lit(0.05),
                q: T::lit(0.1),
                h: T::lit(100.0),
                delta_p: T::lit(0.2),
            },
            final_error: T::lit(5e-2),
        }
    }
}

/// Result of comparing a simplified-plant run with a full-plant run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport<T> {
    pub passed: bool,
    pub sup_difference: ChannelValues<T>,
    /// First channel and time at which a difference bound was exceeded.
    pub first_exceedance: Option<(Channel, T)>,
    pub simplified_converged: bool,
    pub full_converged: bool,
}

/// Whether a run completed and ended within `final_error` of both targets.
pub fn converged<T: Real>(log: &TrajectoryLog<T>, prog: &ManeuverProgram<T>, final_error: T) -> bool {
    log.completed()
        && log.records.last().is_some_and(|r| {
            let (p, a) = tracking_errors(r, prog);
            p.abs() <= final_error && a.abs() <= final_error
        })
}

/// Proxy for wide-sense robustness: both runs reach the program and stay
/// channelwise close to each other.
pub fn robustness_compare<T: Real>(
    simplified: &TrajectoryLog<T>,
    full: &TrajectoryLog<T>,
    prog: &ManeuverProgram<T>,
    tol: &RobustnessTolerances<T>,
) -> Result<RobustnessReport<T>, AnalysisError> {
    if simplified.dt != full.dt {
        return Err(AnalysisError::GridMismatch(format!("dt {} vs {}", simplified.dt, full.dt)));
    }
    if simplified.records.is_empty() || full.records.is_empty() {
        return Err(AnalysisError::EmptyLog);
    }
    let limits = tol.sup_difference.to_array();
    let mut sup = [T::zero(); 6];
    let mut first_exceedance = None;
    for (a, b) in simplified.records.iter().zip(&full.records) {
        if a.t != b.t {
            return Err(AnalysisError::GridMismatch(format!("time {} vs {}", a.t, b.t)));
        }
        let (xa, xb) = (a.x.to_array(), b.x.to_array());
        for c in Channel::ALL {
            let i = c.index();
            let d = (xa[i] - xb[i]).abs();
            sup[i] = sup[i].max(d);
            if first_exceedance.is_none() && !(d <= limits[i]) {
                first_exceedance = Some((c, a.t));
            }
        }
    }
    let simplified_converged = converged(simplified, prog, tol.final_error);
    let full_converged = converged(full, prog, tol.final_error);
    let same_length = simplified.records.len() == full.records.len();
    Ok(RobustnessReport {
        passed: first_exceedance.is_none() && simplified_converged && full_converged && same_length,
        sup_difference: ChannelValues::from_array(sup),
        first_exceedance,
        simplified_converged,
        full_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::SaturationFlags;
    use crate::dynamics::State;

    fn prog() -> ManeuverProgram<f64> {
        ManeuverProgram { theta_m: 0.0, omega: 0.0, pitch_target: 0.0 }
    }

    fn record(t: f64, theta: f64, alpha: f64) -> StepRecord<f64> {
        let x = ExtendedState { state: State { v: 100.0, theta, alpha, q: 0.0, h: 1000.0 }, delta_p: 0.0 };
        StepRecord {
            t,
            x,
            delta_m: 0.0,
            delta_m_command: 0.0,
            thrust: 0.0,
            phi: alpha,
            q_cmd: 0.0,
            delta_p_rate: 0.0,
            dphi_dt: 0.0,
            residual_g: 0.0,
            attitude_residual: 0.0,
            pitch_residual: 0.0,
            clf: clf_value(&x, t, &prog()),
            saturation: SaturationFlags::default(),
        }
    }

    fn log_of(f: impl Fn(f64) -> (f64, f64), n: usize, dt: f64) -> TrajectoryLog<f64> {
        let records = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                let (theta, alpha) = f(t);
                record(t, theta, alpha)
            })
            .collect();
        TrajectoryLog { dt, records, failure: None }
    }

    #[test]
    fn clf_examples() {
        let p = ManeuverProgram { theta_m: 0.1, omega: 0.5, pitch_target: 0.3 };
        let t = 1.7f64;
        let on = ExtendedState {
            state: State { v: 1.0, theta: p.path_command(t), alpha: 0.3 - p.path_command(t), q: 0.0, h: 0.0 },
            delta_p: 0.0,
        };
        assert!(clf_value(&on, t, &p) < 1e-30);
        let mut off = on;
        off.state.theta += 0.1;
        off.state.alpha -= 0.1;
        assert!((clf_value(&off, t, &p) - 0.01).abs() < 1e-15);
        let mut mirrored = on;
        mirrored.state.theta -= 0.1;
        mirrored.state.alpha += 0.1;
        assert!((clf_value(&off, t, &p) - clf_value(&mirrored, t, &p)).abs() < 1e-15);
    }

    #[test]
    fn decay_rate_of_synthetic_exponential() {
        let a1 = -0.7;
        let log = log_of(|t| ((a1 * t).exp(), -(a1 * t).exp()), 40_001, 1e-3);
        let m = compute_metrics(&log, &prog()).unwrap();
        let rate = m.path_decay_rate.unwrap();
        assert!(((rate - a1) / a1).abs() < 1e-3, "rate {rate}");
        assert!(m.attitude_decay_rate.is_none(), "attitude error is identically zero");
    }

    #[test]
    fn empty_window_is_reported() {
        let err = decay_rate([(0.0, 1.0), (1.0, 0.5)], 1e-8, 1e-2).unwrap_err();
        assert!(matches!(err, AnalysisError::EmptyWindow { .. }));
    }

    #[test]
    fn perfect_tracking_has_zero_errors() {
        let log = log_of(|_| (0.0, 0.0), 100, 0.01);
        let m = compute_metrics(&log, &prog()).unwrap();
        assert_eq!((m.final_path_error, m.sup_path_error, m.sup_attitude_error, m.final_clf), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(m.clf_monotone_after, Some(0.0));
    }

    #[test]
    fn saturation_duty_counts_flagged_steps() {
        let mut log = log_of(|_| (0.0, 0.0), 8, 0.1);
        for r in log.records.iter_mut().take(2) {
            r.saturation.delta_m = true;
        }
        log.records[7].saturation.thrust = true;
        let m = compute_metrics(&log, &prog()).unwrap();
        assert_eq!(m.saturation.delta_m, 0.25);
        assert_eq!(m.saturation.thrust, 0.125);
        assert_eq!(m.saturation.delta_p, 0.0);
    }

    #[test]
    fn empty_log_rejected() {
        let log = TrajectoryLog::<f64> { dt: 0.1, records: vec![], failure: None };
        assert_eq!(compute_metrics(&log, &prog()).unwrap_err(), AnalysisError::EmptyLog);
    }

    #[test]
    fn monotone_after_finds_last_rise() {
        let log = log_of(|t| if t < 0.5 { (t, 0.0) } else { (1.0 - t, 0.0) }, 11, 0.1);
        assert_eq!(first_clf_increase(&log, 0.0, 0.0), Some(0.1));
        let after = clf_monotone_after(&log, 0.0).unwrap();
        assert!((after - 0.5).abs() < 1e-12);
        assert_eq!(first_clf_increase(&log, 0.5, 0.0), None);
    }

    #[test]
    fn identical_logs_pass() {
        let log = log_of(|t| (0.01 * (-t).exp(), 0.0), 50, 0.1);
        let report = robustness_compare(&log, &log, &prog(), &RobustnessTolerances::default()).unwrap();
        assert!(report.passed);
        assert_eq!(report.sup_difference.to_array(), [0.0; 6]);
    }

    #[test]
    fn diverging_log_fails_with_first_exceedance() {
        let good = log_of(|_| (0.0, 0.0), 50, 0.1);
        let bad = log_of(|t| (0.01 * (t).exp(), 0.0), 50, 0.1);
        let report = robustness_compare(&good, &bad, &prog(), &RobustnessTolerances::default()).unwrap();
        assert!(!report.passed);
        assert!(!report.full_converged);
        let (channel, t) = report.first_exceedance.unwrap();
        assert_eq!(channel, Channel::Theta);
        // theta first exceeds 0.05 when 0.01 e^t > 0.05, i.e. t > ln 5.
        assert!((t - 1.7).abs() < 1e-9, "t = {t}");
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = log_of(|_| (0.0, 0.0), 10, 0.1);
        let b = log_of(|_| (0.0, 0.0), 10, 0.2);
        assert!(matches!(
            robustness_compare(&a, &b, &prog(), &RobustnessTolerances::default()),
            Err(AnalysisError::GridMismatch(_))
        ));
    }
}
