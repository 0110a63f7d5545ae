//! Closed-loop integration of the plant, extended with the nozzle angle.

use serde::{Deserialize, Serialize};

use crate::aero::AeroMode;
use crate::analysis::clf_value;
use crate::cascade::{
    attitude_law_residual, pitch_law_residual, saturate, CascadeController, DerivativeHistory, SaturationFlags,
    SecondDerivatives,
};
use crate::dynamics::{ControlInput, FlightModel, State};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::manifold::{residual_g, ManifoldArgs};
use crate::num::Real;

/// Plant state plus the nozzle deflection, which the nozzle law drives in
/// rate form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtendedState<T> {
    pub state: State<T>,
    pub delta_p: T,
}

impl<T: Real> ExtendedState<T> {
    pub fn to_array(&self) -> [T; 6] {
        let s = &self.state;
        [s.v, s.theta, s.alpha, s.q, s.h, self.delta_p]
    }

    pub fn from_array(x: [T; 6]) -> Self {
        Self { state: State { v: x[0], theta: x[1], alpha: x[2], q: x[3], h: x[4] }, delta_p: x[5] }
    }
}

/// One piece of a piecewise-constant thrust program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrustSegment<T> {
    /// Time from which this thrust applies, s.
    pub start: T,
    /// Thrust, N.
    pub thrust: T,
}

/// Right-continuous step function of time. Before the first breakpoint the
/// first value applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThrustSchedule<T> {
    pub segments: Vec<ThrustSegment<T>>,
}

impl<T: Real> ThrustSchedule<T> {
    pub fn constant(thrust: T) -> Self {
        Self { segments: vec![ThrustSegment { start: T::zero(), thrust }] }
    }

    /// Constant thrust that steps to `after` at `t_step`, e.g. a partial
    /// engine failure.
    pub fn step(before: T, t_step: T, after: T) -> Self {
        Self {
            segments: vec![
                ThrustSegment { start: T::zero(), thrust: before },
                ThrustSegment { start: t_step, thrust: after },
            ],
        }
    }

    pub fn validate(&self, thrust_min: T, thrust_max: T) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParameter("thrust schedule needs at least one segment".into()));
        }
        for pair in self.segments.windows(2) {
            if !(pair[1].start > pair[0].start) {
                return Err(Error::InvalidParameter("thrust breakpoints must be strictly increasing".into()));
            }
        }
        for seg in &self.segments {
            if !(seg.thrust >= thrust_min && seg.thrust <= thrust_max) {
                return Err(Error::InvalidParameter(format!(
                    "scheduled thrust {} outside [{thrust_min}, {thrust_max}]",
                    seg.thrust
                )));
            }
        }
        Ok(())
    }

    pub fn thrust_at(&self, t: T) -> T {
        let mut thrust = self.segments.first().map_or(T::zero(), |s| s.thrust);
        for seg in &self.segments {
            if seg.start <= t {
                thrust = seg.thrust;
            } else {
                break;
            }
        }
        thrust
    }

    /// Whether a breakpoint falls in `(t0, t1]`.
    pub fn switches_in(&self, t0: T, t1: T) -> bool {
        self.segments.iter().skip(1).any(|s| s.start > t0 && s.start <= t1)
    }
}

/// Logged quantities at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T> {
    pub t: T,
    pub x: ExtendedState<T>,
    /// Stabilizer deflection actually applied (after saturation).
    pub delta_m: T,
    /// Stabilizer deflection requested by the law.
    pub delta_m_command: T,
    pub thrust: T,
    pub phi: T,
    pub q_cmd: T,
    pub delta_p_rate: T,
    pub dphi_dt: T,
    /// `|G(φ)|` of the angle-of-attack manifold equation.
    pub residual_g: T,
    /// Residual of the pitch-attitude law identity.
    pub attitude_residual: T,
    /// Residual of the pitch-rate equation at the commanded stabilizer.
    pub pitch_residual: T,
    pub clf: T,
    pub saturation: SaturationFlags,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure<T> {
    pub t: T,
    pub error: Error,
}

/// Uniform-grid record of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T> {
    pub dt: T,
    pub records: Vec<StepRecord<T>>,
    pub failure: Option<Failure<T>>,
}

impl<T: Real> TrajectoryLog<T> {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> Option<&StepRecord<T>> {
        self.records.last()
    }
}

/// A fully specified closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T> {
    pub plant: FlightModel<T>,
    pub plant_mode: AeroMode,
    pub controller: CascadeController<T>,
    pub thrust: ThrustSchedule<T>,
    pub initial: ExtendedState<T>,
    pub dt: T,
    pub t_final: T,
}

/// Sets `α`, `δp` and `q` so the state lies on the angle-of-attack and
/// pitch-rate manifolds for the given path angle and pitch attitude.
#[allow(clippy::too_many_arguments)]
pub fn place_on_manifolds<T: Real>(
    controller: &CascadeController<T>,
    t: T,
    v: T,
    h: T,
    theta: T,
    pitch_attitude: T,
    thrust: T,
) -> Result<ExtendedState<T>> {
    let p = &controller.model.params;
    let alpha = pitch_attitude - theta;
    let args = ManifoldArgs { t, v, theta, h, delta_p: T::zero(), thrust: T::zero() };
    // With zero thrust the residual is everything except the nozzle term.
    let rest = residual_g(alpha, &args, &controller.program, controller.gains.a1, &controller.model)?;
    let sine = -rest * p.mass * v / thrust;
    if !(sine.abs() <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "thrust {thrust} cannot hold the angle-of-attack manifold at this state (needs sin = {sine})"
        )));
    }
    let delta_p = sine.asin() - alpha;
    if delta_p.abs() > p.delta_p_max {
        return Err(Error::InvalidParameter(format!(
            "placing the state on the manifolds needs nozzle angle {delta_p} beyond +/-{}",
            p.delta_p_max
        )));
    }
    let q = controller.gains.a4 * controller.program.attitude_error(pitch_attitude);
    Ok(ExtendedState { state: State { v, theta, alpha, q, h }, delta_p })
}

impl<T: Real> Simulation<T> {
    pub fn validate(&self) -> Result<()> {
        let p = &self.plant.params;
        p.validate()?;
        self.controller.model.params.validate()?;
        self.controller.gains.validate()?;
        self.controller.program.validate()?;
        self.thrust.validate(p.thrust_min, p.thrust_max)?;
        if !(self.dt > T::zero()) {
            return Err(Error::InvalidStep(self.dt.to_f64().unwrap_or(f64::NAN)));
        }
        if !(self.t_final > self.dt) {
            return Err(Error::InvalidParameter("t_final must exceed dt".into()));
        }
        if !(self.initial.state.v > T::zero()) {
            return Err(Error::NonPositiveAirspeed { v: self.initial.state.v.to_f64().unwrap_or(f64::NAN) });
        }
        if !(self.plant.atmosphere.density_scale > T::zero()) {
            return Err(Error::InvalidParameter("density scale must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Integrates the closed loop with fixed-step RK4.
    ///
    /// The angle-of-attack command is re-solved at every stage, warm-started
    /// from the value at the start of the step. The backward-difference
    /// estimates of `d²φ/dt²` and `dA₂′/dt` are formed once per step and held
    /// over its stages. Thrust is sampled at the start of each step and held.
    ///
    /// A failure of the control laws ends the run; the log up to that point is
    /// kept and the failure recorded.
    pub fn run(&self) -> TrajectoryLog<T> {
        let mut log = TrajectoryLog { dt: self.dt, records: Vec::with_capacity(self.steps() + 1), failure: None };
        if let Err(error) = self.validate() {
            log.failure = Some(Failure { t: T::zero(), error });
            return log;
        }
        let p = self.plant.params;
        let ctrl = &self.controller;
        let mut history = DerivativeHistory::new(self.dt);
        let mut x = self.initial;
        let mut clipped_nozzle = false;
        let mut warm: Option<T> = None;
        let steps = self.steps();

        for k in 0..=steps {
            let t = T::lit(k as f64) * self.dt;
            if k > 0 && self.thrust.switches_in(t - self.dt, t) {
                history.reset();
            }
            let (u_sched, thrust_flags) = saturate(
                &ControlInput { delta_m: T::zero(), delta_p: x.delta_p, thrust: self.thrust.thrust_at(t) },
                &p,
            );
            let thrust = u_sched.thrust;

            let step_start = (|| -> Result<_> {
                let outer = ctrl.outer_loop(t, &x.state, x.delta_p, thrust, warm)?;
                let estimates = history.estimates(outer.dphi_dt, outer.rates.path_rate);
                let law = ctrl.pitch_law(&x.state, x.delta_p, thrust, &outer, &estimates)?;
                Ok((outer, estimates, law))
            })();
            let (outer, estimates, law) = match step_start {
                Ok(v) => v,
                Err(error) => {
                    log.failure = Some(Failure { t, error });
                    return log;
                }
            };
            history.record(outer.dphi_dt, outer.rates.path_rate);
            warm = Some(outer.command.phi);

            let (applied, flags) = saturate(&ControlInput { delta_m: law.delta_m, delta_p: x.delta_p, thrust }, &p);
            let commanded = ControlInput { delta_m: law.delta_m, ..applied };
            let pitch_residual = pitch_law_residual(
                &ctrl.model,
                &x.state,
                &commanded,
                outer.command.phi,
                outer.dphi_dt,
                &estimates,
                &ctrl.gains,
                &outer.rates,
            )
            .unwrap_or_else(|_| T::nan());
            log.records.push(StepRecord {
                t,
                x,
                delta_m: applied.delta_m,
                delta_m_command: law.delta_m,
                thrust,
                phi: outer.command.phi,
                q_cmd: outer.q_cmd,
                delta_p_rate: outer.delta_p_rate,
                dphi_dt: outer.dphi_dt,
                residual_g: outer.command.residual,
                attitude_residual: attitude_law_residual(
                    &x.state,
                    &ctrl.program,
                    &ctrl.gains,
                    outer.command.phi,
                    outer.dphi_dt,
                    &outer.rates,
                ),
                pitch_residual,
                clf: clf_value(&x, t, &ctrl.program),
                saturation: SaturationFlags { delta_p: clipped_nozzle, ..flags.union(thrust_flags) },
            });
            if k == steps {
                break;
            }

            let phi_start = outer.command.phi;
            let rhs = |tau: T, y: &[T; 6]| self.closed_loop_rates(tau, y, thrust, phi_start, &estimates);
            match rk4_step(rhs, t, &x.to_array(), self.dt) {
                Ok(next) => {
                    x = ExtendedState::from_array(next);
                    clipped_nozzle = x.delta_p.abs() > p.delta_p_max;
                    if clipped_nozzle {
                        x.delta_p = x.delta_p.max(-p.delta_p_max).min(p.delta_p_max);
                    }
                }
                Err(error) => {
                    log.failure = Some(Failure { t, error });
                    return log;
                }
            }
        }
        log
    }

    /// Right-hand side of the extended closed loop at an RK4 stage.
    fn closed_loop_rates(
        &self,
        t: T,
        y: &[T; 6],
        thrust: T,
        warm: T,
        estimates: &SecondDerivatives<T>,
    ) -> Result<[T; 6]> {
        let p = &self.plant.params;
        let x = ExtendedState::from_array(*y);
        let delta_p = x.delta_p.max(-p.delta_p_max).min(p.delta_p_max);
        let outer = self.controller.outer_loop(t, &x.state, delta_p, thrust, Some(warm))?;
        let law = self.controller.pitch_law(&x.state, delta_p, thrust, &outer, estimates)?;
        let (u, _) = saturate(&ControlInput { delta_m: law.delta_m, delta_p, thrust }, p);
        let r = self.plant.derivatives(&x.state, &u, self.plant_mode)?;
        let mut nozzle_rate = outer.delta_p_rate;
        let pushing_out = (delta_p >= p.delta_p_max && nozzle_rate > T::zero())
            || (delta_p <= -p.delta_p_max && nozzle_rate < T::zero());
        if pushing_out {
            nozzle_rate = T::zero();
        }
        Ok([r.v, r.theta, r.alpha, r.q, r.h, nozzle_rate])
    }
}
