//! The attractor cascade: pitch-rate command, nozzle-rate law and stabilizer
//! law.
//!
//! All laws are evaluated on the simplified aerodynamic model, whatever the
//! plant is. With the nozzle rate from [`delta_p_rate`] the pitch-rate command
//! collapses to `a₄ (ϑ − ϑ′)`, which is what makes the pitch attitude an
//! attractor; the stabilizer law then drives `q` onto that command.

use crate::aero::{AeroMode, AircraftParams};
use crate::dynamics::{ControlInput, FlightModel, State};
use crate::error::{Error, Result};
use crate::manifold::{
    solve_alpha_command, AlphaCommand, Gains, ManeuverProgram, ManifoldArgs, PhiPartials, SolverConfig,
};
use crate::num::Real;

/// `A₁` and `A₂′` evaluated with the simplified (design) aerodynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRates<T> {
    pub accel: T,
    pub path_rate: T,
}

impl<T: Real> DesignRates<T> {
    pub fn at(model: &FlightModel<T>, s: &State<T>, delta_p: T, thrust: T) -> Result<Self> {
        // δm only enters the full lift model, so any value will do here.
        let u = ControlInput { delta_m: T::zero(), delta_p, thrust };
        Ok(Self {
            accel: model.accel(s, &u, AeroMode::Simplified)?,
            path_rate: model.path_rate(s, &u, AeroMode::Simplified)?,
        })
    }
}

/// Backward-difference estimates used in the stabilizer law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondDerivatives<T> {
    /// `d²φ/dt²`.
    pub phi_accel: T,
    /// `dA₂′/dt`.
    pub path_rate_rate: T,
}

/// Outcome of one evaluation of the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlComputation<T> {
    pub command: AlphaCommand<T>,
    pub rates: DesignRates<T>,
    /// Explicit part of `dφ/dt` (everything except the nozzle term).
    pub w0: T,
    pub delta_p_rate: T,
    /// Total `dφ/dt`.
    pub dphi_dt: T,
    pub q_cmd: T,
    pub estimates: SecondDerivatives<T>,
    pub pitch: PitchLaw<T>,
}

/// Stabilizer command together with its shaping terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchLaw<T> {
    pub delta_m: T,
    pub w2: T,
    pub w3: T,
    pub w4: T,
}

/// Pitch-rate command `a₂ (α − φ) + A₂′ + dφ/dt`.
pub fn q_command<T: Real>(s: &State<T>, phi: T, dphi_dt: T, a2: T, rates: &DesignRates<T>) -> T {
    a2 * (s.alpha - phi) + rates.path_rate + dphi_dt
}

/// `W₀ = ∂φ/∂t + ∂φ/∂v·A₁ + ∂φ/∂h·v sin θ + ∂φ/∂θ·A₂′`.
pub fn explicit_phi_rate<T: Real>(s: &State<T>, partials: &PhiPartials<T>, rates: &DesignRates<T>) -> T {
    partials.t + partials.v * rates.accel + partials.h * s.v * s.theta.sin() + partials.theta * rates.path_rate
}

/// Nozzle deflection rate that turns the pitch-attitude manifold into an
/// attractor. Returns `(δ̇p, W₀)`.
pub fn delta_p_rate<T: Real>(
    s: &State<T>,
    command: &AlphaCommand<T>,
    prog: &ManeuverProgram<T>,
    gains: &Gains<T>,
    rates: &DesignRates<T>,
    singular_eps: T,
) -> Result<(T, T)> {
    let sensitivity = command.partials.delta_p;
    if !(sensitivity.abs() >= singular_eps) {
        return Err(Error::NozzleLawSingular { dphi_ddelta_p: sensitivity.to_f64().unwrap_or(f64::NAN) });
    }
    let w0 = explicit_phi_rate(s, &command.partials, rates);
    let bracket =
        gains.a4 * prog.attitude_error(s.pitch_attitude()) - gains.a2 * (s.alpha - command.phi) - rates.path_rate - w0;
    Ok((bracket / sensitivity, w0))
}

/// Chain rule `dφ/dt = W₀ + ∂φ/∂δp·δ̇p`.
pub fn dphi_dt_total<T: Real>(partials: &PhiPartials<T>, w0: T, delta_p_rate: T) -> T {
    w0 + partials.delta_p * delta_p_rate
}

/// Stabilizer deflection that makes the pitch-rate manifold an attractor.
#[allow(clippy::too_many_arguments)]
pub fn delta_m_command<T: Real>(
    model: &FlightModel<T>,
    s: &State<T>,
    u: &ControlInput<T>,
    phi: T,
    dphi_dt: T,
    estimates: &SecondDerivatives<T>,
    gains: &Gains<T>,
    rates: &DesignRates<T>,
    pressure_floor: T,
) -> Result<PitchLaw<T>> {
    let p = &model.params;
    let pressure = dynamic_pressure_term(model, s)?;
    if !(pressure >= pressure_floor) {
        return Err(Error::DegeneratePressure { pressure: pressure.to_f64().unwrap_or(f64::NAN) });
    }
    let alpha_rate = s.q - rates.path_rate;
    let q_cmd = q_command(s, phi, dphi_dt, gains.a2, rates);
    let w2 = gains.a3 * (s.q - q_cmd);
    let w3 = gains.a2 * (alpha_rate - dphi_dt) + estimates.path_rate_rate + estimates.phi_accel;
    let w4 = p.cm_alpha * (s.alpha + s.alpha).sin() + p.cm_q * (p.chord / s.v) * s.q;
    let delta_m = ((p.pitch_inertia * (w2 + w3) - nozzle_moment(p, u)) / pressure - w4) / p.cm_delta_m;
    Ok(PitchLaw { delta_m, w2, w3, w4 })
}

/// `0.5 ρ v² S l`.
pub fn dynamic_pressure_term<T: Real>(model: &FlightModel<T>, s: &State<T>) -> Result<T> {
    let p = &model.params;
    let rho = model.atmosphere.density(s.h)?;
    Ok(T::lit(0.5) * rho * s.v * s.v * p.wing_area * p.chord)
}

fn nozzle_moment<T: Real>(p: &AircraftParams<T>, u: &ControlInput<T>) -> T {
    u.thrust * (p.nozzle_y + p.nozzle_x * u.delta_p.sin())
}

/// Residual of the pitch-attitude equation `a₄ (ϑ − ϑ′) = a₂ (α − φ) + A₂′ + dφ/dt`.
pub fn attitude_law_residual<T: Real>(
    s: &State<T>,
    prog: &ManeuverProgram<T>,
    gains: &Gains<T>,
    phi: T,
    dphi_dt: T,
    rates: &DesignRates<T>,
) -> T {
    gains.a4 * prog.attitude_error(s.pitch_attitude()) - q_command(s, phi, dphi_dt, gains.a2, rates)
}

/// Residual of the pitch-rate equation the stabilizer law is solved from:
/// `(pitch moment)/I_zz − W₃ − a₃ (q − q_cmd)` at the given `δm`.
#[allow(clippy::too_many_arguments)]
pub fn pitch_law_residual<T: Real>(
    model: &FlightModel<T>,
    s: &State<T>,
    u: &ControlInput<T>,
    phi: T,
    dphi_dt: T,
    estimates: &SecondDerivatives<T>,
    gains: &Gains<T>,
    rates: &DesignRates<T>,
) -> Result<T> {
    let q_dot = model.pitch_accel(s, u)?;
    let w3 = gains.a2 * (s.q - rates.path_rate - dphi_dt) + estimates.path_rate_rate + estimates.phi_accel;
    let q_cmd = q_command(s, phi, dphi_dt, gains.a2, rates);
    Ok(q_dot - w3 - gains.a3 * (s.q - q_cmd))
}

/// One-step memory of `dφ/dt` and `A₂′` for backward differencing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeHistory<T> {
    dt: T,
    previous: Option<(T, T)>,
}

impl<T: Real> DerivativeHistory<T> {
    pub fn new(dt: T) -> Self {
        Self { dt, previous: None }
    }

    /// First-order backward differences against the previous sample; zero
    /// when there is none.
    pub fn estimates(&self, dphi_dt: T, path_rate: T) -> SecondDerivatives<T> {
        match self.previous {
            Some((dphi_prev, a2_prev)) => SecondDerivatives {
                phi_accel: (dphi_dt - dphi_prev) / self.dt,
                path_rate_rate: (path_rate - a2_prev) / self.dt,
            },
            None => SecondDerivatives::default(),
        }
    }

    pub fn record(&mut self, dphi_dt: T, path_rate: T) {
        self.previous = Some((dphi_dt, path_rate));
    }

    /// Forget the stored sample, e.g. across a thrust discontinuity.
    pub fn reset(&mut self) {
        self.previous = None;
    }
}

/// Which channels were clipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaturationFlags {
    pub delta_m: bool,
    pub delta_p: bool,
    pub thrust: bool,
}

impl SaturationFlags {
    /// Bitmask: 1 = stabilizer, 2 = nozzle, 4 = thrust.
    pub fn bits(&self) -> u8 {
        u8::from(self.delta_m) | (u8::from(self.delta_p) << 1) | (u8::from(self.thrust) << 2)
    }

    pub fn from_bits(bits: u8) -> Self {
        Self { delta_m: bits & 1 != 0, delta_p: bits & 2 != 0, thrust: bits & 4 != 0 }
    }

    pub fn any(&self) -> bool {
        self.bits() != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self::from_bits(self.bits() | other.bits())
    }
}

/// Clamp every channel to its admissible range.
pub fn saturate<T: Real>(u: &ControlInput<T>, p: &AircraftParams<T>) -> (ControlInput<T>, SaturationFlags) {
    let clamp = |x: T, lo: T, hi: T| (x.max(lo).min(hi), x < lo || x > hi);
    let (delta_m, fm) = clamp(u.delta_m, -p.delta_m_max, p.delta_m_max);
    let (delta_p, fp) = clamp(u.delta_p, -p.delta_p_max, p.delta_p_max);
    let (thrust, ft) = clamp(u.thrust, p.thrust_min, p.thrust_max);
    (ControlInput { delta_m, delta_p, thrust }, SaturationFlags { delta_m: fm, delta_p: fp, thrust: ft })
}

/// Everything the cascade needs besides the state: design model, targets,
/// gains and numerical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeController<T> {
    /// Airframe and atmosphere as seen by the controller; always evaluated
    /// in simplified mode.
    pub model: FlightModel<T>,
    pub program: ManeuverProgram<T>,
    pub gains: Gains<T>,
    pub solver: SolverConfig<T>,
    /// Lower bound on `0.5 ρ v² S l` for the stabilizer law.
    pub pressure_floor: T,
}

/// Outer part of the cascade, up to the pitch-rate command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterLoop<T> {
    pub command: AlphaCommand<T>,
    pub rates: DesignRates<T>,
    pub w0: T,
    pub delta_p_rate: T,
    pub dphi_dt: T,
    pub q_cmd: T,
}

impl<T: Real> CascadeController<T> {
    pub fn new(model: FlightModel<T>, program: ManeuverProgram<T>, gains: Gains<T>) -> Self {
        Self { model, program, gains, solver: SolverConfig::default(), pressure_floor: T::lit(1e-6) }
    }

    /// Angle-of-attack command, nozzle rate and pitch-rate command.
    pub fn outer_loop(&self, t: T, s: &State<T>, delta_p: T, thrust: T, warm_start: Option<T>) -> Result<OuterLoop<T>> {
        let args = ManifoldArgs::new(t, s, delta_p, thrust);
        let command = solve_alpha_command(&args, &self.program, self.gains.a1, &self.model, warm_start, &self.solver)?;
        let rates = DesignRates::at(&self.model, s, delta_p, thrust)?;
        let (delta_p_rate, w0) =
            delta_p_rate(s, &command, &self.program, &self.gains, &rates, self.solver.singular_eps)?;
        let dphi_dt = dphi_dt_total(&command.partials, w0, delta_p_rate);
        let q_cmd = q_command(s, command.phi, dphi_dt, self.gains.a2, &rates);
        Ok(OuterLoop { command, rates, w0, delta_p_rate, dphi_dt, q_cmd })
    }

    /// Stabilizer law on top of an evaluated outer loop.
    pub fn pitch_law(
        &self,
        s: &State<T>,
        delta_p: T,
        thrust: T,
        outer: &OuterLoop<T>,
        estimates: &SecondDerivatives<T>,
    ) -> Result<PitchLaw<T>> {
        let u = ControlInput { delta_m: T::zero(), delta_p, thrust };
        delta_m_command(
            &self.model,
            s,
            &u,
            outer.command.phi,
            outer.dphi_dt,
            estimates,
            &self.gains,
            &outer.rates,
            self.pressure_floor,
        )
    }

    /// Full cascade with the given second-derivative estimates.
    pub fn evaluate(
        &self,
        t: T,
        s: &State<T>,
        delta_p: T,
        thrust: T,
        warm_start: Option<T>,
        estimates: &SecondDerivatives<T>,
    ) -> Result<ControlComputation<T>> {
        let outer = self.outer_loop(t, s, delta_p, thrust, warm_start)?;
        let pitch = self.pitch_law(s, delta_p, thrust, &outer, estimates)?;
        Ok(ControlComputation {
            command: outer.command,
            rates: outer.rates,
            w0: outer.w0,
            delta_p_rate: outer.delta_p_rate,
            dphi_dt: outer.dphi_dt,
            q_cmd: outer.q_cmd,
            estimates: *estimates,
            pitch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::Atmosphere;
    use approx::assert_relative_eq;

    fn controller() -> CascadeController<f64> {
        CascadeController::new(
            FlightModel::new(AircraftParams::nominal(), Atmosphere::default()),
            ManeuverProgram { theta_m: 0.05, omega: 0.2, pitch_target: 0.2 },
            Gains { a1: -0.5, a2: -2.0, a3: -4.0, a4: -1.0 },
        )
    }

    fn state() -> State<f64> {
        State { v: 160.0, theta: 0.08, alpha: 0.11, q: 0.01, h: 4000.0 }
    }

    #[test]
    fn q_command_reduces_to_design_rate_on_manifold() {
        let c = controller();
        let s = state();
        let rates = DesignRates::at(&c.model, &s, 0.02, 9.0e4).unwrap();
        assert_eq!(q_command(&s, s.alpha, 0.0, -2.0, &rates), rates.path_rate);
    }

    #[test]
    fn q_command_is_linear_in_a2() {
        let c = controller();
        let s = state();
        let rates = DesignRates::at(&c.model, &s, 0.02, 9.0e4).unwrap();
        let (phi, dphi) = (0.09, 0.003);
        let diff = q_command(&s, phi, dphi, -4.0, &rates) - q_command(&s, phi, dphi, -2.0, &rates);
        assert_relative_eq!(diff, -2.0 * (s.alpha - phi), max_relative = 1e-12);
    }

    #[test]
    fn cascade_collapses_to_attitude_command() {
        let c = controller();
        let s = state();
        let outer = c.outer_loop(2.0, &s, 0.03, 9.0e4, None).unwrap();
        let expected = c.gains.a4 * c.program.attitude_error(s.pitch_attitude());
        assert!((outer.q_cmd - expected).abs() <= 1e-12);
        let r = attitude_law_residual(&s, &c.program, &c.gains, outer.command.phi, outer.dphi_dt, &outer.rates);
        assert!(r.abs() <= 1e-12);
        // The chain rule with this nozzle rate reproduces the same identity.
        let dphi = dphi_dt_total(&outer.command.partials, outer.w0, outer.delta_p_rate);
        assert_relative_eq!(
            dphi,
            expected - c.gains.a2 * (s.alpha - outer.command.phi) - outer.rates.path_rate,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_nozzle_rate_leaves_explicit_part() {
        let p = PhiPartials { t: 0.1, v: 0.2, h: 0.3, theta: 0.4, delta_p: 0.5 };
        assert_eq!(dphi_dt_total(&p, 0.7, 0.0), 0.7);
    }

    #[test]
    fn nozzle_rate_shifts_linearly_with_attitude_error() {
        let c = controller();
        let s = state();
        let args = ManifoldArgs::new(1.0, &s, 0.03, 9.0e4);
        let command = solve_alpha_command(&args, &c.program, c.gains.a1, &c.model, None, &c.solver).unwrap();
        let rates = DesignRates::at(&c.model, &s, 0.03, 9.0e4).unwrap();
        let err = c.program.attitude_error(s.pitch_attitude());
        let (r1, _) = delta_p_rate(&s, &command, &c.program, &c.gains, &rates, 1e-8).unwrap();
        // Moving the target by -err doubles the attitude error.
        let doubled = ManeuverProgram { pitch_target: c.program.pitch_target - err, ..c.program };
        let (r2, _) = delta_p_rate(&s, &command, &doubled, &c.gains, &rates, 1e-8).unwrap();
        assert_relative_eq!((r2 - r1) * command.partials.delta_p, c.gains.a4 * err, max_relative = 1e-9);
    }

    #[test]
    fn nozzle_rate_vanishes_in_equilibrium() {
        // On both terminal manifolds, on the alpha manifold, with W0 = 0.
        let c = controller();
        let s = state();
        let command = AlphaCommand {
            phi: s.alpha,
            residual: 0.0,
            partials: PhiPartials { delta_p: -0.05, ..Default::default() },
        };
        let rates = DesignRates { accel: 0.0, path_rate: 0.0 };
        let prog = ManeuverProgram { pitch_target: s.pitch_attitude(), ..c.program };
        let (rate, w0) = delta_p_rate(&s, &command, &prog, &c.gains, &rates, 1e-8).unwrap();
        assert_eq!((rate, w0), (0.0, 0.0));
    }

    #[test]
    fn singular_nozzle_law_is_reported() {
        let c = controller();
        let s = state();
        let command = AlphaCommand { phi: s.alpha, residual: 0.0, partials: PhiPartials::default() };
        let rates = DesignRates { accel: 0.0, path_rate: 0.0 };
        assert!(matches!(
            delta_p_rate(&s, &command, &c.program, &c.gains, &rates, 1e-8),
            Err(Error::NozzleLawSingular { .. })
        ));
    }

    #[test]
    fn stabilizer_law_satisfies_pitch_equation() {
        let c = controller();
        let s = state();
        let (dp, thrust) = (0.03, 9.0e4);
        let est = SecondDerivatives { phi_accel: 0.013, path_rate_rate: -0.004 };
        let out = c.evaluate(1.5, &s, dp, thrust, None, &est).unwrap();
        let u = ControlInput { delta_m: out.pitch.delta_m, delta_p: dp, thrust };
        let r = pitch_law_residual(&c.model, &s, &u, out.command.phi, out.dphi_dt, &est, &c.gains, &out.rates).unwrap();
        assert!(r.abs() <= 1e-12, "residual {r}");
    }

    #[test]
    fn w2_vanishes_on_rate_manifold_and_w4_at_rest() {
        let c = controller();
        let mut s = state();
        let outer = c.outer_loop(1.0, &s, 0.03, 9.0e4, None).unwrap();
        s.q = outer.q_cmd;
        let outer = c.outer_loop(1.0, &s, 0.03, 9.0e4, None).unwrap();
        let law = c.pitch_law(&s, 0.03, 9.0e4, &outer, &SecondDerivatives::default()).unwrap();
        assert!(law.w2.abs() < 1e-15);
        let rest = State { alpha: 0.0, q: 0.0, ..s };
        let outer = c.outer_loop(1.0, &rest, 0.03, 9.0e4, None).unwrap();
        assert_eq!(c.pitch_law(&rest, 0.03, 9.0e4, &outer, &SecondDerivatives::default()).unwrap().w4, 0.0);
    }

    #[test]
    fn degenerate_pressure_is_reported() {
        let mut c = controller();
        c.pressure_floor = 1e12;
        let s = state();
        let outer = c.outer_loop(1.0, &s, 0.03, 9.0e4, None).unwrap();
        assert!(matches!(
            c.pitch_law(&s, 0.03, 9.0e4, &outer, &SecondDerivatives::default()),
            Err(Error::DegeneratePressure { .. })
        ));
    }

    #[test]
    fn backward_differences() {
        let dt = 0.01;
        let mut h = DerivativeHistory::new(dt);
        assert_eq!(h.estimates(3.0, 4.0), SecondDerivatives::default());
        h.record(3.0, 4.0);
        assert_eq!(h.estimates(3.0, 4.0), SecondDerivatives::default());
        // Linear data: exact slope.
        let mut h = DerivativeHistory::new(dt);
        h.record(1.0, -1.0);
        let e = h.estimates(1.0 + 2.5 * dt, -1.0 - 0.5 * dt);
        assert_relative_eq!(e.phi_accel, 2.5, max_relative = 1e-12);
        assert_relative_eq!(e.path_rate_rate, -0.5, max_relative = 1e-12);
        // Quadratic data: equals the derivative at the midpoint.
        let f = |t: f64| 3.0 * t * t - t;
        let df = |t: f64| 6.0 * t - 1.0;
        let t = 0.7;
        let mut h = DerivativeHistory::new(dt);
        h.record(f(t - dt), 0.0);
        let e = h.estimates(f(t), 0.0);
        assert_relative_eq!(e.phi_accel, df(t - 0.5 * dt), max_relative = 1e-9);
        assert!((e.phi_accel - df(t)).abs() <= 3.0 * dt + 1e-9);
        h.reset();
        assert_eq!(h.estimates(1.0, 1.0), SecondDerivatives::default());
    }

    #[test]
    fn saturation_clamps_and_flags() {
        let p = AircraftParams::nominal();
        let inside = ControlInput { delta_m: 0.1, delta_p: -0.1, thrust: 5.0e4 };
        assert_eq!(saturate(&inside, &p), (inside, SaturationFlags::default()));
        let outside = ControlInput { delta_m: 2.0 * p.delta_m_max, delta_p: -3.0, thrust: 2.0 * p.thrust_max };
        let (u, f) = saturate(&outside, &p);
        assert_eq!(u.delta_m, p.delta_m_max);
        assert_eq!(u.delta_p, -p.delta_p_max);
        assert_eq!(u.thrust, p.thrust_max);
        assert_eq!(f.bits(), 7);
        assert_eq!(SaturationFlags::from_bits(5), SaturationFlags { delta_m: true, delta_p: false, thrust: true });
    }
}
