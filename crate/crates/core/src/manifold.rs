//! The angle-of-attack manifold.
//!
//! The path-angle tracking requirement `dθ̄/dt = a₁ θ̄` is an implicit
//! equation `G(α; t, v, θ, h, δp, P) = 0` in the angle of attack:
//!
//! ```text
//! G = A₂′(α, …) − θm ω cos(ωt) − a₁ (θ − θm [1 + sin(ωt)])
//! ```
//!
//! Its root `φ` is the angle-of-attack command. The root is found numerically
//! and its sensitivities follow from the implicit function theorem,
//! `∂φ/∂x = −(∂G/∂x)/(∂G/∂α)`.

use serde::{Deserialize, Serialize};

use crate::aero::AeroMode;
use crate::dynamics::{check_airspeed, ControlInput, FlightModel, State};
use crate::error::{Error, Result};
use crate::num::Real;

/// Tracking targets: path angle `θm [1 + sin(ωt)]` and constant pitch attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverProgram<T> {
    /// Program amplitude `θm`, rad.
    pub theta_m: T,
    /// Program frequency, rad/s.
    pub omega: T,
    /// Target pitch attitude `ϑ′`, rad.
    pub pitch_target: T,
}

impl<T: Real> ManeuverProgram<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= T::zero()) || !self.theta_m.is_finite() || !self.pitch_target.is_finite() {
            return Err(Error::InvalidParameter("program needs omega >= 0 and finite angles".into()));
        }
        Ok(())
    }

    pub fn path_command(&self, t: T) -> T {
        self.theta_m * (T::one() + (self.omega * t).sin())
    }

    pub fn path_command_rate(&self, t: T) -> T {
        self.theta_m * self.omega * (self.omega * t).cos()
    }

    /// `θ̄ = θ − θm [1 + sin(ωt)]`.
    pub fn path_error(&self, theta: T, t: T) -> T {
        theta - self.path_command(t)
    }

    /// `ϑ̄ = ϑ − ϑ′`.
    pub fn attitude_error(&self, pitch_attitude: T) -> T {
        pitch_attitude - self.pitch_target
    }
}

/// Shaping coefficients of the four attractors, all strictly negative.
///
/// `a1` shapes the path-angle attractor, `a2` the angle-of-attack mediator,
/// `a3` the pitch-rate mediator and `a4` the pitch-attitude attractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub a4: T,
}

impl<T: Real> Gains<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3), ("a4", self.a4)] {
            if !(a < T::zero()) {
                return Err(Error::InvalidParameter(format!("gain {name} = {a}: gain must be negative")));
            }
        }
        Ok(())
    }

    /// Longest time constant `max |1/aᵢ|`.
    pub fn slowest_time_constant(&self) -> T {
        [self.a1, self.a2, self.a3, self.a4].iter().map(|a| a.recip().abs()).fold(T::zero(), T::max)
    }
}

/// Arguments the angle-of-attack command depends on (besides `ω` and `a₁`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldArgs<T> {
    pub t: T,
    pub v: T,
    pub theta: T,
    pub h: T,
    pub delta_p: T,
    pub thrust: T,
}

impl<T: Real> ManifoldArgs<T> {
    pub fn new(t: T, s: &State<T>, delta_p: T, thrust: T) -> Self {
        Self { t, v: s.v, theta: s.theta, h: s.h, delta_p, thrust }
    }

    fn design_state(&self, alpha: T) -> (State<T>, ControlInput<T>) {
        let s = State { v: self.v, theta: self.theta, alpha, q: T::zero(), h: self.h };
        let u = ControlInput { delta_m: T::zero(), delta_p: self.delta_p, thrust: self.thrust };
        (s, u)
    }
}

/// Partial derivatives of `G` at a given angle of attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldGradient<T> {
    pub alpha: T,
    pub t: T,
    pub v: T,
    pub h: T,
    pub theta: T,
    pub delta_p: T,
}

/// Sensitivities of the angle-of-attack command `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiPartials<T> {
    pub t: T,
    pub v: T,
    pub h: T,
    pub theta: T,
    pub delta_p: T,
}

/// A solved point on the angle-of-attack manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCommand<T> {
    pub phi: T,
    /// `|G(φ)|`.
    pub residual: T,
    pub partials: PhiPartials<T>,
}

/// Root-finder and singularity settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub bracket_lo: T,
    pub bracket_hi: T,
    /// Absolute tolerance on the root (rad) and on `|G|`.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Threshold below which `|∂G/∂α|` and `|∂φ/∂δp|` count as singular.
    pub singular_eps: T,
    /// Number of cells the bracket is divided into when scanning for the
    /// nearest sign change.
    pub scan_cells: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        let tol = 1e-10f64.max(32.0 * T::eps_f64());
        Self {
            bracket_lo: -T::FRAC_PI_6(),
            bracket_hi: T::FRAC_PI_6(),
            tolerance: T::lit(tol),
            max_iterations: 100,
            singular_eps: T::lit(1e-8),
            scan_cells: 64,
        }
    }
}

/// Left-hand side `G` of the angle-of-attack manifold equation.
pub fn residual_g<T: Real>(
    alpha: T,
    args: &ManifoldArgs<T>,
    prog: &ManeuverProgram<T>,
    a1: T,
    model: &FlightModel<T>,
) -> Result<T> {
    let (s, u) = args.design_state(alpha);
    let a2_design = model.path_rate(&s, &u, AeroMode::Simplified)?;
    Ok(a2_design - prog.path_command_rate(args.t) - a1 * prog.path_error(args.theta, args.t))
}

/// Analytic partial derivatives of `G`.
pub fn manifold_gradient<T: Real>(
    alpha: T,
    args: &ManifoldArgs<T>,
    prog: &ManeuverProgram<T>,
    a1: T,
    model: &FlightModel<T>,
) -> Result<ManifoldGradient<T>> {
    check_airspeed(args.v)?;
    let p = &model.params;
    let rho = model.atmosphere.density(args.h)?;
    let drho = model.atmosphere.density_gradient(args.h)?;
    let half = T::lit(0.5);
    let two_alpha = alpha + alpha;
    let nozzle = alpha + args.delta_p;
    let thrust_over_mv = args.thrust / (p.mass * args.v);
    let lift_shape = p.wing_area * p.cy_alpha / p.mass;
    let wt = prog.omega * args.t;
    let (g, v) = (p.gravity, args.v);

    Ok(ManifoldGradient {
        alpha: thrust_over_mv * nozzle.cos() + rho * v * lift_shape * two_alpha.cos(),
        t: prog.theta_m * prog.omega * prog.omega * wt.sin() + a1 * prog.theta_m * prog.omega * wt.cos(),
        v: -thrust_over_mv / v * nozzle.sin()
            + half * rho * lift_shape * two_alpha.sin()
            + g / (v * v) * args.theta.cos(),
        h: half * drho * v * lift_shape * two_alpha.sin(),
        theta: g / v * args.theta.sin() - a1,
        delta_p: thrust_over_mv * nozzle.cos(),
    })
}

/// Implicit-function sensitivities of the root `φ`.
pub fn phi_partials<T: Real>(
    phi: T,
    args: &ManifoldArgs<T>,
    prog: &ManeuverProgram<T>,
    a1: T,
    model: &FlightModel<T>,
    singular_eps: T,
) -> Result<PhiPartials<T>> {
    let grad = manifold_gradient(phi, args, prog, a1, model)?;
    if !(grad.alpha.abs() >= singular_eps) {
        return Err(Error::ManifoldSingular { dg_dalpha: grad.alpha.to_f64().unwrap_or(f64::NAN) });
    }
    let inv = -grad.alpha.recip();
    Ok(PhiPartials {
        t: grad.t * inv,
        v: grad.v * inv,
        h: grad.h * inv,
        theta: grad.theta * inv,
        delta_p: grad.delta_p * inv,
    })
}

/// Root of `G` nearest the warm start (or nearest zero), without partials.
pub fn find_alpha_root<T: Real>(
    args: &ManifoldArgs<T>,
    prog: &ManeuverProgram<T>,
    a1: T,
    model: &FlightModel<T>,
    warm_start: Option<T>,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    check_airspeed(args.v)?;
    // Validate the altitude once so the closures below cannot fail on it.
    model.atmosphere.density(args.h)?;
    let eval = |alpha: T| -> Result<(T, T)> {
        let g = residual_g(alpha, args, prog, a1, model)?;
        let dg = manifold_gradient(alpha, args, prog, a1, model)?.alpha;
        Ok((g, dg))
    };
    nearest_root(eval, warm_start.unwrap_or_else(T::zero), cfg)
}

/// Solves the manifold equation and evaluates the command sensitivities.
pub fn solve_alpha_command<T: Real>(
    args: &ManifoldArgs<T>,
    prog: &ManeuverProgram<T>,
    a1: T,
    model: &FlightModel<T>,
    warm_start: Option<T>,
    cfg: &SolverConfig<T>,
) -> Result<AlphaCommand<T>> {
    let phi = find_alpha_root(args, prog, a1, model, warm_start, cfg)?;
    let residual = residual_g(phi, args, prog, a1, model)?.abs();
    let partials = phi_partials(phi, args, prog, a1, model, cfg.singular_eps)?;
    Ok(AlphaCommand { phi, residual, partials })
}

/// Nearest sign change to `start`, refined by safeguarded Newton.
fn nearest_root<T: Real, F>(f: F, start: T, cfg: &SolverConfig<T>) -> Result<T>
where
    F: Fn(T) -> Result<(T, T)>,
{
    let (lo, hi) = (cfg.bracket_lo, cfg.bracket_hi);
    let no_root =
        || Error::NoRootInBracket { lo: lo.to_f64().unwrap_or(f64::NAN), hi: hi.to_f64().unwrap_or(f64::NAN) };
    let start = start.max(lo).min(hi);
    let (g0, _) = f(start)?;
    if g0 == T::zero() {
        return Ok(start);
    }

    let cell = (hi - lo) / T::lit(cfg.scan_cells.max(1) as f64);
    let (mut left, mut g_left) = (start, g0);
    let (mut right, mut g_right) = (start, g0);
    while left > lo || right < hi {
        let mut below = None;
        let mut above = None;
        if right < hi {
            let next = (right + cell).min(hi);
            let (g_next, _) = f(next)?;
            if g_right * g_next <= T::zero() {
                above = Some((right, next, g_right, g_next));
            }
            right = next;
            g_right = g_next;
        }
        if left > lo {
            let next = (left - cell).max(lo);
            let (g_next, _) = f(next)?;
            if g_left * g_next <= T::zero() {
                below = Some((next, left, g_next, g_left));
            }
            left = next;
            g_left = g_next;
        }
        match (below, above) {
            (None, None) => continue,
            (Some(b), None) | (None, Some(b)) => return refine(&f, b, cfg),
            (Some(b), Some(a)) => {
                let rb = refine(&f, b, cfg)?;
                let ra = refine(&f, a, cfg)?;
                let (db, da) = ((start - rb).abs(), (ra - start).abs());
                if (db - da).abs() <= cfg.tolerance && (ra - rb).abs() > cfg.tolerance {
                    return Err(Error::AmbiguousRoot {
                        below: rb.to_f64().unwrap_or(f64::NAN),
                        above: ra.to_f64().unwrap_or(f64::NAN),
                    });
                }
                return Ok(if db <= da { rb } else { ra });
            }
        }
    }

    // No sign change anywhere: a tangential root can still be reached by
    // plain Newton iteration.
    let mut x = start;
    for _ in 0..cfg.max_iterations {
        let (g, dg) = f(x)?;
        if g.abs() <= cfg.tolerance {
            return if x >= lo && x <= hi { Ok(x) } else { Err(no_root()) };
        }
        if dg == T::zero() || !dg.is_finite() {
            break;
        }
        x = x - g / dg;
        if !x.is_finite() || x < lo - (hi - lo) || x > hi + (hi - lo) {
            break;
        }
    }
    Err(no_root())
}

/// Safeguarded Newton on a bracket `[a, b]` with `g(a)·g(b) ≤ 0`.
fn refine<T: Real, F>(f: &F, bracket: (T, T, T, T), cfg: &SolverConfig<T>) -> Result<T>
where
    F: Fn(T) -> Result<(T, T)>,
{
    let (mut a, mut b, ga, gb) = bracket;
    if ga == T::zero() {
        return Ok(a);
    }
    if gb == T::zero() {
        return Ok(b);
    }
    let rising = gb > ga;
    let mut x = if ga.abs() < gb.abs() { a } else { b };
    let half = T::lit(0.5);

    for _ in 0..cfg.max_iterations {
        let (g, dg) = f(x)?;
        if g == T::zero() {
            return Ok(x);
        }
        if (g > T::zero()) == rising {
            b = x;
        } else {
            a = x;
        }
        let newton = x - g / dg;
        let next =
            if dg != T::zero() && newton.is_finite() && newton > a && newton < b { newton } else { half * (a + b) };
        let step = (next - x).abs();
        x = next;
        if step <= cfg.tolerance {
            return Ok(polish(f, x, a, b));
        }
    }
    let (g, _) = f(x)?;
    if g.abs() <= cfg.tolerance {
        Ok(x)
    } else {
        Err(Error::NoRootInBracket {
            lo: cfg.bracket_lo.to_f64().unwrap_or(f64::NAN),
            hi: cfg.bracket_hi.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// A couple of extra Newton steps to reach machine precision, kept only while
/// they shrink the residual and land within one bracket width of the bracket.
fn polish<T: Real, F>(f: &F, mut x: T, a: T, b: T) -> T
where
    F: Fn(T) -> Result<(T, T)>,
{
    let width = (b - a).abs();
    for _ in 0..3 {
        let Ok((g, dg)) = f(x) else { break };
        if g == T::zero() || dg == T::zero() {
            break;
        }
        let next = x - g / dg;
        if !(next >= a.min(b) - width && next <= a.max(b) + width) {
            break;
        }
        match f(next) {
            Ok((gn, _)) if gn.abs() < g.abs() => x = next,
            _ => break,
        }
    }
    x
}
