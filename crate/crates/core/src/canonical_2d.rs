//! Canonization of a planar system `dx₁/dt = f₁(x₂) + u₁`,
//! `dx₂/dt = f₂(x₁) + u₂` that must track a curve `χ(t)`.
//!
//! The translation `y = x − χ(t)` sends the curve to the origin. The feedback
//! cancels `f` and the curve velocity and imposes `dyᵢ/dt = gᵢ(yᵢ)`, so the
//! quadratic form `V = y₁² + y₂²` is a Lyapunov function whenever `gᵢ(0) = 0`
//! and `gᵢ′ < 0`. The convergence condition of the general construction
//! (which restricts admissible `f`) is not checked here.

use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::num::Real;

pub type ScalarMap<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// A target curve component with its analytic time derivative.
pub struct Curve<T> {
    pub value: ScalarMap<T>,
    pub rate: ScalarMap<T>,
}

impl<T: Real> Curve<T> {
    pub fn new(value: impl Fn(T) -> T + Send + Sync + 'static, rate: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { value: Box::new(value), rate: Box::new(rate) }
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_| c, |_| T::zero())
    }
}

pub struct PlanarSystem<T> {
    /// Drift of `x₁` as a function of `x₂`.
    pub f1: ScalarMap<T>,
    /// Drift of `x₂` as a function of `x₁`.
    pub f2: ScalarMap<T>,
    pub chi1: Curve<T>,
    pub chi2: Curve<T>,
    pub g1: ScalarMap<T>,
    pub g2: ScalarMap<T>,
}

/// One logged sample of a planar run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSample<T> {
    pub t: T,
    pub x: [T; 2],
    pub y: [T; 2],
    pub u: [T; 2],
    pub clf: T,
    /// `2y₁g₁(y₁) + 2y₂g₂(y₂)`.
    pub clf_rate: T,
}

/// Half-width and resolution of the grid on which the shaping maps are
/// checked.
pub const SHAPING_CHECK_RANGE: f64 = 10.0;
pub const SHAPING_CHECK_POINTS: usize = 2001;

impl<T: Real> PlanarSystem<T> {
    /// Linear shaping `gᵢ(y) = aᵢ y`.
    pub fn linear(
        f1: impl Fn(T) -> T + Send + Sync + 'static,
        f2: impl Fn(T) -> T + Send + Sync + 'static,
        chi1: Curve<T>,
        chi2: Curve<T>,
        a: [T; 2],
    ) -> Self {
        let [a1, a2] = a;
        Self {
            f1: Box::new(f1),
            f2: Box::new(f2),
            chi1,
            chi2,
            g1: Box::new(move |y| a1 * y),
            g2: Box::new(move |y| a2 * y),
        }
    }

    /// Drift-free system tracking `χ = (sin t, cos t)` with linear shaping.
    pub fn demo(a: [T; 2]) -> Self {
        Self::linear(
            |_| T::zero(),
            |_| T::zero(),
            Curve::new(|t: T| t.sin(), |t: T| t.cos()),
            Curve::new(|t: T| t.cos(), |t: T| -t.sin()),
            a,
        )
    }

    /// Checks `gᵢ(0) = 0` and that each `gᵢ` strictly decreases between
    /// neighbouring points of a uniform grid on `[−10, 10]`.
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("g1", &self.g1), ("g2", &self.g2)] {
            if g(T::zero()) != T::zero() {
                return Err(Error::InvalidParameter(format!("{name}(0) must be 0")));
            }
            let step = T::lit(2.0 * SHAPING_CHECK_RANGE / (SHAPING_CHECK_POINTS - 1) as f64);
            let mut prev = g(T::lit(-SHAPING_CHECK_RANGE));
            for k in 1..SHAPING_CHECK_POINTS {
                let y = T::lit(-SHAPING_CHECK_RANGE) + step * T::lit(k as f64);
                let cur = g(y);
                if !(cur < prev) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be strictly decreasing (fails near y = {y})"
                    )));
                }
                prev = cur;
            }
        }
        Ok(())
    }

    pub fn canonize(&self, x: [T; 2], t: T) -> [T; 2] {
        [x[0] - (self.chi1.value)(t), x[1] - (self.chi2.value)(t)]
    }

    pub fn uncanonize(&self, y: [T; 2], t: T) -> [T; 2] {
        [y[0] + (self.chi1.value)(t), y[1] + (self.chi2.value)(t)]
    }

    pub fn control(&self, x: [T; 2], t: T) -> [T; 2] {
        let y = self.canonize(x, t);
        [
            (self.g1)(y[0]) + (self.chi1.rate)(t) - (self.f1)(x[1]),
            (self.g2)(y[1]) + (self.chi2.rate)(t) - (self.f2)(x[0]),
        ]
    }

    pub fn closed_loop_rates(&self, x: [T; 2], t: T) -> [T; 2] {
        let u = self.control(x, t);
        [(self.f1)(x[1]) + u[0], (self.f2)(x[0]) + u[1]]
    }

    pub fn clf(y: [T; 2]) -> T {
        y[0] * y[0] + y[1] * y[1]
    }

    pub fn clf_rate(&self, y: [T; 2]) -> T {
        let two = T::lit(2.0);
        two * y[0] * (self.g1)(y[0]) + two * y[1] * (self.g2)(y[1])
    }

    fn sample(&self, t: T, x: [T; 2]) -> PlanarSample<T> {
        let y = self.canonize(x, t);
        PlanarSample { t, x, y, u: self.control(x, t), clf: Self::clf(y), clf_rate: self.clf_rate(y) }
    }

    /// RK4 closed loop from `t = 0`; returns one sample per grid point
    /// including both ends.
    pub fn simulate(&self, x0: [T; 2], t_final: T, dt: T) -> Result<Vec<PlanarSample<T>>> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidStep(dt.to_f64().unwrap_or(f64::NAN)));
        }
        let steps = (t_final / dt).round().to_usize().unwrap_or(0);
        let mut out = Vec::with_capacity(steps + 1);
        let mut x = x0;
        out.push(self.sample(T::zero(), x));
        for k in 0..steps {
            let t = T::lit(k as f64) * dt;
            x = rk4_step(|t, x: &[T; 2]| Ok(self.closed_loop_rates(*x, t)), t, &x, dt)?;
            out.push(self.sample(T::lit((k + 1) as f64) * dt, x));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drifty(a: [f64; 2]) -> PlanarSystem<f64> {
        PlanarSystem::linear(
            |x2| x2 * x2 - 0.3 * x2,
            |x1| (2.0 * x1).sin() + x1,
            Curve::new(|t: f64| (0.7 * t).sin() + 0.2, |t: f64| 0.7 * (0.7 * t).cos()),
            Curve::new(|t: f64| (1.3 * t).cos(), |t: f64| -1.3 * (1.3 * t).sin()),
            a,
        )
    }

    #[test]
    fn canonize_examples() {
        let s = PlanarSystem::demo([-1.0, -2.0]);
        assert_eq!(s.canonize([1.0, 1.0], 0.0), [1.0, 0.0]);
        let t = 0.8f64;
        assert_eq!(s.canonize([t.sin(), t.cos()], t), [0.0, 0.0]);
        let x = [0.37, -1.9];
        let back: [f64; 2] = s.uncanonize(s.canonize(x, t), t);
        assert!((back[0] - x[0]).abs() <= f64::EPSILON && (back[1] - x[1]).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn control_on_curve_cancels_drift() {
        let s = drifty([-1.0, -3.0]);
        let t = 2.1;
        let x = s.uncanonize([0.0, 0.0], t);
        let r = s.closed_loop_rates(x, t);
        assert!((r[0] - (s.chi1.rate)(t)).abs() < 1e-14);
        assert!((r[1] - (s.chi2.rate)(t)).abs() < 1e-14);
    }

    #[test]
    fn linear_shaping_gives_linear_error_dynamics() {
        let a = [-0.4, -2.5];
        let s = drifty(a);
        let t = 0.9;
        let y = [0.3, -0.2];
        let x = s.uncanonize(y, t);
        let r = s.closed_loop_rates(x, t);
        let ydot = [r[0] - (s.chi1.rate)(t), r[1] - (s.chi2.rate)(t)];
        assert!((ydot[0] - a[0] * y[0]).abs() < 1e-14);
        assert!((ydot[1] - a[1] * y[1]).abs() < 1e-14);
    }

    #[test]
    fn driftless_constant_curve_control_is_shaping() {
        let s = PlanarSystem::linear(|_| 0.0, |_| 0.0, Curve::constant(1.0), Curve::constant(-2.0), [-3.0, -5.0]);
        assert_eq!(s.control([1.5, -1.0], 4.0), [-1.5, -5.0]);
    }

    #[test]
    fn simulation_matches_exponential() {
        let a = [-0.8, -2.0];
        let s = drifty(a);
        let y0 = [0.5, -0.25];
        let log = s.simulate(s.uncanonize(y0, 0.0), 10.0, 1e-3).unwrap();
        assert_eq!(log.len(), 10_001);
        let worst = log
            .iter()
            .map(|p| (p.y[0] - y0[0] * (a[0] * p.t).exp()).abs().max((p.y[1] - y0[1] * (a[1] * p.t).exp()).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "sup error {worst}");
        assert!(log.windows(2).all(|w| w[1].clf < w[0].clf));
    }

    #[test]
    fn start_on_curve_stays_on_curve() {
        let s = drifty([-1.0, -1.0]);
        let log = s.simulate(s.uncanonize([0.0, 0.0], 0.0), 10.0, 1e-3).unwrap();
        let worst = log.iter().map(|p| p.y[0].abs().max(p.y[1].abs())).fold(0.0, f64::max);
        assert!(worst <= 1e-9, "drift {worst}");
    }

    #[test]
    fn validate_rejects_bad_shaping() {
        assert!(PlanarSystem::demo([-1.0, -2.0]).validate().is_ok());
        assert!(PlanarSystem::<f64>::demo([-1.0, 0.5]).validate().is_err());
        let mut s = PlanarSystem::demo([-1.0, -1.0]);
        s.g1 = Box::new(|y: f64| -y + 0.1);
        assert!(s.validate().is_err());
        s.g1 = Box::new(|y: f64| -y * y * y);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn bad_step_rejected() {
        assert!(PlanarSystem::demo([-1.0, -1.0]).simulate([0.0, 0.0], 1.0, 0.0).is_err());
    }
}
