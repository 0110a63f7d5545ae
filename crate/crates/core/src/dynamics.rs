//! Five-state longitudinal plant with a vectoring nozzle.
//!
//! The pitch attitude `ϑ = α + θ` is derived rather than stored, so
//! `d(α + θ)/dt = q` holds by construction.

use serde::{Deserialize, Serialize};

use crate::aero::{aero_coefficients, AeroMode, AircraftParams, Atmosphere};
use crate::error::{Error, Result};
use crate::num::Real;

/// Phase variables of the longitudinal model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State<T> {
    /// Airspeed, m/s.
    pub v: T,
    /// Flight path angle, rad.
    pub theta: T,
    /// Angle of attack, rad.
    pub alpha: T,
    /// Pitch rate, rad/s.
    pub q: T,
    /// Altitude, m.
    pub h: T,
}

impl<T: Real> State<T> {
    /// Pitch attitude angle `α + θ`.
    pub fn pitch_attitude(&self) -> T {
        self.alpha + self.theta
    }

    pub fn to_array(&self) -> [T; 5] {
        [self.v, self.theta, self.alpha, self.q, self.h]
    }

    pub fn from_array(x: [T; 5]) -> Self {
        Self { v: x[0], theta: x[1], alpha: x[2], q: x[3], h: x[4] }
    }
}

/// Stabilizer deflection, nozzle deflection and thrust.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput<T> {
    pub delta_m: T,
    pub delta_p: T,
    pub thrust: T,
}

/// Time derivatives of [`State`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates<T> {
    pub v: T,
    pub theta: T,
    pub alpha: T,
    pub q: T,
    pub h: T,
}

impl<T: Real> StateRates<T> {
    pub fn to_array(&self) -> [T; 5] {
        [self.v, self.theta, self.alpha, self.q, self.h]
    }
}

/// Airframe plus the atmosphere it flies in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightModel<T> {
    pub params: AircraftParams<T>,
    pub atmosphere: Atmosphere<T>,
}

impl<T: Real> FlightModel<T> {
    pub fn new(params: AircraftParams<T>, atmosphere: Atmosphere<T>) -> Self {
        Self { params, atmosphere }
    }

    /// Airspeed derivative `A₁`.
    pub fn accel(&self, s: &State<T>, u: &ControlInput<T>, mode: AeroMode) -> Result<T> {
        let p = &self.params;
        let rho = self.atmosphere.density(s.h)?;
        let c = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, mode)?;
        Ok(u.thrust / p.mass * (s.alpha + u.delta_p).cos()
            - T::lit(0.5) * rho * s.v * s.v * p.wing_area * c.cx / p.mass
            - p.gravity * s.theta.sin())
    }

    /// Flight path angle derivative `A₂`; with [`AeroMode::Simplified`] this
    /// is the design-model right-hand side `A₂′`.
    pub fn path_rate(&self, s: &State<T>, u: &ControlInput<T>, mode: AeroMode) -> Result<T> {
        let p = &self.params;
        check_airspeed(s.v)?;
        let rho = self.atmosphere.density(s.h)?;
        let c = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, mode)?;
        Ok(u.thrust / (p.mass * s.v) * (s.alpha + u.delta_p).sin()
            + T::lit(0.5) * rho * s.v * p.wing_area * c.cy / p.mass
            - p.gravity / s.v * s.theta.cos())
    }

    /// Pitch acceleration; identical in both aerodynamic modes.
    pub fn pitch_accel(&self, s: &State<T>, u: &ControlInput<T>) -> Result<T> {
        let p = &self.params;
        let rho = self.atmosphere.density(s.h)?;
        let c = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, AeroMode::Simplified)?;
        Ok((T::lit(0.5) * rho * s.v * s.v * p.wing_area * p.chord * c.cm
            + u.thrust * (p.nozzle_y + p.nozzle_x * u.delta_p.sin()))
            / p.pitch_inertia)
    }

    /// All five rates of the longitudinal model in the selected mode.
    pub fn derivatives(&self, s: &State<T>, u: &ControlInput<T>, mode: AeroMode) -> Result<StateRates<T>> {
        let a1 = self.accel(s, u, mode)?;
        let a2 = self.path_rate(s, u, mode)?;
        Ok(StateRates { v: a1, theta: a2, alpha: s.q - a2, q: self.pitch_accel(s, u)?, h: s.v * s.theta.sin() })
    }
}

pub(crate) fn check_airspeed<T: Real>(v: T) -> Result<()> {
    if v > T::zero() {
        Ok(())
    } else {
        Err(Error::NonPositiveAirspeed { v: v.to_f64().unwrap_or(f64::NAN) })
    }
}
