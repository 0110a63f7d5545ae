//! Atmosphere density and aerodynamic coefficient maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Sea-level density of the exponential-power atmosphere model, kg/m³.
pub const SEA_LEVEL_DENSITY: f64 = 1.2256;
/// Altitude coefficient of the atmosphere model, 1/m.
pub const DENSITY_LAPSE: f64 = 0.2257e-4;
/// Exponent of the atmosphere model.
pub const DENSITY_EXPONENT: f64 = 4.256;

/// Altitude at which the base of the density power law vanishes.
pub fn atmosphere_ceiling() -> f64 {
    1.0 / DENSITY_LAPSE
}

/// Air density `1.2256 (1 - 0.2257e-4 h)^4.256` at altitude `h` (m).
///
/// Altitudes below sea level or at/above [`atmosphere_ceiling`] are rejected
/// rather than clamped.
pub fn air_density<T: Real>(h: T) -> Result<T> {
    let base = density_base(h)?;
    Ok(T::lit(SEA_LEVEL_DENSITY) * base.powf(T::lit(DENSITY_EXPONENT)))
}

/// Derivative of [`air_density`] with respect to altitude, kg/m⁴.
pub fn air_density_gradient<T: Real>(h: T) -> Result<T> {
    let base = density_base(h)?;
    Ok(-T::lit(SEA_LEVEL_DENSITY * DENSITY_EXPONENT * DENSITY_LAPSE) * base.powf(T::lit(DENSITY_EXPONENT - 1.0)))
}

fn density_base<T: Real>(h: T) -> Result<T> {
    let base = T::one() - T::lit(DENSITY_LAPSE) * h;
    if !(h >= T::zero()) || !(base > T::zero()) {
        return Err(Error::AltitudeOutOfRange { h: h.to_f64().unwrap_or(f64::NAN), ceiling: atmosphere_ceiling() });
    }
    Ok(base)
}

/// Atmosphere seen by both the plant and the air-data channel of the
/// controller: the standard model scaled by a constant factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atmosphere<T> {
    pub density_scale: T,
}

impl<T: Real> Default for Atmosphere<T> {
    fn default() -> Self {
        Self { density_scale: T::one() }
    }
}

impl<T: Real> Atmosphere<T> {
    pub fn scaled(density_scale: T) -> Self {
        Self { density_scale }
    }

    pub fn density(&self, h: T) -> Result<T> {
        Ok(self.density_scale * air_density(h)?)
    }

    pub fn density_gradient(&self, h: T) -> Result<T> {
        Ok(self.density_scale * air_density_gradient(h)?)
    }
}

/// Which lift model is used.
///
/// `Full` keeps the stabilizer lift term `C_Yδm·δm`; `Simplified` drops it and
/// is the model every control law is synthesized on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AeroMode {
    Simplified,
    Full,
}

/// Physical, aerodynamic and actuator constants of the airframe.
///
/// Angles in radians, SI units elsewhere.
///
/// Missing fields deserialize to the [`AircraftParams::nominal`] values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct AircraftParams<T> {
    /// Mass, kg.
    pub mass: T,
    /// Wing area, m².
    pub wing_area: T,
    /// Mean aerodynamic chord, m.
    pub chord: T,
    /// Pitch-axis moment of inertia, kg·m².
    pub pitch_inertia: T,
    /// Gravitational acceleration, m/s².
    pub gravity: T,
    pub cx0: T,
    /// Induced-drag factor `k` in `C_X = C_X0 + k C_Y²`.
    pub induced_drag: T,
    pub cy_alpha: T,
    pub cy_delta_m: T,
    pub cm_alpha: T,
    pub cm_delta_m: T,
    pub cm_q: T,
    /// Signed nozzle thrust moment arms `x_p`, `y_p`, m.
    pub nozzle_x: T,
    pub nozzle_y: T,
    pub delta_m_max: T,
    pub delta_p_max: T,
    pub thrust_min: T,
    pub thrust_max: T,
}

impl<T: Real> AircraftParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("wing_area", self.wing_area),
            ("chord", self.chord),
            ("pitch_inertia", self.pitch_inertia),
            ("gravity", self.gravity),
            ("delta_m_max", self.delta_m_max),
            ("delta_p_max", self.delta_p_max),
        ];
        for (name, value) in positive {
            if !(value > T::zero()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.cm_delta_m == T::zero() || !self.cm_delta_m.is_finite() {
            return Err(Error::InvalidParameter("cm_delta_m must be finite and non-zero".into()));
        }
        if !(self.thrust_min >= T::zero() && self.thrust_min <= self.thrust_max) {
            return Err(Error::InvalidParameter(format!(
                "thrust bounds must satisfy 0 <= thrust_min <= thrust_max, got [{}, {}]",
                self.thrust_min, self.thrust_max
            )));
        }
        let all = [
            self.cx0,
            self.induced_drag,
            self.cy_alpha,
            self.cy_delta_m,
            self.cm_alpha,
            self.cm_q,
            self.nozzle_x,
            self.nozzle_y,
            self.thrust_max,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("aerodynamic constants must be finite".into()));
        }
        Ok(())
    }

    /// Lossy conversion to another scalar type.
    pub fn cast<U: Real>(&self) -> AircraftParams<U> {
        let c = |x: T| U::lit(x.to_f64().unwrap_or(f64::NAN));
        AircraftParams {
            mass: c(self.mass),
            wing_area: c(self.wing_area),
            chord: c(self.chord),
            pitch_inertia: c(self.pitch_inertia),
            gravity: c(self.gravity),
            cx0: c(self.cx0),
            induced_drag: c(self.induced_drag),
            cy_alpha: c(self.cy_alpha),
            cy_delta_m: c(self.cy_delta_m),
            cm_alpha: c(self.cm_alpha),
            cm_delta_m: c(self.cm_delta_m),
            cm_q: c(self.cm_q),
            nozzle_x: c(self.nozzle_x),
            nozzle_y: c(self.nozzle_y),
            delta_m_max: c(self.delta_m_max),
            delta_p_max: c(self.delta_p_max),
            thrust_min: c(self.thrust_min),
            thrust_max: c(self.thrust_max),
        }
    }
}

impl<T: Real> Default for AircraftParams<T> {
    fn default() -> Self {
        AircraftParams::nominal().cast()
    }
}

impl AircraftParams<f64> {
    /// Implementer-chosen fighter-class airframe with a vectoring nozzle.
    ///
    /// These numbers are not taken from any flight test; they only place the
    /// model in a regime where the path/attitude decoupling maneuver is within
    /// nozzle authority.
    pub fn nominal() -> Self {
        Self {
            mass: 10_000.0,
            wing_area: 15.0,
            chord: 3.5,
            pitch_inertia: 1.0e5,
            gravity: 9.81,
            cx0: 0.08,
            induced_drag: 0.5,
            cy_alpha: 2.0,
            cy_delta_m: 0.1,
            cm_alpha: -0.1,
            cm_delta_m: -1.0,
            cm_q: -4.0,
            nozzle_x: -2.0,
            nozzle_y: 0.0,
            delta_m_max: 0.4,
            delta_p_max: 0.4,
            thrust_min: 0.0,
            thrust_max: 1.6e5,
        }
    }
}

/// Lift, drag and pitching-moment coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroCoefficients<T> {
    pub cy: T,
    pub cx: T,
    pub cm: T,
}

/// Lift coefficient `C_Y` of the selected model.
pub fn lift_coefficient<T: Real>(alpha: T, delta_m: T, p: &AircraftParams<T>, mode: AeroMode) -> T {
    let base = p.cy_alpha * (alpha + alpha).sin();
    match mode {
        AeroMode::Simplified => base,
        AeroMode::Full => base + p.cy_delta_m * delta_m,
    }
}

/// Aerodynamic coefficients at angle of attack `alpha`, pitch rate `q`,
/// airspeed `v` and stabilizer deflection `delta_m`.
pub fn aero_coefficients<T: Real>(
    alpha: T,
    q: T,
    v: T,
    delta_m: T,
    p: &AircraftParams<T>,
    mode: AeroMode,
) -> Result<AeroCoefficients<T>> {
    if !(v > T::zero()) {
        return Err(Error::NonPositiveAirspeed { v: v.to_f64().unwrap_or(f64::NAN) });
    }
    let cy = lift_coefficient(alpha, delta_m, p, mode);
    let cx = p.cx0 + p.induced_drag * cy * cy;
    let cm = p.cm_alpha * (alpha + alpha).sin() + p.cm_delta_m * delta_m + p.cm_q * (p.chord / v) * q;
    Ok(AeroCoefficients { cy, cx, cm })
}
