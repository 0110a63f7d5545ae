//! TOML scenario files.
//!
//! Every key is optional; missing keys take the values of
//! [`Scenario::default`]. A file looks like
//!
//! ```toml
//! name = "climb"
//! plant = "full"            # or "simplified"
//! density_scale = 0.8
//! dt = 1e-3
//! t_final = 30.0
//! seed = 0
//!
//! [aircraft]                # any subset of the airframe fields
//! cy_delta_m = 0.1
//!
//! [program]
//! theta_m = 0.02
//! omega = 0.1
//! pitch_target = 0.323
//!
//! [gains]
//! a1 = -0.5
//! a2 = -2.0
//! a3 = -4.0
//! a4 = -1.0
//!
//! [[thrust]]                # piecewise-constant, right-continuous
//! start = 0.0
//! thrust = 94000.0
//! [[thrust]]
//! start = 5.0
//! thrust = 56400.0
//!
//! [initial]
//! v = 120.0
//! h = 6000.0
//! path_error = 0.05         # θ̄(0)
//! attitude_error = 0.0      # ϑ̄(0)
//! on_manifolds = true       # choose α, q, δp on the mediator manifolds
//!
//! [tolerances]
//! final_error = 1e-3
//! max_error = 1e-6          # optional bound on sup |θ̄|, |ϑ̄|
//!
//! [robustness]              # optional: also run the other plant mode
//! final_error = 5e-2
//! sup_difference = { v = 10.0, theta = 0.05, alpha = 0.05, q = 0.1, h = 100.0, delta_p = 0.2 }
//!
//! [sweep]                   # optional: default for the `sweep` command
//! param = "gains.a1"
//! values = [-0.2, -0.3]
//! ```

use serde::{Deserialize, Serialize};

use super::{HarnessError, HarnessResult};
use crate::aero::{atmosphere_ceiling, AeroMode, AircraftParams, Atmosphere};
use crate::analysis::RobustnessTolerances;
use crate::cascade::CascadeController;
use crate::closed_loop::{place_on_manifolds, ExtendedState, Simulation, ThrustSchedule};
use crate::dynamics::{FlightModel, State};
use crate::error::Error;
use crate::manifold::{Gains, ManeuverProgram};

/// How the run starts.
///
/// The path angle is `θm [1 + sin 0] + path_error` and the pitch attitude is
/// `ϑ′ + attitude_error`. With `on_manifolds` the angle of attack, pitch
/// rate and nozzle angle are chosen so that the state lies on the two
/// mediator manifolds; otherwise `α = ϑ − θ` and `q`, `delta_p` are taken as
/// given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCondition {
    pub v: f64,
    pub h: f64,
    pub path_error: f64,
    pub attitude_error: f64,
    pub on_manifolds: bool,
    pub q: f64,
    pub delta_p: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self { v: 120.0, h: 6000.0, path_error: 0.0, attitude_error: 0.0, on_manifolds: true, q: 0.0, delta_p: 0.0 }
    }
}

/// Pass criteria of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunTolerances {
    /// Bound on the final `|θ̄|` and `|ϑ̄|`, rad.
    pub final_error: f64,
    /// Optional bound on `sup |θ̄|` and `sup |ϑ̄|` over the whole run, rad.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
}

impl Default for RunTolerances {
    fn default() -> Self {
        Self { final_error: 1e-3, max_error: None }
    }
}

/// One scenario parameter and the values to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path such as `gains.a1` or `aircraft.cy_delta_m`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub plant: AeroMode,
    pub density_scale: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub aircraft: AircraftParams<f64>,
    pub program: ManeuverProgram<f64>,
    pub gains: Gains<f64>,
    pub thrust: ThrustSchedule<f64>,
    pub initial: InitialCondition,
    pub tolerances: RunTolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessTolerances<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for Scenario {
    /// Level flight at 120 m/s and 6 km on the nominal airframe, with a
    /// gentle path-angle program and the pitch attitude held near trim.
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            plant: AeroMode::Simplified,
            density_scale: 1.0,
            dt: 1e-3,
            t_final: 30.0,
            seed: 0,
            aircraft: AircraftParams::nominal(),
            program: ManeuverProgram { theta_m: 0.02, omega: 0.1, pitch_target: 0.323 },
            gains: Gains { a1: -0.5, a2: -2.0, a3: -4.0, a4: -1.0 },
            thrust: ThrustSchedule::constant(56_500.0),
            initial: InitialCondition::default(),
            tolerances: RunTolerances::default(),
            robustness: None,
            sweep: None,
        }
    }
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> HarnessResult<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn to_toml(&self) -> HarnessResult<String> {
        toml::to_string(self).map_err(|e| HarnessError::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), Error> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > self.dt) {
            return invalid(format!("t_final ({}) must exceed dt ({})", self.t_final, self.dt));
        }
        if !(self.density_scale > 0.0 && self.density_scale.is_finite()) {
            return invalid(format!("density_scale must be positive, got {}", self.density_scale));
        }
        self.gains.validate()?;
        self.aircraft.validate()?;
        self.program.validate()?;
        self.thrust.validate(self.aircraft.thrust_min, self.aircraft.thrust_max)?;
        let init = &self.initial;
        if !(init.v > 0.0) {
            return Err(Error::NonPositiveAirspeed { v: init.v });
        }
        if !(init.h >= 0.0 && init.h < atmosphere_ceiling()) {
            return Err(Error::AltitudeOutOfRange { h: init.h, ceiling: atmosphere_ceiling() });
        }
        let tol = &self.tolerances;
        if !(tol.final_error > 0.0) || tol.max_error.is_some_and(|m| !(m > 0.0)) {
            return invalid("tolerances must be positive".into());
        }
        if let Some(r) = &self.robustness {
            if !(r.final_error > 0.0) || r.sup_difference.to_array().iter().any(|x| !(*x > 0.0)) {
                return invalid("robustness tolerances must be positive".into());
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return invalid("sweep needs at least one value".into());
            }
        }
        Ok(())
    }

    pub fn controller(&self) -> CascadeController<f64> {
        CascadeController::new(self.model(), self.program, self.gains)
    }

    /// Airframe in the scenario's atmosphere. The controller is built on the
    /// same model, evaluated in simplified mode.
    pub fn model(&self) -> FlightModel<f64> {
        FlightModel::new(self.aircraft, Atmosphere { density_scale: self.density_scale })
    }

    pub fn initial_state(&self) -> Result<ExtendedState<f64>, Error> {
        let init = &self.initial;
        let theta = self.program.path_command(0.0) + init.path_error;
        let pitch = self.program.pitch_target + init.attitude_error;
        if init.on_manifolds {
            let thrust = self.thrust.thrust_at(0.0);
            place_on_manifolds(&self.controller(), 0.0, init.v, init.h, theta, pitch, thrust)
        } else {
            Ok(ExtendedState {
                state: State { v: init.v, theta, alpha: pitch - theta, q: init.q, h: init.h },
                delta_p: init.delta_p,
            })
        }
    }

    pub fn simulation(&self) -> Result<Simulation<f64>, Error> {
        self.validate()?;
        Ok(Simulation {
            plant: self.model(),
            plant_mode: self.plant,
            controller: self.controller(),
            thrust: self.thrust.clone(),
            initial: self.initial_state()?,
            dt: self.dt,
            t_final: self.t_final,
        })
    }

    pub fn with_plant(&self, plant: AeroMode) -> Self {
        Self { plant, ..self.clone() }
    }

    /// Copy with one numeric entry replaced, addressed by a dotted path.
    /// Integer entries such as `seed` are rounded.
    pub fn with_param(&self, path: &str, value: f64) -> HarnessResult<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| HarnessError::Serialize(e.to_string()))?;
        let mut node = &mut root;
        for key in path.split('.') {
            node = match node {
                toml::Value::Table(t) => t.get_mut(key),
                toml::Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| HarnessError::UnknownParam(path.into()))?;
        }
        *node = match node {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) => toml::Value::Integer(value.round() as i64),
            _ => return Err(HarnessError::UnknownParam(path.into())),
        };
        let out: Scenario = root.try_into().map_err(|e: toml::de::Error| HarnessError::Parse(e.to_string()))?;
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_scenario("").unwrap(), Scenario::default());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let s = parse_scenario("dt = 2e-3\n[aircraft]\ncy_delta_m = 0.25\n[initial]\npath_error = 0.05\n").unwrap();
        assert_eq!(s.dt, 2e-3);
        assert_eq!(s.aircraft.cy_delta_m, 0.25);
        assert_eq!(s.aircraft.mass, AircraftParams::nominal().mass);
        assert_eq!(s.initial.path_error, 0.05);
        assert_eq!(s.initial.v, 120.0);
    }

    #[test]
    fn positive_gain_rejected() {
        let err = parse_scenario("[gains]\na1 = 0.5\na2 = -1.0\na3 = -1.0\na4 = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("gain must be negative"), "{err}");
    }

    #[test]
    fn invariants_checked() {
        for text in ["dt = 0.0", "t_final = 1e-4\ndt = 1e-3", "density_scale = -1.0", "[initial]\nv = 0.0"] {
            assert!(parse_scenario(text).is_err(), "{text}");
        }
    }

    #[test]
    fn unknown_key_reports_field_and_line() {
        let err =
            parse_scenario("dt = 1e-3\n[gains]\na1 = -1.0\na2 = -1.0\na3 = -1.0\na4 = -1.0\na5 = -1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a5") && msg.contains("line 7"), "{msg}");
    }

    #[test]
    fn round_trip() {
        let mut s = Scenario {
            robustness: Some(RobustnessTolerances::default()),
            sweep: Some(SweepSpec { param: "gains.a1".into(), values: vec![-0.1, -0.2] }),
            thrust: ThrustSchedule::step(9.4e4, 5.0, 5.64e4),
            ..Scenario::default()
        };
        s.tolerances.max_error = Some(1e-6);
        let text = s.to_toml().unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn with_param_edits_nested_values() {
        let s = Scenario::default();
        assert_eq!(s.with_param("gains.a1", -0.3).unwrap().gains.a1, -0.3);
        assert_eq!(s.with_param("aircraft.cy_delta_m", 0.0).unwrap().aircraft.cy_delta_m, 0.0);
        assert_eq!(s.with_param("thrust.0.thrust", 5.0e4).unwrap().thrust.thrust_at(0.0), 5.0e4);
        assert_eq!(s.with_param("seed", 7.0).unwrap().seed, 7);
        assert!(matches!(s.with_param("gains.a9", 1.0), Err(HarnessError::UnknownParam(_))));
        assert!(s.with_param("gains.a1", 1.0).is_err());
    }

    #[test]
    fn default_start_lies_on_the_manifolds() {
        let s = Scenario::default();
        let x = s.initial_state().unwrap();
        let ctrl = s.controller();
        let outer = ctrl.outer_loop(0.0, &x.state, x.delta_p, s.thrust.thrust_at(0.0), Some(x.state.alpha)).unwrap();
        assert!((outer.command.phi - x.state.alpha).abs() < 1e-12);
        assert!(x.delta_p.abs() < s.aircraft.delta_p_max);
    }

    #[test]
    fn explicit_start_uses_given_values() {
        let s = parse_scenario("[initial]\non_manifolds = false\nq = 0.01\ndelta_p = 0.1\nattitude_error = 0.02\n")
            .unwrap();
        let x = s.initial_state().unwrap();
        assert_eq!((x.state.q, x.delta_p), (0.01, 0.1));
        assert!((x.state.alpha + x.state.theta - (s.program.pitch_target + 0.02)).abs() < 1e-15);
    }
}
