//! Attractor-cascade tracking control for the longitudinal motion of a
//! thrust-vectoring aircraft, designed with a canonical Lyapunov function.
//!
//! The plant is a five-state longitudinal model driven by a movable horizontal
//! stabilizer, a deflectable engine nozzle and a scheduled thrust. The control
//! law makes the path-angle program `θm [1 + sin(ωt)]` and a constant pitch
//! attitude asymptotically stable through two intermediate manifolds (angle of
//! attack and pitch rate). Stability is monitored with `V = θ̄² + ϑ̄²`.
//!
//! Numerical code is generic over [`num::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the harness and the CLI use.
//!
//! Module map:
//! - [`aero`]: atmosphere and aerodynamic coefficients
//! - [`dynamics`]: the plant
//! - [`manifold`]: the angle-of-attack command and its sensitivities
//! - [`cascade`]: nozzle and stabilizer laws
//! - [`closed_loop`]: fixed-step closed-loop simulation
//! - [`canonical_2d`]: the planar canonization example
//! - [`analysis`]: Lyapunov monitoring, metrics, robustness comparison
//! - [`harness`]: scenarios, presets, CSV export, experiments, verification

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod analysis;
pub mod canonical_2d;
pub mod cascade;
pub mod closed_loop;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod manifold;
pub mod num;

pub use aero::AeroMode;
pub use error::{Error, Result};
pub use num::Real;

pub type AircraftParams = aero::AircraftParams<f64>;
pub type Atmosphere = aero::Atmosphere<f64>;
pub type State = dynamics::State<f64>;
pub type ControlInput = dynamics::ControlInput<f64>;
pub type FlightModel = dynamics::FlightModel<f64>;
pub type ManeuverProgram = manifold::ManeuverProgram<f64>;
pub type Gains = manifold::Gains<f64>;
pub type AlphaCommand = manifold::AlphaCommand<f64>;
pub type CascadeController = cascade::CascadeController<f64>;
pub type ExtendedState = closed_loop::ExtendedState<f64>;
pub type ThrustSchedule = closed_loop::ThrustSchedule<f64>;
pub type TrajectoryLog = closed_loop::TrajectoryLog<f64>;
pub type Simulation = closed_loop::Simulation<f64>;
pub type RunMetrics = analysis::RunMetrics<f64>;
pub type PlanarSystem = canonical_2d::PlanarSystem<f64>;
