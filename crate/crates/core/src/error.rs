use thiserror::Error;

/// Failures of the plant model, the manifold solver and the control laws.
///
/// Values are reported as `f64` regardless of the scalar type used for the
/// computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("altitude {h} m is outside the atmosphere model range [0, {ceiling} m)")]
    AltitudeOutOfRange { h: f64, ceiling: f64 },

    #[error("airspeed must be positive, got {v} m/s")]
    NonPositiveAirspeed { v: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no angle-of-attack root of the path-angle manifold in [{lo}, {hi}] rad")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("two manifold roots {below} and {above} rad are equally close to the warm start")]
    AmbiguousRoot { below: f64, above: f64 },

    #[error("manifold is singular: |dG/dalpha| = {dg_dalpha:e} below threshold")]
    ManifoldSingular { dg_dalpha: f64 },

    #[error("nozzle law is singular: |dphi/ddelta_p| = {dphi_ddelta_p:e} below threshold")]
    NozzleLawSingular { dphi_ddelta_p: f64 },

    #[error("dynamic pressure term {pressure:e} is below the floor; stabilizer law undefined")]
    DegeneratePressure { pressure: f64 },

    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
