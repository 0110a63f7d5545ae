use clf_core::aero::{aero_coefficients, air_density, atmosphere_ceiling, AeroMode, AircraftParams, Atmosphere};
use clf_core::canonical_2d::{Curve, PlanarSystem};
use clf_core::dynamics::{ControlInput, FlightModel, State};
use clf_core::manifold::{residual_g, solve_alpha_command, ManeuverProgram, ManifoldArgs, SolverConfig};
use proptest::prelude::*;

fn model() -> FlightModel<f64> {
    FlightModel::new(AircraftParams::nominal(), Atmosphere::default())
}

fn mode() -> impl Strategy<Value = AeroMode> {
    prop_oneof![Just(AeroMode::Simplified), Just(AeroMode::Full)]
}

proptest! {
    #[test]
    fn density_decreases_with_altitude(h in 0.0..20_000.0f64, dh in 1e-3..1000.0f64) {
        prop_assume!(h + dh < atmosphere_ceiling());
        prop_assert!(air_density(h + dh).unwrap() < air_density(h).unwrap());
    }

    #[test]
    fn drag_never_below_zero_lift_drag(alpha in -1.0..1.0f64, dm in -0.4..0.4f64, q in -1.0..1.0f64, v in 50.0..400.0f64, m in mode()) {
        let p = AircraftParams::nominal();
        let c = aero_coefficients(alpha, q, v, dm, &p, m).unwrap();
        prop_assert!(c.cx >= p.cx0);
    }

    #[test]
    fn pitch_attitude_rate_is_pitch_rate(
        v in 80.0..300.0f64, theta in -0.3..0.3f64, alpha in -0.4..0.4f64, q in -0.5..0.5f64, h in 0.0..12_000.0f64,
        dm in -0.4..0.4f64, dp in -0.4..0.4f64, thrust in 0.0..1.6e5f64, m in mode(),
    ) {
        let s = State { v, theta, alpha, q, h };
        let u = ControlInput { delta_m: dm, delta_p: dp, thrust };
        let r = model().derivatives(&s, &u, m).unwrap();
        prop_assert!((r.alpha + r.theta - q).abs() <= 1e-12);
        prop_assert!((r.h - v * theta.sin()).abs() <= 1e-12 * v);
    }

    #[test]
    fn solved_roots_have_small_residual(
        t in 0.0..30.0f64, v in 80.0..300.0f64, theta in -0.3..0.3f64, h in 0.0..12_000.0f64,
        dp in -0.4..0.4f64, thrust in 0.0..1.6e5f64,
    ) {
        let m = model();
        let prog = ManeuverProgram { theta_m: 0.02, omega: 0.1, pitch_target: 0.323 };
        let a1 = -0.5;
        let args = ManifoldArgs { t, v, theta, h, delta_p: dp, thrust };
        if let Ok(cmd) = solve_alpha_command(&args, &prog, a1, &m, None, &SolverConfig::default()) {
            prop_assert!(cmd.residual <= 1e-10);
            prop_assert!((residual_g(cmd.phi, &args, &prog, a1, &m).unwrap()).abs() <= 1e-10);
            prop_assert!(cmd.phi.abs() <= std::f64::consts::FRAC_PI_6);
        }
    }

    #[test]
    fn planar_error_dynamics_follow_shaping(
        c in prop::array::uniform4(-1.0..1.0f64), amp in 0.1..2.0f64, freq in 0.1..3.0f64,
        a in prop::array::uniform2(-3.0..-0.1f64), x in prop::array::uniform2(-3.0..3.0f64), t in 0.0..10.0f64,
    ) {
        let sys = PlanarSystem::linear(
            move |x2: f64| c[0] + c[1] * x2 * x2,
            move |x1: f64| c[2] * x1.sin() + c[3],
            Curve::new(move |t: f64| amp * (freq * t).sin(), move |t: f64| amp * freq * (freq * t).cos()),
            Curve::constant(0.5),
            a,
        );
        let y = sys.canonize(x, t);
        let back = sys.uncanonize(y, t);
        prop_assert!((back[0] - x[0]).abs() <= 1e-14 && (back[1] - x[1]).abs() <= 1e-14);
        let rates = sys.closed_loop_rates(x, t);
        let ydot = [rates[0] - (sys.chi1.rate)(t), rates[1] - (sys.chi2.rate)(t)];
        prop_assert!((ydot[0] - a[0] * y[0]).abs() <= 1e-12);
        prop_assert!((ydot[1] - a[1] * y[1]).abs() <= 1e-12);
        prop_assert!(sys.clf_rate(y) <= 0.0);
    }
}

#[test]
fn single_precision_solver_agrees_with_double() {
    let m32 = FlightModel::<f32>::new(AircraftParams::nominal().cast(), Atmosphere::default());
    let prog32 = ManeuverProgram { theta_m: 0.02f32, omega: 0.1, pitch_target: 0.323 };
    let args32 = ManifoldArgs { t: 3.0f32, v: 120.0, theta: 0.02, h: 6000.0, delta_p: 0.0, thrust: 5.65e4 };
    let root32 = solve_alpha_command(&args32, &prog32, -0.5, &m32, None, &SolverConfig::default()).unwrap();

    let prog = ManeuverProgram { theta_m: 0.02, omega: 0.1, pitch_target: 0.323 };
    let args = ManifoldArgs { t: 3.0, v: 120.0, theta: 0.02, h: 6000.0, delta_p: 0.0, thrust: 5.65e4 };
    let root = solve_alpha_command(&args, &prog, -0.5, &model(), None, &SolverConfig::default()).unwrap();
    assert!((f64::from(root32.phi) - root.phi).abs() < 1e-4, "{} vs {}", root32.phi, root.phi);
}
