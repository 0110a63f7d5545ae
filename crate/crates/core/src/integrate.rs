//! Classical fixed-step Runge-Kutta.

use crate::error::{Error, Result};
use crate::num::Real;

/// One classical fourth-order Runge-Kutta step of `dx/dt = rhs(t, x)`.
pub fn rk4_step<T, const N: usize, F>(mut rhs: F, t: T, x: &[T; N], dt: T) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> Result<[T; N]>,
{
    if !(dt > T::zero()) {
        return Err(Error::InvalidStep(dt.to_f64().unwrap_or(f64::NAN)));
    }
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let offset = |k: &[T; N], scale: T| {
        let mut y = *x;
        y.iter_mut().zip(k).for_each(|(y, k)| *y = *y + scale * *k);
        y
    };

    let k1 = rhs(t, x)?;
    let k2 = rhs(t + half * dt, &offset(&k1, half * dt))?;
    let k3 = rhs(t + half * dt, &offset(&k2, half * dt))?;
    let k4 = rhs(t + dt, &offset(&k3, dt))?;

    let mut out = *x;
    for i in 0..N {
        out[i] = out[i] + dt * sixth * (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]);
    }
    Ok(out)
}

/// Integrates from `t0` over `steps` uniform steps and returns the final state.
pub fn rk4_integrate<T, const N: usize, F>(mut rhs: F, t0: T, x0: [T; N], dt: T, steps: usize) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> Result<[T; N]>,
{
    let mut x = x0;
    for k in 0..steps {
        let t = t0 + T::lit(k as f64) * dt;
        x = rk4_step(&mut rhs, t, &x, dt)?;
    }
    Ok(x)
}
