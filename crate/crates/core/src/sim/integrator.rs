//! Fixed-step explicit integrators over a flat state array.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Rk4,
    Euler,
}

impl Solver {
    pub fn order(self) -> u32 {
        match self {
            Solver::Rk4 => 4,
            Solver::Euler => 1,
        }
    }

    pub fn step<const N: usize, F>(self, f: &mut F, t: f64, x: &[f64; N], dt: f64) -> [f64; N]
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        match self {
            Solver::Rk4 => rk4_step(f, t, x, dt),
            Solver::Euler => euler_step(f, t, x, dt),
        }
    }
}

fn axpy<const N: usize>(x: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *x;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += a * ki;
    }
    out
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, x: &[f64; N], dt: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k1));
    let k3 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k2));
    let k4 = f(t + dt, &axpy(x, dt, &k3));
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

pub fn euler_step<const N: usize, F>(f: &mut F, t: f64, x: &[f64; N], dt: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k = f(t, x);
    axpy(x, dt, &k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let x = rk4_step(&mut |_, x: &[f64; 1]| [-x[0]], 0.0, &[1.0], 0.1);
        // 1 - h + h²/2 - h³/6 + h⁴/24
        assert_abs_diff_eq!(x[0], 0.9048375, epsilon = 1e-12);
        assert_abs_diff_eq!(x[0], (-0.1_f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn zero_derivative() {
        let x0 = [1.0, -2.0, 3.5];
        assert_eq!(rk4_step(&mut |_, _: &[f64; 3]| [0.0; 3], 0.0, &x0, 0.3), x0);
        assert_eq!(euler_step(&mut |_, _: &[f64; 3]| [0.0; 3], 0.0, &x0, 0.3), x0);
    }

    #[test]
    fn time_dependent_rhs_is_exact_for_cubics() {
        // x' = 3t², exact for RK4
        let x = rk4_step(&mut |t, _: &[f64; 1]| [3.0 * t * t], 1.0, &[1.0], 0.5);
        assert_abs_diff_eq!(x[0], 1.5_f64.powi(3), epsilon = 1e-12);
    }
}
