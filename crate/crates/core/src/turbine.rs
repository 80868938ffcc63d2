//! Wind turbine aerodynamics: power coefficient surface, tip-speed ratio and
//! shaft power/torque.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Upper bound on any physical power coefficient.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;
/// Wind speeds at or below this are treated as calm.
pub const MIN_WIND_SPEED: f64 = 0.1;
/// Shaft speed below which torque is evaluated at this floor instead.
pub const MIN_SHAFT_SPEED: f64 = 0.1;

/// Empirical `C_p(λ, β)` surface
/// `c1 (c2/λi - c3 β - c4) exp(-c5/λi) + c6 λ` with
/// `1/λi = 1/(λ + 0.08 β) - 0.035/(β³ + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpModel {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl Default for CpModel {
    fn default() -> Self {
        CpModel {
            c1: 0.5176,
            c2: 116.0,
            c3: 0.4,
            c4: 5.0,
            c5: 21.0,
            c6: 0.0068,
        }
    }
}

impl CpModel {
    /// Raw surface value, not clipped.
    pub fn raw(&self, lambda: f64, beta: f64) -> f64 {
        let inv_li = 1.0 / (lambda + 0.08 * beta) - 0.035 / (beta.powi(3) + 1.0);
        self.c1 * (self.c2 * inv_li - self.c3 * beta - self.c4) * (-self.c5 * inv_li).exp()
            + self.c6 * lambda
    }

    /// Power coefficient clipped to `[0, BETZ_LIMIT]`.
    pub fn power_coefficient(&self, lambda: f64, beta: f64) -> Result<f64> {
        ensure_finite("power coefficient input", &[lambda, beta])?;
        if lambda < 0.0 || beta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "tip-speed ratio and pitch must be non-negative (λ={lambda}, β={beta})"
            )));
        }
        if lambda == 0.0 && beta == 0.0 {
            return Ok(0.0);
        }
        let cp = self.raw(lambda, beta);
        Ok(if cp.is_finite() {
            cp.clamp(0.0, BETZ_LIMIT)
        } else {
            0.0
        })
    }

    /// Optimal tip-speed ratio and peak coefficient for pitch `beta`, found by
    /// a coarse scan refined with golden-section search.
    pub fn optimum(&self, beta: f64) -> (f64, f64) {
        let f = |l: f64| self.power_coefficient(l, beta).unwrap_or(0.0);
        let step = 0.05;
        let mut best = step;
        for k in 1..=400 {
            let l = k as f64 * step;
            if f(l) > f(best) {
                best = l;
            }
        }
        let (mut a, mut b) = ((best - step).max(1e-6), best + step);
        let g = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if f(x1) < f(x2) {
                a = x1;
            } else {
                b = x2;
            }
        }
        let l = 0.5 * (a + b);
        (l, f(l))
    }
}

/// `λ = ω_t L / v`.
pub fn tip_speed_ratio(omega_t: f64, blade_length: f64, wind: f64) -> Result<f64> {
    ensure_finite("tip-speed ratio input", &[omega_t, blade_length, wind])?;
    if wind <= MIN_WIND_SPEED {
        return Err(Error::CutOff(wind));
    }
    Ok(omega_t.max(0.0) * blade_length / wind)
}

/// `P_m = ½ ρ A v³ C_p`.
pub fn mechanical_power(rho: f64, area: f64, wind: f64, cp: f64) -> f64 {
    0.5 * rho * area * wind.powi(3) * cp
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShaftTorque {
    pub torque: f64,
    /// Set when the shaft speed was below [`MIN_SHAFT_SPEED`] and the torque
    /// was evaluated at that floor.
    pub startup: bool,
}

/// `T = P / ω`, evaluated at [`MIN_SHAFT_SPEED`] when the shaft is slower.
pub fn mechanical_torque(power: f64, omega_t: f64) -> ShaftTorque {
    if omega_t <= MIN_SHAFT_SPEED {
        ShaftTorque {
            torque: power / MIN_SHAFT_SPEED,
            startup: true,
        }
    } else {
        ShaftTorque {
            torque: power / omega_t,
            startup: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurbineParams {
    /// Air density [kg/m³].
    pub rho: f64,
    /// Blade length [m]; the swept area is `π L²`.
    pub blade_length: f64,
    /// Mechanical power limit [W].
    pub rated_power: f64,
    /// Rated wind speed [m/s].
    pub rated_wind: f64,
    /// Fixed pitch angle [deg].
    pub beta: f64,
    /// Generator shaft speed / turbine rotor speed.
    pub gear_ratio: f64,
    pub cp: CpModel,
}

impl Default for TurbineParams {
    fn default() -> Self {
        TurbineParams {
            rho: 1.225,
            blade_length: 30.7,
            rated_power: 1.5e6,
            rated_wind: 12.0,
            beta: 0.0,
            gear_ratio: 49.64,
            cp: CpModel::default(),
        }
    }
}

impl TurbineParams {
    pub fn swept_area(&self) -> f64 {
        PI * self.blade_length * self.blade_length
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("blade_length", self.blade_length),
            ("rated_power", self.rated_power),
            ("rated_wind", self.rated_wind),
            ("gear_ratio", self.gear_ratio),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{prefix}.{k}"), "must be positive"));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::config(format!("{prefix}.beta"), "must be non-negative"));
        }
        Ok(())
    }

    /// Shaft power delivered at turbine speed `omega_t`, limited to the rated
    /// power. Calm wind gives zero.
    pub fn shaft_power(&self, wind: f64, omega_t: f64) -> Result<f64> {
        let lambda = match tip_speed_ratio(omega_t, self.blade_length, wind) {
            Ok(l) => l,
            Err(Error::CutOff(_)) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let cp = self.cp.power_coefficient(lambda, self.beta)?;
        Ok(mechanical_power(self.rho, self.swept_area(), wind, cp).min(self.rated_power))
    }

    /// Torque on the generator shaft for mechanical generator speed
    /// `omega_m`, in the motor sign convention (driving torque is negative).
    pub fn generator_torque(&self, wind: f64, omega_m: f64) -> Result<f64> {
        let omega_t = omega_m / self.gear_ratio;
        let p = self.shaft_power(wind, omega_t)?;
        let t = mechanical_torque(p, omega_t);
        Ok(-t.torque / self.gear_ratio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cp_peak_at_zero_pitch() {
        let (l, cp) = CpModel::default().optimum(0.0);
        assert_abs_diff_eq!(l, 8.1, epsilon = 0.01);
        assert_abs_diff_eq!(cp, 0.48, epsilon = 1e-3);
    }

    #[test]
    fn cp_clipped_at_high_pitch() {
        let cp = CpModel::default().power_coefficient(8.1, 25.0).unwrap();
        assert_eq!(cp, 0.0);
    }

    #[test]
    fn cp_rejects_negative() {
        assert!(CpModel::default().power_coefficient(-1.0, 0.0).is_err());
        assert!(CpModel::default().power_coefficient(f64::NAN, 0.0).is_err());
        assert_eq!(CpModel::default().power_coefficient(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tip_speed_and_cutoff() {
        assert_abs_diff_eq!(tip_speed_ratio(2.0, 30.0, 12.0).unwrap(), 5.0);
        assert!(matches!(tip_speed_ratio(2.0, 30.0, 0.0), Err(Error::CutOff(_))));
    }

    #[test]
    fn power_and_torque() {
        let p = mechanical_power(1.225, PI * 30.0 * 30.0, 12.0, 0.48);
        assert_abs_diff_eq!(p, 0.5 * 1.225 * PI * 900.0 * 1728.0 * 0.48, epsilon = 1e-6);
        let t = mechanical_torque(1.5e6, 3.0);
        assert_abs_diff_eq!(t.torque, 5e5);
        assert!(!t.startup);
        let t = mechanical_torque(1000.0, 0.0);
        assert!(t.startup && t.torque.is_finite());
    }

    #[test]
    fn default_blade_carries_rated_power_at_rated_wind() {
        let tp = TurbineParams::default();
        let (_, cp) = tp.cp.optimum(0.0);
        let p = mechanical_power(tp.rho, tp.swept_area(), tp.rated_wind, cp);
        assert!(p >= tp.rated_power && p < 1.02 * tp.rated_power, "{p}");
    }

    #[test]
    fn calm_wind_gives_no_torque() {
        let tp = TurbineParams::default();
        assert_eq!(tp.generator_torque(0.05, 157.0).unwrap(), 0.0);
    }
}
