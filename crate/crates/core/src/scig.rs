//! Squirrel-cage induction generator, fourth-order flux model plus rotor
//! swing, in a dq frame rotating at an arbitrary speed `ω`.
//!
//! State `ψ = [ψ_ds, ψ_qs, ψ_dr, ψ_qr]`, `ψ = L i`. Motor sign convention:
//! stator current flows into the machine and electromagnetic torque is
//! negative while generating.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frames::Dq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScigParams {
    /// Stator resistance [Ω].
    pub r_s: f64,
    /// Rotor resistance referred to the stator [Ω].
    pub r_r: f64,
    /// Stator self inductance [H].
    pub l_s: f64,
    /// Rotor self inductance [H].
    pub l_r: f64,
    /// Magnetizing inductance [H].
    pub l_m: f64,
    /// Number of poles.
    pub poles: u32,
    /// Inertia constant [s] on the rated apparent power.
    pub inertia_constant: f64,
    /// Moment of inertia [kg m²]; derived from `inertia_constant` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    /// Nameplate line-to-line voltage [V].
    pub rated_voltage: f64,
    /// Rated active power [W].
    pub rated_power: f64,
    pub power_factor: f64,
    /// Electrical frequency [Hz].
    pub frequency: f64,
}

impl Default for ScigParams {
    fn default() -> Self {
        ScigParams {
            r_s: 0.01,
            r_r: 0.01,
            l_s: 0.041,
            l_r: 0.041,
            l_m: 0.035,
            poles: 4,
            inertia_constant: 64.0,
            inertia: None,
            rated_voltage: 500.0,
            rated_power: 1.5e6,
            power_factor: 0.85,
            frequency: 50.0,
        }
    }
}

impl ScigParams {
    pub fn rated_va(&self) -> f64 {
        self.rated_power / self.power_factor
    }

    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency
    }

    /// Synchronous mechanical speed [rad/s].
    pub fn omega_mech_sync(&self) -> f64 {
        2.0 * self.omega_base() / self.poles as f64
    }

    /// `J`, either given or `2 H S / ω_m²`.
    pub fn inertia(&self) -> f64 {
        self.inertia.unwrap_or_else(|| {
            let wm = self.omega_mech_sync();
            2.0 * self.inertia_constant * self.rated_va() / (wm * wm)
        })
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let positive = [
            ("r_s", self.r_s),
            ("r_r", self.r_r),
            ("l_s", self.l_s),
            ("l_r", self.l_r),
            ("l_m", self.l_m),
            ("inertia_constant", self.inertia_constant),
            ("rated_voltage", self.rated_voltage),
            ("rated_power", self.rated_power),
            ("frequency", self.frequency),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{prefix}.{k}"), format!("must be positive, got {v}")));
            }
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(Error::config(format!("{prefix}.power_factor"), "must be in (0, 1]"));
        }
        if self.poles == 0 || !self.poles.is_multiple_of(2) {
            return Err(Error::config(format!("{prefix}.poles"), "must be a positive even number"));
        }
        if let Some(j) = self.inertia {
            if !(j.is_finite() && j > 0.0) {
                return Err(Error::config(format!("{prefix}.inertia"), "must be positive"));
            }
        }
        if self.l_s * self.l_r <= self.l_m * self.l_m {
            return Err(Error::config(
                format!("{prefix}.l_m"),
                "inductance matrix is singular (l_s l_r must exceed l_m²)",
            ));
        }
        Ok(())
    }
}

/// Machine model with the inductance inverse precomputed.
#[derive(Debug, Clone)]
pub struct Scig {
    pub params: ScigParams,
    det: f64,
    inertia: f64,
}

impl Scig {
    pub fn new(params: ScigParams) -> Result<Self> {
        params.validate("machine")?;
        Ok(Scig {
            det: params.l_s * params.l_r - params.l_m * params.l_m,
            inertia: params.inertia(),
            params,
        })
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn inductance_matrix(&self) -> Matrix4<f64> {
        let p = &self.params;
        Matrix4::new(
            p.l_s, 0.0, p.l_m, 0.0, //
            0.0, p.l_s, 0.0, p.l_m, //
            p.l_m, 0.0, p.l_r, 0.0, //
            0.0, p.l_m, 0.0, p.l_r,
        )
    }

    /// `i = L⁻¹ ψ` using the closed-form block inverse.
    pub fn currents_from_fluxes(&self, psi: &[f64; 4]) -> [f64; 4] {
        let p = &self.params;
        let d = self.det;
        [
            (p.l_r * psi[0] - p.l_m * psi[2]) / d,
            (p.l_r * psi[1] - p.l_m * psi[3]) / d,
            (p.l_s * psi[2] - p.l_m * psi[0]) / d,
            (p.l_s * psi[3] - p.l_m * psi[1]) / d,
        ]
    }

    pub fn fluxes_from_currents(&self, i: &[f64; 4]) -> [f64; 4] {
        let p = &self.params;
        [
            p.l_s * i[0] + p.l_m * i[2],
            p.l_s * i[1] + p.l_m * i[3],
            p.l_m * i[0] + p.l_r * i[2],
            p.l_m * i[1] + p.l_r * i[3],
        ]
    }

    /// `dψ/dt = F ψ - N i + [v_s, 0]`, frame speed `omega`, electrical rotor
    /// speed `omega_r`.
    pub fn flux_derivative(&self, psi: &[f64; 4], omega: f64, omega_r: f64, v_s: Dq) -> [f64; 4] {
        let i = self.currents_from_fluxes(psi);
        let p = &self.params;
        let slip = omega - omega_r;
        [
            omega * psi[1] - p.r_s * i[0] + v_s.d,
            -omega * psi[0] - p.r_s * i[1] + v_s.q,
            slip * psi[3] - p.r_r * i[2],
            -slip * psi[2] - p.r_r * i[3],
        ]
    }

    /// `T_e = (p/2) l_m (i_qs i_dr - i_ds i_qr)`; negative when generating.
    pub fn electromagnetic_torque(&self, i: &[f64; 4]) -> f64 {
        let p = &self.params;
        0.5 * p.poles as f64 * p.l_m * (i[1] * i[2] - i[0] * i[3])
    }

    /// `dω_r/dt = (p/J)(T_e - T_m)`.
    pub fn rotor_acceleration(&self, t_e: f64, t_m: f64) -> Result<f64> {
        ensure_finite("torque", &[t_e, t_m])?;
        Ok(self.params.poles as f64 / self.inertia * (t_e - t_m))
    }

    /// Energy stored in the magnetic field, `½ ψᵀ i`.
    pub fn magnetic_energy(&self, psi: &[f64; 4]) -> f64 {
        let i = self.currents_from_fluxes(psi);
        0.5 * (0..4).map(|k| psi[k] * i[k]).sum::<f64>()
    }

    pub fn rotor_kinetic_energy(&self, omega_r: f64) -> f64 {
        let wm = 2.0 * omega_r / self.params.poles as f64;
        0.5 * self.inertia * wm * wm
    }

    pub fn copper_loss(&self, i: &[f64; 4]) -> f64 {
        let p = &self.params;
        p.r_s * (i[0] * i[0] + i[1] * i[1]) + p.r_r * (i[2] * i[2] + i[3] * i[3])
    }

    /// Steady-state fluxes for a source `v_src` behind a series impedance
    /// `z_series` (applied to the stator current), frame speed `omega` and a
    /// locked rotor speed `omega_r`.
    pub fn steady_state_fluxes(
        &self,
        v_src: Dq,
        z_series: Complex64,
        omega: f64,
        omega_r: f64,
    ) -> Result<[f64; 4]> {
        let p = &self.params;
        let s = omega - omega_r;
        let f = Matrix4::new(
            0.0, omega, 0.0, 0.0, //
            -omega, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, s, //
            0.0, 0.0, -s, 0.0,
        );
        let (r, x) = (z_series.re, z_series.im);
        let n = Matrix4::new(
            p.r_s + r, -x, 0.0, 0.0, //
            x, p.r_s + r, 0.0, 0.0, //
            0.0, 0.0, p.r_r, 0.0, //
            0.0, 0.0, 0.0, p.r_r,
        );
        let a = f * self.inductance_matrix() - n;
        let rhs = Vector4::new(-v_src.d, -v_src.q, 0.0, 0.0);
        let i = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NoOperatingPoint("singular machine equations".into()))?;
        Ok(self.fluxes_from_currents(&[i[0], i[1], i[2], i[3]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn machine() -> Scig {
        Scig::new(ScigParams::default()).unwrap()
    }

    #[test]
    fn current_inverse_example() {
        let m = machine();
        let i = m.currents_from_fluxes(&[1.0, 0.0, 1.0, 0.0]);
        // (l_r - l_m) / (l_s l_r - l_m²) = 0.006 / 0.000456
        assert_abs_diff_eq!(i[0], 13.157894736842104, epsilon = 1e-9);
        assert_abs_diff_eq!(i[2], 13.157894736842104, epsilon = 1e-9);
        let back = m.fluxes_from_currents(&i);
        for k in 0..4 {
            assert_abs_diff_eq!(back[k], [1.0, 0.0, 1.0, 0.0][k], epsilon = 1e-12);
        }
    }

    #[test]
    fn torque_sign_and_magnitude() {
        let m = machine();
        // p/2 * l_m * (i_qs i_dr - i_ds i_qr) = 2 * 0.035 * (0 - 1)
        let t = m.electromagnetic_torque(&[1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(t, -0.07, epsilon = 1e-12);
    }

    #[test]
    fn inertia_from_h() {
        let p = ScigParams::default();
        assert_abs_diff_eq!(p.inertia(), 9154.67, epsilon = 0.01);
        let m = machine();
        assert_eq!(m.rotor_acceleration(0.0, 0.0).unwrap(), 0.0);
        assert!(m.rotor_acceleration(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn singular_inductance_rejected() {
        let p = ScigParams {
            l_m: 0.041,
            ..ScigParams::default()
        };
        assert!(Scig::new(p).is_err());
    }

    #[test]
    fn steady_state_is_stationary() {
        let m = machine();
        let w = m.params.omega_base();
        let psi = m
            .steady_state_fluxes(Dq::new(6000.0, 0.0), Complex64::new(0.0, 1.2), w, w * 1.003)
            .unwrap();
        let i = m.currents_from_fluxes(&psi);
        let vs = Dq::new(6000.0, 0.0) - Dq::from_complex(Complex64::new(0.0, 1.2) * Complex64::new(i[0], i[1]));
        let d = m.flux_derivative(&psi, w, w * 1.003, vs);
        for v in d {
            assert!(v.abs() < 1e-8, "{d:?}");
        }
        assert!(m.electromagnetic_torque(&i) < 0.0);
    }
}
