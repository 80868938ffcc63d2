//! STATCOM control: PLL, dc-link and PCC voltage loops, and the inner
//! decoupled current loop.
//!
//! Reference signs follow the converter's point of view: `i_dref > 0` draws
//! active power from the PCC into the dc link, `i_qref > 0` is capacitive
//! (injects reactive power). The filter current reference is therefore
//! `(-i_dref, -i_qref)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{Angle, Dq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiGains {
    pub k_p: f64,
    pub k_i: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PiGains {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.k_p.is_finite() && self.k_p >= 0.0) {
            return Err(Error::config(format!("{prefix}.k_p"), "must be non-negative"));
        }
        if !(self.k_i.is_finite() && self.k_i >= 0.0) {
            return Err(Error::config(format!("{prefix}.k_i"), "must be non-negative"));
        }
        if !(self.out_min < self.out_max) {
            return Err(Error::config(format!("{prefix}.out_min"), "must be below out_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiState {
    pub integral: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiOutput {
    pub value: f64,
    /// Rate of change of the integral state; zero while the output is
    /// clamped and the error pushes further into the clamp.
    pub integral_rate: f64,
    pub saturated: bool,
}

/// Evaluate a PI law with output clamped to the intersection of the gain
/// limits and `[lo, hi]`.
pub fn pi_eval(g: &PiGains, integral: f64, error: f64, lo: f64, hi: f64) -> PiOutput {
    let lo = lo.max(g.out_min);
    let hi = hi.min(g.out_max).max(lo);
    let raw = g.k_p * error + g.k_i * integral;
    let value = raw.clamp(lo, hi);
    let pushing = (raw > hi && error > 0.0) || (raw < lo && error < 0.0);
    PiOutput {
        value,
        integral_rate: if pushing { 0.0 } else { error },
        saturated: raw > hi || raw < lo,
    }
}

/// One fixed step: update the integral with conditional integration, then
/// return the clamped output.
pub fn pi_step(g: &PiGains, state: &mut PiState, error: f64, dt: f64) -> f64 {
    let rate = pi_eval(g, state.integral, error, g.out_min, g.out_max).integral_rate;
    state.integral += rate * dt;
    let out = pi_eval(g, state.integral, error, g.out_min, g.out_max);
    state.saturated = out.saturated;
    out.value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PllParams {
    /// Proportional gain on the normalized q-axis error [rad/s].
    pub k_p: f64,
    /// Integral gain [rad/s²].
    pub k_i: f64,
    /// Below this PCC magnitude [p.u.] the PLL coasts.
    pub lock_threshold: f64,
    /// Frequency clamp as a fraction of nominal.
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for PllParams {
    fn default() -> Self {
        PllParams {
            k_p: 177.7,
            k_i: 15791.0,
            lock_threshold: 0.1,
            omega_min: 0.5,
            omega_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllState {
    pub theta: Angle,
    pub omega_hat: f64,
    pub integral: f64,
    pub coasting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllRates {
    pub omega_hat: f64,
    pub integral_rate: f64,
    pub coasting: bool,
}

/// Synchronous-reference-frame PLL driving `v_q` to zero.
#[derive(Debug, Clone, Copy)]
pub struct Pll {
    pub params: PllParams,
    pub omega_nominal: f64,
    pub v_nominal: f64,
}

impl Pll {
    /// Estimated frequency and integral rate for a PCC voltage expressed in
    /// the PLL frame.
    pub fn rates(&self, v: Dq, integral: f64) -> PllRates {
        let p = &self.params;
        let mag = v.norm();
        let (error, coasting) = if mag < p.lock_threshold * self.v_nominal {
            (0.0, true)
        } else {
            (v.q / mag, false)
        };
        let omega = (self.omega_nominal + p.k_p * error + p.k_i * integral)
            .clamp(p.omega_min * self.omega_nominal, p.omega_max * self.omega_nominal);
        PllRates {
            omega_hat: omega,
            integral_rate: error,
            coasting,
        }
    }

    pub fn step(&self, v: Dq, state: &PllState, dt: f64) -> PllState {
        let r = self.rates(v, state.integral);
        let integral = state.integral + r.integral_rate * dt;
        let omega = self.rates(v, integral).omega_hat;
        PllState {
            theta: state.theta.advance(omega * dt),
            omega_hat: omega,
            integral,
            coasting: r.coasting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlParams {
    /// PCC voltage reference [p.u.].
    pub v_ref: f64,
    /// DC-link voltage reference [V].
    pub v_dcref: f64,
    /// Cut-off of the first-order PCC magnitude measurement filter [Hz].
    pub measurement_filter_hz: f64,
    pub pll: PllParams,
    /// Error in volts, output `i_dref` in amperes.
    pub dc_loop: PiGains,
    /// Error in p.u., output `i_qref` in amperes.
    pub ac_loop: PiGains,
    /// Error in amperes, output in volts, one instance per axis.
    pub current_loop: PiGains,
}

impl Default for ControlParams {
    fn default() -> Self {
        let bw = 2.0 * std::f64::consts::PI * 500.0;
        let s = crate::statcom::StatcomParams::default();
        ControlParams {
            v_ref: 1.0,
            v_dcref: 50e3,
            measurement_filter_hz: 100.0,
            pll: PllParams::default(),
            dc_loop: PiGains {
                k_p: 0.314,
                k_i: 25.0,
                out_min: -s.i_max,
                out_max: s.i_max,
            },
            ac_loop: PiGains {
                k_p: 8000.0,
                k_i: 5e5,
                out_min: -s.i_max,
                out_max: s.i_max,
            },
            current_loop: PiGains {
                k_p: s.l_f * bw,
                k_i: s.r_f * bw,
                out_min: -12.5e3,
                out_max: 12.5e3,
            },
        }
    }
}

impl ControlParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.v_ref.is_finite() && self.v_ref > 0.0) {
            return Err(Error::config(format!("{prefix}.v_ref"), "must be positive"));
        }
        if !(self.v_dcref.is_finite() && self.v_dcref > 0.0) {
            return Err(Error::config(format!("{prefix}.v_dcref"), "must be positive"));
        }
        if !(self.measurement_filter_hz.is_finite() && self.measurement_filter_hz > 0.0) {
            return Err(Error::config(
                format!("{prefix}.measurement_filter_hz"),
                "must be positive",
            ));
        }
        let pll = &self.pll;
        if !(pll.k_p >= 0.0 && pll.k_i >= 0.0 && pll.lock_threshold >= 0.0) {
            return Err(Error::config(format!("{prefix}.pll"), "gains must be non-negative"));
        }
        if !(pll.omega_min > 0.0 && pll.omega_min < 1.0 && pll.omega_max > 1.0) {
            return Err(Error::config(
                format!("{prefix}.pll.omega_min"),
                "frequency band must bracket nominal",
            ));
        }
        self.dc_loop.validate(&format!("{prefix}.dc_loop"))?;
        self.ac_loop.validate(&format!("{prefix}.ac_loop"))?;
        self.current_loop.validate(&format!("{prefix}.current_loop"))
    }
}

/// Outer dc-link loop: `i_dref` limited to `±limit`.
pub fn dc_voltage_loop(
    g: &PiGains,
    v_dcref: f64,
    v_dc: f64,
    state: &mut PiState,
    limit: f64,
    dt: f64,
) -> f64 {
    let e = v_dcref - v_dc;
    let rate = pi_eval(g, state.integral, e, -limit, limit).integral_rate;
    state.integral += rate * dt;
    let out = pi_eval(g, state.integral, e, -limit, limit);
    state.saturated = out.saturated;
    out.value
}

/// Outer PCC voltage loop on p.u. magnitudes: `i_qref` limited to `±limit`.
pub fn ac_voltage_loop(
    g: &PiGains,
    v_ref: f64,
    v_meas: f64,
    state: &mut PiState,
    limit: f64,
    dt: f64,
) -> f64 {
    dc_voltage_loop(g, v_ref, v_meas, state, limit, dt)
}

/// Split a current budget between the loops with reactive priority:
/// the d-axis gets whatever `sqrt(i_max² - i_q²)` leaves.
pub fn d_axis_headroom(i_max: f64, i_q: f64) -> f64 {
    (i_max * i_max - i_q * i_q).max(0.0).sqrt()
}

/// Inner current loop, returning the converter voltage command
/// `v_pcc + u - ω l_f J i_t`.
#[allow(clippy::too_many_arguments)]
pub fn current_loop(
    g: &PiGains,
    i_ref: Dq,
    i_t: Dq,
    v_pcc: Dq,
    omega: f64,
    l_f: f64,
    states: &mut [PiState; 2],
    dt: f64,
) -> Dq {
    let ud = pi_step(g, &mut states[0], i_ref.d - i_t.d, dt);
    let uq = pi_step(g, &mut states[1], i_ref.q - i_t.q, dt);
    v_pcc + Dq::new(ud, uq) - i_t.j() * (omega * l_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlIntegrals {
    pub dc: f64,
    pub ac: f64,
    pub current_d: f64,
    pub current_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    /// PCC voltage in the PLL frame [V].
    pub v_pcc: Dq,
    /// Filtered PCC magnitude [p.u.].
    pub v_meas: f64,
    pub v_dc: f64,
    pub i_t: Dq,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlReferences {
    pub i_dref: f64,
    pub i_qref: f64,
    pub v_cmd: Dq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub refs: ControlReferences,
    pub rates: ControlIntegrals,
    pub ac_saturated: bool,
    pub dc_saturated: bool,
    pub current_saturated: bool,
    /// A reference left its permitted range; never expected.
    pub limit_violation: bool,
}

/// The cascaded controller in continuous form, for use inside an ODE
/// right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct ControlLaw {
    pub params: ControlParams,
    pub i_max: f64,
    pub l_f: f64,
}

impl ControlLaw {
    pub fn evaluate(&self, u: &ControlInputs, x: &ControlIntegrals) -> ControlOutput {
        let p = &self.params;
        let ac = pi_eval(&p.ac_loop, x.ac, p.v_ref - u.v_meas, -self.i_max, self.i_max);
        let headroom = d_axis_headroom(self.i_max, ac.value);
        let dc = pi_eval(&p.dc_loop, x.dc, p.v_dcref - u.v_dc, -headroom, headroom);
        let i_ref = Dq::new(-dc.value, -ac.value);
        let g = &p.current_loop;
        let cd = pi_eval(g, x.current_d, i_ref.d - u.i_t.d, g.out_min, g.out_max);
        let cq = pi_eval(g, x.current_q, i_ref.q - u.i_t.q, g.out_min, g.out_max);
        let v_cmd = u.v_pcc + Dq::new(cd.value, cq.value) - u.i_t.j() * (u.omega * self.l_f);

        let tol = 1e-9 * self.i_max;
        let limit_violation = i_ref.norm() > self.i_max + tol
            || cd.value < g.out_min
            || cd.value > g.out_max
            || cq.value < g.out_min
            || cq.value > g.out_max;
        ControlOutput {
            refs: ControlReferences {
                i_dref: dc.value,
                i_qref: ac.value,
                v_cmd,
            },
            rates: ControlIntegrals {
                dc: dc.integral_rate,
                ac: ac.integral_rate,
                current_d: cd.integral_rate,
                current_q: cq.integral_rate,
            },
            ac_saturated: ac.saturated,
            dc_saturated: dc.saturated,
            current_saturated: cd.saturated || cq.saturated,
            limit_violation,
        }
    }
}
