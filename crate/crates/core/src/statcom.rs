//! Averaged voltage-source converter STATCOM: series RL filter to the PCC and
//! a dc-link capacitor with a parallel loss resistance.
//!
//! Filter current `i_t` is positive out of the converter into the PCC.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frames::Dq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatcomParams {
    pub enabled: bool,
    /// Filter inductance [H].
    pub l_f: f64,
    /// Filter resistance [Ω].
    pub r_f: f64,
    /// DC-link capacitance [F].
    pub c_dc: f64,
    /// Nominal dc-link voltage [V].
    pub v_dc_rated: f64,
    /// Rated apparent power [VA].
    pub s_rated: f64,
    /// Converter current magnitude limit [A].
    pub i_max: f64,
    /// Parallel dc-side resistance representing switching losses [Ω].
    pub r_loss: f64,
    /// Peak ac voltage magnitude per volt of dc, `|v_t| <= k_m v_dc`.
    pub modulation_limit: f64,
    /// Below this dc voltage the converter blocks [V].
    pub v_dc_min: f64,
}

impl Default for StatcomParams {
    fn default() -> Self {
        StatcomParams {
            enabled: true,
            l_f: 8e-3,
            r_f: 0.1,
            c_dc: 500e-6,
            v_dc_rated: 50e3,
            s_rated: 25e6,
            i_max: 1000.0,
            r_loss: 50e3,
            modulation_limit: 0.5 * 1.5_f64.sqrt(),
            v_dc_min: 15e3,
        }
    }
}

impl StatcomParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let positive = [
            ("l_f", self.l_f),
            ("c_dc", self.c_dc),
            ("v_dc_rated", self.v_dc_rated),
            ("s_rated", self.s_rated),
            ("i_max", self.i_max),
            ("r_loss", self.r_loss),
            ("modulation_limit", self.modulation_limit),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{prefix}.{k}"), format!("must be positive, got {v}")));
            }
        }
        if !(self.r_f.is_finite() && self.r_f >= 0.0) {
            return Err(Error::config(format!("{prefix}.r_f"), "must be non-negative"));
        }
        if !(self.v_dc_min >= 0.0 && self.v_dc_min < self.v_dc_rated) {
            return Err(Error::config(format!("{prefix}.v_dc_min"), "must be in [0, v_dc_rated)"));
        }
        Ok(())
    }

    pub fn dc_loss(&self, v_dc: f64) -> f64 {
        v_dc * v_dc / self.r_loss
    }

    pub fn filter_energy(&self, i_t: Dq) -> f64 {
        0.5 * self.l_f * i_t.dot(i_t)
    }

    pub fn dc_energy(&self, v_dc: f64) -> f64 {
        0.5 * self.c_dc * v_dc * v_dc
    }
}

/// `l_f di_t/dt = -r_f i_t + ω l_f J i_t + v_t - v`.
pub fn filter_current_derivative(p: &StatcomParams, i_t: Dq, v_t: Dq, v: Dq, omega: f64) -> Dq {
    (i_t * -p.r_f + i_t.j() * (omega * p.l_f) + v_t - v) * (1.0 / p.l_f)
}

/// `C v_dc dv_dc/dt = -p_conv - v_dc²/R_loss` where `p_conv = v_t · i_t` is
/// the ac power leaving the converter.
pub fn dc_link_derivative(p: &StatcomParams, v_dc: f64, p_conv: f64) -> Result<f64> {
    ensure_finite("dc link", &[v_dc, p_conv])?;
    if v_dc <= p.v_dc_min {
        return Err(Error::DcUndervoltage {
            v_dc,
            v_min: p.v_dc_min,
        });
    }
    Ok((-p_conv - p.dc_loss(v_dc)) / (p.c_dc * v_dc))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterOutput {
    pub v_t: Dq,
    /// The command exceeded the modulation limit and was scaled back.
    pub saturated: bool,
}

/// Scale a voltage command radially onto the disc `|v| <= k_m v_dc`.
pub fn converter_voltage(p: &StatcomParams, command: Dq, v_dc: f64) -> ConverterOutput {
    let limit = p.modulation_limit * v_dc.max(0.0);
    let mag = command.norm();
    if mag > limit {
        let v_t = if mag > 0.0 { command * (limit / mag) } else { Dq::ZERO };
        ConverterOutput { v_t, saturated: true }
    } else {
        ConverterOutput {
            v_t: command,
            saturated: false,
        }
    }
}

/// Reactive power injected into the PCC, `q = v_q i_d - v_d i_q`.
pub fn reactive_power(v: Dq, i: Dq) -> f64 {
    v.q * i.d - v.d * i.q
}
