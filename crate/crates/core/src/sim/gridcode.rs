//! Fault ride-through envelope: a piecewise-linear lower bound on the PCC
//! voltage as a function of time since fault inception.
//!
//! ```text
//! v ≥ floor                                  0      ≤ τ < t_sag        (region 2)
//! v ≥ floor → recovery_level, linear         t_sag  ≤ τ < t_recovery   (region 3)
//! v ≥ recovery_level                         t_recovery ≤ τ ≤ window   (region 3)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::FaultSpec;
use crate::sim::scenario::TimeSeries;

const MARGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrtEnvelope {
    /// Lowest admissible voltage while the fault is on [p.u.].
    pub floor: f64,
    /// End of the sag region after inception [s].
    pub t_sag: f64,
    /// Time after inception by which `recovery_level` must be reached [s].
    pub t_recovery: f64,
    /// Voltage the PCC must be restored to [p.u.].
    pub recovery_level: f64,
    /// Length of the checked window after inception [s].
    pub window: f64,
}

impl Default for FrtEnvelope {
    fn default() -> Self {
        FrtEnvelope {
            floor: 0.15,
            t_sag: 0.15,
            t_recovery: 0.7,
            recovery_level: 0.8,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Region 2: sag, must stay connected above the floor.
    Sag,
    /// Region 3: recovery towards `recovery_level`.
    Recovery,
    /// The record ends inside the window.
    Incomplete,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Sag => write!(f, "region 2 (sag)"),
            Region::Recovery => write!(f, "region 3 (recovery)"),
            Region::Incomplete => write!(f, "incomplete record"),
        }
    }
}

impl FrtEnvelope {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.floor >= 0.0 && self.floor < self.recovery_level && self.recovery_level <= 1.0) {
            return Err(Error::config(
                format!("{prefix}.floor"),
                "need 0 <= floor < recovery_level <= 1",
            ));
        }
        if !(self.t_sag > 0.0 && self.t_sag <= self.t_recovery && self.t_recovery <= self.window) {
            return Err(Error::config(
                format!("{prefix}.t_sag"),
                "need 0 < t_sag <= t_recovery <= window",
            ));
        }
        Ok(())
    }

    pub fn region(&self, tau: f64) -> Option<Region> {
        if !(0.0..=self.window).contains(&tau) {
            None
        } else if tau < self.t_sag {
            Some(Region::Sag)
        } else {
            Some(Region::Recovery)
        }
    }

    /// Lower bound at `tau` seconds after inception, `None` outside the window.
    pub fn lower_bound(&self, tau: f64) -> Option<f64> {
        match self.region(tau)? {
            Region::Sag => Some(self.floor),
            _ if tau >= self.t_recovery || self.t_recovery == self.t_sag => Some(self.recovery_level),
            _ => {
                let f = (tau - self.t_sag) / (self.t_recovery - self.t_sag);
                Some(self.floor + (self.recovery_level - self.floor) * f)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// Passes with zero margin somewhere.
    Boundary,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

/// A run of consecutive violating samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub region: Region,
    pub t_from: f64,
    pub t_to: f64,
    pub worst_voltage: f64,
    pub worst_bound: f64,
    /// Most negative `v - bound` [p.u.].
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCodeReport {
    pub verdict: Verdict,
    pub min_margin: Option<f64>,
    pub checked_samples: usize,
    pub violations: Vec<Violation>,
}

impl GridCodeReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

pub fn grid_code_check(ts: &TimeSeries, env: &FrtEnvelope, fault: &FaultSpec) -> GridCodeReport {
    let mut violations: Vec<Violation> = Vec::new();
    let mut min_margin: Option<f64> = None;
    let mut checked = 0;
    if fault.enabled {
        let mut open = false;
        for s in &ts.samples {
            let tau = s.time - fault.t_start;
            let (Some(bound), Some(region)) = (env.lower_bound(tau), env.region(tau)) else {
                open = false;
                continue;
            };
            checked += 1;
            let margin = s.v_pcc - bound;
            let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            min_margin = Some(min_margin.map_or(margin, |m| m.min(margin)));
            if margin < -MARGIN_TOLERANCE {
                match violations.last_mut() {
                    Some(v) if open && v.region == region => {
                        v.t_to = s.time;
                        if margin < v.worst_margin {
                            v.worst_margin = margin;
                            v.worst_voltage = s.v_pcc;
                            v.worst_bound = bound;
                        }
                    }
                    _ => violations.push(Violation {
                        region,
                        t_from: s.time,
                        t_to: s.time,
                        worst_voltage: s.v_pcc,
                        worst_bound: bound,
                        worst_margin: margin,
                    }),
                }
                open = true;
            } else {
                open = false;
            }
        }
        let window_end = fault.t_start + env.window;
        let end = ts.end_time().unwrap_or(f64::NEG_INFINITY);
        if ts.truncated && end < window_end {
            violations.push(Violation {
                region: Region::Incomplete,
                t_from: end.max(fault.t_start),
                t_to: window_end,
                worst_voltage: f64::NAN,
                worst_bound: f64::NAN,
                worst_margin: f64::NEG_INFINITY,
            });
        }
    }
    let verdict = if !violations.is_empty() {
        Verdict::Fail
    } else if min_margin.is_some_and(|m| m.abs() <= MARGIN_TOLERANCE) {
        Verdict::Boundary
    } else {
        Verdict::Pass
    };
    GridCodeReport {
        verdict,
        min_margin,
        checked_samples: checked,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_shape() {
        let e = FrtEnvelope::default();
        assert_eq!(e.lower_bound(-0.01), None);
        assert_eq!(e.lower_bound(0.0), Some(0.15));
        assert_eq!(e.lower_bound(0.149), Some(0.15));
        assert!((e.lower_bound(0.425).unwrap() - 0.475).abs() < 1e-12);
        assert_eq!(e.lower_bound(0.7), Some(0.8));
        assert_eq!(e.lower_bound(1.0), Some(0.8));
        assert_eq!(e.lower_bound(1.01), None);
    }

    #[test]
    fn invalid_envelope() {
        let e = FrtEnvelope {
            floor: 0.9,
            ..FrtEnvelope::default()
        };
        assert!(e.validate("envelope").is_err());
    }
}
