//! Piecewise wind speed profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSegment {
    /// Segment start [s].
    pub t_start: f64,
    /// Wind speed reached in this segment [m/s].
    pub value: f64,
    /// Ramp duration from the previous value [s]; zero for a step.
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindProfile {
    pub segments: Vec<WindSegment>,
}

impl Default for WindProfile {
    fn default() -> Self {
        WindProfile {
            segments: vec![
                WindSegment {
                    t_start: 0.0,
                    value: 3.0,
                    ramp: 0.0,
                },
                WindSegment {
                    t_start: 0.5,
                    value: 12.0,
                    ramp: 0.5,
                },
            ],
        }
    }
}

impl WindProfile {
    pub fn constant(value: f64) -> Self {
        WindProfile {
            segments: vec![WindSegment {
                t_start: 0.0,
                value,
                ramp: 0.0,
            }],
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config(format!("{prefix}.segments"), "at least one segment required"));
        }
        for (k, s) in self.segments.iter().enumerate() {
            let key = format!("{prefix}.segments[{k}]");
            if !(s.value.is_finite() && s.value >= 0.0) {
                return Err(Error::config(format!("{key}.value"), "must be non-negative"));
            }
            if !(s.ramp.is_finite() && s.ramp >= 0.0) {
                return Err(Error::config(format!("{key}.ramp"), "must be non-negative"));
            }
            if !s.t_start.is_finite() {
                return Err(Error::config(format!("{key}.t_start"), "must be finite"));
            }
            if k > 0 && s.t_start <= self.segments[k - 1].t_start {
                return Err(Error::config(format!("{key}.t_start"), "times must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Wind speed at time `t` [m/s].
    pub fn at(&self, t: f64) -> f64 {
        let Some(first) = self.segments.first() else {
            return 0.0;
        };
        let mut v = first.value;
        for (k, s) in self.segments.iter().enumerate() {
            if t < s.t_start {
                break;
            }
            let prev = if k == 0 { s.value } else { v };
            v = if s.ramp > 0.0 && t < s.t_start + s.ramp {
                prev + (s.value - prev) * (t - s.t_start) / s.ramp
            } else {
                s.value
            };
            if t < s.t_start + s.ramp {
                break;
            }
        }
        v
    }
}
