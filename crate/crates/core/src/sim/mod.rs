//! Time-domain simulation: integration, scenario execution, metrics and the
//! grid-code envelope check.

pub mod gridcode;
pub mod integrator;
pub mod metrics;
pub mod scenario;
pub mod system;
pub mod wind;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gridcode::{grid_code_check, FrtEnvelope, GridCodeReport, Verdict};
pub use integrator::{euler_step, rk4_step, Solver};
pub use metrics::{compute_metrics, Metrics};
pub use scenario::{run_scenario, DivergenceEvent, EnergyBalance, Event, RunAudit, Sample, ScenarioResult, TimeSeries};
pub use wind::{WindProfile, WindSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Analytic steady state at the initial wind speed.
    #[default]
    Steady,
    /// De-energized machine at synchronous speed.
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration step [s].
    pub dt: f64,
    /// End time [s].
    pub t_end: f64,
    /// Record every n-th step.
    pub record_decimation: usize,
    pub solver: Solver,
    /// Any per-unit state above this ends the run [p.u.].
    pub divergence_ceiling: f64,
    pub init: InitMode,
    /// The scenario is expected to lose stability; divergence is not an
    /// error for the command-line driver.
    pub expect_unstable: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            t_end: 2.0,
            record_decimation: 10,
            solver: Solver::Rk4,
            divergence_ceiling: 10.0,
            init: InitMode::Steady,
            expect_unstable: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("{prefix}.dt"), "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config(format!("{prefix}.t_end"), "must be positive"));
        }
        if self.dt > self.t_end {
            return Err(Error::config(format!("{prefix}.dt"), "must not exceed t_end"));
        }
        if self.record_decimation == 0 {
            return Err(Error::config(format!("{prefix}.record_decimation"), "must be at least 1"));
        }
        if !(self.divergence_ceiling > 1.0) {
            return Err(Error::config(format!("{prefix}.divergence_ceiling"), "must exceed 1 p.u."));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}
