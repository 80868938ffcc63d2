//! Self-contained JSON summary of a run: configuration echo, metrics,
//! grid-code verdict, energy audit and events.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::sim::gridcode::{grid_code_check, GridCodeReport};
use crate::sim::metrics::{compute_metrics, Metrics};
use crate::sim::scenario::{DivergenceEvent, EnergyBalance, Event, RunAudit, ScenarioResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub scenario: String,
    pub statcom_enabled: bool,
    pub expect_unstable: bool,
    /// Reserved; the model is deterministic.
    pub seed: Option<u64>,
    pub metrics: Metrics,
    pub grid_code: GridCodeReport,
    pub divergence: Option<DivergenceEvent>,
    pub energy: EnergyBalance,
    pub energy_relative_mismatch: f64,
    pub audit: RunAudit,
    pub realized_fault: Option<(f64, f64)>,
    pub events: Vec<Event>,
    pub config: ScenarioConfig,
}

impl RunReport {
    pub fn new(cfg: &ScenarioConfig, result: &ScenarioResult, seed: Option<u64>) -> Self {
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: cfg.name.clone(),
            statcom_enabled: cfg.statcom.enabled,
            expect_unstable: cfg.simulation.expect_unstable,
            seed,
            metrics: compute_metrics(&result.series, &cfg.fault),
            grid_code: grid_code_check(&result.series, &cfg.envelope, &cfg.fault),
            divergence: result.divergence.clone(),
            energy: result.energy,
            energy_relative_mismatch: result.energy.relative_mismatch(),
            audit: result.audit,
            realized_fault: result.realized_fault,
            events: result.events.clone(),
            config: cfg.clone(),
        }
    }

    /// Diverged although the scenario was not marked as expected to.
    pub fn unexpected_divergence(&self) -> bool {
        self.divergence.is_some() && !self.expect_unstable
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
