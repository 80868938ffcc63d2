//! Scenario configuration: every model parameter, the run settings and
//! output options, read from TOML.
//!
//! Omitted keys take the values of the bundled `paper` preset; unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControlParams;
use crate::error::{Error, Result};
use crate::network::{FaultSpec, NetworkParams};
use crate::scig::ScigParams;
use crate::sim::gridcode::FrtEnvelope;
use crate::sim::wind::WindProfile;
use crate::sim::SimConfig;
use crate::statcom::StatcomParams;
use crate::turbine::TurbineParams;

/// Text of the bundled preset.
pub const PAPER_PRESET: &str = include_str!("../presets/paper.scenario");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write controller internals to the CSV.
    pub verbose: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub machine: ScigParams,
    pub turbine: TurbineParams,
    pub statcom: StatcomParams,
    pub control: ControlParams,
    pub network: NetworkParams,
    pub fault: FaultSpec,
    pub wind: WindProfile,
    pub simulation: SimConfig,
    pub envelope: FrtEnvelope,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "paper".into(),
            machine: ScigParams::default(),
            turbine: TurbineParams::default(),
            statcom: StatcomParams::default(),
            control: ControlParams::default(),
            network: NetworkParams::default(),
            fault: FaultSpec::default(),
            wind: WindProfile::default(),
            simulation: SimConfig::default(),
            envelope: FrtEnvelope::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Self::from_toml_str(PAPER_PRESET),
            other => Err(Error::config("preset", format!("unknown preset `{other}`"))),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<root>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.machine.validate("machine")?;
        self.turbine.validate("turbine")?;
        self.statcom.validate("statcom")?;
        self.control.validate("control")?;
        self.network.validate("network")?;
        self.fault.validate("fault")?;
        self.wind.validate("wind")?;
        self.simulation.validate("simulation")?;
        self.envelope.validate("envelope")?;
        let t = &self.network.transformer;
        if t.lv_voltage > self.network.nominal_voltage * 10.0 {
            return Err(Error::config("network.transformer.lv_voltage", "implausibly high"));
        }
        Ok(())
    }

    /// Override one value by dotted key, e.g. `network.fault_resistance=1.0`.
    /// The value is parsed as a TOML literal.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::config(key, e.to_string()))?;
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .map_err(|e| Error::config(key, format!("bad value `{value}`: {e}")))?
            .remove("v")
            .ok_or_else(|| Error::config(key, "empty value"))?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (k, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::config(key, "not a table"))?;
            if k + 1 == parts.len() {
                if !table.contains_key(*part) && !(key == "machine.inertia") {
                    return Err(Error::config(key, "unknown key"));
                }
                table.insert((*part).to_string(), parsed);
                break;
            }
            node = table
                .get_mut(*part)
                .ok_or_else(|| Error::config(key, "unknown key"))?;
        }
        let cfg: ScenarioConfig = root.try_into().map_err(|e: toml::de::Error| Error::config(key, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
