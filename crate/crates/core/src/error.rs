use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wind speed {0} m/s is below cut-off")]
    CutOff(f64),

    #[error("dc-link undervoltage: {v_dc} V (minimum {v_min} V)")]
    DcUndervoltage { v_dc: f64, v_min: f64 },

    #[error("invalid network topology: {0}")]
    Topology(String),

    #[error("no steady-state operating point: {0}")]
    NoOperatingPoint(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("trace format: {0}")]
    Trace(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite")))
    }
}
