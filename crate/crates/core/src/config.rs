//! The pipeline configuration document.
//!
//! One TOML document carries every section the pipeline needs: `model`
//! (hand chains plus an optional `model.arm`), `retarget`, `tactile`, `scan`
//! and `replay`. Missing sections fall back to the bundled defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::ModelDoc;
use crate::mag::CalibrationOptions;
use crate::retarget::RetargetConfig;
use crate::scan::ScanSection;
use crate::tactile::TactileSection;

/// Text of the bundled default configuration.
pub const BUNDLED: &str = include_str!("../config/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serializing configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    #[serde(flatten)]
    pub hand: ModelDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<ModelDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplaySection {
    pub glove_rate_hz: f64,
    pub tracker_rate_hz: f64,
    /// Key into `tactile.sensors` used to normalize tactile frames.
    pub tactile_sensor: String,
    /// Run arm retargeting when a tracker stream is present.
    pub arm: bool,
    pub decode: CalibrationOptions,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            glove_rate_hz: 260.0,
            tracker_rate_hz: 250.0,
            tactile_sensor: "leaptac".into(),
            arm: true,
            decode: CalibrationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub retarget: RetargetConfig,
    pub tactile: TactileSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub replay: ReplaySection,
}

#[derive(Deserialize)]
struct PartialConfig {
    model: Option<ModelSection>,
    retarget: Option<RetargetConfig>,
    tactile: Option<TactileSection>,
    scan: Option<ScanSection>,
    replay: Option<ReplaySection>,
}

impl PipelineConfig {
    pub fn bundled() -> Self {
        toml::from_str(BUNDLED).expect("bundled configuration parses")
    }

    /// Parses a document, taking absent sections from the bundled defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let partial: PartialConfig = toml::from_str(text)?;
        let base = Self::bundled();
        Ok(Self {
            model: partial.model.unwrap_or(base.model),
            retarget: partial.retarget.unwrap_or(base.retarget),
            tactile: partial.tactile.unwrap_or(base.tactile),
            scan: partial.scan.unwrap_or(base.scan),
            replay: partial.replay.unwrap_or(base.replay),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }
}
