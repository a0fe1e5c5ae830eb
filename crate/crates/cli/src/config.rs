//! Configuration files: JSON documents with optional sections overriding
//! the built-in defaults, a scenario given either as a preset name or
//! inline, and an optional lane-estimation section whose sampling interval
//! is checked against the lane-crossing bound at load time.

use reisim_core::engine::{SimConfig, TraceDetail};
use reisim_core::gen2::Gen2Params;
use reisim_core::geometry::{AntennaMount, RoadScenario, ScenarioId};
use reisim_core::lane::tau_max;
use reisim_core::rflink::{MultipathModel, RadioConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {key}: {message}")]
    Parse { key: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Validation { key: String, message: String },
}

/// Scenario section: a preset reference (`{"preset": "s1"}`) or a complete
/// inline scenario object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSection {
    Preset { preset: String },
    Inline(Box<RoadScenario>),
}

/// Lane-position estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSection {
    /// Counting-window width (seconds). Must stay below the lane-crossing
    /// bound W / (2 v cos(alpha_max)), checked at load.
    pub tau_s: f64,
    /// Path to a read-rate curve CSV used by position estimation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_csv: Option<String>,
}

/// On-disk configuration document. Every section is optional; omitted
/// sections take the built-in defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mount: Option<AntennaMount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radio: Option<RadioConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipath: Option<MultipathModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen2: Option<Gen2Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_detail: Option<TraceDetail>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lane: Option<LaneSection>,
}

/// A parsed and fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedConfig {
    pub sim: SimConfig,
    pub lane: Option<LaneSection>,
}

pub fn scenario_preset_by_name(name: &str) -> Option<ScenarioId> {
    Some(match name.to_ascii_lowercase().as_str() {
        "s1" => ScenarioId::S1,
        "s2" => ScenarioId::S2,
        "s3" => ScenarioId::S3,
        "s4" => ScenarioId::S4,
        "s5" => ScenarioId::S5,
        "s6" => ScenarioId::S6,
        "lane_straight" => ScenarioId::LaneStraight,
        "lane_custom" => ScenarioId::LaneCustom,
        _ => return None,
    })
}

pub const PRESET_NAMES: [&str; 8] =
    ["s1", "s2", "s3", "s4", "s5", "s6", "lane_straight", "lane_custom"];

/// Parses a configuration document, fills unspecified sections with
/// defaults, and validates everything, including the lane sampling-interval
/// bound. Errors name the offending key.
pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let file: FileConfig =
        serde_path_to_error::deserialize(&mut deserializer).map_err(|e| ConfigError::Parse {
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    resolve(file)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
    parse_config(&text)
}

fn resolve(file: FileConfig) -> Result<LoadedConfig, ConfigError> {
    let scenario = match file.scenario {
        None => RoadScenario::preset(ScenarioId::S1),
        Some(ScenarioSection::Inline(s)) => *s,
        Some(ScenarioSection::Preset { preset }) => {
            let id = scenario_preset_by_name(&preset).ok_or_else(|| ConfigError::Validation {
                key: "scenario.preset".into(),
                message: format!("unknown preset '{preset}', expected one of {PRESET_NAMES:?}"),
            })?;
            RoadScenario::preset(id)
        }
    };
    let sim = SimConfig {
        scenario,
        mount: file.mount.unwrap_or_default(),
        radio: file.radio.unwrap_or_default(),
        multipath: file.multipath.unwrap_or_default(),
        gen2: file.gen2.unwrap_or_default(),
        duration_s: file.duration_s,
        seed: file.seed.unwrap_or(0),
        trace_detail: file.trace_detail.unwrap_or_default(),
    };
    sim.validate()
        .map_err(|e| ConfigError::Validation { key: "(config)".into(), message: e.to_string() })?;

    if let Some(lane) = &file.lane {
        if !(lane.tau_s > 0.0) || !lane.tau_s.is_finite() {
            return Err(ConfigError::Validation {
                key: "lane.tau_s".into(),
                message: format!("must be positive and finite, got {}", lane.tau_s),
            });
        }
        let bound = tau_max(
            sim.scenario.lane_width_m,
            sim.scenario.speed_profile.max_speed(),
            sim.scenario.max_turn_angle_rad,
        )
        .map_err(|e| ConfigError::Validation { key: "lane.tau_s".into(), message: e.to_string() })?;
        if lane.tau_s >= bound {
            return Err(ConfigError::Validation {
                key: "lane.tau_s".into(),
                message: format!(
                    "window {} s reaches the lane-crossing bound W/(2 v cos(alpha_max)) = {} s; \
                     a vehicle could cross a half lane within one window",
                    lane.tau_s, bound
                ),
            });
        }
    }
    Ok(LoadedConfig { sim, lane: file.lane })
}

/// Serializes a resolved configuration so that `parse_config` reproduces it
/// exactly (scenario inlined; all sections explicit).
pub fn emit_config(cfg: &LoadedConfig) -> String {
    let file = FileConfig {
        scenario: Some(ScenarioSection::Inline(Box::new(cfg.sim.scenario.clone()))),
        mount: Some(cfg.sim.mount),
        radio: Some(cfg.sim.radio),
        multipath: Some(cfg.sim.multipath),
        gen2: Some(cfg.sim.gen2),
        duration_s: cfg.sim.duration_s,
        seed: Some(cfg.sim.seed),
        trace_detail: Some(cfg.sim.trace_detail),
        lane: cfg.lane.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("config serializes");
    text.push('\n');
    text
}

/// Canonical JSON bytes of a resolved configuration, the input to the
/// manifest hash.
pub fn canonical_config_bytes(cfg: &LoadedConfig) -> Vec<u8> {
    #[derive(Serialize)]
    struct Canonical<'a> {
        sim: &'a SimConfig,
        lane: &'a Option<LaneSection>,
    }
    serde_json::to_vec(&Canonical { sim: &cfg.sim, lane: &cfg.lane }).expect("config serializes")
}
