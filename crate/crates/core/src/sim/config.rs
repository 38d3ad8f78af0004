use crate::geo::LatLon;
use crate::graph::SpeedProfile;
use crate::hotspots::{HotspotError, HotspotSet};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Drive back to the place of business after every ride.
    Return,
    /// Stay at the drop-off location.
    Wait,
    /// Drive to the nearest hotspot, or occasionally stay.
    Hotspot,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Return, Strategy::Wait, Strategy::Hotspot];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Return => "Return",
            Strategy::Wait => "Wait",
            Strategy::Hotspot => "Hotspot",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "return" => Ok(Strategy::Return),
            "wait" => Ok(Strategy::Wait),
            "hotspot" => Ok(Strategy::Hotspot),
            other => Err(format!("unknown strategy `{other}` (expected return, wait or hotspot)")),
        }
    }
}

fn default_dwell() -> f64 {
    30.0
}
fn default_latency() -> f64 {
    1.0
}
fn default_wait_probability() -> f64 {
    0.2
}
fn default_budget() -> f64 {
    300.0
}

/// Everything a single run needs besides logbook and network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub strategy: Strategy,
    pub pob_location: LatLon,
    #[serde(default = "default_dwell")]
    pub min_dwell_s: f64,
    #[serde(default = "default_latency")]
    pub message_latency_s: f64,
    #[serde(default = "default_wait_probability")]
    pub hotspot_wait_probability: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub speed_profile: SpeedProfile,
    /// Hotspot CSV, resolved relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotspots_file: Option<PathBuf>,
    /// Loaded hotspot set; required for the hotspot strategy.
    #[serde(skip)]
    pub hotspots: Option<Arc<HotspotSet>>,
    /// Abort a run that takes longer than this (wall clock).
    #[serde(default = "default_budget")]
    pub wall_clock_budget_s: f64,
    #[serde(default)]
    pub record_trace: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("min_dwell_s must be finite and non-negative")]
    BadDwell,
    #[error("message_latency_s must be finite and non-negative")]
    BadLatency,
    #[error("hotspot_wait_probability must lie in [0, 1]")]
    BadProbability,
    #[error("pob_location is not a valid coordinate")]
    BadPob,
    #[error("the hotspot strategy needs a hotspot set")]
    MissingHotspots,
    #[error("cannot read scenario config: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Hotspots(#[from] HotspotError),
}

impl ScenarioConfig {
    pub fn new(strategy: Strategy, pob_location: LatLon) -> Self {
        Self {
            strategy,
            pob_location,
            min_dwell_s: default_dwell(),
            message_latency_s: default_latency(),
            hotspot_wait_probability: default_wait_probability(),
            seed: 0,
            speed_profile: SpeedProfile::uniform(),
            hotspots_file: None,
            hotspots: None,
            wall_clock_budget_s: default_budget(),
            record_trace: false,
        }
    }

    pub fn with_hotspots(mut self, set: Arc<HotspotSet>) -> Self {
        self.hotspots = Some(set);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.min_dwell_s.is_finite() && self.min_dwell_s >= 0.0) {
            return Err(ConfigError::BadDwell);
        }
        if !(self.message_latency_s.is_finite() && self.message_latency_s >= 0.0) {
            return Err(ConfigError::BadLatency);
        }
        if !(0.0..=1.0).contains(&self.hotspot_wait_probability) {
            return Err(ConfigError::BadProbability);
        }
        if !self.pob_location.is_finite() {
            return Err(ConfigError::BadPob);
        }
        if self.strategy == Strategy::Hotspot && self.hotspots.as_ref().is_none_or(|h| h.hotspots.is_empty()) {
            return Err(ConfigError::MissingHotspots);
        }
        Ok(())
    }

    /// Reads a JSON config and loads its hotspot file, if any.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut cfg: ScenarioConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if let Some(h) = &cfg.hotspots_file {
            let full = path.parent().unwrap_or(Path::new(".")).join(h);
            cfg.hotspots = Some(Arc::new(HotspotSet::load(full)?));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_minimal_json() {
        let c: ScenarioConfig =
            serde_json::from_str(r#"{"strategy": "Wait", "pob_location": {"lat": 52.5, "lon": 13.4}}"#).unwrap();
        assert_eq!(c.min_dwell_s, 30.0);
        assert_eq!(c.message_latency_s, 1.0);
        assert_eq!(c.hotspot_wait_probability, 0.2);
        c.validate().unwrap();
    }

    #[test]
    fn validation() {
        let mut c = ScenarioConfig::new(Strategy::Hotspot, LatLon::new(52.5, 13.4));
        assert!(matches!(c.validate(), Err(ConfigError::MissingHotspots)));
        c.strategy = Strategy::Return;
        c.hotspot_wait_probability = 1.5;
        assert!(matches!(c.validate(), Err(ConfigError::BadProbability)));
        c.hotspot_wait_probability = 0.2;
        c.min_dwell_s = -1.0;
        assert!(matches!(c.validate(), Err(ConfigError::BadDwell)));
    }

    #[test]
    fn strategy_parse() {
        assert_eq!("HOTSPOT".parse::<Strategy>().unwrap(), Strategy::Hotspot);
        assert!("teleport".parse::<Strategy>().is_err());
    }
}
