//! Resolved settings: defaults, then the `--config` file, then flags.

use anyhow::{Context, Result};
use chrono::Weekday;
use ridehail::graph::{load_network, mini_berlin, RoadGraph, SpeedProfile, TurnCostModel};
use ridehail::hotspots::HotspotSet;
use ridehail::logbook::{extract_shifts, parse_logbook, synthesize_demand, DemandParams, DEFAULT_MAX_GAP};
use ridehail::scenario::{bundled_hotspots, FLEET_SIZE, SOURCE_SEED};
use ridehail::sim::{ScenarioConfig, Strategy};
use ridehail::{EmissionFactorTable, LatLon, Scenario};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Network JSON; the bundled mini-berlin grid when absent.
    pub network: Option<PathBuf>,
    /// Operator logbook that synthetic days are sampled from; synthesized
    /// from `demand` and `source_seed` when absent.
    pub source_logbook: Option<PathBuf>,
    pub source_seed: u64,
    pub demand: DemandParams,
    /// Hotspot CSV; the bundled set when absent.
    pub hotspots: Option<PathBuf>,
    pub emission_factors: Option<PathBuf>,
    pub speed_profile: Option<PathBuf>,
    /// Place of business; defaults to the one in `demand`.
    pub pob: Option<LatLon>,
    pub fleet_size: usize,
    pub day: Weekday,
    pub seed: u64,
    pub strategy: Strategy,
    pub days: Vec<Weekday>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub baseline: Strategy,
    pub parallel: usize,
    pub min_dwell_s: f64,
    pub message_latency_s: f64,
    pub hotspot_wait_probability: f64,
    pub wall_clock_budget_s: f64,
    pub record_trace: bool,
    pub hotspot_target: usize,
    pub hotspot_min_pts: usize,
    pub validation_threshold_s: f64,
}

impl Default for CliConfig {
    fn default() -> Self {
        let sim = ScenarioConfig::new(Strategy::Return, LatLon::new(0.0, 0.0));
        Self {
            network: None,
            source_logbook: None,
            source_seed: SOURCE_SEED,
            demand: DemandParams::default(),
            hotspots: None,
            emission_factors: None,
            speed_profile: None,
            pob: None,
            fleet_size: FLEET_SIZE,
            day: Weekday::Wed,
            seed: 0,
            strategy: Strategy::Return,
            days: vec![Weekday::Wed, Weekday::Sat],
            strategies: Strategy::ALL.to_vec(),
            seeds: (0..8).collect(),
            baseline: Strategy::Return,
            parallel: 3,
            min_dwell_s: sim.min_dwell_s,
            message_latency_s: sim.message_latency_s,
            hotspot_wait_probability: sim.hotspot_wait_probability,
            wall_clock_budget_s: sim.wall_clock_budget_s,
            record_trace: false,
            hotspot_target: 60,
            hotspot_min_pts: 10,
            validation_threshold_s: ridehail::analytics::DEFAULT_THRESHOLD_S,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl CliConfig {
    /// Reads a JSON config; relative paths in it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: CliConfig = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.network,
            &mut cfg.source_logbook,
            &mut cfg.hotspots,
            &mut cfg.emission_factors,
            &mut cfg.speed_profile,
        ] {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn pob(&self) -> LatLon {
        self.pob.unwrap_or(self.demand.pob)
    }

    pub fn graph(&self) -> Result<RoadGraph> {
        match &self.network {
            Some(p) => load_network(p).with_context(|| format!("loading network {}", p.display())),
            None => Ok(RoadGraph::from_file(&mini_berlin(), TurnCostModel::default())?),
        }
    }

    pub fn hotspot_set(&self) -> Result<HotspotSet> {
        match &self.hotspots {
            Some(p) => HotspotSet::load(p).with_context(|| format!("loading hotspots {}", p.display())),
            None => Ok(bundled_hotspots()),
        }
    }

    pub fn factors(&self) -> Result<EmissionFactorTable> {
        match &self.emission_factors {
            Some(p) => EmissionFactorTable::load(p).with_context(|| format!("loading emission factors {}", p.display())),
            None => Ok(ridehail::default_factor_table()),
        }
    }

    pub fn profile(&self) -> Result<SpeedProfile> {
        match &self.speed_profile {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading speed profile {}", p.display()))?;
                Ok(serde_json::from_str(&text).with_context(|| format!("parsing speed profile {}", p.display()))?)
            }
            None => Ok(SpeedProfile::uniform()),
        }
    }

    /// Orders of the operator data days are sampled from.
    pub fn source_orders(&self) -> Result<Vec<ridehail::RideOrder>> {
        match &self.source_logbook {
            Some(p) => {
                let parsed = parse_logbook(p).with_context(|| format!("reading logbook {}", p.display()))?;
                if !parsed.rejected.is_empty() {
                    log::warn!("{}: {} rows rejected", p.display(), parsed.rejected.len());
                }
                Ok(parsed.orders)
            }
            None => Ok(synthesize_demand(&self.demand, self.source_seed)?),
        }
    }

    /// Simulation settings shared by every run; strategy and seed come from
    /// the run itself.
    pub fn base_config(&self) -> Result<ScenarioConfig> {
        let mut c = ScenarioConfig::new(self.strategy, self.pob());
        c.seed = self.seed;
        c.min_dwell_s = self.min_dwell_s;
        c.message_latency_s = self.message_latency_s;
        c.hotspot_wait_probability = self.hotspot_wait_probability;
        c.wall_clock_budget_s = self.wall_clock_budget_s;
        c.record_trace = self.record_trace;
        c.speed_profile = self.profile()?;
        c.hotspots_file = self.hotspots.clone();
        Ok(c)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let graph = self.graph()?;
        let source = extract_shifts(&self.source_orders()?, DEFAULT_MAX_GAP);
        let hotspots = self.hotspot_set()?;
        if self.hotspots.is_none() && (self.source_logbook.is_some() || self.source_seed != SOURCE_SEED || self.demand != DemandParams::default()) {
            log::warn!("using the bundled hotspots with a non-default logbook source; consider derive-hotspots");
        }
        Ok(Scenario {
            graph: Arc::new(graph),
            source: Arc::new(source),
            hotspots: Arc::new(hotspots),
            base: self.base_config()?,
            fleet_size: self.fleet_size,
        })
    }
}
