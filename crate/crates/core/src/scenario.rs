//! The bundled synthetic scenario: the mini-berlin grid, a year of synthetic
//! operator data as logbook source, and 60 hotspots derived from its pick-ups.

use crate::graph::{mini_berlin, NetworkError, RoadGraph, TurnCostModel};
use crate::hotspots::{HotspotError, HotspotSet};
use crate::logbook::{
    extract_shifts, generate_logbook, synthesize_demand, DemandError, DemandParams, GenerateError, Shift, SyntheticLogbook,
    DEFAULT_MAX_GAP,
};
use crate::sim::{run_simulation, ScenarioConfig, SimError, SimOutput, Strategy};
use chrono::Weekday;
use std::sync::Arc;

pub const SOURCE_SEED: u64 = 2023;
pub const FLEET_SIZE: usize = 50;

// derived once from the source year (eps search to 60 clusters, min_pts 10)
const HOTSPOTS_CSV: &str = include_str!("../../../fixtures/hotspots.csv");
const HOTSPOTS_META: &str = include_str!("../../../fixtures/hotspots.meta.json");

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Hotspots(#[from] HotspotError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Immutable inputs shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Arc<RoadGraph>,
    /// Shifts of the operator data logbooks are sampled from.
    pub source: Arc<Vec<Shift>>,
    pub hotspots: Arc<HotspotSet>,
    /// Template for every run; strategy, seed and hotspots are set per run.
    pub base: ScenarioConfig,
    pub fleet_size: usize,
}

impl Scenario {
    pub fn bundled() -> Result<Self, ScenarioError> {
        let params = DemandParams::default();
        let graph = RoadGraph::from_file(&mini_berlin(), TurnCostModel::default())?;
        let source = extract_shifts(&synthesize_demand(&params, SOURCE_SEED)?, DEFAULT_MAX_GAP);
        Ok(Self {
            graph: Arc::new(graph),
            source: Arc::new(source),
            hotspots: Arc::new(bundled_hotspots()),
            base: ScenarioConfig::new(Strategy::Return, params.pob),
            fleet_size: FLEET_SIZE,
        })
    }

    /// Logbook variation `seed` for a day of the week.
    pub fn logbook(&self, day: Weekday, seed: u64) -> Result<SyntheticLogbook, GenerateError> {
        generate_logbook(&self.source, day, self.fleet_size, seed)
    }

    pub fn config(&self, strategy: Strategy, seed: u64) -> ScenarioConfig {
        let mut c = self.base.clone().with_hotspots(self.hotspots.clone());
        c.strategy = strategy;
        c.seed = seed;
        c
    }

    /// Generates the day's logbook and simulates it under `strategy`.
    pub fn run(&self, day: Weekday, strategy: Strategy, seed: u64) -> Result<(SyntheticLogbook, SimOutput), ScenarioError> {
        let lb = self.logbook(day, seed)?;
        let out = run_simulation(&self.config(strategy, seed), &lb, &self.graph)?;
        Ok((lb, out))
    }
}

pub fn bundled_hotspots() -> HotspotSet {
    HotspotSet::from_strs(HOTSPOTS_CSV, HOTSPOTS_META).expect("bundled hotspot file is valid")
}

pub fn day_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "Monday",
        Weekday::Tue => "Tuesday",
        Weekday::Wed => "Wednesday",
        Weekday::Thu => "Thursday",
        Weekday::Fri => "Friday",
        Weekday::Sat => "Saturday",
        Weekday::Sun => "Sunday",
    }
}
