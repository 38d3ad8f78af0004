//! Discrete-event ride-hailing fleet simulation and analysis.

pub mod analytics;
pub mod batch;
pub mod emissions;
pub mod geo;
pub mod graph;
pub mod hotspots;
pub mod logbook;
pub mod scenario;
pub mod sim;

pub use analytics::{build_kpi_table, KpiTable, RunKpis};
pub use emissions::{default_factor_table, EmissionFactorTable, Pollutant};
pub use geo::LatLon;
pub use graph::{fastest_path, RoadGraph, Route, SpeedProfile};
pub use hotspots::{Hotspot, HotspotSet};
pub use logbook::{RideOrder, Shift, SyntheticLogbook, Timestamp};
pub use scenario::Scenario;
pub use sim::{run_simulation, ScenarioConfig, SimOutput, Strategy, TripLog, TripReason};
