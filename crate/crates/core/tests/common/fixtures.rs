//! Small networks and logbooks shared by the integration tests.

use chrono::{Duration, Weekday};
use ridehail::geo::LatLon;
use ridehail::graph::{EdgeRecord, NetworkFile, NodeRecord, RoadGraph, TurnCostModel};
use ridehail::logbook::{
    extract_shifts, parse_timestamp, synthesize_demand, DemandParams, RideOrder, Shift, SyntheticLogbook, DEFAULT_MAX_GAP,
};
use std::sync::OnceLock;

pub const M_PER_DEG_LAT: f64 = 111_194.93;

/// `n` nodes due north of (52.5, 13.4), 1 km apart, linked both ways with
/// exact 1000 m edges at 10 m/s; no turn costs.
pub fn line_graph(n: usize) -> RoadGraph {
    let nodes = (0..n)
        .map(|i| NodeRecord {
            id: i as u64,
            lat: 52.5 + i as f64 * 1000.0 / M_PER_DEG_LAT,
            lon: 13.4,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n.saturating_sub(1) {
        for (a, b) in [(i, i + 1), (i + 1, i)] {
            edges.push(EdgeRecord {
                id: edges.len() as u64,
                from: a as u64,
                to: b as u64,
                length_m: 1000.0,
                speed_mps: 10.0,
            });
        }
    }
    RoadGraph::from_file(
        &NetworkFile {
            nodes,
            edges,
            turn_penalties: Vec::new(),
        },
        TurnCostModel::zero(),
    )
    .unwrap()
}

pub fn node_pos(g: &RoadGraph, id: u64) -> LatLon {
    g.node(g.node_by_id(id).unwrap()).pos
}

/// Order on vehicle `V01`, issued `t` seconds after 2023-01-04 08:00 +01:00.
pub fn order_at(id: u64, t: i64, pickup: LatLon, dropoff: LatLon) -> RideOrder {
    let base = parse_timestamp("2023-01-04T08:00:00+01:00").unwrap();
    let at = base + Duration::seconds(t);
    RideOrder {
        order_id: id,
        order_time: at,
        vehicle_id: "V01".into(),
        accept_location: pickup,
        pickup_time: at + Duration::seconds(300),
        pickup_location: pickup,
        dropoff_time: at + Duration::seconds(900),
        dropoff_location: dropoff,
        shift: Some(0),
    }
}

pub fn logbook_of(orders: Vec<RideOrder>) -> SyntheticLogbook {
    SyntheticLogbook::from_orders(&orders, Weekday::Wed)
}

pub fn mini_berlin() -> &'static RoadGraph {
    static G: OnceLock<RoadGraph> = OnceLock::new();
    G.get_or_init(|| RoadGraph::from_file(&ridehail::graph::mini_berlin(), TurnCostModel::default()).unwrap())
}

/// Four weeks of synthetic operator data split into shifts.
pub fn source_shifts() -> &'static [Shift] {
    static S: OnceLock<Vec<Shift>> = OnceLock::new();
    S.get_or_init(|| {
        let params = DemandParams {
            days: 28,
            ..DemandParams::default()
        };
        extract_shifts(&synthesize_demand(&params, 11).unwrap(), DEFAULT_MAX_GAP)
    })
}

pub fn default_pob() -> LatLon {
    DemandParams::default().pob
}
