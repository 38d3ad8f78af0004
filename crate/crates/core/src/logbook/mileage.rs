use super::{classify_follow_up, FollowUpCategory, FollowUpCounts, Shift};
use crate::geo::LatLon;
use crate::graph::{fastest_path, NodeIx, RoadGraph, Route, SpeedProfile};
use chrono::{Datelike, Duration, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Pick-up / ride / return shares operators typically report; shown next to
/// computed shares, never enforced.
pub const REFERENCE_SHARES: [f64; 3] = [0.17, 0.52, 0.31];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MileageTotals {
    pub pickup_mm: u64,
    pub ride_mm: u64,
    pub return_mm: u64,
}

impl MileageTotals {
    pub fn total_mm(&self) -> u64 {
        self.pickup_mm + self.ride_mm + self.return_mm
    }

    pub fn merge(&mut self, o: &MileageTotals) {
        self.pickup_mm += o.pickup_mm;
        self.ride_mm += o.ride_mm;
        self.return_mm += o.return_mm;
    }

    /// (pick-up, ride, return) fractions of the total; `None` without mileage.
    pub fn shares(&self) -> Option<[f64; 3]> {
        let t = self.total_mm();
        (t > 0).then(|| {
            let t = t as f64;
            [self.pickup_mm as f64 / t, self.ride_mm as f64 / t, self.return_mm as f64 / t]
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MileageReport {
    pub total: MileageTotals,
    /// Keyed by the local date of the order.
    pub per_day: BTreeMap<NaiveDate, MileageTotals>,
    /// Monday first.
    pub per_weekday: [MileageTotals; 7],
    pub follow_ups: FollowUpCounts,
    pub follow_ups_per_weekday: [FollowUpCounts; 7],
    /// Orders with a leg the network cannot route; excluded from all totals.
    pub flagged: Vec<u64>,
}

struct Router<'a> {
    graph: &'a RoadGraph,
    profile: &'a SpeedProfile,
    cache: HashMap<(NodeIx, NodeIx, u64), Option<Route>>,
}

impl Router<'_> {
    fn route(&mut self, from: NodeIx, to: NodeIx, departure_s: f64) -> Option<&Route> {
        let factor = self.profile.factor_at(departure_s);
        let (graph, profile) = (self.graph, self.profile);
        self.cache
            .entry((from, to, factor.to_bits()))
            .or_insert_with(|| fastest_path(graph, from, to, departure_s, profile).ok())
            .as_ref()
    }
}

fn seconds_of_day(t: &super::Timestamp) -> f64 {
    f64::from(t.num_seconds_from_midnight())
}

/// Reconstructs pick-up, ride and return mileage from a logbook.
///
/// Every location is snapped to its nearest node and legs follow fastest
/// routes departing at the recorded times. The return leg after a ride is
/// cut where the vehicle was when the follow-up order arrived: dropped
/// entirely for orders received during the ride, partially driven for orders
/// received on the way back, driven fully otherwise.
pub fn static_mileage_report(shifts: &[Shift], graph: &RoadGraph, pob: LatLon, profile: &SpeedProfile) -> MileageReport {
    let mut report = MileageReport::default();
    if graph.node_count() == 0 {
        report.flagged = shifts.iter().flat_map(|s| s.rides.iter().map(|r| r.order_id)).collect();
        return report;
    }
    let snap = |p: LatLon| graph.nearest_node(p).expect("graph is not empty");
    let pob_node = snap(pob);
    let mut router = Router {
        graph,
        profile,
        cache: HashMap::new(),
    };

    for shift in shifts {
        // return routes first: they drive the classification
        let returns: Vec<Option<Route>> = shift
            .rides
            .iter()
            .map(|r| router.route(snap(r.dropoff_location), pob_node, seconds_of_day(&r.dropoff_time)).cloned())
            .collect();
        let arrivals: Vec<_> = shift
            .rides
            .iter()
            .zip(&returns)
            .map(|(r, ret)| {
                let secs = ret.as_ref().map_or(0.0, |x| x.travel_time_s);
                Some(r.dropoff_time + Duration::milliseconds((secs * 1000.0).round() as i64))
            })
            .collect();
        let cats = classify_follow_up(shift, &arrivals).expect("arrivals supplied for every ride");

        for (i, ride) in shift.rides.iter().enumerate() {
            let dep = |t| seconds_of_day(t);
            let pickup = router
                .route(snap(ride.accept_location), snap(ride.pickup_location), dep(&ride.order_time))
                .map(|r| r.length_mm);
            let trip = router
                .route(snap(ride.pickup_location), snap(ride.dropoff_location), dep(&ride.pickup_time))
                .map(|r| r.length_mm);
            let (Some(pickup), Some(trip), Some(ret)) = (pickup, trip, returns[i].as_ref()) else {
                report.flagged.push(ride.order_id);
                continue;
            };
            let ret_mm = match cats[i] {
                FollowUpCategory::DuringRide => 0,
                FollowUpCategory::DuringReturn => {
                    let next = &shift.rides[i + 1];
                    let elapsed = (next.order_time - ride.dropoff_time).num_milliseconds() as f64 / 1000.0;
                    ret.position_at(graph, elapsed).covered.length_mm
                }
                FollowUpCategory::AtPoB | FollowUpCategory::None => ret.length_mm,
            };
            let leg = MileageTotals {
                pickup_mm: pickup,
                ride_mm: trip,
                return_mm: ret_mm,
            };
            let wd = ride.order_time.weekday().num_days_from_monday() as usize;
            report.total.merge(&leg);
            report.per_day.entry(ride.order_time.date_naive()).or_default().merge(&leg);
            report.per_weekday[wd].merge(&leg);
            report.follow_ups.add(cats[i]);
            report.follow_ups_per_weekday[wd].add(cats[i]);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{grid_network, GridSpec, TurnCostModel};
    use crate::logbook::tests::order;

    /// 1x5 line, 1 km spacing, 10 m/s, no turn costs.
    fn line() -> (RoadGraph, Vec<LatLon>) {
        let spec = GridSpec {
            rows: 1,
            cols: 5,
            spacing_m: 1000.0,
            center: LatLon::new(52.5, 13.4),
            arterial_every: 0,
            arterial_offset: 0,
            arterial_speed_mps: 10.0,
            local_speed_mps: 10.0,
        };
        let g = RoadGraph::from_file(&grid_network(&spec), TurnCostModel::zero()).unwrap();
        let pts = g.nodes().iter().map(|n| n.pos).collect();
        (g, pts)
    }

    fn edge_mm(g: &RoadGraph) -> u64 {
        g.edge(0).length_mm
    }

    #[test]
    fn legs_and_truncation() {
        let (g, p) = line();
        let e = edge_mm(&g);
        // PoB at node 0. Ride 0: accept 0, pickup 1, drop 3 (drop at 08:10).
        // Return 3 km = 300 s; next order 100 s after drop -> 1 km driven.
        let mut r0 = order(0, "a", "2023-03-01T08:00:00+01:00", "2023-03-01T08:02:00+01:00", "2023-03-01T08:10:00+01:00");
        r0.accept_location = p[0];
        r0.pickup_location = p[1];
        r0.dropoff_location = p[3];
        let mut r1 = order(1, "a", "2023-03-01T08:11:40+01:00", "2023-03-01T08:15:00+01:00", "2023-03-01T08:20:00+01:00");
        r1.accept_location = p[2];
        r1.pickup_location = p[4];
        r1.dropoff_location = p[2];
        let shift = Shift {
            vehicle_id: "a".into(),
            rides: vec![r0, r1],
        };
        let rep = static_mileage_report(&[shift], &g, p[0], &SpeedProfile::uniform());
        assert!(rep.flagged.is_empty());
        assert_eq!(rep.total.pickup_mm, e + 2 * e);
        assert_eq!(rep.total.ride_mm, 2 * e + 2 * e);
        // 1 km partial return + 2 km final return
        assert_eq!(rep.total.return_mm, e + 2 * e);
        assert_eq!(rep.follow_ups.during_return, 1);
        assert_eq!(rep.follow_ups.none, 1);
        let s = rep.total.shares().unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(rep.per_weekday[2], rep.total);
    }

    #[test]
    fn order_during_ride_drops_return() {
        let (g, p) = line();
        let mut r0 = order(0, "a", "2023-03-01T08:00:00+01:00", "2023-03-01T08:02:00+01:00", "2023-03-01T08:10:00+01:00");
        r0.dropoff_location = p[4];
        r0.accept_location = p[0];
        r0.pickup_location = p[0];
        let mut r1 = order(1, "a", "2023-03-01T08:05:00+01:00", "2023-03-01T08:15:00+01:00", "2023-03-01T08:20:00+01:00");
        r1.accept_location = p[2];
        r1.pickup_location = p[4];
        r1.dropoff_location = p[0];
        let rep = static_mileage_report(
            &[Shift {
                vehicle_id: "a".into(),
                rides: vec![r0, r1],
            }],
            &g,
            p[0],
            &SpeedProfile::uniform(),
        );
        assert_eq!(rep.follow_ups.during_ride, 1);
        // only the final ride returns, and it ends at the PoB already
        assert_eq!(rep.total.return_mm, 0);
    }
}
