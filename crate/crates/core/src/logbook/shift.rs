use super::{RideOrder, Timestamp};
use crate::geo::Polygon;
use chrono::Duration;
use std::collections::BTreeMap;

/// Gaps strictly longer than this start a new shift.
pub const DEFAULT_MAX_GAP: Duration = Duration::hours(2);

/// Consecutive rides of one vehicle without a long break.
#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub vehicle_id: String,
    pub rides: Vec<RideOrder>,
}

impl Shift {
    pub fn start(&self) -> Timestamp {
        self.rides[0].order_time
    }

    pub fn end(&self) -> Timestamp {
        self.rides.iter().map(|r| r.dropoff_time).max().expect("shift has rides")
    }

    /// True when `other` keeps at least `min_gap` distance on either side.
    pub fn separated_from(&self, other: &Shift, min_gap: Duration) -> bool {
        other.start() - self.end() >= min_gap || self.start() - other.end() >= min_gap
    }
}

/// Splits each vehicle's rides (ordered by order time, file order on ties)
/// into shifts. A new shift begins when the next order arrives more than
/// `max_gap` after the previous drop-off. Vehicles come out sorted by id.
pub fn extract_shifts(orders: &[RideOrder], max_gap: Duration) -> Vec<Shift> {
    let mut by_vehicle: BTreeMap<&str, Vec<&RideOrder>> = BTreeMap::new();
    for o in orders {
        by_vehicle.entry(&o.vehicle_id).or_default().push(o);
    }
    let mut shifts = Vec::new();
    for (vehicle, mut rides) in by_vehicle {
        rides.sort_by_key(|r| r.order_time);
        let mut current: Vec<RideOrder> = Vec::new();
        for r in rides {
            if let Some(prev) = current.last() {
                if r.order_time - prev.dropoff_time > max_gap {
                    shifts.push(Shift {
                        vehicle_id: vehicle.to_string(),
                        rides: std::mem::take(&mut current),
                    });
                }
            }
            current.push(r.clone());
        }
        if !current.is_empty() {
            shifts.push(Shift {
                vehicle_id: vehicle.to_string(),
                rides: current,
            });
        }
    }
    shifts
}

/// Keeps only shifts whose every pick-up and drop-off lies inside `area`.
/// Returns `(kept, dismissed)`.
pub fn filter_out_of_area(shifts: Vec<Shift>, area: &Polygon) -> (Vec<Shift>, Vec<Shift>) {
    shifts
        .into_iter()
        .partition(|s| s.rides.iter().all(|r| area.contains(r.pickup_location) && area.contains(r.dropoff_location)))
}
