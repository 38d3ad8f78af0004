use super::{ScenarioConfig, Strategy, VehicleState};
use crate::geo::LatLon;
use crate::logbook::RideOrder;
use rand::Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebalanceAction {
    GoToPoB,
    Stay,
    GoToHotspot(usize),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("the hotspot strategy needs a non-empty hotspot set")]
    MissingHotspots,
}

/// What a vehicle does after a drop-off with no follow-up order waiting.
/// The hotspot strategy stays put with `hotspot_wait_probability` (one
/// Bernoulli draw from the vehicle's own stream) and otherwise heads for the
/// hotspot nearest to the drop-off.
pub fn decide_rebalancing<R: Rng>(
    config: &ScenarioConfig,
    dropoff: LatLon,
    rng: &mut R,
) -> Result<RebalanceAction, PolicyError> {
    Ok(match config.strategy {
        Strategy::Return => RebalanceAction::GoToPoB,
        Strategy::Wait => RebalanceAction::Stay,
        Strategy::Hotspot => {
            let set = config.hotspots.as_ref().ok_or(PolicyError::MissingHotspots)?;
            let nearest = set.nearest(dropoff).ok_or(PolicyError::MissingHotspots)?;
            if rng.random_bool(config.hotspot_wait_probability) {
                RebalanceAction::Stay
            } else {
                RebalanceAction::GoToHotspot(nearest.id)
            }
        }
    })
}

/// Read-only view of the fleet handed to dispatchers.
#[derive(Debug, Clone, Copy)]
pub struct FleetView<'a> {
    pub vehicle_ids: &'a [String],
    pub states: &'a [VehicleState],
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DispatchError {
    #[error("order {order} is assigned to unknown vehicle `{vehicle}`")]
    UnknownVehicle { order: u64, vehicle: String },
}

/// Chooses the vehicle for a new order.
pub trait Dispatcher {
    fn dispatch(&mut self, order: &RideOrder, fleet: &FleetView<'_>) -> Result<usize, DispatchError>;
}

/// Replays the assignment recorded in the logbook.
#[derive(Debug, Clone, Default)]
pub struct LogbookDispatcher {
    index: HashMap<String, usize>,
}

impl LogbookDispatcher {
    pub fn new(vehicle_ids: &[String]) -> Self {
        Self {
            index: vehicle_ids.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
        }
    }
}

impl Dispatcher for LogbookDispatcher {
    fn dispatch(&mut self, order: &RideOrder, _fleet: &FleetView<'_>) -> Result<usize, DispatchError> {
        self.index
            .get(&order.vehicle_id)
            .copied()
            .ok_or_else(|| DispatchError::UnknownVehicle {
                order: order.order_id,
                vehicle: order.vehicle_id.clone(),
            })
    }
}

/// Convenience wrapper around [`LogbookDispatcher`].
pub fn dispatch_order(order: &RideOrder, fleet: &FleetView<'_>) -> Result<usize, DispatchError> {
    LogbookDispatcher::new(fleet.vehicle_ids).dispatch(order, fleet)
}
