//! Discrete-event simulation of a ride-hailing fleet replaying a logbook.

mod config;
mod engine;
mod events;
mod output;
mod policy;

pub use config::{ConfigError, ScenarioConfig, Strategy};
pub use engine::{divert_vehicle, run_simulation, run_simulation_with, SimError};
pub use events::{EventKind, EventQueue, Messenger, SimEvent};
pub use output::{OrderOutcome, OrderStatus, ShiftSummary, SimMileage, SimOutput, TraceEntry, TripLog, TripReason};
pub use policy::{decide_rebalancing, dispatch_order, DispatchError, Dispatcher, FleetView, LogbookDispatcher, PolicyError, RebalanceAction};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleState {
    IdleAtPoB,
    EnRouteToPickup,
    DwellAtPickup,
    InRide,
    DwellAtDropoff,
    RebalancingToPoB,
    RebalancingToHotspot,
    WaitingAtDropoff,
    WaitingAtHotspot,
}

impl VehicleState {
    /// Can take a new assignment right away.
    pub fn accepts_assignment(self) -> bool {
        matches!(
            self,
            VehicleState::IdleAtPoB
                | VehicleState::WaitingAtDropoff
                | VehicleState::WaitingAtHotspot
                | VehicleState::RebalancingToPoB
                | VehicleState::RebalancingToHotspot
        )
    }

    pub fn is_rebalancing(self) -> bool {
        matches!(self, VehicleState::RebalancingToPoB | VehicleState::RebalancingToHotspot)
    }

    /// Legal successor states.
    pub fn can_become(self, next: VehicleState) -> bool {
        use VehicleState::*;
        match next {
            EnRouteToPickup => self.accepts_assignment() || self == DwellAtDropoff,
            DwellAtPickup => self == EnRouteToPickup,
            InRide => self == DwellAtPickup,
            DwellAtDropoff => self == InRide,
            RebalancingToPoB | RebalancingToHotspot | WaitingAtDropoff => self == DwellAtDropoff,
            IdleAtPoB => self == RebalancingToPoB,
            WaitingAtHotspot => self == RebalancingToHotspot,
        }
    }
}
