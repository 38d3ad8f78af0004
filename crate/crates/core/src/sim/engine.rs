use super::output::{OrderOutcome, OrderStatus, ShiftSummary, SimOutput, TraceEntry, TripLog, TripReason};
use super::policy::{decide_rebalancing, DispatchError, Dispatcher, FleetView, LogbookDispatcher, PolicyError, RebalanceAction};
use super::{ConfigError, EventKind, EventQueue, Messenger, ScenarioConfig, VehicleState};
use crate::geo::LatLon;
use crate::graph::{fastest_path, fastest_path_from, NodeIx, RoadGraph, Route, RouteError, SpeedProfile, Start};
use crate::logbook::{RideOrder, SyntheticLogbook, Timestamp};
use chrono::{FixedOffset, TimeZone};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("road network has no nodes")]
    EmptyGraph,
    #[error("run exceeded its {budget_s} s wall-clock budget at simulated t = {sim_time_s:.1} s after {events} events ({queued} still queued)")]
    Stuck {
        budget_s: f64,
        sim_time_s: f64,
        events: u64,
        queued: usize,
    },
    #[error("orders never resolved: {0:?}")]
    Incomplete(Vec<u64>),
}

/// Rebalancing leg cut short by a new assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Diversion {
    /// Driven part of the rebalancing route.
    pub partial: Route,
    /// Where the vehicle is when it turns towards the pick-up.
    pub here: Start,
    pub pickup: Route,
}

/// Truncates a rebalancing route at the vehicle's position `now` and plans
/// the pick-up leg from there.
pub fn divert_vehicle(
    graph: &RoadGraph,
    rebalancing: &Route,
    departed_s: f64,
    pickup: NodeIx,
    now: f64,
    profile: &SpeedProfile,
) -> Result<Diversion, RouteError> {
    let pos = rebalancing.position_at(graph, now - departed_s);
    let pickup = fastest_path_from(graph, pos.here, pickup, now, profile)?;
    Ok(Diversion {
        partial: pos.covered,
        here: pos.here,
        pickup,
    })
}

struct OrderRec<'a> {
    order: &'a RideOrder,
    vehicle: usize,
    shift: u32,
    pickup: NodeIx,
    dropoff: NodeIx,
    order_s: f64,
}

struct Active {
    reason: TripReason,
    route: Route,
    depart: f64,
    order: Option<usize>,
    shift: u32,
}

struct Vehicle {
    state: VehicleState,
    at: Start,
    trip: Option<Active>,
    epoch: u64,
    pending: VecDeque<usize>,
    current: Option<usize>,
    last_order: Option<usize>,
    rng: ChaCha8Rng,
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    graph: &'a RoadGraph,
    orders: Vec<OrderRec<'a>>,
    ids: Vec<String>,
    veh: Vec<Vehicle>,
    queue: EventQueue,
    trips: Vec<TripLog>,
    outcomes: Vec<OrderOutcome>,
    pob_node: NodeIx,
    hotspot_nodes: HashMap<usize, NodeIx>,
    reachable: HashMap<(NodeIx, NodeIx), bool>,
    trace: Option<Vec<TraceEntry>>,
}

fn local_midnight(t: &Timestamp) -> Timestamp {
    let off: FixedOffset = *t.offset();
    off.from_local_datetime(&t.date_naive().and_hms_opt(0, 0, 0).expect("midnight"))
        .single()
        .expect("fixed offsets are unambiguous")
}

fn secs(t: &Timestamp, origin: &Timestamp) -> f64 {
    (*t - *origin).num_milliseconds() as f64 / 1000.0
}

impl Engine<'_> {
    fn set_state(&mut self, v: usize, s: VehicleState) {
        debug_assert!(self.veh[v].state.can_become(s), "{:?} -> {:?}", self.veh[v].state, s);
        self.veh[v].state = s;
    }

    fn route(&self, from: Start, to: NodeIx, now: f64) -> Result<Route, RouteError> {
        fastest_path_from(self.graph, from, to, now, &self.cfg.speed_profile)
    }

    fn is_reachable(&mut self, a: NodeIx, b: NodeIx) -> bool {
        let (graph, profile) = (self.graph, &self.cfg.speed_profile);
        *self
            .reachable
            .entry((a, b))
            .or_insert_with(|| fastest_path(graph, a, b, 0.0, profile).is_ok())
    }

    fn log_trip(&mut self, v: usize, a: Active, end_s: f64, route: Route) {
        let start = self.graph.start_location(route.start);
        let end = self.graph.node(route.dest).pos;
        let end = match route.edges.last() {
            Some(&e) if route.end_offset_mm < self.graph.edge(e).length_mm => self.graph.point_on_edge(e, route.end_offset_mm),
            None => start,
            _ => end,
        };
        self.trips.push(TripLog {
            vehicle_id: self.ids[v].clone(),
            shift: a.shift,
            reason: a.reason,
            order_id: a.order.map(|o| self.orders[o].order.order_id),
            start_s: a.depart,
            end_s,
            start,
            end,
            route,
        });
    }

    fn begin_trip(&mut self, v: usize, now: f64, reason: TripReason, route: Route, order: Option<usize>, shift: u32) {
        let arrive = now + route.travel_time_s;
        let veh = &mut self.veh[v];
        veh.epoch += 1;
        veh.trip = Some(Active {
            reason,
            route,
            depart: now,
            order,
            shift,
        });
        let epoch = veh.epoch;
        self.queue.schedule(arrive, EventKind::VehicleArrived, v as u64, order, epoch);
    }

    fn flag(&mut self, o: usize) {
        log::warn!("order {} is unroutable; skipped", self.orders[o].order.order_id);
        self.outcomes[o].status = OrderStatus::Unroutable;
    }

    /// Takes the next queued assignment, diverting a rebalancing vehicle.
    fn start_next(&mut self, v: usize, now: f64) {
        while let Some(o) = self.veh[v].pending.pop_front() {
            let (pickup, dropoff) = (self.orders[o].pickup, self.orders[o].dropoff);
            if !self.is_reachable(pickup, dropoff) {
                self.flag(o);
                continue;
            }
            let planned = if self.veh[v].state.is_rebalancing() {
                let a = self.veh[v].trip.as_ref().expect("rebalancing vehicle has a trip");
                divert_vehicle(self.graph, &a.route, a.depart, pickup, now, &self.cfg.speed_profile)
                    .map(|d| (d.pickup, Some((d.partial, d.here))))
            } else {
                self.route(self.veh[v].at, pickup, now).map(|r| (r, None))
            };
            let Ok((route, diverted)) = planned else {
                self.flag(o);
                continue;
            };
            if let Some((partial, here)) = diverted {
                let a = self.veh[v].trip.take().expect("rebalancing trip");
                self.log_trip(v, a, now, partial);
                self.veh[v].at = here;
            }
            self.set_state(v, VehicleState::EnRouteToPickup);
            self.veh[v].current = Some(o);
            let shift = self.orders[o].shift;
            self.begin_trip(v, now, TripReason::Pickup, route, Some(o), shift);
            return;
        }
    }

    fn on_order_issued(&mut self, o: usize, now: f64, dispatcher: &mut dyn Dispatcher) -> Result<(), SimError> {
        let states: Vec<VehicleState> = self.veh.iter().map(|x| x.state).collect();
        let fleet = FleetView {
            vehicle_ids: &self.ids,
            states: &states,
        };
        let v = dispatcher.dispatch(self.orders[o].order, &fleet)?;
        if v >= self.veh.len() {
            return Err(DispatchError::UnknownVehicle {
                order: self.orders[o].order.order_id,
                vehicle: format!("#{v}"),
            }
            .into());
        }
        self.orders[o].vehicle = v;
        Messenger {
            latency_s: self.cfg.message_latency_s,
        }
        .deliver_message(&mut self.queue, o, v, now);
        Ok(())
    }

    fn on_assignment(&mut self, v: usize, o: usize, now: f64) {
        self.outcomes[o].assigned_s = Some(now);
        self.veh[v].pending.push_back(o);
        if self.veh[v].state.accepts_assignment() {
            self.start_next(v, now);
        }
    }

    fn on_arrived(&mut self, v: usize, now: f64) {
        let a = self.veh[v].trip.take().expect("arrival without trip");
        // every arrival ends in a stop, after which any direction is allowed
        let here = match a.route.edges.last() {
            Some(_) => Start::node(a.route.dest),
            None => a.route.start,
        };
        let route = a.route.clone();
        self.log_trip(v, a, now, route);
        self.veh[v].at = here;
        match self.veh[v].state {
            VehicleState::EnRouteToPickup => {
                self.set_state(v, VehicleState::DwellAtPickup);
                let o = self.veh[v].current.expect("serving an order");
                let ready = (now + self.cfg.min_dwell_s).max(self.orders[o].order_s);
                self.queue.schedule(ready, EventKind::DwellComplete, v as u64, Some(o), self.veh[v].epoch);
            }
            VehicleState::InRide => {
                let o = self.veh[v].current;
                self.queue.schedule(now, EventKind::PassengerAlighted, v as u64, o, self.veh[v].epoch);
            }
            VehicleState::RebalancingToPoB => self.set_state(v, VehicleState::IdleAtPoB),
            VehicleState::RebalancingToHotspot => self.set_state(v, VehicleState::WaitingAtHotspot),
            s => unreachable!("vehicle arrived while {s:?}"),
        }
    }

    fn on_dwell_complete(&mut self, v: usize, now: f64) {
        let kind = match self.veh[v].state {
            VehicleState::DwellAtPickup => EventKind::PassengerBoarded,
            VehicleState::DwellAtDropoff => EventKind::RebalanceDecision,
            _ => return,
        };
        self.queue.schedule(now, kind, v as u64, self.veh[v].current, self.veh[v].epoch);
    }

    fn on_boarded(&mut self, v: usize, now: f64) {
        let o = self.veh[v].current.expect("boarding without order");
        self.outcomes[o].pickup_s = Some(now);
        match self.route(Start::node(self.orders[o].pickup), self.orders[o].dropoff, now) {
            Ok(route) => {
                self.set_state(v, VehicleState::InRide);
                let shift = self.orders[o].shift;
                self.begin_trip(v, now, TripReason::Ride, route, Some(o), shift);
            }
            Err(_) => {
                // checked when the assignment arrived; keep the vehicle usable
                self.flag(o);
                self.outcomes[o].pickup_s = None;
                self.veh[v].current = None;
                self.veh[v].state = VehicleState::WaitingAtDropoff;
                self.start_next(v, now);
            }
        }
    }

    fn on_alighted(&mut self, v: usize, now: f64) {
        let o = self.veh[v].current.take().expect("alighting without order");
        self.outcomes[o].dropoff_s = Some(now);
        self.veh[v].last_order = Some(o);
        self.set_state(v, VehicleState::DwellAtDropoff);
        self.queue
            .schedule(now + self.cfg.min_dwell_s, EventKind::DwellComplete, v as u64, Some(o), self.veh[v].epoch);
    }

    fn on_rebalance(&mut self, v: usize, now: f64) -> Result<(), SimError> {
        if self.veh[v].state != VehicleState::DwellAtDropoff {
            return Ok(());
        }
        if !self.veh[v].pending.is_empty() {
            self.start_next(v, now);
            if self.veh[v].state == VehicleState::EnRouteToPickup {
                return Ok(());
            }
        }
        let last = self.veh[v].last_order.expect("drop-off precedes rebalancing");
        let dropoff = self.orders[last].order.dropoff_location;
        let shift = self.orders[last].shift;
        let action = decide_rebalancing(self.cfg, dropoff, &mut self.veh[v].rng)?;
        let (target, state) = match action {
            RebalanceAction::Stay => {
                self.set_state(v, VehicleState::WaitingAtDropoff);
                return Ok(());
            }
            RebalanceAction::GoToPoB => (self.pob_node, VehicleState::RebalancingToPoB),
            RebalanceAction::GoToHotspot(id) => (
                *self.hotspot_nodes.get(&id).ok_or(PolicyError::MissingHotspots)?,
                VehicleState::RebalancingToHotspot,
            ),
        };
        match self.route(self.veh[v].at, target, now) {
            Ok(route) => {
                self.set_state(v, state);
                self.begin_trip(v, now, TripReason::Rebalancing, route, None, shift);
            }
            Err(_) => self.set_state(v, VehicleState::WaitingAtDropoff),
        }
        Ok(())
    }

    fn shift_summaries(&self) -> Vec<ShiftSummary> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut map: BTreeMap<(usize, u32), ShiftSummary> = BTreeMap::new();
        for t in &self.trips {
            let key = (index[t.vehicle_id.as_str()], t.shift);
            let s = map.entry(key).or_insert_with(|| ShiftSummary {
                vehicle_id: t.vehicle_id.clone(),
                shift: t.shift,
                orders_served: 0,
                start_s: f64::INFINITY,
                end_s: f64::NEG_INFINITY,
                pickup_mm: 0,
                ride_mm: 0,
                rebalancing_mm: 0,
            });
            s.end_s = s.end_s.max(t.end_s);
            match t.reason {
                TripReason::Pickup => {
                    s.start_s = s.start_s.min(t.start_s);
                    s.pickup_mm += t.distance_mm();
                }
                TripReason::Ride => {
                    s.ride_mm += t.distance_mm();
                    s.orders_served += 1;
                }
                TripReason::Rebalancing => s.rebalancing_mm += t.distance_mm(),
            }
        }
        map.into_values().filter(|s| s.start_s.is_finite()).collect()
    }
}

/// Replays `logbook` with orders dispatched to their recorded vehicles.
pub fn run_simulation(config: &ScenarioConfig, logbook: &SyntheticLogbook, graph: &RoadGraph) -> Result<SimOutput, SimError> {
    let ids: Vec<String> = logbook.vehicles.iter().map(|v| v.vehicle_id.clone()).collect();
    run_simulation_with(config, logbook, graph, &mut LogbookDispatcher::new(&ids))
}

/// Runs the event loop until every order is resolved and every vehicle is
/// stationary. Times in the output are seconds after local midnight of the
/// earliest order.
pub fn run_simulation_with(
    config: &ScenarioConfig,
    logbook: &SyntheticLogbook,
    graph: &RoadGraph,
    dispatcher: &mut dyn Dispatcher,
) -> Result<SimOutput, SimError> {
    config.validate()?;
    let snap = |p: LatLon| graph.nearest_node(p).map_err(|_| SimError::EmptyGraph);
    let pob_node = snap(config.pob_location)?;
    let mut hotspot_nodes = HashMap::new();
    if let Some(set) = &config.hotspots {
        for h in &set.hotspots {
            hotspot_nodes.insert(h.id, snap(h.location)?);
        }
    }

    let ids: Vec<String> = logbook.vehicles.iter().map(|v| v.vehicle_id.clone()).collect();
    let mut raw: Vec<(&RideOrder, usize, u32)> = Vec::new();
    for (vi, v) in logbook.vehicles.iter().enumerate() {
        for (k, s) in v.shifts.iter().enumerate() {
            raw.extend(s.rides.iter().map(|r| (r, vi, k as u32)));
        }
    }
    let Some(first) = raw.iter().map(|r| r.0.order_time).min() else {
        return Ok(SimOutput {
            origin: crate::logbook::parse_timestamp("1970-01-01T00:00:00Z").expect("literal"),
            trips: Vec::new(),
            orders: Vec::new(),
            shifts: Vec::new(),
            trace: config.record_trace.then(Vec::new),
        });
    };
    let origin = local_midnight(&first);
    let mut snaps: HashMap<(u64, u64), NodeIx> = HashMap::new();
    let mut snap_cached = |p: LatLon| -> Result<NodeIx, SimError> {
        let key = (p.lat.to_bits(), p.lon.to_bits());
        if let Some(&n) = snaps.get(&key) {
            return Ok(n);
        }
        let n = snap(p)?;
        snaps.insert(key, n);
        Ok(n)
    };
    let mut orders = Vec::with_capacity(raw.len());
    for &(r, vi, shift) in &raw {
        orders.push(OrderRec {
            order: r,
            vehicle: vi,
            shift,
            pickup: snap_cached(r.pickup_location)?,
            dropoff: snap_cached(r.dropoff_location)?,
            order_s: secs(&r.order_time, &origin),
        });
    }
    let outcomes = orders
        .iter()
        .map(|o| OrderOutcome {
            order_id: o.order.order_id,
            vehicle_id: ids[o.vehicle].clone(),
            shift: o.shift,
            status: OrderStatus::Served,
            order_s: o.order_s,
            assigned_s: None,
            pickup_s: None,
            dropoff_s: None,
            logged_pickup: o.order.pickup_time,
            logged_dropoff: o.order.dropoff_time,
        })
        .collect();
    let veh = (0..ids.len())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            Vehicle {
                state: VehicleState::IdleAtPoB,
                at: Start::node(pob_node),
                trip: None,
                epoch: 0,
                pending: VecDeque::new(),
                current: None,
                last_order: None,
                rng,
            }
        })
        .collect();

    let mut eng = Engine {
        cfg: config,
        graph,
        orders,
        ids,
        veh,
        queue: EventQueue::new(),
        trips: Vec::new(),
        outcomes,
        pob_node,
        hotspot_nodes,
        reachable: HashMap::new(),
        trace: config.record_trace.then(Vec::new),
    };
    for (i, o) in eng.orders.iter().enumerate() {
        eng.queue
            .schedule(o.order_s, EventKind::OrderIssued, o.order.order_id, Some(i), 0);
    }

    let started = Instant::now();
    let mut processed: u64 = 0;
    while let Some(ev) = eng.queue.pop() {
        processed += 1;
        if processed.is_multiple_of(1024) && started.elapsed().as_secs_f64() > config.wall_clock_budget_s {
            return Err(SimError::Stuck {
                budget_s: config.wall_clock_budget_s,
                sim_time_s: ev.time,
                events: processed,
                queued: eng.queue.len(),
            });
        }
        let now = ev.time;
        let v = ev.subject as usize;
        if matches!(
            ev.kind,
            EventKind::VehicleArrived | EventKind::DwellComplete | EventKind::PassengerBoarded | EventKind::PassengerAlighted | EventKind::RebalanceDecision
        ) && ev.epoch != eng.veh[v].epoch
        {
            continue;
        }
        if let Some(t) = eng.trace.as_mut() {
            t.push(TraceEntry {
                time: now,
                kind: ev.kind,
                subject: ev.subject,
            });
        }
        match ev.kind {
            EventKind::OrderIssued => eng.on_order_issued(ev.order.expect("order event"), now, dispatcher)?,
            EventKind::AssignmentDelivered => eng.on_assignment(v, ev.order.expect("assignment"), now),
            EventKind::VehicleArrived => eng.on_arrived(v, now),
            EventKind::DwellComplete => eng.on_dwell_complete(v, now),
            EventKind::PassengerBoarded => eng.on_boarded(v, now),
            EventKind::PassengerAlighted => eng.on_alighted(v, now),
            EventKind::RebalanceDecision => eng.on_rebalance(v, now)?,
        }
    }

    let open: Vec<u64> = eng
        .outcomes
        .iter()
        .filter(|o| o.status == OrderStatus::Served && o.dropoff_s.is_none())
        .map(|o| o.order_id)
        .collect();
    if !open.is_empty() {
        return Err(SimError::Incomplete(open));
    }
    let shifts = eng.shift_summaries();
    Ok(SimOutput {
        origin,
        trips: eng.trips,
        orders: eng.outcomes,
        shifts,
        trace: eng.trace,
    })
}
