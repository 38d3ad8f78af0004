use crate::geo::LatLon;
use crate::graph::{RoadGraph, Route};
use crate::logbook::{format_timestamp, Timestamp};
use chrono::Duration;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TripReason {
    Pickup,
    Ride,
    Rebalancing,
}

impl TripReason {
    pub fn name(self) -> &'static str {
        match self {
            TripReason::Pickup => "Pickup",
            TripReason::Ride => "Ride",
            TripReason::Rebalancing => "Rebalancing",
        }
    }
}

/// One driven leg.
#[derive(Debug, Clone, PartialEq)]
pub struct TripLog {
    pub vehicle_id: String,
    /// Shift number within the vehicle's schedule.
    pub shift: u32,
    pub reason: TripReason,
    pub order_id: Option<u64>,
    /// Seconds after the run origin.
    pub start_s: f64,
    pub end_s: f64,
    pub start: LatLon,
    pub end: LatLon,
    pub route: Route,
}

impl TripLog {
    pub fn distance_mm(&self) -> u64 {
        self.route.length_mm
    }

    pub fn distance_m(&self) -> f64 {
        self.route.length_m()
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Average speed over the leg, `None` for stationary legs.
    pub fn mean_speed_kmh(&self) -> Option<f64> {
        let d = self.duration_s();
        (self.route.length_mm > 0 && d > 0.0).then(|| self.distance_m() / d * 3.6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderStatus {
    Served,
    Unroutable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderOutcome {
    pub order_id: u64,
    pub vehicle_id: String,
    pub shift: u32,
    pub status: OrderStatus,
    pub order_s: f64,
    pub assigned_s: Option<f64>,
    /// Departure from the pick-up stop with the passenger on board.
    pub pickup_s: Option<f64>,
    /// Arrival at the drop-off stop.
    pub dropoff_s: Option<f64>,
    pub logged_pickup: Timestamp,
    pub logged_dropoff: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSummary {
    pub vehicle_id: String,
    pub shift: u32,
    pub orders_served: usize,
    /// First pick-up departure.
    pub start_s: f64,
    /// Last arrival of any leg of the shift, final rebalancing included.
    pub end_s: f64,
    pub pickup_mm: u64,
    pub ride_mm: u64,
    pub rebalancing_mm: u64,
}

impl ShiftSummary {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub time: f64,
    pub kind: super::EventKind,
    pub subject: u64,
}

/// Mileage by trip reason in millimetres.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimMileage {
    pub pickup_mm: u64,
    pub ride_mm: u64,
    pub rebalancing_mm: u64,
    pub total_mm: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Local midnight the second counts refer to.
    pub origin: Timestamp,
    pub trips: Vec<TripLog>,
    pub orders: Vec<OrderOutcome>,
    pub shifts: Vec<ShiftSummary>,
    pub trace: Option<Vec<TraceEntry>>,
}

pub(crate) fn fmt_mm(mm: u64) -> String {
    format!("{}.{:03}", mm / 1000, mm % 1000)
}

impl SimOutput {
    pub fn timestamp(&self, s: f64) -> Timestamp {
        self.origin + Duration::milliseconds((s * 1000.0).round() as i64)
    }

    /// Sums by reason; `total_mm` is summed independently over all trips.
    pub fn mileage(&self) -> SimMileage {
        let mut m = SimMileage::default();
        for t in &self.trips {
            let d = t.distance_mm();
            match t.reason {
                TripReason::Pickup => m.pickup_mm += d,
                TripReason::Ride => m.ride_mm += d,
                TripReason::Rebalancing => m.rebalancing_mm += d,
            }
        }
        m.total_mm = self.trips.iter().map(TripLog::distance_mm).sum();
        m
    }

    pub fn served_orders(&self) -> usize {
        self.orders.iter().filter(|o| o.status == OrderStatus::Served).count()
    }

    pub fn write_trips<W: Write>(&self, graph: &RoadGraph, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "vehicle_id", "shift", "reason", "order_id", "start_time", "end_time", "start_lat", "start_lon",
            "end_lat", "end_lon", "distance_m", "duration_s", "route",
        ])?;
        for t in &self.trips {
            let route: Vec<String> = t.route.edges.iter().map(|&e| graph.edge(e).id.to_string()).collect();
            w.write_record([
                t.vehicle_id.clone(),
                t.shift.to_string(),
                t.reason.name().to_string(),
                t.order_id.map(|o| o.to_string()).unwrap_or_default(),
                format_timestamp(&self.timestamp(t.start_s)),
                format_timestamp(&self.timestamp(t.end_s)),
                format!("{:.6}", t.start.lat),
                format!("{:.6}", t.start.lon),
                format!("{:.6}", t.end.lat),
                format!("{:.6}", t.end.lon),
                fmt_mm(t.distance_mm()),
                format!("{:.3}", t.duration_s()),
                route.join(" "),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_orders<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "order_id", "vehicle_id", "shift", "status", "order_time", "sim_pickup_time", "sim_dropoff_time",
            "log_pickup_time", "log_dropoff_time", "pickup_diff_s", "dropoff_diff_s",
        ])?;
        for o in &self.orders {
            let ts = |s: Option<f64>| s.map(|s| format_timestamp(&self.timestamp(s))).unwrap_or_default();
            let diff = |s: Option<f64>, logged: &Timestamp| {
                s.map(|s| format!("{:.3}", s - (*logged - self.origin).num_milliseconds() as f64 / 1000.0))
                    .unwrap_or_default()
            };
            w.write_record([
                o.order_id.to_string(),
                o.vehicle_id.clone(),
                o.shift.to_string(),
                format!("{:?}", o.status),
                format_timestamp(&self.timestamp(o.order_s)),
                ts(o.pickup_s),
                ts(o.dropoff_s),
                format_timestamp(&o.logged_pickup),
                format_timestamp(&o.logged_dropoff),
                diff(o.pickup_s, &o.logged_pickup),
                diff(o.dropoff_s, &o.logged_dropoff),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_shifts<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "vehicle_id", "shift", "orders_served", "start_time", "end_time", "duration_s", "pickup_m", "ride_m",
            "rebalancing_m",
        ])?;
        for s in &self.shifts {
            w.write_record([
                s.vehicle_id.clone(),
                s.shift.to_string(),
                s.orders_served.to_string(),
                format_timestamp(&self.timestamp(s.start_s)),
                format_timestamp(&self.timestamp(s.end_s)),
                format!("{:.3}", s.duration_s()),
                fmt_mm(s.pickup_mm),
                fmt_mm(s.ride_mm),
                fmt_mm(s.rebalancing_mm),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `trips.csv`, `orders.csv` and `shifts.csv` into `dir`.
    pub fn write_dir(&self, graph: &RoadGraph, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let open = |n: &str| std::fs::File::create(dir.join(n)).map(std::io::BufWriter::new);
        self.write_trips(graph, open("trips.csv")?)?;
        self.write_orders(open("orders.csv")?)?;
        self.write_shifts(open("shifts.csv")?)?;
        if let Some(trace) = &self.trace {
            let mut f = open("trace.csv")?;
            writeln!(f, "time_s,kind,subject")?;
            for e in trace {
                writeln!(f, "{:.3},{:?},{}", e.time, e.kind, e.subject)?;
            }
        }
        Ok(())
    }
}
