//! Ride orders: CSV I/O, shifts, follow-up classification, static mileage
//! analysis, synthetic logbooks and synthetic demand.

mod demand;
mod followup;
mod generate;
mod mileage;
mod shift;

pub use demand::{synthesize_demand, AnchorParams, DemandError, DemandParams, FollowUpParams, ShiftParams, SpatialMixture};
pub use followup::{classify_follow_up, FollowUpCategory, FollowUpCounts, FollowUpError};
pub use generate::{canonical_date, generate_logbook, GenerateError, SyntheticLogbook, VehicleSchedule};
pub use mileage::{static_mileage_report, MileageReport, MileageTotals, REFERENCE_SHARES};
pub use shift::{extract_shifts, filter_out_of_area, Shift, DEFAULT_MAX_GAP};

use crate::geo::LatLon;
use chrono::{DateTime, FixedOffset, SecondsFormat, Timelike};
use std::io::{Read, Write};
use std::path::Path;

/// Local wall-clock time with the UTC offset it was recorded in.
pub type Timestamp = DateTime<FixedOffset>;

/// One customer booking as recorded by the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RideOrder {
    pub order_id: u64,
    pub order_time: Timestamp,
    pub vehicle_id: String,
    /// Where the vehicle was when the driver accepted the order.
    pub accept_location: LatLon,
    pub pickup_time: Timestamp,
    pub pickup_location: LatLon,
    pub dropoff_time: Timestamp,
    pub dropoff_location: LatLon,
    /// Shift number within the vehicle's schedule, when the logbook is synthetic.
    pub shift: Option<u32>,
}

impl RideOrder {
    pub fn times_ordered(&self) -> bool {
        self.order_time <= self.pickup_time && self.pickup_time <= self.dropoff_time
    }

    pub fn coordinates_finite(&self) -> bool {
        self.accept_location.is_finite() && self.pickup_location.is_finite() && self.dropoff_location.is_finite()
    }
}

pub const REQUIRED_COLUMNS: [&str; 10] = [
    "order_time",
    "vehicle_id",
    "accept_lat",
    "accept_lon",
    "pickup_time",
    "pickup_lat",
    "pickup_lon",
    "dropoff_time",
    "dropoff_lat",
    "dropoff_lon",
];

#[derive(Debug, thiserror::Error)]
pub enum LogbookError {
    #[error("cannot read logbook: {0}")]
    Io(#[from] std::io::Error),
    #[error("logbook CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("logbook is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: malformed timestamp in `{column}`: {value:?}")]
    BadTimestamp {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: malformed number in `{column}`: {value:?}")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
}

/// A row that parsed but broke an order invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLogbook {
    pub orders: Vec<RideOrder>,
    pub rejected: Vec<RejectedRow>,
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let ts = DateTime::parse_from_rfc3339(s.trim()).ok()?;
    ts.with_nanosecond(0)
}

pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, false)
}

/// Reads a logbook CSV. Rows whose times are out of order or whose
/// coordinates are not finite are rejected (with their line numbers); the
/// rest are returned in file order. Without an `order_id` column, orders are
/// numbered by data-row position starting at 0.
pub fn read_logbook<R: Read>(reader: R) -> Result<ParsedLogbook, LogbookError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 10];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = col(name).ok_or(LogbookError::MissingColumn(name))?;
    }
    let id_col = col("order_id");
    let shift_col = col("shift_id");

    let mut out = ParsedLogbook::default();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row_no as u64 + 2, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let ts = |k: usize| {
            parse_timestamp(field(idx[k])).ok_or_else(|| LogbookError::BadTimestamp {
                line,
                column: REQUIRED_COLUMNS[k],
                value: field(idx[k]).to_string(),
            })
        };
        let num = |k: usize| {
            field(idx[k]).parse::<f64>().map_err(|_| LogbookError::BadNumber {
                line,
                column: REQUIRED_COLUMNS[k].to_string(),
                value: field(idx[k]).to_string(),
            })
        };
        let parse_opt_int = |c: Option<usize>, name: &str| -> Result<Option<u64>, LogbookError> {
            match c.map(field) {
                None | Some("") => Ok(None),
                Some(v) => v.parse().map(Some).map_err(|_| LogbookError::BadNumber {
                    line,
                    column: name.to_string(),
                    value: v.to_string(),
                }),
            }
        };
        let order = RideOrder {
            order_id: parse_opt_int(id_col, "order_id")?.unwrap_or(row_no as u64),
            order_time: ts(0)?,
            vehicle_id: field(idx[1]).to_string(),
            accept_location: LatLon::new(num(2)?, num(3)?),
            pickup_time: ts(4)?,
            pickup_location: LatLon::new(num(5)?, num(6)?),
            dropoff_time: ts(7)?,
            dropoff_location: LatLon::new(num(8)?, num(9)?),
            shift: parse_opt_int(shift_col, "shift_id")?.map(|s| s as u32),
        };
        if !order.times_ordered() {
            out.rejected.push(RejectedRow {
                line,
                reason: "times not ordered: order_time <= pickup_time <= dropoff_time".into(),
            });
        } else if !order.coordinates_finite() {
            out.rejected.push(RejectedRow {
                line,
                reason: "non-finite coordinate".into(),
            });
        } else {
            out.orders.push(order);
        }
    }
    Ok(out)
}

pub fn parse_logbook(path: impl AsRef<Path>) -> Result<ParsedLogbook, LogbookError> {
    read_logbook(std::fs::File::open(path)?)
}

/// Writes orders in the logbook CSV format, followed by the `order_id`
/// column and, when any order carries one, `shift_id`.
pub fn write_logbook<W: Write>(writer: W, orders: &[RideOrder]) -> Result<(), LogbookError> {
    let with_shift = orders.iter().any(|o| o.shift.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    header.push("order_id");
    if with_shift {
        header.push("shift_id");
    }
    w.write_record(&header)?;
    let coord = |v: f64| format!("{v:.6}");
    for o in orders {
        let mut rec = vec![
            format_timestamp(&o.order_time),
            o.vehicle_id.clone(),
            coord(o.accept_location.lat),
            coord(o.accept_location.lon),
            format_timestamp(&o.pickup_time),
            coord(o.pickup_location.lat),
            coord(o.pickup_location.lon),
            format_timestamp(&o.dropoff_time),
            coord(o.dropoff_location.lat),
            coord(o.dropoff_location.lon),
            o.order_id.to_string(),
        ];
        if with_shift {
            rec.push(o.shift.map(|s| s.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_logbook(path: impl AsRef<Path>, orders: &[RideOrder]) -> Result<(), LogbookError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_logbook(file, orders)
}

pub fn logbook_to_string(orders: &[RideOrder]) -> String {
    let mut buf = Vec::new();
    write_logbook(&mut buf, orders).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}
