use super::{RideOrder, Shift, DEFAULT_MAX_GAP};
use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_SHIFTS_PER_VEHICLE: usize = 3;

/// Fixed calendar week (Mon 2023-01-02 .. Sun 2023-01-08) that synthetic
/// logbooks are rebased onto, so shifts drawn from different weeks line up.
pub fn canonical_date(day: Weekday) -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 1, 2).unwrap() + Duration::days(i64::from(day.num_days_from_monday()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSchedule {
    pub vehicle_id: String,
    /// Sorted by start; pairwise at least two hours apart.
    pub shifts: Vec<Shift>,
}

/// One synthetic operating day for a whole fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLogbook {
    pub day_of_week: Weekday,
    pub fleet_size: usize,
    pub seed: u64,
    pub vehicles: Vec<VehicleSchedule>,
    pub warnings: Vec<String>,
}

impl SyntheticLogbook {
    /// All orders, vehicle by vehicle and shift by shift, with `shift` set.
    pub fn orders(&self) -> Vec<RideOrder> {
        self.vehicles
            .iter()
            .flat_map(|v| v.shifts.iter().flat_map(|s| s.rides.iter().cloned()))
            .collect()
    }

    pub fn shift_count(&self) -> usize {
        self.vehicles.iter().map(|v| v.shifts.len()).sum()
    }

    pub fn order_count(&self) -> usize {
        self.vehicles.iter().flat_map(|v| &v.shifts).map(|s| s.rides.len()).sum()
    }

    /// Rebuilds schedules from orders carrying vehicle and shift numbers (as
    /// written by [`super::write_logbook`]). Orders without a shift number are
    /// split with the usual two-hour rule.
    pub fn from_orders(orders: &[RideOrder], day_of_week: Weekday) -> Self {
        let mut vehicles: Vec<VehicleSchedule> = Vec::new();
        let shifts = if orders.iter().all(|o| o.shift.is_some()) {
            let mut map: std::collections::BTreeMap<(&str, u32), Vec<RideOrder>> = Default::default();
            for o in orders {
                map.entry((&o.vehicle_id, o.shift.unwrap())).or_default().push(o.clone());
            }
            map.into_iter()
                .map(|((v, _), mut rides)| {
                    rides.sort_by_key(|r| r.order_time);
                    Shift {
                        vehicle_id: v.to_string(),
                        rides,
                    }
                })
                .collect()
        } else {
            super::extract_shifts(orders, DEFAULT_MAX_GAP)
        };
        for s in shifts {
            match vehicles.last_mut() {
                Some(v) if v.vehicle_id == s.vehicle_id => v.shifts.push(s),
                _ => vehicles.push(VehicleSchedule {
                    vehicle_id: s.vehicle_id.clone(),
                    shifts: vec![s],
                }),
            }
        }
        for v in &mut vehicles {
            v.shifts.sort_by_key(|s| s.start());
        }
        Self {
            day_of_week,
            fleet_size: vehicles.len(),
            seed: 0,
            vehicles,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenerateError {
    #[error("fleet size must be positive")]
    EmptyFleet,
    #[error("no source ride falls on a {0}")]
    NoSourceRides(Weekday),
}

fn fits(schedule: &[Shift], s: &Shift) -> bool {
    schedule.len() < MAX_SHIFTS_PER_VEHICLE && schedule.iter().all(|x| x.separated_from(s, DEFAULT_MAX_GAP))
}

/// Builds a fleet day by repeatedly drawing a random source ride on `day`,
/// taking its whole shift, and assigning it to the current vehicle if that
/// vehicle has fewer than three shifts and the new one keeps two hours from
/// each of them; otherwise the next vehicle is opened. Generation stops when
/// a shift does not fit the last of `fleet_size` vehicles. Each source shift
/// is used at most once; running out of shifts yields a partial logbook with
/// a warning.
pub fn generate_logbook(
    source: &[Shift],
    day: Weekday,
    fleet_size: usize,
    seed: u64,
) -> Result<SyntheticLogbook, GenerateError> {
    if fleet_size == 0 {
        return Err(GenerateError::EmptyFleet);
    }
    let mut pool: Vec<(usize, usize)> = source
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            s.rides
                .iter()
                .enumerate()
                .filter(|(_, r)| r.order_time.weekday() == day)
                .map(move |(ri, _)| (si, ri))
        })
        .collect();
    if pool.is_empty() {
        return Err(GenerateError::NoSourceRides(day));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = canonical_date(day);
    let mut vehicles: Vec<Vec<Shift>> = Vec::new();
    let mut warnings = Vec::new();
    loop {
        if pool.is_empty() {
            if vehicles.len() < fleet_size {
                warnings.push(format!(
                    "source shifts exhausted: {} of {} vehicles populated",
                    vehicles.len(),
                    fleet_size
                ));
            }
            break;
        }
        let (si, ri) = pool[rng.random_range(0..pool.len())];
        pool.retain(|&(s, _)| s != si);

        let src = &source[si];
        let offset = target - src.rides[ri].order_time.date_naive();
        let shift = Shift {
            vehicle_id: src.vehicle_id.clone(),
            rides: src
                .rides
                .iter()
                .map(|r| RideOrder {
                    order_time: r.order_time + offset,
                    pickup_time: r.pickup_time + offset,
                    dropoff_time: r.dropoff_time + offset,
                    ..r.clone()
                })
                .collect(),
        };
        let open = vehicles.len();
        match vehicles.last_mut() {
            Some(cur) if fits(cur, &shift) => cur.push(shift),
            _ if open == fleet_size => break,
            _ => vehicles.push(vec![shift]),
        }
    }

    let width = fleet_size.to_string().len().max(2);
    let mut next_order = 0u64;
    let vehicles = vehicles
        .into_iter()
        .enumerate()
        .map(|(vi, mut shifts)| {
            let vehicle_id = format!("V{:0width$}", vi + 1);
            shifts.sort_by_key(|s| s.start());
            for (k, s) in shifts.iter_mut().enumerate() {
                s.vehicle_id = vehicle_id.clone();
                for r in &mut s.rides {
                    r.vehicle_id = vehicle_id.clone();
                    r.order_id = next_order;
                    r.shift = Some(k as u32);
                    next_order += 1;
                }
            }
            VehicleSchedule { vehicle_id, shifts }
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SyntheticLogbook {
        day_of_week: day,
        fleet_size,
        seed,
        vehicles,
        warnings,
    })
}
