//! Synthetic year of operator orders.
//!
//! Pick-ups are drawn from a spatial mixture: a set of tight Gaussian
//! "anchors" (stations, hotels, venues), a small blob around the place of
//! business, and a wide centre-weighted background. Shifts start at the
//! place of business and chain rides; between rides the follow-up order is
//! placed during the ride, during the return, or at the place of business
//! with weekday-dependent probabilities.

use super::{RideOrder, Timestamp};
use crate::geo::LatLon;
use crate::graph::MINI_BERLIN_CENTER;
use chrono::{Datelike, Duration, FixedOffset, NaiveDate, TimeZone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorParams {
    pub count: usize,
    /// Spread of anchor positions around the centre.
    pub spread_sigma_m: f64,
    /// Spread of pick-ups around their anchor.
    pub sigma_m: f64,
    pub min_separation_m: f64,
    /// Total probability mass shared evenly by the anchors.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMixture {
    pub center_weight: f64,
    pub center_sigma_m: f64,
    pub anchors: AnchorParams,
    pub pob_weight: f64,
    pub pob_sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowUpParams {
    /// Probability that the next order arrives during the ride, Monday first.
    pub during_ride: [f64; 7],
    /// Share of the remaining probability that goes to "during return"; the
    /// rest arrives with the vehicle back at the place of business.
    pub return_fraction: f64,
    pub pob_wait_mean_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    /// `(from_h, to_h, weight)` windows for shift starts.
    pub start_windows: Vec<(f64, f64, f64)>,
    pub duration_mean_s: f64,
    pub duration_sd_s: f64,
    pub duration_min_s: f64,
    pub duration_max_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    pub start_date: NaiveDate,
    pub days: u32,
    pub utc_offset_s: i32,
    /// Target orders per weekday, Monday first.
    pub daily_orders: [u32; 7],
    pub fleet_vehicles: u32,
    pub center: LatLon,
    pub pob: LatLon,
    /// Orders stay inside a square of this half-width around the centre.
    pub area_half_extent_m: f64,
    pub spatial: SpatialMixture,
    pub ride_median_m: f64,
    pub ride_sigma: f64,
    /// Each order's pick-up is the nearest of this many candidates to the
    /// vehicle, mimicking nearest-vehicle dispatch.
    pub dispatch_candidates: usize,
    pub follow_up: FollowUpParams,
    pub shift: ShiftParams,
    /// Straight-line to road distance factor for time estimates.
    pub detour_factor: f64,
    pub speed_mps: f64,
    pub dwell_s: f64,
    /// Probability that a drop-off lies at an out-of-town location.
    pub out_of_area_share: f64,
    pub out_of_area_location: LatLon,
}

impl Default for DemandParams {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            days: 365,
            utc_offset_s: 3600,
            daily_orders: [300, 220, 320, 340, 420, 480, 400],
            fleet_vehicles: 50,
            center: MINI_BERLIN_CENTER,
            pob: MINI_BERLIN_CENTER.offset_m(-1500.0, -750.0),
            area_half_extent_m: 7000.0,
            spatial: SpatialMixture {
                center_weight: 0.20,
                center_sigma_m: 4000.0,
                anchors: AnchorParams {
                    count: 59,
                    spread_sigma_m: 3500.0,
                    sigma_m: 150.0,
                    min_separation_m: 1000.0,
                    weight: 0.75,
                },
                pob_weight: 0.05,
                pob_sigma_m: 100.0,
            },
            ride_median_m: 4500.0,
            ride_sigma: 0.6,
            dispatch_candidates: 1,
            follow_up: FollowUpParams {
                during_ride: [0.33, 0.33, 0.31, 0.34, 0.44, 0.48, 0.47],
                return_fraction: 5.0 / 6.0,
                pob_wait_mean_s: 1200.0,
            },
            shift: ShiftParams {
                start_windows: vec![(5.5, 9.0, 0.35), (9.5, 14.0, 0.30), (14.5, 20.0, 0.35)],
                duration_mean_s: 4.5 * 3600.0,
                duration_sd_s: 3600.0,
                duration_min_s: 1.5 * 3600.0,
                duration_max_s: 8.0 * 3600.0,
            },
            detour_factor: 1.25,
            speed_mps: 8.5,
            dwell_s: 30.0,
            out_of_area_share: 0.0,
            out_of_area_location: MINI_BERLIN_CENTER.offset_m(-16_000.0, 9_000.0),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DemandError {
    #[error("invalid demand parameter: {0}")]
    InvalidParameter(String),
}

impl DemandParams {
    pub fn validate(&self) -> Result<(), DemandError> {
        let bad = |m: &str| Err(DemandError::InvalidParameter(m.to_string()));
        let sp = &self.spatial;
        let weights = [sp.center_weight, sp.anchors.weight, sp.pob_weight];
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("spatial weights must lie in [0, 1] and sum to 1");
        }
        if sp.anchors.weight > 0.0 && sp.anchors.count == 0 {
            return bad("anchor weight needs at least one anchor");
        }
        let positive = [
            sp.center_sigma_m,
            sp.anchors.spread_sigma_m,
            sp.anchors.sigma_m,
            sp.pob_sigma_m,
            self.ride_median_m,
            self.ride_sigma,
            self.detour_factor,
            self.speed_mps,
            self.area_half_extent_m,
            self.follow_up.pob_wait_mean_s,
            self.shift.duration_mean_s,
            self.shift.duration_min_s,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return bad("distances, speeds and durations must be positive");
        }
        if !(self.dwell_s >= 0.0 && self.shift.duration_sd_s >= 0.0 && self.shift.duration_max_s >= self.shift.duration_min_s) {
            return bad("dwell, duration spread and duration bounds");
        }
        let probs = self.follow_up.during_ride.iter().chain([&self.follow_up.return_fraction, &self.out_of_area_share]);
        if probs.into_iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        let w = &self.shift.start_windows;
        if w.is_empty() || w.iter().any(|&(a, b, x)| !(0.0 <= a && a < b && b <= 24.0 && x >= 0.0)) || w.iter().all(|x| x.2 == 0.0) {
            return bad("shift start windows");
        }
        if self.fleet_vehicles == 0 || self.days == 0 || self.dispatch_candidates == 0 {
            return bad("fleet and horizon must be non-empty");
        }
        Ok(())
    }
}

struct Generator<'a> {
    p: &'a DemandParams,
    rng: ChaCha8Rng,
    anchors: Vec<LatLon>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn round_loc(p: LatLon) -> LatLon {
    LatLon::new(round6(p.lat), round6(p.lon))
}

impl Generator<'_> {
    fn inside(&self, q: LatLon) -> bool {
        let c = self.p.center;
        let north = (q.lat - c.lat).to_radians() * crate::geo::EARTH_RADIUS_M;
        let east = (q.lon - c.lon).to_radians() * crate::geo::EARTH_RADIUS_M * c.lat.to_radians().cos();
        north.abs() <= self.p.area_half_extent_m && east.abs() <= self.p.area_half_extent_m
    }

    fn gauss_around(&mut self, c: LatLon, sigma: f64) -> LatLon {
        let n = Normal::new(0.0, sigma).expect("validated sigma");
        let (dn, de) = (n.sample(&mut self.rng), n.sample(&mut self.rng));
        c.offset_m(dn, de)
    }

    fn pickup(&mut self) -> LatLon {
        let sp = &self.p.spatial;
        for _ in 0..50 {
            let u: f64 = self.rng.random();
            let q = if u < sp.pob_weight {
                self.gauss_around(self.p.pob, sp.pob_sigma_m)
            } else if u < sp.pob_weight + sp.anchors.weight {
                let a = self.anchors[self.rng.random_range(0..self.anchors.len())];
                self.gauss_around(a, sp.anchors.sigma_m)
            } else {
                self.gauss_around(self.p.center, sp.center_sigma_m)
            };
            if self.inside(q) {
                return round_loc(q);
            }
        }
        self.p.center
    }

    fn dropoff(&mut self, from: LatLon) -> LatLon {
        if self.p.out_of_area_share > 0.0 && self.rng.random_bool(self.p.out_of_area_share) {
            return round_loc(self.p.out_of_area_location);
        }
        let len = LogNormal::new(self.p.ride_median_m.ln(), self.p.ride_sigma).expect("validated");
        for _ in 0..50 {
            let d: f64 = len.sample(&mut self.rng);
            let a = self.rng.random_range(0.0..std::f64::consts::TAU);
            let q = from.offset_m(d * a.cos(), d * a.sin());
            if self.inside(q) {
                return round_loc(q);
            }
        }
        round_loc(self.p.center)
    }

    fn travel_s(&self, a: LatLon, b: LatLon) -> f64 {
        (a.distance_m(&b) * self.p.detour_factor / self.p.speed_mps).ceil()
    }

    fn shift_start_s(&mut self) -> f64 {
        let w = &self.p.shift.start_windows;
        let total: f64 = w.iter().map(|x| x.2).sum();
        let mut u = self.rng.random_range(0.0..total);
        let mut pick = w[w.len() - 1];
        for &x in w {
            if u < x.2 {
                pick = x;
                break;
            }
            u -= x.2;
        }
        (self.rng.random_range(pick.0..pick.1) * 3600.0).floor()
    }

    fn shift_duration_s(&mut self) -> f64 {
        let s = &self.p.shift;
        let d = if s.duration_sd_s > 0.0 {
            Normal::new(s.duration_mean_s, s.duration_sd_s).expect("validated").sample(&mut self.rng)
        } else {
            s.duration_mean_s
        };
        d.clamp(s.duration_min_s, s.duration_max_s)
    }

    /// Rides of one shift as `(order, accept, pickup_t, pickup, dropoff_t, dropoff)`
    /// with times in seconds from the horizon start.
    fn shift(&mut self, start: f64, weekday: usize) -> Vec<(f64, LatLon, f64, LatLon, f64, LatLon)> {
        let end_target = start + self.shift_duration_s();
        let dwell = self.p.dwell_s;
        let pob = self.p.pob;
        let mut rides = Vec::new();
        let (mut order_t, mut accept) = (start, pob);
        // vehicle becomes free at (time, place)
        let mut free = (start, pob);
        loop {
            let approach_from = if order_t >= free.0 { accept } else { free.1 };
            let pick = (0..self.p.dispatch_candidates)
                .map(|_| self.pickup())
                .min_by(|a, b| a.distance_m(&approach_from).total_cmp(&b.distance_m(&approach_from)))
                .expect("at least one candidate");
            let depart = order_t.max(free.0 + if order_t < free.0 { dwell } else { 0.0 });
            let pickup_t = depart + self.travel_s(approach_from, pick) + dwell;
            let drop = self.dropoff(pick);
            let drop_t = pickup_t + self.travel_s(pick, drop);
            rides.push((order_t, accept, pickup_t, pick, drop_t, drop));
            free = (drop_t, drop);
            if drop_t >= end_target {
                break;
            }
            let f = &self.p.follow_up;
            let u: f64 = self.rng.random();
            let during_ride = f.during_ride[weekday];
            let ret = self.travel_s(drop, pob);
            if u < during_ride {
                let lo = order_t.max(pickup_t);
                order_t = self.rng.random_range(lo..=drop_t).floor().max(lo);
                let frac = if drop_t > pickup_t { ((order_t - pickup_t) / (drop_t - pickup_t)).clamp(0.0, 1.0) } else { 1.0 };
                accept = round_loc(pick.lerp(&drop, frac));
            } else if u < during_ride + (1.0 - during_ride) * f.return_fraction && ret >= 60.0 {
                let v = self.rng.random_range(0.05..0.95);
                order_t = drop_t + (v * ret).floor().max(1.0);
                accept = round_loc(drop.lerp(&pob, (order_t - drop_t) / ret));
            } else {
                let cap = (2.0 * 3600.0 - ret - 60.0).max(0.0);
                let wait = Exp::new(1.0 / f.pob_wait_mean_s).expect("validated").sample(&mut self.rng);
                order_t = drop_t + ret + wait.min(cap).floor();
                accept = pob;
            }
        }
        rides
    }
}

fn place_anchors(p: &DemandParams, rng: &mut ChaCha8Rng) -> Vec<LatLon> {
    let a = &p.spatial.anchors;
    let limit = p.area_half_extent_m - 500.0;
    let n = Normal::new(0.0, a.spread_sigma_m).expect("validated");
    let mut out: Vec<LatLon> = Vec::with_capacity(a.count);
    let mut tries = 0;
    while out.len() < a.count {
        let (dn, de): (f64, f64) = (n.sample(rng), n.sample(rng));
        tries += 1;
        if dn.abs() > limit || de.abs() > limit {
            continue;
        }
        let q = p.center.offset_m(dn, de);
        // relax separation if the area is crowded
        let sep = if tries > 100_000 { 0.0 } else { a.min_separation_m };
        if q.distance_m(&p.pob) >= sep && out.iter().all(|o| o.distance_m(&q) >= sep) {
            out.push(q);
        }
    }
    out
}

/// Generates a horizon of orders for a fleet of `fleet_vehicles` vehicles.
/// Orders are sorted by order time and numbered from 0; vehicle ids are
/// `F01`, `F02`, .... Identical parameters and seed give identical output.
pub fn synthesize_demand(params: &DemandParams, seed: u64) -> Result<Vec<RideOrder>, DemandError> {
    params.validate()?;
    let mut anchor_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11C_4052);
    let anchors = place_anchors(params, &mut anchor_rng);
    let mut g = Generator {
        p: params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        anchors,
    };
    let tz = FixedOffset::east_opt(params.utc_offset_s).ok_or_else(|| DemandError::InvalidParameter("utc offset".into()))?;
    let origin: Timestamp = tz
        .from_local_datetime(&params.start_date.and_hms_opt(0, 0, 0).unwrap())
        .single()
        .expect("fixed offsets are unambiguous");
    let at = |s: f64| origin + Duration::seconds(s as i64);

    let nv = params.fleet_vehicles as usize;
    let width = params.fleet_vehicles.to_string().len().max(2);
    let min_gap = 2.0 * 3600.0 + 1.0;
    let mut free_from = vec![f64::NEG_INFINITY; nv];
    let mut orders = Vec::new();

    for day in 0..params.days {
        let date = params.start_date + Duration::days(i64::from(day));
        let wd = date.weekday().num_days_from_monday() as usize;
        let target = params.daily_orders[wd] as usize;
        let mut shifts_today = vec![0u8; nv];
        let (mut made, mut attempts) = (0usize, 0usize);
        while made < target && attempts < 20 * target.max(1) {
            attempts += 1;
            let start = f64::from(day) * 86_400.0 + g.shift_start_s();
            let first = g.rng.random_range(0..nv);
            let Some(v) = (0..nv)
                .map(|k| (first + k) % nv)
                .find(|&v| shifts_today[v] < 3 && start - free_from[v] >= min_gap)
            else {
                continue;
            };
            let rides = g.shift(start, wd);
            shifts_today[v] += 1;
            free_from[v] = rides.iter().map(|r| r.4).fold(f64::NEG_INFINITY, f64::max);
            made += rides.len();
            let vid = format!("F{:0width$}", v + 1);
            for (ot, acc, pt, pl, dt, dl) in rides {
                orders.push(RideOrder {
                    order_id: 0,
                    order_time: at(ot),
                    vehicle_id: vid.clone(),
                    accept_location: acc,
                    pickup_time: at(pt),
                    pickup_location: pl,
                    dropoff_time: at(dt),
                    dropoff_location: dl,
                    shift: None,
                });
            }
        }
    }
    orders.sort_by(|a, b| a.order_time.cmp(&b.order_time).then_with(|| a.vehicle_id.cmp(&b.vehicle_id)));
    for (i, o) in orders.iter_mut().enumerate() {
        o.order_id = i as u64;
    }
    Ok(orders)
}
