mod common;

use chrono::{Duration, Weekday};
use common::fixtures::*;
use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
use ridehail::geo::{LatLon, Polygon};
use ridehail::graph::{fastest_path, SpeedProfile};
use ridehail::logbook::*;
use sha2::{Digest, Sha256};

const FIXTURE_500: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/logbook_500.csv");
const FIXTURE_500_SHA256: &str = "cf000cfadcfaadaa6fdd17d73327ea463e59906f9c1119b5e2421481269854d9";

const HEADER: &str = "order_time,vehicle_id,accept_lat,accept_lon,pickup_time,pickup_lat,pickup_lon,dropoff_time,dropoff_lat,dropoff_lon\n";

fn row(order: &str, pickup: &str, dropoff: &str) -> String {
    format!("{order},V1,52.5,13.4,{pickup},52.51,13.41,{dropoff},52.52,13.42\n")
}

#[test]
fn parses_valid_rows_and_rejects_unordered_ones() {
    let mut csv = HEADER.to_string();
    csv += &row("2023-01-04T08:00:00+01:00", "2023-01-04T08:05:00+01:00", "2023-01-04T08:20:00+01:00");
    csv += &row("2023-01-04T09:00:00+01:00", "2023-01-04T08:59:00+01:00", "2023-01-04T09:20:00+01:00");
    csv += &row("2023-01-04T10:00:00+01:00", "2023-01-04T10:00:00+01:00", "2023-01-04T10:20:00+01:00");
    csv += &row("2023-01-04T11:00:00Z", "2023-01-04T11:05:00Z", "2023-01-04T11:20:00Z");
    let p = read_logbook(csv.as_bytes()).unwrap();
    assert_eq!(p.orders.len(), 3);
    assert_eq!(p.rejected.len(), 1);
    assert_eq!(p.rejected[0].line, 3);
    assert!(p.orders.iter().all(RideOrder::times_ordered));
}

#[test]
fn missing_column_and_bad_timestamp_are_errors() {
    let csv = "order_time,vehicle_id\n2023-01-04T08:00:00+01:00,V1\n";
    assert!(matches!(read_logbook(csv.as_bytes()), Err(LogbookError::MissingColumn(_))));
    let csv = HEADER.to_string() + &row("yesterday", "2023-01-04T08:05:00+01:00", "2023-01-04T08:20:00+01:00");
    assert!(matches!(read_logbook(csv.as_bytes()), Err(LogbookError::BadTimestamp { .. })));
}

#[test]
fn fixture_of_500_rows_is_stable() {
    let bytes = std::fs::read(FIXTURE_500).unwrap();
    let parsed = read_logbook(&bytes[..]).unwrap();
    assert_eq!(parsed.orders.len(), 500);
    assert!(parsed.rejected.is_empty());
    // regenerated from its seed, the fixture is byte-identical
    let year = synthesize_demand(&DemandParams::default(), 2023).unwrap();
    assert_eq!(logbook_to_string(&year[..500]).as_bytes(), &bytes[..]);
    assert_eq!(logbook_to_string(&parsed.orders).as_bytes(), &bytes[..]);
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, FIXTURE_500_SHA256);
}

/// Rides of one vehicle separated by the given pauses (drop-off to next order).
fn rides_with_gaps(gaps_min: &[i64]) -> Vec<RideOrder> {
    let g = line_graph(2);
    let mut out = Vec::new();
    let mut t = 0;
    for i in 0..=gaps_min.len() {
        let o = order_at(i as u64, t, node_pos(&g, 0), node_pos(&g, 1));
        t = (o.dropoff_time - o.order_time).num_seconds() + t + gaps_min.get(i).copied().unwrap_or(0) * 60;
        out.push(o);
    }
    out
}

#[test]
fn shift_splitting_examples() {
    let shifts = extract_shifts(&rides_with_gaps(&[30, 45]), DEFAULT_MAX_GAP);
    assert_eq!(shifts.len(), 1);
    assert_eq!(shifts[0].rides.len(), 3);

    let shifts = extract_shifts(&rides_with_gaps(&[60, 121]), DEFAULT_MAX_GAP);
    assert_eq!(shifts.iter().map(|s| s.rides.len()).collect::<Vec<_>>(), vec![2, 1]);

    assert_eq!(extract_shifts(&rides_with_gaps(&[120]), DEFAULT_MAX_GAP).len(), 1);
    assert!(extract_shifts(&[], DEFAULT_MAX_GAP).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn shifts_partition_each_vehicle(gaps in proptest::collection::vec(0i64..300, 0..30)) {
        let rides = rides_with_gaps(&gaps);
        let shifts = extract_shifts(&rides, DEFAULT_MAX_GAP);
        let back: Vec<u64> = shifts.iter().flat_map(|s| s.rides.iter().map(|r| r.order_id)).collect();
        prop_assert_eq!(back, rides.iter().map(|r| r.order_id).collect::<Vec<_>>());
        let long = gaps.iter().filter(|&&g| g > 120).count();
        prop_assert_eq!(shifts.len(), long + 1);
        for s in &shifts {
            for w in s.rides.windows(2) {
                prop_assert!(w[1].order_time - w[0].dropoff_time <= DEFAULT_MAX_GAP);
            }
        }
    }
}

/// Crossing-number test on raw coordinates.
fn ray_cast(poly: &[LatLon], p: LatLon) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn area() -> Polygon {
    let c = DemandParams::default().center;
    Polygon::rectangle(c.offset_m(-7100.0, -7100.0), c.offset_m(7100.0, 7100.0))
}

#[test]
fn out_of_area_rides_dismiss_whole_shifts() {
    let g = line_graph(3);
    let inside = rides_with_gaps(&[10, 10, 10]);
    let poly = Polygon::rectangle(node_pos(&g, 0).offset_m(-100.0, -100.0), node_pos(&g, 2).offset_m(100.0, 100.0));
    let (kept, dismissed) = filter_out_of_area(extract_shifts(&inside, DEFAULT_MAX_GAP), &poly);
    assert_eq!((kept.len(), dismissed.len()), (1, 0));

    let mut one_out = inside.clone();
    one_out[2].dropoff_location = node_pos(&g, 2).offset_m(5000.0, 0.0);
    let (kept, dismissed) = filter_out_of_area(extract_shifts(&one_out, DEFAULT_MAX_GAP), &poly);
    assert_eq!((kept.len(), dismissed.len()), (0, 1));
    assert_eq!(dismissed[0].rides.len(), 4);
}

#[test]
fn out_of_area_matches_ray_casting() {
    let params = DemandParams {
        days: 28,
        out_of_area_share: 0.05,
        ..DemandParams::default()
    };
    let shifts = extract_shifts(&synthesize_demand(&params, 4).unwrap(), DEFAULT_MAX_GAP);
    let poly = area();
    let outside = |s: &Shift| s.rides.iter().any(|r| !ray_cast(poly.vertices(), r.pickup_location) || !ray_cast(poly.vertices(), r.dropoff_location));
    let want: Vec<bool> = shifts.iter().map(outside).collect();
    let n = shifts.len();
    let (kept, dismissed) = filter_out_of_area(shifts, &poly);
    assert_eq!(kept.len() + dismissed.len(), n);
    assert_eq!(dismissed.len(), want.iter().filter(|&&w| w).count());
    assert!(!dismissed.is_empty() && !kept.is_empty());
    assert!(kept.iter().all(|s| !outside(s)));
    assert!(dismissed.iter().all(outside));
}

#[test]
fn follow_up_examples() {
    // second order arrives during the first ride
    let mut rides = rides_with_gaps(&[10]);
    rides[1].order_time = rides[0].dropoff_time - Duration::minutes(2);
    let shift = &extract_shifts(&rides, DEFAULT_MAX_GAP)[0];
    assert_eq!(classify_follow_up(shift, &[None, None]).unwrap(), vec![FollowUpCategory::DuringRide, FollowUpCategory::None]);

    // 10 min after drop-off while a 20 min return is under way
    let rides = rides_with_gaps(&[10]);
    let shift = &extract_shifts(&rides, DEFAULT_MAX_GAP)[0];
    let back = rides[0].dropoff_time + Duration::minutes(20);
    assert_eq!(classify_follow_up(shift, &[Some(back), None]).unwrap()[0], FollowUpCategory::DuringReturn);
    let back = rides[0].dropoff_time + Duration::minutes(5);
    assert_eq!(classify_follow_up(shift, &[Some(back), None]).unwrap()[0], FollowUpCategory::AtPoB);
    assert!(classify_follow_up(shift, &[None, None]).is_err());
}

#[test]
fn wednesday_fixture_follow_up_shares() {
    let lb = generate_logbook(source_shifts(), Weekday::Wed, 50, 0).unwrap();
    let shifts: Vec<Shift> = lb.vehicles.iter().flat_map(|v| v.shifts.clone()).collect();
    // independent count of rides whose successor was ordered before drop-off
    let (mut during, mut with_next) = (0usize, 0usize);
    for s in &shifts {
        for w in s.rides.windows(2) {
            with_next += 1;
            during += (w[1].order_time <= w[0].dropoff_time) as usize;
        }
    }
    let report = static_mileage_report(&shifts, mini_berlin(), default_pob(), &SpeedProfile::uniform());
    assert_eq!(report.follow_ups.during_ride as usize, during);
    assert_eq!(report.follow_ups.with_follow_up() as usize, with_next);
    let share = during as f64 / with_next as f64;
    assert!((share - 0.31).abs() <= 0.05, "{share}");
}

#[test]
fn static_mileage_single_ride() {
    let g = line_graph(5);
    let mut o = order_at(0, 0, node_pos(&g, 2), node_pos(&g, 4));
    o.accept_location = node_pos(&g, 1);
    let shifts = extract_shifts(&[o], DEFAULT_MAX_GAP);
    let r = static_mileage_report(&shifts, &g, node_pos(&g, 0), &SpeedProfile::uniform());
    let leg = |a: u64, b: u64| fastest_path(&g, g.node_by_id(a).unwrap(), g.node_by_id(b).unwrap(), 0.0, &SpeedProfile::uniform()).unwrap().length_mm;
    assert_eq!(r.total.pickup_mm, leg(1, 2));
    assert_eq!(r.total.ride_mm, leg(2, 4));
    assert_eq!(r.total.return_mm, leg(4, 0));
    let s = r.total.shares().unwrap();
    let t = (leg(1, 2) + leg(2, 4) + leg(4, 0)) as f64;
    assert_eq!(s, [leg(1, 2) as f64 / t, leg(2, 4) as f64 / t, leg(4, 0) as f64 / t]);
}

#[test]
fn chained_rides_have_no_return_mileage() {
    let g = line_graph(5);
    let mut rides = rides_with_gaps(&[0, 0, 0]);
    for i in 1..rides.len() {
        rides[i].order_time = rides[i - 1].dropoff_time - Duration::minutes(1);
    }
    // the last ride goes home to the PoB itself
    let n = rides.len();
    rides[n - 1].dropoff_location = node_pos(&g, 0);
    let r = static_mileage_report(&extract_shifts(&rides, DEFAULT_MAX_GAP), &g, node_pos(&g, 0), &SpeedProfile::uniform());
    assert_eq!(r.total.return_mm, 0);
    assert_eq!(r.total.shares().unwrap()[2], 0.0);
}

#[test]
fn report_shares_sum_to_one() {
    let lb = generate_logbook(source_shifts(), Weekday::Sat, 20, 3).unwrap();
    let shifts: Vec<Shift> = lb.vehicles.iter().flat_map(|v| v.shifts.clone()).collect();
    let r = static_mileage_report(&shifts, mini_berlin(), default_pob(), &SpeedProfile::uniform());
    let s = r.total.shares().unwrap();
    assert!(s.iter().all(|x| *x >= 0.0));
    assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    assert!(r.flagged.is_empty());
}

fn check_invariants(lb: &SyntheticLogbook) {
    assert!(lb.vehicles.len() <= lb.fleet_size);
    for v in &lb.vehicles {
        assert!(!v.shifts.is_empty() && v.shifts.len() <= 3, "{} has {} shifts", v.vehicle_id, v.shifts.len());
        for (i, a) in v.shifts.iter().enumerate() {
            for b in &v.shifts[i + 1..] {
                assert!(b.start() - a.end() >= Duration::hours(2) || a.start() - b.end() >= Duration::hours(2));
            }
            assert!(a.rides.iter().all(|r| r.vehicle_id == v.vehicle_id));
            for w in a.rides.windows(2) {
                assert!(w[1].order_time - w[0].dropoff_time <= Duration::hours(2));
            }
        }
    }
}

#[test]
fn single_source_shift_lands_on_vehicle_one() {
    let src = extract_shifts(&rides_with_gaps(&[5, 5]), DEFAULT_MAX_GAP);
    let lb = generate_logbook(&src, Weekday::Wed, 1, 9).unwrap();
    assert_eq!(lb.vehicles.len(), 1);
    assert_eq!(lb.vehicles[0].shifts.len(), 1);
    assert_eq!(lb.order_count(), 3);
    assert!(matches!(generate_logbook(&src, Weekday::Sun, 1, 9), Err(GenerateError::NoSourceRides(Weekday::Sun))));
}

#[test]
fn generation_is_deterministic_and_bounded() {
    let a = generate_logbook(source_shifts(), Weekday::Wed, 50, 17).unwrap();
    let b = generate_logbook(source_shifts(), Weekday::Wed, 50, 17).unwrap();
    assert_eq!(logbook_to_string(&a.orders()), logbook_to_string(&b.orders()));
    check_invariants(&a);
    assert_eq!(a.vehicles.len(), 50);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, .. ProptestConfig::default() })]

    #[test]
    fn generated_logbooks_satisfy_invariants(seed in proptest::prelude::any::<u64>(), fleet in 1usize..60) {
        let day = [Weekday::Wed, Weekday::Sat, Weekday::Mon][(seed % 3) as usize];
        let lb = generate_logbook(source_shifts(), day, fleet, seed).unwrap();
        check_invariants(&lb);
        prop_assert!(lb.orders().iter().all(|o| o.times_ordered()));
    }
}

#[test]
fn demand_examples() {
    let zero = DemandParams {
        daily_orders: [0; 7],
        days: 14,
        ..DemandParams::default()
    };
    assert!(synthesize_demand(&zero, 1).unwrap().is_empty());
    let p = DemandParams {
        days: 14,
        ..DemandParams::default()
    };
    assert_eq!(synthesize_demand(&p, 5).unwrap(), synthesize_demand(&p, 5).unwrap());
}

#[test]
fn demand_year_calibration() {
    let p = DemandParams::default();
    let year = synthesize_demand(&p, 2023).unwrap();
    let shifts = extract_shifts(&year, DEFAULT_MAX_GAP);
    let (mut during, mut with_next) = (0usize, 0usize);
    for s in &shifts {
        for w in s.rides.windows(2) {
            with_next += 1;
            during += (w[1].order_time <= w[0].dropoff_time) as usize;
        }
    }
    let share = during as f64 / with_next as f64;
    assert!((share - 0.40).abs() <= 0.05, "during-ride share {share}");
    let central = year.iter().filter(|o| o.pickup_location.distance_m(&p.center) <= 5000.0).count() as f64 / year.len() as f64;
    assert!((central - 0.60).abs() <= 0.05, "central share {central}");
}
