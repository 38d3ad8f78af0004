use crate::logbook::RideOrder;
use crate::sim::{OrderStatus, SimOutput};
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;

pub const DEFAULT_THRESHOLD_S: f64 = 200.0;
pub const HISTOGRAM_BIN_S: f64 = 50.0;

/// Median of a sample; mean of the middle pair for even sizes.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Share of the sample with |x| strictly below `threshold`.
pub fn share_within(xs: &[f64], threshold: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().filter(|x| x.abs() < threshold).count() as f64 / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffSummary {
    pub n: usize,
    pub median_s: Option<f64>,
    pub share_within: f64,
}

impl DiffSummary {
    pub fn of(diffs: &[f64], threshold: f64) -> Self {
        Self {
            n: diffs.len(),
            median_s: median(diffs),
            share_within: share_within(diffs, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub threshold_s: f64,
    pub matched: Vec<u64>,
    /// Order ids present on only one side (or unserved), excluded.
    pub unmatched: Vec<u64>,
    /// Simulated minus logged ride travel time, per matched order.
    pub travel_time_diffs: Vec<f64>,
    /// Simulated minus logged pick-up time.
    pub pickup_diffs: Vec<f64>,
    pub travel_time: DiffSummary,
    pub pickup: DiffSummary,
}

impl ValidationReport {
    /// Builds a report straight from difference samples.
    pub fn from_diffs(travel_time_diffs: Vec<f64>, pickup_diffs: Vec<f64>, threshold_s: f64) -> Self {
        Self {
            threshold_s,
            matched: Vec::new(),
            unmatched: Vec::new(),
            travel_time: DiffSummary::of(&travel_time_diffs, threshold_s),
            pickup: DiffSummary::of(&pickup_diffs, threshold_s),
            travel_time_diffs,
            pickup_diffs,
        }
    }

    /// Fixed-width histogram rows `(bin_low_s, travel_count, pickup_count)`;
    /// bins are [low, low + 50).
    pub fn histogram(&self) -> Vec<(f64, usize, usize)> {
        let all = self.travel_time_diffs.iter().chain(&self.pickup_diffs);
        let bin = |x: f64| (x / HISTOGRAM_BIN_S).floor() as i64;
        let (lo, hi) = all.fold((i64::MAX, i64::MIN), |(lo, hi), &x| (lo.min(bin(x)), hi.max(bin(x))));
        if lo > hi {
            return Vec::new();
        }
        let mut rows: Vec<(f64, usize, usize)> = (lo..=hi).map(|b| (b as f64 * HISTOGRAM_BIN_S, 0, 0)).collect();
        for &x in &self.travel_time_diffs {
            rows[(bin(x) - lo) as usize].1 += 1;
        }
        for &x in &self.pickup_diffs {
            rows[(bin(x) - lo) as usize].2 += 1;
        }
        rows
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["bin_low_s", "bin_high_s", "travel_time_count", "pickup_count"])?;
        for (low, t, p) in self.histogram() {
            w.write_record([format!("{low:.0}"), format!("{:.0}", low + HISTOGRAM_BIN_S), t.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compares simulated pick-up and ride times with the logged ones, joined on
/// order id.
pub fn validation_metrics(out: &SimOutput, reference: &[RideOrder], threshold_s: f64) -> ValidationReport {
    let secs = |t: &crate::logbook::Timestamp| (*t - out.origin).num_milliseconds() as f64 / 1000.0;
    let sim: HashMap<u64, _> = out
        .orders
        .iter()
        .filter(|o| o.status == OrderStatus::Served)
        .filter_map(|o| Some((o.order_id, (o.pickup_s?, o.dropoff_s?))))
        .collect();
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    let (mut travel, mut pickup) = (Vec::new(), Vec::new());
    for r in reference {
        match sim.get(&r.order_id) {
            Some(&(p, d)) => {
                matched.push(r.order_id);
                let logged_travel = (r.dropoff_time - r.pickup_time).num_milliseconds() as f64 / 1000.0;
                travel.push((d - p) - logged_travel);
                pickup.push(p - secs(&r.pickup_time));
            }
            None => unmatched.push(r.order_id),
        }
    }
    let known: std::collections::HashSet<u64> = reference.iter().map(|r| r.order_id).collect();
    let mut extra: Vec<u64> = out.orders.iter().map(|o| o.order_id).filter(|id| !known.contains(id)).collect();
    extra.sort_unstable();
    unmatched.extend(extra);
    if !unmatched.is_empty() {
        log::warn!("{} orders could not be matched and are excluded", unmatched.len());
    }
    ValidationReport {
        matched,
        unmatched,
        ..ValidationReport::from_diffs(travel, pickup, threshold_s)
    }
}
