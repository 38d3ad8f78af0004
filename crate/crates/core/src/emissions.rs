//! Speed-binned per-kilometre emission accounting over trip logs.

use crate::graph::RoadGraph;
use crate::sim::TripLog;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Read;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

const DEFAULT_TABLE: &str = include_str!("../data/emission_factors.csv");

pub const DEFAULT_VEHICLE_CLASS: &str = "PHEV Euro 6d (gasoline)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pollutant {
    CO2,
    CO,
    NOx,
    PMx,
}

impl Pollutant {
    pub const ALL: [Pollutant; 4] = [Pollutant::CO2, Pollutant::CO, Pollutant::NOx, Pollutant::PMx];

    pub fn name(self) -> &'static str {
        match self {
            Pollutant::CO2 => "CO2",
            Pollutant::CO => "CO",
            Pollutant::NOx => "NOx",
            Pollutant::PMx => "PMx",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pollutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pollutant {
    type Err = EmissionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pollutant::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EmissionError::UnknownPollutant(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmissionError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unknown pollutant `{0}`")]
    UnknownPollutant(String),
    #[error("{pollutant}: {reason}")]
    BadTable { pollutant: Pollutant, reason: String },
    #[error("table has no bins for {0}")]
    MissingPollutant(Pollutant),
}

/// Mean-speed interval (low, high] in km/h with its factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedBin {
    pub low_kmh: f64,
    pub high_kmh: f64,
    pub grams_per_km: f64,
}

#[derive(Debug, Deserialize)]
struct Row {
    pollutant: String,
    bin_low_kmh: f64,
    bin_high_kmh: f64,
    grams_per_km: f64,
}

/// Grams per pollutant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Grams(pub [f64; 4]);

impl Grams {
    pub fn get(&self, p: Pollutant) -> f64 {
        self.0[p.index()]
    }

    pub fn scaled(self, k: f64) -> Grams {
        Grams(self.0.map(|g| g * k))
    }
}

impl Add for Grams {
    type Output = Grams;
    fn add(mut self, o: Grams) -> Grams {
        self += o;
        self
    }
}

impl AddAssign for Grams {
    fn add_assign(&mut self, o: Grams) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

/// Factor lookup result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub grams_per_km: f64,
    /// The speed lay outside the table and the nearest bin was used.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionFactorTable {
    pub vehicle_class: String,
    bins: [Vec<SpeedBin>; 4],
}

impl EmissionFactorTable {
    /// Validates and builds a table; every pollutant needs sorted,
    /// non-overlapping, gap-free bins starting at 0 km/h.
    pub fn new(vehicle_class: impl Into<String>, bins: [Vec<SpeedBin>; 4]) -> Result<Self, EmissionError> {
        let mut bins = bins;
        for p in Pollutant::ALL {
            let b = &mut bins[p.index()];
            if b.is_empty() {
                return Err(EmissionError::MissingPollutant(p));
            }
            b.sort_by(|x, y| x.low_kmh.total_cmp(&y.low_kmh));
            let bad = |reason: String| EmissionError::BadTable { pollutant: p, reason };
            if b[0].low_kmh != 0.0 {
                return Err(bad(format!("first bin starts at {} km/h, not 0", b[0].low_kmh)));
            }
            for (i, x) in b.iter().enumerate() {
                if !(x.high_kmh > x.low_kmh) {
                    return Err(bad(format!("empty bin ({}, {}]", x.low_kmh, x.high_kmh)));
                }
                if !(x.grams_per_km >= 0.0 && x.grams_per_km.is_finite()) {
                    return Err(bad(format!("factor {} is not a finite non-negative number", x.grams_per_km)));
                }
                if i > 0 && x.low_kmh != b[i - 1].high_kmh {
                    return Err(bad(format!("bins ({}, {}] and ({}, {}] leave a gap or overlap", b[i - 1].low_kmh, b[i - 1].high_kmh, x.low_kmh, x.high_kmh)));
                }
            }
        }
        Ok(Self {
            vehicle_class: vehicle_class.into(),
            bins,
        })
    }

    /// Reads `pollutant,bin_low_kmh,bin_high_kmh,grams_per_km`; `#` starts a comment line.
    pub fn from_csv<R: Read>(vehicle_class: impl Into<String>, r: R) -> Result<Self, EmissionError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let mut bins: [Vec<SpeedBin>; 4] = Default::default();
        for row in rdr.deserialize() {
            let row: Row = row?;
            let p: Pollutant = row.pollutant.parse()?;
            bins[p.index()].push(SpeedBin {
                low_kmh: row.bin_low_kmh,
                high_kmh: row.bin_high_kmh,
                grams_per_km: row.grams_per_km,
            });
        }
        Self::new(vehicle_class, bins)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmissionError> {
        let path = path.as_ref();
        let class = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::from_csv(class, std::fs::File::open(path)?)
    }

    /// One flat factor per pollutant over (0, 250] km/h.
    pub fn flat(grams_per_km: [f64; 4]) -> Self {
        let bins = grams_per_km.map(|g| {
            vec![SpeedBin {
                low_kmh: 0.0,
                high_kmh: 250.0,
                grams_per_km: g,
            }]
        });
        Self::new("flat", bins).expect("flat table is valid")
    }

    pub fn bins(&self, p: Pollutant) -> &[SpeedBin] {
        &self.bins[p.index()]
    }

    /// Factor for mean speed `kmh`; speeds outside the covered range use the
    /// nearest bin.
    pub fn factor(&self, p: Pollutant, kmh: f64) -> Factor {
        let b = self.bins(p);
        let (first, last) = (b[0], b[b.len() - 1]);
        if !(kmh > first.low_kmh) {
            return Factor { grams_per_km: first.grams_per_km, clamped: true };
        }
        if !(kmh <= last.high_kmh) {
            return Factor { grams_per_km: last.grams_per_km, clamped: true };
        }
        // first bin whose upper edge reaches the speed
        let i = b.partition_point(|x| x.high_kmh < kmh);
        Factor {
            grams_per_km: b[i].grams_per_km,
            clamped: false,
        }
    }

    pub fn min_factor(&self, p: Pollutant) -> f64 {
        self.bins(p).iter().map(|b| b.grams_per_km).fold(f64::INFINITY, f64::min)
    }

    pub fn max_factor(&self, p: Pollutant) -> f64 {
        self.bins(p).iter().map(|b| b.grams_per_km).fold(f64::NEG_INFINITY, f64::max)
    }

    fn grams(&self, distance_km: f64, kmh: f64) -> (Grams, bool) {
        let mut g = Grams::default();
        let mut clamped = false;
        for p in Pollutant::ALL {
            let f = self.factor(p, kmh);
            clamped |= f.clamped;
            g.0[p.index()] = f.grams_per_km * distance_km;
        }
        (g, clamped)
    }
}

impl Default for EmissionFactorTable {
    fn default() -> Self {
        default_factor_table()
    }
}

/// The bundled plug-in hybrid table (see `data/emission_factors.csv`).
pub fn default_factor_table() -> EmissionFactorTable {
    EmissionFactorTable::from_csv(DEFAULT_VEHICLE_CLASS, DEFAULT_TABLE.as_bytes()).expect("bundled table is valid")
}

/// How a trip's speed is determined for the bin lookup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedResolution {
    /// Whole-trip mean speed.
    #[default]
    PerTrip,
    /// Mean speed on each traversed edge.
    PerEdge,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TripEmissions {
    pub grams: Grams,
    /// Number of speed lookups that fell outside the table.
    pub clamped: usize,
}

/// Grams for one trip from its mean speed; stationary trips emit nothing.
pub fn compute_trip_emissions(trip: &TripLog, table: &EmissionFactorTable) -> TripEmissions {
    let km = trip.distance_m() / 1000.0;
    if trip.distance_mm() == 0 {
        return TripEmissions::default();
    }
    let d = trip.duration_s();
    let kmh = if d > 0.0 { km / (d / 3600.0) } else { f64::INFINITY };
    let (grams, clamped) = table.grams(km, kmh);
    TripEmissions {
        grams,
        clamped: clamped as usize,
    }
}

/// Grams for one trip, looking up each edge's own mean speed.
pub fn compute_trip_emissions_per_edge(trip: &TripLog, graph: &RoadGraph, table: &EmissionFactorTable) -> TripEmissions {
    let mut out = TripEmissions::default();
    for s in trip.route.edge_spans(graph) {
        if s.covered_mm == 0 {
            continue;
        }
        let km = s.covered_mm as f64 / 1e6;
        let kmh = if s.drive_s > 0.0 { km / (s.drive_s / 3600.0) } else { f64::INFINITY };
        let (g, c) = table.grams(km, kmh);
        out.grams += g;
        out.clamped += c as usize;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmissionTotals {
    pub grams: Grams,
    pub distance_km: f64,
    pub clamped: usize,
}

impl EmissionTotals {
    /// Distance-weighted mean factor, 0 for zero distance.
    pub fn mean_g_per_km(&self, p: Pollutant) -> f64 {
        if self.distance_km > 0.0 {
            self.grams.get(p) / self.distance_km
        } else {
            0.0
        }
    }

    pub fn merge(&mut self, o: &EmissionTotals) {
        self.grams += o.grams;
        self.distance_km += o.distance_km;
        self.clamped += o.clamped;
    }
}

pub fn aggregate_emissions(trips: &[TripLog], table: &EmissionFactorTable) -> EmissionTotals {
    let mut t = EmissionTotals::default();
    for trip in trips {
        let e = compute_trip_emissions(trip, table);
        t.grams += e.grams;
        t.clamped += e.clamped;
        t.distance_km += trip.distance_m() / 1000.0;
    }
    if t.clamped > 0 {
        log::warn!("{} trip speeds outside the emission table were clamped", t.clamped);
    }
    t
}

/// As [`aggregate_emissions`] with a choice of speed resolution; per-edge
/// needs the graph the routes refer to.
pub fn aggregate_emissions_with(
    trips: &[TripLog],
    graph: &RoadGraph,
    table: &EmissionFactorTable,
    resolution: SpeedResolution,
) -> EmissionTotals {
    match resolution {
        SpeedResolution::PerTrip => aggregate_emissions(trips, table),
        SpeedResolution::PerEdge => {
            let mut t = EmissionTotals::default();
            for trip in trips {
                let e = compute_trip_emissions_per_edge(trip, graph, table);
                t.grams += e.grams;
                t.clamped += e.clamped;
                t.distance_km += trip.distance_m() / 1000.0;
            }
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_lookups() {
        let t = default_factor_table();
        assert_eq!(t.factor(Pollutant::CO2, 30.0).grams_per_km, 103.0);
        assert_eq!(t.factor(Pollutant::CO2, 15.0).grams_per_km, 112.0);
        assert_eq!(t.factor(Pollutant::CO2, 15.0001).grams_per_km, 103.0);
        assert_eq!(t.factor(Pollutant::CO, 30.0).grams_per_km, 0.40);
        assert!(t.factor(Pollutant::CO2, 300.0).clamped);
        assert_eq!(t.factor(Pollutant::CO2, 300.0).grams_per_km, 125.0);
        assert!(t.factor(Pollutant::CO2, 0.0).clamped);
    }

    #[test]
    fn rejects_gaps_and_negatives() {
        let bin = |l, h, g| SpeedBin { low_kmh: l, high_kmh: h, grams_per_km: g };
        let ok = vec![bin(0.0, 250.0, 1.0)];
        let gap = [vec![bin(0.0, 10.0, 1.0), bin(20.0, 30.0, 1.0)], ok.clone(), ok.clone(), ok.clone()];
        assert!(matches!(EmissionFactorTable::new("x", gap), Err(EmissionError::BadTable { .. })));
        let neg = [vec![bin(0.0, 10.0, -1.0)], ok.clone(), ok.clone(), ok.clone()];
        assert!(EmissionFactorTable::new("x", neg).is_err());
        let missing = [ok.clone(), ok.clone(), ok, Vec::new()];
        assert!(matches!(EmissionFactorTable::new("x", missing), Err(EmissionError::MissingPollutant(Pollutant::PMx))));
        assert!("SO2".parse::<Pollutant>().is_err());
        assert_eq!("nox".parse::<Pollutant>().unwrap(), Pollutant::NOx);
    }
}
