use super::{AnalyticsError, KpiMetric, KpiTable};
use crate::sim::Strategy;
use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const DEFAULT_C_Y: f64 = 1.17;
pub const DEFAULT_CO2_G_PER_KM: f64 = 102.35;
pub const YEAR_DAYS: f64 = 365.0;

/// One logged day: mean per-vehicle mileages by reason, deployed fleet and
/// utilisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub pickup_km: f64,
    pub ride_km: f64,
    pub rebalancing_km: f64,
    pub fleet_size: f64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationInputs {
    pub days: Vec<DayRecord>,
    /// Scales the covered days up to a full year.
    pub c_y: f64,
    pub co2_g_per_km: f64,
}

impl ExtrapolationInputs {
    pub fn new(days: Vec<DayRecord>) -> Self {
        Self {
            days,
            c_y: DEFAULT_C_Y,
            co2_g_per_km: DEFAULT_CO2_G_PER_KM,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for d in &self.days {
            let bad = |what: &str| Err(AnalyticsError::InvalidInput(format!("{}: {what}", d.date)));
            if !(0.0..=1.0).contains(&d.utilization) {
                return bad("utilization outside [0, 1]");
            }
            if !(d.pickup_km >= 0.0 && d.ride_km >= 0.0 && d.rebalancing_km >= 0.0 && d.fleet_size >= 0.0) {
                return bad("negative mileage or fleet size");
            }
        }
        if !(self.c_y >= 0.0 && self.co2_g_per_km >= 0.0) {
            return Err(AnalyticsError::InvalidInput("negative scaling factor or emission rate".into()));
        }
        Ok(())
    }

    pub fn read_days_csv<R: Read>(r: R) -> Result<Vec<DayRecord>, AnalyticsError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        Ok(rdr.deserialize().collect::<Result<_, _>>()?)
    }

    pub fn write_days_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for d in &self.days {
            w.serialize(d)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relative change per mileage reason, e.g. −0.24.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReasonChange {
    pub pickup: f64,
    pub ride: f64,
    pub rebalancing: f64,
}

/// Changes for one strategy: Monday–Thursday take `weekday`, Friday–Sunday
/// `weekend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAdjustment {
    pub name: String,
    pub weekday: ReasonChange,
    pub weekend: ReasonChange,
}

impl StrategyAdjustment {
    pub fn unchanged(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weekday: ReasonChange::default(),
            weekend: ReasonChange::default(),
        }
    }

    fn for_day(&self, d: NaiveDate) -> ReasonChange {
        match d.weekday() {
            Weekday::Mon | Weekday::Tue | Weekday::Wed | Weekday::Thu => self.weekday,
            _ => self.weekend,
        }
    }
}

/// Derives adjustments from simulated deltas: pick-up and rebalancing
/// change as simulated, ride mileage is held constant.
pub fn adjustments_from_kpi(table: &KpiTable, weekday_day: &str, weekend_day: &str) -> Result<Vec<StrategyAdjustment>, AnalyticsError> {
    let change = |day: &str, s: Strategy| -> Result<ReasonChange, AnalyticsError> {
        let cell = table
            .cell(day, s)
            .ok_or_else(|| AnalyticsError::InvalidInput(format!("no {s} cell for day `{day}`")))?;
        Ok(ReasonChange {
            pickup: table.delta(cell, KpiMetric::PickupMileage).unwrap_or(0.0),
            ride: 0.0,
            rebalancing: table.delta(cell, KpiMetric::RebalancingMileage).unwrap_or(-1.0),
        })
    };
    let mut order = vec![table.baseline];
    order.extend(Strategy::ALL.into_iter().filter(|s| *s != table.baseline));
    order
        .into_iter()
        .map(|s| {
            Ok(StrategyAdjustment {
                name: s.to_string(),
                weekday: change(weekday_day, s)?,
                weekend: change(weekend_day, s)?,
            })
        })
        .collect()
}

/// Annual mileage by reason in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualMileage {
    pub name: String,
    pub pickup_km: f64,
    pub ride_km: f64,
    pub rebalancing_km: f64,
}

/// `S_i = C_y · Σ_d ρ_d · n_d · s_i(d)` with the strategy's changes applied.
pub fn annual_mileage(inputs: &ExtrapolationInputs, adj: &StrategyAdjustment) -> AnnualMileage {
    let (mut p, mut r, mut b) = (0.0, 0.0, 0.0);
    for d in &inputs.days {
        let c = adj.for_day(d.date);
        let vehicles = d.utilization * d.fleet_size;
        p += vehicles * d.pickup_km * (1.0 + c.pickup);
        r += vehicles * d.ride_km * (1.0 + c.ride);
        b += vehicles * d.rebalancing_km * (1.0 + c.rebalancing);
    }
    AnnualMileage {
        name: adj.name.clone(),
        pickup_km: inputs.c_y * p,
        ride_km: inputs.c_y * r,
        rebalancing_km: inputs.c_y * b,
    }
}

/// One strategy column of the extrapolation. Deltas are savings against the
/// baseline (baseline minus this strategy).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationRow {
    pub name: String,
    pub s_pickup_km: f64,
    pub s_ride_km: f64,
    pub s_rebalancing_km: f64,
    pub s_km: f64,
    pub delta_s_km: f64,
    pub daily_s_km: f64,
    pub delta_daily_s_km: f64,
    pub e_co2_kg: f64,
    pub delta_e_co2_kg: f64,
}

/// Totals, daily means over 365 days and CO2 for each strategy; the first
/// entry is the baseline.
pub fn extrapolation_table(totals: &[AnnualMileage], co2_g_per_km: f64) -> Vec<ExtrapolationRow> {
    let Some(base) = totals.first() else {
        return Vec::new();
    };
    let sum = |t: &AnnualMileage| t.pickup_km + t.ride_km + t.rebalancing_km;
    let base_s = sum(base);
    let kg = co2_g_per_km / 1000.0;
    totals
        .iter()
        .map(|t| {
            let s = sum(t);
            let delta = base_s - s;
            ExtrapolationRow {
                name: t.name.clone(),
                s_pickup_km: t.pickup_km,
                s_ride_km: t.ride_km,
                s_rebalancing_km: t.rebalancing_km,
                s_km: s,
                delta_s_km: delta,
                daily_s_km: s / YEAR_DAYS,
                delta_daily_s_km: delta / YEAR_DAYS,
                e_co2_kg: s * kg,
                delta_e_co2_kg: delta * kg,
            }
        })
        .collect()
}

pub fn extrapolate_annual(inputs: &ExtrapolationInputs, adjustments: &[StrategyAdjustment]) -> Result<Vec<ExtrapolationRow>, AnalyticsError> {
    inputs.validate()?;
    let totals: Vec<AnnualMileage> = adjustments.iter().map(|a| annual_mileage(inputs, a)).collect();
    for t in &totals {
        if t.pickup_km < 0.0 || t.ride_km < 0.0 || t.rebalancing_km < 0.0 {
            return Err(AnalyticsError::InvalidInput(format!("adjustments for {} drive a mileage negative", t.name)));
        }
    }
    Ok(extrapolation_table(&totals, inputs.co2_g_per_km))
}

/// Reads `strategy,pickup_km,ride_km,rebalancing_km` rows.
pub fn read_annual_totals<R: Read>(r: R) -> Result<Vec<AnnualMileage>, AnalyticsError> {
    #[derive(Deserialize)]
    struct Row {
        strategy: String,
        pickup_km: f64,
        ride_km: f64,
        rebalancing_km: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    rdr.deserialize()
        .map(|row| {
            let row: Row = row?;
            Ok(AnnualMileage {
                name: row.strategy,
                pickup_km: row.pickup_km,
                ride_km: row.ride_km,
                rebalancing_km: row.rebalancing_km,
            })
        })
        .collect()
}

/// Quantities as rows, strategies as columns, rounded to whole units.
pub fn write_extrapolation_csv<W: Write>(rows: &[ExtrapolationRow], w: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let mut header = vec!["quantity".to_string(), "unit".to_string()];
    header.extend(rows.iter().map(|r| r.name.clone()));
    w.write_record(&header)?;
    let lines: [(&str, &str, fn(&ExtrapolationRow) -> f64); 9] = [
        ("S_p", "km", |r| r.s_pickup_km),
        ("S_r", "km", |r| r.s_ride_km),
        ("S_b", "km", |r| r.s_rebalancing_km),
        ("S", "km", |r| r.s_km),
        ("delta_S", "km", |r| r.delta_s_km),
        ("S_daily", "km", |r| r.daily_s_km),
        ("delta_S_daily", "km", |r| r.delta_daily_s_km),
        ("E_CO2", "kg", |r| r.e_co2_kg),
        ("delta_E_CO2", "kg", |r| r.delta_e_co2_kg),
    ];
    for (name, unit, get) in lines {
        let mut rec = vec![name.to_string(), unit.to_string()];
        rec.extend(rows.iter().map(|r| format!("{:.0}", get(r))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Ten months of plausible day records: fleet size stepping monthly from
/// 4321 to 4486, utilisation uniform in [0.2, 0.9].
pub fn sample_inputs(seed: u64) -> ExtrapolationInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2023, 10, 31).expect("valid date");
    let days = start
        .iter_days()
        .take_while(|d| *d <= end)
        .map(|date| {
            let month = date.month0() as f64;
            let weekend = matches!(date.weekday(), Weekday::Fri | Weekday::Sat | Weekday::Sun);
            let busy = if weekend { 1.15 } else { 1.0 };
            DayRecord {
                date,
                pickup_km: rng.random_range(30.0..45.0) * busy,
                ride_km: rng.random_range(95.0..130.0) * busy,
                rebalancing_km: rng.random_range(50.0..75.0),
                fleet_size: (4321.0 + (4486.0 - 4321.0) * month / 9.0).round(),
                utilization: rng.random_range(0.2..=0.9),
            }
        })
        .collect();
    ExtrapolationInputs::new(days)
}
