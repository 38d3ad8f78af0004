use super::AnalyticsError;
use crate::emissions::{aggregate_emissions, EmissionFactorTable, EmissionTotals, Pollutant};
use crate::sim::{SimMileage, SimOutput, Strategy};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;

/// KPIs of a single simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunKpis {
    pub day: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub mileage: SimMileage,
    pub emissions: EmissionTotals,
    pub shifts: usize,
    pub shift_duration_s: f64,
    pub orders_served: usize,
    pub orders_unroutable: usize,
}

impl RunKpis {
    pub fn from_output(day: impl Into<String>, strategy: Strategy, seed: u64, out: &SimOutput, table: &EmissionFactorTable) -> Self {
        let served = out.served_orders();
        Self {
            day: day.into(),
            strategy,
            seed,
            mileage: out.mileage(),
            emissions: aggregate_emissions(&out.trips, table),
            shifts: out.shifts.len(),
            shift_duration_s: out.shifts.iter().map(|s| s.duration_s()).sum(),
            orders_served: served,
            orders_unroutable: out.orders.len() - served,
        }
    }
}

/// Rows of the KPI table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KpiMetric {
    TotalMileage,
    PickupMileage,
    RideMileage,
    RebalancingMileage,
    MileagePerShift,
    ShiftDuration,
    Shifts,
    Co2,
    Co,
    NOx,
    PMx,
}

impl KpiMetric {
    pub const ALL: [KpiMetric; 11] = [
        KpiMetric::TotalMileage,
        KpiMetric::PickupMileage,
        KpiMetric::RideMileage,
        KpiMetric::RebalancingMileage,
        KpiMetric::MileagePerShift,
        KpiMetric::ShiftDuration,
        KpiMetric::Shifts,
        KpiMetric::Co2,
        KpiMetric::Co,
        KpiMetric::NOx,
        KpiMetric::PMx,
    ];

    pub fn label(self) -> &'static str {
        match self {
            KpiMetric::TotalMileage => "Total Mileage",
            KpiMetric::PickupMileage => "Pickup Mileage",
            KpiMetric::RideMileage => "Ride Mileage",
            KpiMetric::RebalancingMileage => "Rebalancing Mileage",
            KpiMetric::MileagePerShift => "Mileage per Shift",
            KpiMetric::ShiftDuration => "Shift Duration",
            KpiMetric::Shifts => "Shifts",
            KpiMetric::Co2 => "Total CO2 Emission",
            KpiMetric::Co => "Total CO Emission",
            KpiMetric::NOx => "Total NOx Emission",
            KpiMetric::PMx => "Total PMx Emission",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            KpiMetric::TotalMileage | KpiMetric::PickupMileage | KpiMetric::RideMileage | KpiMetric::RebalancingMileage => "km",
            KpiMetric::MileagePerShift => "km",
            KpiMetric::ShiftDuration => "h",
            KpiMetric::Shifts => "",
            KpiMetric::Co2 => "kg",
            KpiMetric::Co | KpiMetric::NOx | KpiMetric::PMx => "g",
        }
    }

    fn text_decimals(self) -> usize {
        match self {
            KpiMetric::ShiftDuration => 2,
            KpiMetric::NOx | KpiMetric::PMx | KpiMetric::Shifts => 1,
            _ => 0,
        }
    }
}

/// One (day, strategy) cell: sums over its runs, reported as run means.
/// Mileage sums are integer millimetres so the mileage identity holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiCell {
    pub day: String,
    pub strategy: Strategy,
    pub runs: usize,
    pub pickup_mm: u64,
    pub ride_mm: u64,
    pub rebalancing_mm: u64,
    pub total_mm: u64,
    pub grams: [f64; 4],
    pub shifts: usize,
    pub shift_duration_s: f64,
}

impl KpiCell {
    fn mean_km(&self, mm: u64) -> f64 {
        mm as f64 / 1e6 / self.runs as f64
    }

    pub fn value(&self, m: KpiMetric) -> f64 {
        let per_run = |x: f64| x / self.runs as f64;
        match m {
            KpiMetric::TotalMileage => self.mean_km(self.total_mm),
            KpiMetric::PickupMileage => self.mean_km(self.pickup_mm),
            KpiMetric::RideMileage => self.mean_km(self.ride_mm),
            KpiMetric::RebalancingMileage => self.mean_km(self.rebalancing_mm),
            KpiMetric::MileagePerShift if self.shifts == 0 => 0.0,
            KpiMetric::MileagePerShift => self.total_mm as f64 / 1e6 / self.shifts as f64,
            KpiMetric::ShiftDuration if self.shifts == 0 => 0.0,
            KpiMetric::ShiftDuration => self.shift_duration_s / self.shifts as f64 / 3600.0,
            KpiMetric::Shifts => per_run(self.shifts as f64),
            KpiMetric::Co2 => per_run(self.grams[Pollutant::CO2 as usize]) / 1000.0,
            KpiMetric::Co => per_run(self.grams[Pollutant::CO as usize]),
            KpiMetric::NOx => per_run(self.grams[Pollutant::NOx as usize]),
            KpiMetric::PMx => per_run(self.grams[Pollutant::PMx as usize]),
        }
    }

    /// Fleet-average CO2 per driven km.
    pub fn co2_g_per_km(&self) -> f64 {
        if self.total_mm == 0 {
            0.0
        } else {
            self.grams[Pollutant::CO2 as usize] / (self.total_mm as f64 / 1e6)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiTable {
    pub baseline: Strategy,
    /// Days in order of first appearance, strategies in canonical order.
    pub cells: Vec<KpiCell>,
}

/// `(x − base) / base`; `None` when the baseline is zero and `x` is not.
pub fn relative_delta(x: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        (x == 0.0).then_some(0.0)
    } else {
        Some((x - base) / base)
    }
}

/// Whole-percent delta: "−24%", "+5%", "0%", "~0%" for a nonzero change
/// that rounds to zero, "n/a" when undefined.
pub fn format_delta(d: Option<f64>) -> String {
    match d {
        None => "n/a".into(),
        Some(d) if d == 0.0 => "0%".into(),
        Some(d) => {
            let pct = (d * 100.0).round() as i64;
            match pct {
                0 => "~0%".into(),
                p if p < 0 => format!("\u{2212}{}%", -p),
                p => format!("+{p}%"),
            }
        }
    }
}

pub fn build_kpi_table(runs: &[RunKpis], baseline: Strategy) -> Result<KpiTable, AnalyticsError> {
    if runs.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut days: Vec<&str> = Vec::new();
    for r in runs {
        if !days.contains(&r.day.as_str()) {
            days.push(&r.day);
        }
    }
    let mut cells = Vec::new();
    for day in &days {
        if !runs.iter().any(|r| r.day == *day && r.strategy == baseline) {
            return Err(AnalyticsError::MissingBaseline {
                day: day.to_string(),
                baseline,
            });
        }
        for s in Strategy::ALL {
            // fixed summation order keeps the float sums reproducible
            let mut members: Vec<&RunKpis> = runs.iter().filter(|r| r.day == *day && r.strategy == s).collect();
            if members.is_empty() {
                continue;
            }
            members.sort_by_key(|r| r.seed);
            let mut c = KpiCell {
                day: day.to_string(),
                strategy: s,
                runs: members.len(),
                pickup_mm: 0,
                ride_mm: 0,
                rebalancing_mm: 0,
                total_mm: 0,
                grams: [0.0; 4],
                shifts: 0,
                shift_duration_s: 0.0,
            };
            for r in members {
                c.pickup_mm += r.mileage.pickup_mm;
                c.ride_mm += r.mileage.ride_mm;
                c.rebalancing_mm += r.mileage.rebalancing_mm;
                c.total_mm += r.mileage.total_mm;
                for p in Pollutant::ALL {
                    c.grams[p as usize] += r.emissions.grams.get(p);
                }
                c.shifts += r.shifts;
                c.shift_duration_s += r.shift_duration_s;
            }
            cells.push(c);
        }
    }
    Ok(KpiTable { baseline, cells })
}

impl KpiTable {
    pub fn cell(&self, day: &str, s: Strategy) -> Option<&KpiCell> {
        self.cells.iter().find(|c| c.day == day && c.strategy == s)
    }

    /// Relative change of `metric` against the same day's baseline cell.
    pub fn delta(&self, cell: &KpiCell, metric: KpiMetric) -> Option<f64> {
        let base = self.cell(&cell.day, self.baseline)?;
        relative_delta(cell.value(metric), base.value(metric))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["metric".to_string(), "unit".to_string()];
        for c in &self.cells {
            header.push(format!("{} {}", c.day, c.strategy));
            header.push(format!("{} {} delta", c.day, c.strategy));
        }
        w.write_record(&header)?;
        for m in KpiMetric::ALL {
            let mut row = vec![m.label().to_string(), m.unit().to_string()];
            for c in &self.cells {
                row.push(format!("{:.3}", c.value(m)));
                row.push(if c.strategy == self.baseline {
                    String::new()
                } else {
                    self.delta(c, m).map(|d| format!("{d:.6}")).unwrap_or_default()
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut b = Vec::new();
        self.write_csv(&mut b).expect("writing to memory");
        String::from_utf8(b).expect("csv is utf-8")
    }

    /// Aligned plain-text rendering with deltas in brackets.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["".to_string(), "".to_string()];
        header.extend(self.cells.iter().map(|c| format!("{} {}", c.day, c.strategy)));
        grid.push(header);
        for m in KpiMetric::ALL {
            let mut row = vec![m.label().to_string(), if m.unit().is_empty() { String::new() } else { format!("[{}]", m.unit()) }];
            for c in &self.cells {
                let v = format!("{:.*}", m.text_decimals(), c.value(m));
                row.push(if c.strategy == self.baseline {
                    v
                } else {
                    format!("{v} ({})", format_delta(self.delta(c, m)))
                });
            }
            grid.push(row);
        }
        let cols = grid[0].len();
        let width: Vec<usize> = (0..cols).map(|i| grid.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
        let mut s = String::new();
        for row in &grid {
            let mut line = String::new();
            for (i, cell) in row.iter().enumerate() {
                let pad = width[i] - cell.chars().count();
                if i < 2 {
                    let _ = write!(line, "{cell}{}  ", " ".repeat(pad));
                } else {
                    let _ = write!(line, "{}{cell}  ", " ".repeat(pad));
                }
            }
            s.push_str(line.trim_end());
            s.push('\n');
        }
        s
    }
}
