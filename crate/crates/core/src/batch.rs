//! Experiment series: days × strategies × logbook variations, run in parallel.

use crate::analytics::{build_kpi_table, AnalyticsError, KpiTable, RunKpis};
use crate::emissions::EmissionFactorTable;
use crate::scenario::{day_name, Scenario, SOURCE_SEED};
use crate::sim::{ScenarioConfig, Strategy};
use chrono::Weekday;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSpec {
    pub day: Weekday,
    pub strategy: Strategy,
    /// Logbook variation and simulation seed.
    pub seed: u64,
}

impl RunSpec {
    /// Directory name, e.g. `wednesday_hotspot_3`.
    pub fn label(&self) -> String {
        format!("{}_{}_{}", day_name(self.day).to_lowercase(), self.strategy.name().to_lowercase(), self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub runs: Vec<RunSpec>,
    pub parallelism: usize,
    pub baseline: Strategy,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("plan has no runs")]
    EmptyPlan,
    #[error("parallelism must be at least 1")]
    BadParallelism,
    #[error("run {0} appears twice in the plan")]
    Duplicate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl ExperimentPlan {
    /// Every combination, ordered day-major, then strategy, then seed.
    pub fn crossing(days: &[Weekday], strategies: &[Strategy], seeds: &[u64], parallelism: usize) -> Self {
        let mut runs = Vec::new();
        for &day in days {
            for &strategy in strategies {
                for &seed in seeds {
                    runs.push(RunSpec { day, strategy, seed });
                }
            }
        }
        Self {
            runs,
            parallelism,
            baseline: Strategy::Return,
        }
    }

    /// Wednesday and Saturday, all strategies, eight variations: 48 runs.
    pub fn standard(parallelism: usize) -> Self {
        Self::crossing(&[Weekday::Wed, Weekday::Sat], &Strategy::ALL, &(0..8).collect::<Vec<_>>(), parallelism)
    }

    pub fn validate(&self) -> Result<(), BatchError> {
        if self.runs.is_empty() {
            return Err(BatchError::EmptyPlan);
        }
        if self.parallelism == 0 {
            return Err(BatchError::BadParallelism);
        }
        let mut seen = HashSet::new();
        for r in &self.runs {
            if !seen.insert(r) {
                return Err(BatchError::Duplicate(r.label()));
            }
        }
        Ok(())
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run: RunSpec,
    pub label: String,
    pub version: &'static str,
    pub source_seed: u64,
    pub fleet_size: usize,
    pub orders: usize,
    pub shifts: usize,
    pub hotspot_count: usize,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run: RunSpec,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    /// Successful runs in plan order.
    pub kpis: Vec<RunKpis>,
    pub failures: Vec<RunFailure>,
    /// Merged table; `None` if no run for some day succeeded with the baseline.
    pub table: Option<KpiTable>,
}

impl BatchReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.table.is_some()
    }
}

fn run_one(spec: RunSpec, scenario: &Scenario, factors: &EmissionFactorTable, out: Option<&Path>) -> Result<RunKpis, String> {
    let (lb, output) = scenario.run(spec.day, spec.strategy, spec.seed).map_err(|e| e.to_string())?;
    let kpis = RunKpis::from_output(day_name(spec.day), spec.strategy, spec.seed, &output, factors);
    if let Some(root) = out {
        let dir = root.join(spec.label());
        output.write_dir(&scenario.graph, &dir).map_err(|e| e.to_string())?;
        let manifest = RunManifest {
            run: spec,
            label: spec.label(),
            version: env!("CARGO_PKG_VERSION"),
            source_seed: SOURCE_SEED,
            fleet_size: scenario.fleet_size,
            orders: lb.order_count(),
            shifts: lb.shift_count(),
            hotspot_count: scenario.hotspots.hotspots.len(),
            config: scenario.config(spec.strategy, spec.seed),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("manifest.json"), json + "\n").map_err(|e| e.to_string())?;
        write_run_kpis(&dir, &kpis).map_err(|e| e.to_string())?;
    }
    Ok(kpis)
}

/// Runs every planned simulation on up to `plan.parallelism` threads. Runs
/// are independent, so results do not depend on the thread count. With `out`
/// set, each run writes its own directory and the merged table goes to
/// `kpi.csv` / `kpi.txt`; failures are collected, not fatal.
pub fn run_batch(
    plan: &ExperimentPlan,
    scenario: &Scenario,
    factors: &EmissionFactorTable,
    out: Option<&Path>,
) -> Result<BatchReport, BatchError> {
    plan.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let results: Vec<Result<RunKpis, String>> =
        pool.install(|| plan.runs.par_iter().map(|&spec| run_one(spec, scenario, factors, out)).collect());

    let mut kpis = Vec::new();
    let mut failures = Vec::new();
    for (spec, r) in plan.runs.iter().zip(results) {
        match r {
            Ok(k) => kpis.push(k),
            Err(error) => {
                log::error!("run {} failed: {error}", spec.label());
                failures.push(RunFailure { run: *spec, error });
            }
        }
    }
    let table = match build_kpi_table(&kpis, plan.baseline) {
        Ok(t) => Some(t),
        Err(e) => {
            log::error!("no merged table: {e}");
            None
        }
    };
    if let Some(dir) = out {
        if let Some(t) = &table {
            t.write_csv(std::fs::File::create(dir.join("kpi.csv"))?).map_err(AnalyticsError::from)?;
            std::fs::write(dir.join("kpi.txt"), t.to_text())?;
        }
        if !failures.is_empty() {
            std::fs::write(dir.join("failures.json"), serde_json::to_string_pretty(&failures)? + "\n")?;
        }
    }
    Ok(BatchReport { kpis, failures, table })
}

pub const RUN_KPIS_FILE: &str = "kpi.json";

pub fn write_run_kpis(dir: &Path, kpis: &RunKpis) -> Result<(), BatchError> {
    std::fs::write(dir.join(RUN_KPIS_FILE), serde_json::to_string_pretty(kpis)? + "\n")?;
    Ok(())
}

/// Collects the per-run KPI files in `dir` and its immediate subdirectories,
/// sorted by path.
pub fn collect_run_kpis(dir: &Path) -> Result<Vec<RunKpis>, BatchError> {
    let mut files = Vec::new();
    if dir.join(RUN_KPIS_FILE).is_file() {
        files.push(dir.join(RUN_KPIS_FILE));
    }
    for entry in std::fs::read_dir(dir)? {
        let f = entry?.path().join(RUN_KPIS_FILE);
        if f.is_file() {
            files.push(f);
        }
    }
    files.sort();
    files
        .iter()
        .map(|f| Ok(serde_json::from_str(&std::fs::read_to_string(f)?)?))
        .collect()
}

/// Directory a run of `spec` writes to under `root`.
pub fn run_dir(root: &Path, spec: &RunSpec) -> PathBuf {
    root.join(spec.label())
}
