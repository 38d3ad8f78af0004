use crate::config::CliConfig;
use crate::{Cli, Command, GlobalArgs, PartialFailure, UsageError};
use anyhow::{bail, Context, Result};
use chrono::{Datelike, Weekday};
use clap::Args;
use ridehail::analytics::{
    adjustments_from_kpi, build_kpi_table, extrapolate_annual, extrapolation_table, read_annual_totals, sample_inputs,
    validation_metrics, write_extrapolation_csv, ExtrapolationInputs, RunKpis, StrategyAdjustment,
};
use ridehail::batch::{collect_run_kpis, run_batch, write_run_kpis, ExperimentPlan};
use ridehail::graph::{grid_network, save_network, GridSpec, RoadGraph};
use ridehail::hotspots::derive_hotspots;
use ridehail::logbook::{
    extract_shifts, parse_logbook, save_logbook, static_mileage_report, synthesize_demand, RideOrder, DEFAULT_MAX_GAP,
    REFERENCE_SHARES,
};
use ridehail::scenario::day_name;
use ridehail::sim::{run_simulation, ScenarioConfig, SimOutput, Strategy};
use ridehail::{LatLon, SyntheticLogbook};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Settings in effect for this invocation: defaults, config file, then the
/// global flags.
fn resolve(g: &GlobalArgs) -> Result<CliConfig> {
    let mut cfg = match &g.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(s) = g.strategy {
        cfg.strategy = s;
    }
    if let Some(p) = g.parallel {
        if p == 0 {
            return Err(usage("--parallel must be at least 1"));
        }
        cfg.parallel = p;
    }
    Ok(cfg)
}

fn out_path(g: &GlobalArgs, what: &str) -> Result<PathBuf> {
    g.out.clone().ok_or_else(|| usage(format!("--out <{what}> is required")))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = resolve(&cli.global)?;
    let g = &cli.global;
    match &cli.command {
        Command::GenNetwork(a) => gen_network(g, a),
        Command::GenDemand(a) => gen_demand(g, &mut cfg, a),
        Command::GenLogbook(a) => gen_logbook(g, &mut cfg, a),
        Command::DeriveHotspots(a) => derive(g, &mut cfg, a),
        Command::Simulate(a) => simulate(g, &mut cfg, a),
        Command::Batch(a) => batch(g, &mut cfg, a),
        Command::Kpi(a) => kpi(g, &cfg, a),
        Command::Validate(a) => validate(g, &mut cfg, a),
        Command::Extrapolate(a) => extrapolate(g, a),
        Command::Analyze(a) => analyze(g, &cfg, a),
    }
}

#[derive(Args, Debug)]
pub struct GenNetworkArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, value_name = "M")]
    pub spacing: Option<f64>,
}

fn gen_network(g: &GlobalArgs, a: &GenNetworkArgs) -> Result<()> {
    let out = out_path(g, "file")?;
    let mut spec = GridSpec::mini_berlin();
    spec.rows = a.rows.unwrap_or(spec.rows);
    spec.cols = a.cols.unwrap_or(spec.cols);
    spec.spacing_m = a.spacing.unwrap_or(spec.spacing_m);
    if spec.rows < 2 || spec.cols < 2 || !(spec.spacing_m > 0.0) {
        return Err(usage("grid needs at least 2 x 2 nodes and a positive spacing"));
    }
    let file = grid_network(&spec);
    // refuse to write something that would not load back
    let g = RoadGraph::from_file(&file, Default::default())?;
    save_network(&file, &out)?;
    println!("{}: {} nodes, {} edges", out.display(), g.node_count(), g.edge_count());
    Ok(())
}

#[derive(Args, Debug)]
pub struct GenDemandArgs {
    /// Days to synthesize, starting at the configured start date.
    #[arg(long)]
    pub days: Option<u32>,
}

fn gen_demand(g: &GlobalArgs, cfg: &mut CliConfig, a: &GenDemandArgs) -> Result<()> {
    let out = out_path(g, "file")?;
    if let Some(d) = a.days {
        cfg.demand.days = d;
    }
    // --seed picks the synthetic year here
    let seed = g.seed.unwrap_or(cfg.source_seed);
    let orders = synthesize_demand(&cfg.demand, seed)?;
    save_logbook(&out, &orders)?;
    let shifts = extract_shifts(&orders, DEFAULT_MAX_GAP);
    println!("{}: {} orders, {} shifts over {} days", out.display(), orders.len(), shifts.len(), cfg.demand.days);
    Ok(())
}

#[derive(Args, Debug)]
pub struct GenLogbookArgs {
    #[arg(long)]
    pub day: Option<Weekday>,
    #[arg(long)]
    pub fleet: Option<usize>,
}

fn gen_logbook(g: &GlobalArgs, cfg: &mut CliConfig, a: &GenLogbookArgs) -> Result<()> {
    let out = out_path(g, "file")?;
    cfg.day = a.day.unwrap_or(cfg.day);
    cfg.fleet_size = a.fleet.unwrap_or(cfg.fleet_size);
    if cfg.fleet_size == 0 {
        return Err(usage("--fleet must be at least 1"));
    }
    let source = extract_shifts(&cfg.source_orders()?, DEFAULT_MAX_GAP);
    let lb = ridehail::logbook::generate_logbook(&source, cfg.day, cfg.fleet_size, cfg.seed)?;
    for w in &lb.warnings {
        log::warn!("{w}");
    }
    save_logbook(&out, &lb.orders())?;
    println!(
        "{}: {} {} with {} vehicles, {} shifts, {} orders",
        out.display(),
        day_name(cfg.day),
        cfg.seed,
        lb.vehicles.len(),
        lb.shift_count(),
        lb.order_count()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct DeriveHotspotsArgs {
    /// Logbook whose pick-ups are clustered; the source logbook by default.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Number of hotspots to aim for.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub min_pts: Option<usize>,
}

fn derive(g: &GlobalArgs, cfg: &mut CliConfig, a: &DeriveHotspotsArgs) -> Result<()> {
    let out = out_path(g, "file")?;
    if a.input.is_some() {
        cfg.source_logbook = a.input.clone();
    }
    cfg.hotspot_target = a.target.unwrap_or(cfg.hotspot_target);
    cfg.hotspot_min_pts = a.min_pts.unwrap_or(cfg.hotspot_min_pts);
    if cfg.hotspot_target == 0 || cfg.hotspot_min_pts == 0 {
        return Err(usage("--target and --min-pts must be positive"));
    }
    let points: Vec<LatLon> = cfg.source_orders()?.iter().map(|o| o.pickup_location).collect();
    let set = derive_hotspots(&points, cfg.hotspot_target, cfg.hotspot_min_pts)?;
    set.save(&out)?;
    println!(
        "{}: {} hotspots from {} pick-ups (eps {:.2} m, min_pts {})",
        out.display(),
        set.hotspots.len(),
        points.len(),
        set.eps_m,
        set.min_pts
    );
    Ok(())
}

/// Everything needed to reproduce a single run.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    day: Weekday,
    logbook: Option<&'a Path>,
    orders: usize,
    shifts: usize,
    hotspot_count: usize,
    settings: &'a CliConfig,
    run: &'a ScenarioConfig,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub day: Option<Weekday>,
    #[arg(long)]
    pub fleet: Option<usize>,
    /// Simulate this logbook instead of sampling one.
    #[arg(long, value_name = "FILE")]
    pub logbook: Option<PathBuf>,
    /// Also write the event trace.
    #[arg(long)]
    pub trace: bool,
}

fn read_orders(p: &Path) -> Result<Vec<RideOrder>> {
    let parsed = parse_logbook(p).with_context(|| format!("reading logbook {}", p.display()))?;
    if !parsed.rejected.is_empty() {
        log::warn!("{}: {} rows rejected, first: line {} {}", p.display(), parsed.rejected.len(), parsed.rejected[0].line, parsed.rejected[0].reason);
    }
    if parsed.orders.is_empty() {
        bail!("{} contains no valid orders", p.display());
    }
    Ok(parsed.orders)
}

/// Simulates a given logbook, or samples one from the source, and writes the
/// run directory.
fn simulate_day(
    cfg: &CliConfig,
    logbook: Option<&Path>,
    out: &Path,
    command: &'static str,
) -> Result<(SyntheticLogbook, SimOutput, Vec<RideOrder>)> {
    let graph = cfg.graph()?;
    let mut run = cfg.base_config()?;
    if run.strategy == Strategy::Hotspot {
        run = run.with_hotspots(std::sync::Arc::new(cfg.hotspot_set()?));
    }
    run.validate()?;
    let (lb, orders) = match logbook {
        Some(p) => {
            let orders = read_orders(p)?;
            (SyntheticLogbook::from_orders(&orders, cfg.day), orders)
        }
        None => {
            let source = extract_shifts(&cfg.source_orders()?, DEFAULT_MAX_GAP);
            let lb = ridehail::logbook::generate_logbook(&source, cfg.day, cfg.fleet_size, cfg.seed)?;
            let orders = lb.orders();
            (lb, orders)
        }
    };
    let output = run_simulation(&run, &lb, &graph)?;
    output.write_dir(&graph, out).with_context(|| format!("writing {}", out.display()))?;
    write_json(
        &out.join("manifest.json"),
        &Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            day: cfg.day,
            logbook,
            orders: lb.order_count(),
            shifts: lb.shift_count(),
            hotspot_count: run.hotspots.as_ref().map_or(0, |h| h.hotspots.len()),
            settings: cfg,
            run: &run,
        },
    )?;
    Ok((lb, output, orders))
}

fn simulate(g: &GlobalArgs, cfg: &mut CliConfig, a: &SimulateArgs) -> Result<()> {
    let out = out_path(g, "dir")?;
    cfg.fleet_size = a.fleet.unwrap_or(cfg.fleet_size);
    cfg.record_trace |= a.trace;
    if let Some(p) = &a.logbook {
        // the day of a given logbook is the day it was recorded
        let first = read_orders(p)?[0].pickup_time.weekday();
        cfg.day = a.day.unwrap_or(first);
    } else {
        cfg.day = a.day.unwrap_or(cfg.day);
    }
    let (_, output, _) = simulate_day(cfg, a.logbook.as_deref(), &out, "simulate")?;
    let kpis = RunKpis::from_output(day_name(cfg.day), cfg.strategy, cfg.seed, &output, &cfg.factors()?);
    write_run_kpis(&out, &kpis)?;
    let table = build_kpi_table(std::slice::from_ref(&kpis), cfg.strategy)?;
    table.write_csv(std::fs::File::create(out.join("kpi.csv"))?)?;
    print!("{}", table.to_text());
    let unserved = output.orders.len() - output.served_orders();
    if unserved > 0 {
        log::warn!("{unserved} orders not served");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Comma-separated days of the week.
    #[arg(long, value_delimiter = ',')]
    pub days: Option<Vec<Weekday>>,
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<Strategy>>,
    /// Logbook variations 0..N per day and strategy.
    #[arg(long, value_name = "N")]
    pub seeds: Option<u64>,
    /// Strategy deltas are relative to.
    #[arg(long)]
    pub baseline: Option<Strategy>,
}

#[derive(Serialize)]
struct BatchManifest<'a> {
    version: &'static str,
    plan: &'a ExperimentPlan,
    settings: &'a CliConfig,
}

fn batch(g: &GlobalArgs, cfg: &mut CliConfig, a: &BatchArgs) -> Result<()> {
    let out = out_path(g, "dir")?;
    if let Some(d) = &a.days {
        cfg.days = d.clone();
    }
    if let Some(s) = &a.strategies {
        cfg.strategies = s.clone();
    }
    if let Some(n) = a.seeds {
        cfg.seeds = (0..n).collect();
    } else if let Some(s) = g.seed {
        cfg.seeds = vec![s];
    }
    cfg.baseline = a.baseline.unwrap_or(cfg.baseline);
    let mut plan = ExperimentPlan::crossing(&cfg.days, &cfg.strategies, &cfg.seeds, cfg.parallel);
    plan.baseline = cfg.baseline;
    plan.validate().map_err(|e| usage(e.to_string()))?;

    let scenario = cfg.scenario()?;
    let factors = cfg.factors()?;
    std::fs::create_dir_all(&out)?;
    write_json(
        &out.join("batch.json"),
        &BatchManifest { version: env!("CARGO_PKG_VERSION"), plan: &plan, settings: cfg },
    )?;
    log::info!("{} runs on {} threads", plan.runs.len(), plan.parallelism);
    let report = run_batch(&plan, &scenario, &factors, Some(&out))?;
    if let Some(t) = &report.table {
        print!("{}", t.to_text());
    }
    for f in &report.failures {
        eprintln!("run {} failed: {}", f.run.label(), f.error);
    }
    if report.table.is_none() && report.failures.is_empty() {
        bail!("no KPI table could be built (missing {} runs)", plan.baseline);
    }
    if !report.is_complete() {
        return Err(PartialFailure { failed: report.failures.len(), total: plan.runs.len() }.into());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct KpiArgs {
    /// Run directories, or batch directories containing run directories.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: Option<Strategy>,
}

fn kpi(g: &GlobalArgs, cfg: &CliConfig, a: &KpiArgs) -> Result<()> {
    let mut runs = Vec::new();
    for d in &a.dirs {
        let found = collect_run_kpis(d).with_context(|| format!("reading runs in {}", d.display()))?;
        if found.is_empty() {
            bail!("{} holds no run KPI files", d.display());
        }
        runs.extend(found);
    }
    let table = build_kpi_table(&runs, a.baseline.unwrap_or(cfg.baseline))?;
    match &g.out {
        Some(p) => table.write_csv(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    if g.out.is_some() {
        print!("{}", table.to_text());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Recorded logbook to replay.
    #[arg(long, value_name = "FILE")]
    pub logbook: PathBuf,
    /// Differences below this many seconds count as matches.
    #[arg(long, value_name = "S")]
    pub threshold: Option<f64>,
}

fn validate(g: &GlobalArgs, cfg: &mut CliConfig, a: &ValidateArgs) -> Result<()> {
    let out = out_path(g, "dir")?;
    cfg.validation_threshold_s = a.threshold.unwrap_or(cfg.validation_threshold_s);
    if !(cfg.validation_threshold_s > 0.0) {
        return Err(usage("--threshold must be positive"));
    }
    cfg.day = read_orders(&a.logbook)?[0].pickup_time.weekday();
    let (_, output, orders) = simulate_day(cfg, Some(&a.logbook), &out, "validate")?;
    let report = validation_metrics(&output, &orders, cfg.validation_threshold_s);
    write_json(&out.join("validation.json"), &report)?;
    report.write_histogram_csv(std::fs::File::create(out.join("histogram.csv"))?)?;
    let fmt = |m: Option<f64>| m.map_or("n/a".to_string(), |v| format!("{v:.0} s"));
    println!(
        "matched {} orders ({} unmatched)\ntravel time: median {}, {:.1}% within {} s\npick-up:     median {}, {:.1}% within {} s",
        report.matched.len(),
        report.unmatched.len(),
        fmt(report.travel_time.median_s),
        100.0 * report.travel_time.share_within,
        cfg.validation_threshold_s,
        fmt(report.pickup.median_s),
        100.0 * report.pickup.share_within,
        cfg.validation_threshold_s
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExtrapolateArgs {
    /// Annual totals per strategy (strategy,pickup_km,ride_km,rebalancing_km).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["daily", "sample"])]
    pub totals: Option<PathBuf>,
    /// Per-day mileage, fleet size and utilisation of the observed period.
    #[arg(long, value_name = "FILE", conflicts_with = "sample")]
    pub daily: Option<PathBuf>,
    /// Use generated per-day inputs with this seed.
    #[arg(long, value_name = "SEED")]
    pub sample: Option<u64>,
    /// Batch directory whose KPI deltas define the strategies.
    #[arg(long, value_name = "DIR")]
    pub kpi: Option<PathBuf>,
    #[arg(long, default_value = "Wednesday")]
    pub weekday_label: String,
    #[arg(long, default_value = "Saturday")]
    pub weekend_label: String,
    #[arg(long, value_name = "G_PER_KM")]
    pub co2: Option<f64>,
    /// Factor scaling the observed days to a year.
    #[arg(long)]
    pub c_y: Option<f64>,
}

fn extrapolate(g: &GlobalArgs, a: &ExtrapolateArgs) -> Result<()> {
    let rows = if let Some(p) = &a.totals {
        let totals = read_annual_totals(std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)?;
        extrapolation_table(&totals, a.co2.unwrap_or(ridehail::analytics::DEFAULT_CO2_G_PER_KM))
    } else {
        let mut inputs = match (&a.daily, a.sample) {
            (Some(p), None) => ExtrapolationInputs::new(ExtrapolationInputs::read_days_csv(
                std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?,
            )?),
            (None, Some(seed)) => sample_inputs(seed),
            _ => return Err(usage("one of --totals, --daily or --sample is required")),
        };
        if let Some(c) = a.co2 {
            inputs.co2_g_per_km = c;
        }
        if let Some(c) = a.c_y {
            inputs.c_y = c;
        }
        let adjustments = match &a.kpi {
            Some(dir) => {
                let runs = collect_run_kpis(dir).with_context(|| format!("reading runs in {}", dir.display()))?;
                let baseline = runs.first().map_or(Strategy::Return, |r| r.strategy);
                let baseline = if runs.iter().any(|r| r.strategy == Strategy::Return) { Strategy::Return } else { baseline };
                let table = build_kpi_table(&runs, baseline)?;
                adjustments_from_kpi(&table, &a.weekday_label, &a.weekend_label)?
            }
            None => vec![StrategyAdjustment::unchanged("Observed")],
        };
        extrapolate_annual(&inputs, &adjustments)?
    };
    match &g.out {
        Some(p) => write_extrapolation_csv(&rows, std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => write_extrapolation_csv(&rows, std::io::stdout().lock())?,
    }
    if g.out.is_some() {
        let mut so = std::io::stdout().lock();
        for r in &rows {
            writeln!(so, "{:<10} S {:>14.0} km  dS {:>13.0} km  E {:>12.0} kg CO2  dE {:>11.0} kg", r.name, r.s_km, r.delta_s_km, r.e_co2_kg, r.delta_e_co2_kg)?;
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Logbook to analyse; the source logbook by default.
    #[arg(long, value_name = "FILE")]
    pub logbook: Option<PathBuf>,
}

fn analyze(g: &GlobalArgs, cfg: &CliConfig, a: &AnalyzeArgs) -> Result<()> {
    let orders = match &a.logbook {
        Some(p) => read_orders(p)?,
        None => cfg.source_orders()?,
    };
    let shifts = extract_shifts(&orders, DEFAULT_MAX_GAP);
    let graph = cfg.graph()?;
    let report = static_mileage_report(&shifts, &graph, cfg.pob(), &cfg.profile()?);
    if let Some(p) = &g.out {
        write_json(p, &report)?;
    }
    let t = &report.total;
    println!("{} orders in {} shifts, {} flagged as unroutable", orders.len(), shifts.len(), report.flagged.len());
    println!(
        "mileage: pick-up {:.0} km, ride {:.0} km, return {:.0} km",
        t.pickup_mm as f64 / 1e6,
        t.ride_mm as f64 / 1e6,
        t.return_mm as f64 / 1e6
    );
    if let Some([p, r, b]) = t.shares() {
        let [rp, rr, rb] = REFERENCE_SHARES;
        println!(
            "shares:  pick-up {:.1}%, ride {:.1}%, return {:.1}%  (typical {:.0}/{:.0}/{:.0}%)",
            100.0 * p,
            100.0 * r,
            100.0 * b,
            100.0 * rp,
            100.0 * rr,
            100.0 * rb
        );
    }
    if let Some([r, w, pob]) = report.follow_ups.shares() {
        println!(
            "follow-up orders: {:.1}% during ride, {:.1}% during return, {:.1}% at the place of business",
            100.0 * r,
            100.0 * w,
            100.0 * pob
        );
    }
    Ok(())
}
