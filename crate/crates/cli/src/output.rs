//! Report and CSV writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use batman_core::config::{OutputFormat, ScenarioConfig};
use batman_core::explorer::{ExplorationReport, Property};
use batman_core::metrics::MetricsSample;
use batman_core::sim::{AggregateSample, BatchOutput};
use serde::Serialize;

pub const RUNS_CSV: &str = "runs.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const SIMULATION_JSON: &str = "simulation.json";
pub const EXPLORE_CSV: &str = "explore.csv";
pub const EXPLORE_JSON: &str = "explore.json";

pub fn prepare_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn status(report: &ExplorationReport, p: Property) -> &'static str {
    if report.holds(p) {
        "pass"
    } else {
        "fail"
    }
}

pub fn explore_summary(cfg: &ScenarioConfig, report: &ExplorationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "explore {} {} (reduction {})",
        cfg.topology,
        cfg.interpretation,
        if report.reduction { "on" } else { "off" }
    );
    let _ = writeln!(
        s,
        "states {}  transitions {}  quiescent {}  route tables {}{}",
        report.states_visited,
        report.transitions,
        report.quiescent_states,
        report.quiescent_routes.len(),
        if report.complete { "" } else { "  INCOMPLETE (state cap reached)" }
    );
    for p in Property::ALL {
        let detail = report
            .violations
            .iter()
            .find(|v| v.property == p)
            .map_or(String::new(), |v| format!("  {}", v.detail));
        let _ = writeln!(s, "{:<26}{}{}", p.to_string(), status(report, p), detail);
    }
    for v in &report.violations {
        let _ = writeln!(s, "\ncounterexample for {} ({} steps):", v.property, v.trace.len());
        s.push_str(&v.trace_text());
    }
    s
}

#[derive(Serialize)]
struct ExploreRow<'a> {
    topology: String,
    interpretation: String,
    reduction: bool,
    states: usize,
    transitions: usize,
    quiescent_states: usize,
    complete: bool,
    property: String,
    status: &'a str,
    detail: &'a str,
    trace_steps: usize,
}

#[derive(Serialize)]
struct ExploreJson<'a> {
    topology: String,
    interpretation: String,
    budgets: &'a [u32],
    quiescent_route_tables: usize,
    #[serde(flatten)]
    report: &'a ExplorationReport,
}

/// `explore.csv` (one row per property, plus one `trace_<property>.txt` per
/// counterexample) or `explore.json`.
pub fn write_explore(dir: &Path, format: OutputFormat, cfg: &ScenarioConfig, report: &ExplorationReport) -> Result<(), String> {
    prepare_dir(dir)?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for p in Property::ALL {
                let v = report.violations.iter().find(|v| v.property == p);
                w.serialize(ExploreRow {
                    topology: cfg.topology.to_string(),
                    interpretation: cfg.interpretation.to_string(),
                    reduction: report.reduction,
                    states: report.states_visited,
                    transitions: report.transitions,
                    quiescent_states: report.quiescent_states,
                    complete: report.complete,
                    property: p.to_string(),
                    status: status(report, p),
                    detail: v.map_or("", |v| v.detail.as_str()),
                    trace_steps: v.map_or(0, |v| v.trace.len()),
                })
                .map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            write_file(&dir.join(EXPLORE_CSV), &bytes)?;
            for v in &report.violations {
                write_file(&dir.join(format!("trace_{}.txt", v.property)), v.trace_text().as_bytes())?;
            }
        }
        OutputFormat::Json => {
            let doc = ExploreJson {
                topology: cfg.topology.to_string(),
                interpretation: cfg.interpretation.to_string(),
                budgets: &cfg.budgets,
                quiescent_route_tables: report.quiescent_routes.len(),
                report,
            };
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
            text.push('\n');
            write_file(&dir.join(EXPLORE_JSON), text.as_bytes())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RunRow {
    run: usize,
    t: f64,
    bidir_misses: u32,
    no_route: u32,
    best_hop_total: u32,
    route_errors: u32,
    avg_buffer: f64,
    max_buffer: u32,
    buffer_errors: u32,
}

impl RunRow {
    fn new(run: usize, s: &MetricsSample) -> Self {
        RunRow {
            run,
            t: s.t,
            bidir_misses: s.bidir_misses,
            no_route: s.no_route,
            best_hop_total: s.best_hop_total,
            route_errors: s.route_errors,
            avg_buffer: s.avg_buffer,
            max_buffer: s.max_buffer,
            buffer_errors: s.buffer_errors,
        }
    }
}

pub fn runs_csv(batch: &BatchOutput) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (run, r) in batch.runs.iter().enumerate() {
        for s in &r.samples {
            w.serialize(RunRow::new(run, s))?;
        }
    }
    into_string(w)
}

pub fn aggregate_csv(batch: &BatchOutput) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for a in &batch.aggregate {
        w.serialize(a)?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct SimulationJson<'a> {
    topology: String,
    interpretation: String,
    seed: u64,
    runs: Vec<&'a [MetricsSample]>,
    aggregate: &'a [AggregateSample],
}

/// `runs.csv` and `aggregate.csv`, or `simulation.json`.
pub fn write_simulation(dir: &Path, format: OutputFormat, cfg: &ScenarioConfig, batch: &BatchOutput) -> Result<(), String> {
    prepare_dir(dir)?;
    match format {
        OutputFormat::Csv => {
            let runs = runs_csv(batch).map_err(|e| e.to_string())?;
            let agg = aggregate_csv(batch).map_err(|e| e.to_string())?;
            write_file(&dir.join(RUNS_CSV), runs.as_bytes())?;
            write_file(&dir.join(AGGREGATE_CSV), agg.as_bytes())?;
        }
        OutputFormat::Json => {
            let doc = SimulationJson {
                topology: cfg.topology.to_string(),
                interpretation: cfg.interpretation.to_string(),
                seed: cfg.timed.seed,
                runs: batch.runs.iter().map(|r| r.samples.as_slice()).collect(),
                aggregate: &batch.aggregate,
            };
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
            text.push('\n');
            write_file(&dir.join(SIMULATION_JSON), text.as_bytes())?;
        }
    }
    Ok(())
}

pub fn simulate_summary(cfg: &ScenarioConfig, batch: &BatchOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "simulate {} {}: {} runs, seed {}",
        cfg.topology, cfg.interpretation, cfg.timed.runs, cfg.timed.seed
    );
    if let Some(last) = batch.aggregate.last() {
        let t = last.t;
        let with_errors = batch.fraction_of_runs(t, |s| s.route_errors > 0);
        let _ = writeln!(
            s,
            "t={t}: bidir_misses {:.2}  no_route {:.2}  route_errors {:.2} ({:.0}% of runs)",
            last.bidir_misses,
            last.no_route,
            last.route_errors,
            with_errors * 100.0
        );
    }
    let _ = writeln!(
        s,
        "buffer: mean {:.3}  max {}  overflows {}",
        batch.mean_buffer(),
        batch.max_buffer(),
        batch.total_buffer_errors()
    );
    s
}
