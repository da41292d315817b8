//! `traffic-stl`: simulate a corridor scenario, monitor trajectory CSVs
//! against safety specifications, aggregate conformance statistics, and
//! smooth trace channels.
//!
//! Exit codes: 0 success (monitor: all conform), 1 monitor found violations,
//! 2 any error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use traffic_stl::io::{
    self, read_trace_file, report_to_table_csv, write_verdict_csv, VerdictSummary,
};
use traffic_stl::sim::{parse_scenario_config, run_scenario};
use traffic_stl::specs::{build_named_spec, build_report, per_trace_mean, AVAILABLE_SPECS};
use traffic_stl::stl::{monitor, EvalError, Formula};
use traffic_stl::trace::{channel, MotionDerivation, Trace};

#[derive(Parser)]
#[command(
    name = "traffic-stl",
    version,
    about = "STL safety monitoring for vehicle trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-vehicle trajectory CSVs plus a summary.
    Simulate {
        /// Scenario configuration file (flat key = value format).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace CSVs and scenario_summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monitor trajectory CSVs against a specification.
    Monitor {
        /// Directory of trajectory CSV files.
        #[arg(long)]
        traces: PathBuf,
        /// Built-in specification name (speed, braking, offramp, headway).
        #[arg(long, conflicts_with = "formula_file")]
        spec: Option<String>,
        /// File containing a formula in the DSL syntax.
        #[arg(long = "formula-file")]
        formula_file: Option<PathBuf>,
        /// key=value parameter overrides; also: alpha=<a>, smoothing=0|1,
        /// raw_jerk=0|1 for the derived-channel pipeline.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output directory for verdict CSV/JSON files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate verdict summaries into a conformance report.
    Stats {
        /// Directory of verdict *.json summaries.
        #[arg(long)]
        verdicts: PathBuf,
        /// Channel over which group means are computed.
        #[arg(long)]
        channel: String,
        /// Output path; `.json` and `.csv` siblings are written.
        #[arg(long)]
        out: PathBuf,
        /// Directory of the original trace CSVs, when the paths stored in
        /// the verdicts are stale.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Exponentially smooth the kinematic columns of a trajectory CSV.
    Smooth {
        /// Input trajectory CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// Smoothing factor in (0, 1].
        #[arg(long)]
        alpha: f64,
        /// Output trajectory CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// TRAFFIC_STL_THREADS caps the per-trace monitoring fan-out.
fn configure_threads() -> Result<(), String> {
    match std::env::var("TRAFFIC_STL_THREADS") {
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                format!("TRAFFIC_STL_THREADS must be a positive integer, got '{raw}'")
            })?;
            if n == 0 {
                return Err("TRAFFIC_STL_THREADS must be at least 1".to_string());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("failed to configure thread pool: {e}"))
        }
        Err(_) => Ok(()),
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Monitor {
            traces,
            spec,
            formula_file,
            params,
            out,
        } => cmd_monitor(
            &traces,
            spec.as_deref(),
            formula_file.as_deref(),
            &params,
            &out,
        ),
        Command::Stats {
            verdicts,
            channel,
            out,
            traces,
        } => cmd_stats(&verdicts, &channel, &out, traces.as_deref()),
        Command::Smooth { input, alpha, out } => cmd_smooth(&input, alpha, &out),
    }
}

fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<u8, String> {
    let text =
        fs::read_to_string(config_path).map_err(|e| format!("{}: {e}", config_path.display()))?;
    let config =
        parse_scenario_config(&text).map_err(|e| format!("{}: {e}", config_path.display()))?;
    let outcome = run_scenario(&config).map_err(|e| e.to_string())?;
    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    for trajectory in &outcome.trajectories {
        let path = out_dir.join(format!("{}.csv", sanitize(&trajectory.vehicle_id)));
        io::write_trace_rows_file(&path, &trajectory.rows).map_err(|e| e.to_string())?;
    }
    let summary_path = out_dir.join("scenario_summary.json");
    let summary = serde_json::to_string_pretty(&outcome.summary)
        .map_err(|e| format!("serializing summary: {e}"))?;
    fs::write(&summary_path, summary).map_err(|e| format!("{}: {e}", summary_path.display()))?;
    println!(
        "simulated {} vehicles over {}s (seed {}, comm {}), wrote {} traces to {}",
        outcome.summary.vehicle_count,
        outcome.summary.duration,
        outcome.summary.rng_seed,
        if outcome.summary.comm_enabled {
            "on"
        } else {
            "off"
        },
        outcome.trajectories.len(),
        out_dir.display()
    );
    Ok(0)
}

struct MonitorSetup {
    formula: Formula,
    label: String,
    offramp_only: bool,
    derivation: MotionDerivation,
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("--param '{item}' is not of the form key=value"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("--param {key}: '{value}' is not a number"))?;
        if out.insert(key.trim().to_string(), value).is_some() {
            return Err(format!("--param {key} given twice"));
        }
    }
    Ok(out)
}

fn monitor_setup(
    spec: Option<&str>,
    formula_file: Option<&Path>,
    params: &[String],
) -> Result<MonitorSetup, String> {
    let mut overrides = parse_params(params)?;
    let mut derivation = MotionDerivation::default();
    if let Some(alpha) = overrides.remove("alpha") {
        derivation.alpha = Some(alpha);
    }
    if let Some(flag) = overrides.remove("smoothing") {
        if flag == 0.0 {
            derivation.alpha = None;
        }
    }
    if let Some(flag) = overrides.remove("raw_jerk") {
        derivation.jerk_from_smoothed_accel = flag == 0.0;
    }
    match (spec, formula_file) {
        (Some(name), None) => {
            let named = build_named_spec(name, &overrides).map_err(|e| e.to_string())?;
            Ok(MonitorSetup {
                formula: named.formula,
                label: named.name,
                offramp_only: named.offramp_only,
                derivation,
            })
        }
        (None, Some(path)) => {
            if let Some(key) = overrides.keys().next() {
                return Err(format!(
                    "--param {key} applies to built-in specs; formula files take none"
                ));
            }
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let formula = traffic_stl::stl::parse(text.trim())
                .map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(MonitorSetup {
                label: formula.to_string(),
                formula,
                offramp_only: false,
                derivation,
            })
        }
        (None, None) => Err(format!(
            "one of --spec or --formula-file is required; available specs: {}",
            AVAILABLE_SPECS.join(", ")
        )),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with enforces exclusivity"),
    }
}

fn csv_files_sorted(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

fn uses_offramp(trace: &Trace) -> bool {
    trace
        .channel(channel::ON_OFFRAMP)
        .is_some_and(|sig| sig.values().any(|v| v >= 0.5))
}

fn needs_motion_channels(formula: &Formula) -> bool {
    let chans = formula.channels();
    chans.contains(channel::ACCEL) || chans.contains(channel::JERK)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_monitor(
    traces_dir: &Path,
    spec: Option<&str>,
    formula_file: Option<&Path>,
    params: &[String],
    out_dir: &Path,
) -> Result<u8, String> {
    let setup = monitor_setup(spec, formula_file, params)?;
    let files = csv_files_sorted(traces_dir)?;
    if files.is_empty() {
        return Err(format!("no .csv trace files in {}", traces_dir.display()));
    }
    let mut inputs: Vec<(PathBuf, Trace)> = Vec::new();
    for path in files {
        let traces = read_trace_file(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        for trace in traces {
            inputs.push((path.clone(), trace));
        }
    }
    if setup.offramp_only {
        inputs.retain(|(_, trace)| uses_offramp(trace));
        if inputs.is_empty() {
            return Err("no trajectories use the off-ramp; nothing to monitor".to_string());
        }
    }
    let derive = needs_motion_channels(&setup.formula);

    enum Outcome {
        Verdict(Box<traffic_stl::stl::Verdict>, PathBuf),
        Skipped(String, String),
    }
    let results: Result<Vec<Outcome>, String> = inputs
        .par_iter()
        .map(|(path, trace)| {
            let prepared = if derive {
                setup
                    .derivation
                    .ensure_motion_channels(trace)
                    .map_err(|e| format!("{}: {e}", path.display()))?
            } else {
                trace.clone()
            };
            match monitor(&setup.formula, &prepared) {
                Ok(verdict) => Ok(Outcome::Verdict(Box::new(verdict), path.clone())),
                Err(EvalError::EmptyHorizon {
                    required,
                    available,
                }) => Ok(Outcome::Skipped(
                    trace.vehicle_id().to_string(),
                    format!(
                        "trace spans {available}s but the formula needs {required}s of look-ahead"
                    ),
                )),
                Err(e) => Err(format!("{}: {e}", path.display())),
            }
        })
        .collect();
    let results = results?;

    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let mut conforming = 0usize;
    let mut violating = 0usize;
    let mut skipped = 0usize;
    for outcome in &results {
        match outcome {
            Outcome::Verdict(verdict, trace_path) => {
                if verdict.satisfied() {
                    conforming += 1;
                } else {
                    violating += 1;
                }
                let stem = sanitize(&verdict.vehicle_id);
                let csv_path = out_dir.join(format!("verdict_{stem}.csv"));
                let mut buf = Vec::new();
                write_verdict_csv(&mut buf, verdict).map_err(|e| e.to_string())?;
                fs::write(&csv_path, buf).map_err(|e| format!("{}: {e}", csv_path.display()))?;
                let summary = VerdictSummary::new(
                    verdict,
                    setup.formula.to_string(),
                    Some(trace_path.display().to_string()),
                );
                let json_path = out_dir.join(format!("verdict_{stem}.json"));
                let json = serde_json::to_string_pretty(&summary)
                    .map_err(|e| format!("serializing verdict: {e}"))?;
                fs::write(&json_path, json).map_err(|e| format!("{}: {e}", json_path.display()))?;
            }
            Outcome::Skipped(id, why) => {
                skipped += 1;
                eprintln!("warning: skipping {id}: {why}");
            }
        }
    }
    if conforming + violating == 0 {
        return Err("every trace was too short for this formula's horizon".to_string());
    }
    println!(
        "spec '{}': {conforming} conforming, {violating} violating, {skipped} skipped",
        setup.label
    );
    Ok(if violating > 0 { 1 } else { 0 })
}

fn cmd_stats(
    verdicts_dir: &Path,
    statistic_channel: &str,
    out: &Path,
    traces_dir: Option<&Path>,
) -> Result<u8, String> {
    let mut files: Vec<PathBuf> = fs::read_dir(verdicts_dir)
        .map_err(|e| format!("{}: {e}", verdicts_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("verdict_"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!(
            "no verdict_*.json summaries in {}",
            verdicts_dir.display()
        ));
    }

    // traces provided via --traces are indexed by vehicle id once
    let mut override_traces: BTreeMap<String, Trace> = BTreeMap::new();
    if let Some(dir) = traces_dir {
        for path in csv_files_sorted(dir)? {
            for trace in read_trace_file(&path).map_err(|e| format!("{}: {e}", path.display()))? {
                override_traces.insert(trace.vehicle_id().to_string(), trace);
            }
        }
    }

    let mut conforming_means = Vec::new();
    let mut violating_means = Vec::new();
    let mut conforming_volume = 0usize;
    let mut violating_volume = 0usize;
    let mut labels: Vec<String> = Vec::new();
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let summary: VerdictSummary =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if !labels.contains(&summary.formula) {
            labels.push(summary.formula.clone());
        }
        let trace = match override_traces.get(&summary.vehicle_id) {
            Some(t) => t.clone(),
            None => {
                let stored = summary.trace_path.as_deref().ok_or_else(|| {
                    format!(
                        "{}: verdict has no trace_path; pass --traces <dir>",
                        path.display()
                    )
                })?;
                resolve_trace(stored, verdicts_dir, &summary.vehicle_id)?
            }
        };
        let mean = per_trace_mean(&trace, statistic_channel).map_err(|e| e.to_string())?;
        if summary.satisfied {
            conforming_volume += 1;
            if let Some(m) = mean {
                conforming_means.push(m);
            }
        } else {
            violating_volume += 1;
            if let Some(m) = mean {
                violating_means.push(m);
            }
        }
    }
    let label = if labels.len() == 1 {
        labels.remove(0)
    } else {
        format!("{} specifications", labels.len())
    };
    let report = build_report(
        label,
        statistic_channel,
        &conforming_means,
        conforming_volume,
        &violating_means,
        violating_volume,
    );

    let json_path = out.with_extension("json");
    let csv_path = out.with_extension("csv");
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
    }
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| format!("serializing report: {e}"))?;
    fs::write(&json_path, json).map_err(|e| format!("{}: {e}", json_path.display()))?;
    fs::write(&csv_path, report_to_table_csv(&report))
        .map_err(|e| format!("{}: {e}", csv_path.display()))?;
    println!(
        "report over {} trajectories ({} conforming, {} violating) written to {} and {}",
        conforming_volume + violating_volume,
        conforming_volume,
        violating_volume,
        json_path.display(),
        csv_path.display()
    );
    Ok(0)
}

/// Trace files recorded in verdicts are tried as given, then relative to the
/// verdicts directory.
fn resolve_trace(stored: &str, verdicts_dir: &Path, vehicle_id: &str) -> Result<Trace, String> {
    let candidates = [PathBuf::from(stored), verdicts_dir.join(stored)];
    for candidate in &candidates {
        if candidate.is_file() {
            let traces =
                read_trace_file(candidate).map_err(|e| format!("{}: {e}", candidate.display()))?;
            if let Some(trace) = traces.into_iter().find(|t| t.vehicle_id() == vehicle_id) {
                return Ok(trace);
            }
        }
    }
    Err(format!(
        "trace for {vehicle_id} not found at '{stored}'; pass --traces <dir>"
    ))
}

fn cmd_smooth(input: &Path, alpha: f64, out: &Path) -> Result<u8, String> {
    let text = fs::read_to_string(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let mut rows = io::parse_trace_csv(&text).map_err(|e| format!("{}: {e}", input.display()))?;

    let mut order: Vec<String> = Vec::new();
    for row in &rows {
        if !order.contains(&row.vehicle_id) {
            order.push(row.vehicle_id.clone());
        }
    }
    for vehicle in &order {
        let idx: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| &r.vehicle_id == vehicle)
            .map(|(i, _)| i)
            .collect();
        for (extract, store) in [
            (
                (|r: &io::TraceRow| r.x) as fn(&io::TraceRow) -> f64,
                (|r: &mut io::TraceRow, v: f64| r.x = v) as fn(&mut io::TraceRow, f64),
            ),
            (|r| r.speed, |r, v| r.speed = v),
        ] {
            let signal = traffic_stl::signal::Signal::from_pairs(
                idx.iter().map(|&i| (rows[i].t, extract(&rows[i]))),
                traffic_stl::signal::Interpolation::Linear,
                "",
            )
            .map_err(|e| format!("{}: vehicle {vehicle}: {e}", input.display()))?;
            let smoothed = signal.exp_smooth(alpha).map_err(|e| e.to_string())?;
            for (&i, sample) in idx.iter().zip(smoothed.samples()) {
                store(&mut rows[i], sample.value);
            }
        }
    }
    io::write_trace_rows_file(out, &rows).map_err(|e| e.to_string())?;
    println!(
        "smoothed x and speed for {} vehicles (alpha {alpha}) into {}",
        order.len(),
        out.display()
    );
    Ok(0)
}
