use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use geomr::metrics::{MetricsReport, ReportFormat};
use geomr::scenario::{Scenario, ScenarioConfig};
use geomr::workload::{save_trace, WorkloadTrace};

#[derive(Parser, Debug)]
#[command(
    name = "geomr",
    version,
    about = "MapReduce scheduling simulator for multi-datacenter virtual clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a workload trace from a scenario.
    GenerateTrace {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trace file to write.
        #[arg(long, env = "GEOMR_OUT")]
        out: PathBuf,
    },
    /// Simulate one or more schedulers over a shared trace and placement.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated scheduler names (joss-t, joss-j, fifo, fair, capacity).
        #[arg(long, env = "GEOMR_SCHEDULER", value_delimiter = ',')]
        scheduler: Vec<String>,
        /// Replay an existing trace instead of generating one.
        #[arg(long, env = "GEOMR_TRACE")]
        trace: Option<PathBuf>,
        /// Output directory for reports.
        #[arg(long, env = "GEOMR_OUT", default_value = "out")]
        out: PathBuf,
        /// Also write a per-scheduler event log.
        #[arg(long, env = "GEOMR_EVENT_LOG")]
        event_log: bool,
    },
    /// Compare reports of one trace; normalizes mean JTT per profile.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// CSV output file (stdout when absent).
        #[arg(long, env = "GEOMR_OUT")]
        out: Option<PathBuf>,
    },
    /// Re-emit a JSON report as CSV or JSON.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long, env = "GEOMR_OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario file, or a preset name (`small`, `mixed`).
    #[arg(long, env = "GEOMR_CONFIG")]
    config: PathBuf,
    #[arg(long, env = "GEOMR_SEED_PLACEMENT")]
    seed_placement: Option<u64>,
    #[arg(long, env = "GEOMR_SEED_WORKLOAD")]
    seed_workload: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(s) = self.seed_placement {
            cfg.seeds.placement = s;
        }
        if let Some(s) = self.seed_workload {
            cfg.seeds.workload = s;
        }
        Ok(cfg)
    }
}

/// Exit status: 1 for configuration problems, 2 for simulation failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    use geomr::Error as E;
    match err.downcast_ref::<E>() {
        Some(
            E::Config { .. }
            | E::Topology(_)
            | E::Workload(_)
            | E::UnknownProfile(_)
            | E::TraceParse { .. }
            | E::EmptyTrace
            | E::RegistryParse { .. }
            | E::UnknownFormat(_)
            | E::Io { .. },
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOMR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenerateTrace { scenario, out } => generate_trace(&scenario, &out),
        Command::Run {
            scenario,
            scheduler,
            trace,
            out,
            event_log,
        } => run(&scenario, &scheduler, trace, &out, event_log),
        Command::Compare { reports, out } => compare(&reports, out.as_deref()),
        Command::Report {
            report,
            format,
            out,
        } => report_cmd(&report, &format, out.as_deref()),
    }
}

fn trace_summary(trace: &WorkloadTrace) -> String {
    let mut mix: BTreeMap<(&str, u64), usize> = BTreeMap::new();
    for j in &trace.jobs {
        *mix.entry((j.profile.as_str(), j.input_bytes)).or_default() += 1;
    }
    let mut arrivals: Vec<f64> = trace.jobs.iter().map(|j| j.arrival).collect();
    arrivals.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = arrivals.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_gap = if gaps.is_empty() {
        0.0
    } else {
        gaps.iter().sum::<f64>() / gaps.len() as f64
    };
    let mut s = format!(
        "{} jobs, {} map tasks, mean interval {mean_gap:.2} s\n",
        trace.jobs.len(),
        trace.total_map_tasks()
    );
    for ((p, bytes), n) in mix {
        let _ = writeln!(s, "  {p:<6} {:>6} MiB x {n}", bytes / geomr::workload::MIB);
    }
    s
}

fn generate_trace(args: &ScenarioArgs, out: &Path) -> Result<()> {
    let cfg = args.load()?;
    let trace = cfg.generate_trace()?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_trace(&trace, out)?;
    print!("{}", trace_summary(&trace));
    println!("wrote {}", out.display());
    Ok(())
}

fn run(
    args: &ScenarioArgs,
    schedulers: &[String],
    trace: Option<PathBuf>,
    out: &Path,
    event_log: bool,
) -> Result<()> {
    let mut cfg = args.load()?;
    if let Some(t) = trace {
        cfg.trace = Some(t);
    }
    if !schedulers.is_empty() {
        cfg.schedulers = schedulers.to_vec();
    }
    let kinds = cfg.scheduler_kinds()?;
    let scenario = Scenario::prepare(&cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_trace(&scenario.trace, &out.join("trace.txt"))?;
    info!(
        "running {} scheduler(s) on {} jobs",
        kinds.len(),
        scenario.trace.jobs.len()
    );

    let started = std::time::Instant::now();
    let outcomes = scenario.run_all(&kinds, event_log);
    let mut rows = Vec::new();
    let mut failed = None;
    for (kind, outcome) in kinds.iter().zip(outcomes) {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{kind}: {e}");
                failed.get_or_insert(e);
                continue;
            }
        };
        let r = &outcome.report;
        r.emit(ReportFormat::Json, &out.join(format!("{kind}.json")))?;
        r.emit(ReportFormat::Csv, &out.join(format!("{kind}.csv")))?;
        if event_log {
            let path = out.join(format!("{kind}.events.log"));
            let mut text = outcome.event_log.join("\n");
            text.push('\n');
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        rows.extend(r.summary());
        let rates = r.locality_rates().expect("non-empty trace");
        let (load, load_std) = r.vps_load_stats();
        println!(
            "{kind:<9} vps={:.3} cen={:.3} off_cen={:.3} reduce_loc={:.3} INT={:.2} GiB mean_jtt={:.1}s wtt={:.1}s load={load:.2}±{load_std:.2}",
            rates.vps,
            rates.cen,
            rates.off_cen,
            r.reduce_locality().rate,
            r.int_bytes as f64 / geomr::workload::GIB as f64,
            r.mean_jtt().unwrap_or(0.0),
            r.wtt(),
        );
    }
    std::fs::write(out.join("summary.csv"), geomr::metrics::rows_to_csv(&rows))
        .with_context(|| format!("writing summary in {}", out.display()))?;
    eprintln!(
        "simulated in {:.2?}{}; reports in {}",
        started.elapsed(),
        peak_memory(),
        out.display()
    );
    match failed {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Peak resident set size, where the platform exposes it.
fn peak_memory() -> String {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .map(|l| format!(", peak RSS {}", l["VmHWM:".len()..].trim()))
        })
        .unwrap_or_default()
}

/// Mean JTT per profile and scheduler, normalized by the per-profile
/// minimum.
fn compare_table(reports: &[MetricsReport]) -> Result<String> {
    let first = &reports[0];
    for r in &reports[1..] {
        if r.trace_fingerprint != first.trace_fingerprint || r.workload != first.workload {
            bail!(geomr::Error::Config {
                field: "reports".into(),
                msg: format!(
                    "report for {} comes from a different trace ({}/{} vs {}/{})",
                    r.scheduler,
                    r.workload,
                    r.trace_fingerprint,
                    first.workload,
                    first.trace_fingerprint
                ),
            });
        }
    }
    let mut profiles: Vec<String> = first.jobs.iter().map(|j| j.profile.clone()).collect();
    profiles.sort();
    profiles.dedup();
    profiles.push("all".into());

    let mut out = String::from(
        "profile,scheduler,mean_jtt_s,normalized_jtt,mean_jtt_excl_bootstrap_s,int_bytes,wtt_s\n",
    );
    for p in &profiles {
        let means: Vec<f64> = reports
            .iter()
            .map(|r| {
                geomr::metrics::mean_jtt(r.jobs.iter().filter(|j| p == "all" || &j.profile == p))
                    .unwrap_or(0.0)
            })
            .collect();
        let min = means.iter().copied().fold(f64::INFINITY, f64::min);
        for (r, mean) in reports.iter().zip(&means) {
            let excl = geomr::metrics::mean_jtt(r.jobs.iter().filter(|j| {
                (p == "all" || &j.profile == p) && j.route != geomr::sched::Route::FifoBootstrap
            }));
            let _ = writeln!(
                out,
                "{p},{},{mean},{:.3},{},{},{}",
                r.scheduler,
                if min > 0.0 { mean / min } else { 1.0 },
                excl.map(|v| v.to_string()).unwrap_or_default(),
                r.int_bytes,
                r.wtt()
            );
        }
    }
    Ok(out)
}

fn compare(paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let reports = paths
        .iter()
        .map(|p| MetricsReport::load(p))
        .collect::<geomr::Result<Vec<_>>>()?;
    let table = compare_table(&reports)?;
    write_or_print(&table, out)
}

fn report_cmd(path: &Path, format: &str, out: Option<&Path>) -> Result<()> {
    let report = MetricsReport::load(path)?;
    let text = match format.parse::<ReportFormat>()? {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json()?,
    };
    write_or_print(&text, out)
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn config_errors_exit_with_one() {
        let e: anyhow::Error = geomr::Error::Config {
            field: "x".into(),
            msg: "y".into(),
        }
        .into();
        assert_eq!(exit_code(&e), 1);
        let e: anyhow::Error = geomr::Error::Stalled {
            time: 1.0,
            msg: "stuck".into(),
        }
        .into();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn trace_summary_counts_mix() {
        let cfg = ScenarioConfig::preset("mixed").unwrap();
        let t = cfg.generate_trace().unwrap();
        let s = trace_summary(&t);
        assert!(s.starts_with("100 jobs, 2904 map tasks"));
        assert!(s.contains("Permu    5120 MiB x 19"));
    }
}
