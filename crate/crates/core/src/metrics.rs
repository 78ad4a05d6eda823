//! Evaluation metrics and report serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::JobClass;
use crate::cluster::{JobId, VpsId};
use crate::error::{Error, Result};
use crate::sched::Route;
use crate::workload::{TaskKind, TaskRef};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 14] = [
    "scheduler",
    "workload",
    "profile",
    "job_class",
    "jobs",
    "vps_rate",
    "cen_rate",
    "off_cen_rate",
    "reduce_locality",
    "int_bytes",
    "mean_jtt_s",
    "wtt_s",
    "vps_load_mean",
    "vps_load_std",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: JobId,
    pub profile: String,
    /// Class by the profile's nominal filtering percentage, or the class the
    /// scheduler assigned when it knew one.
    pub class: JobClass,
    pub route: Route,
    pub order: u32,
    pub arrival: f64,
    pub completion: f64,
    pub map_count: u64,
    pub vps_local: u64,
    pub cen_local: u64,
    pub off_cen: u64,
    pub reduce_input_bytes: u64,
    pub reduce_local_bytes: u64,
    pub int_bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub task: TaskRef,
    pub vps: VpsId,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub scheduler: String,
    pub workload: String,
    pub trace_fingerprint: String,
    pub seed: u64,
    pub jobs: Vec<JobRecord>,
    pub int_bytes: u64,
    /// Executed map tasks per VPS, indexed by flat VPS id.
    pub vps_map_counts: Vec<u64>,
    pub completion_series: Vec<(f64, f64)>,
    pub assignments: Vec<Assignment>,
    pub events_processed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalityRates {
    pub vps: f64,
    pub cen: f64,
    pub off_cen: f64,
}

impl LocalityRates {
    pub fn from_counts(vps: u64, cen: u64, total: u64) -> Option<Self> {
        if total == 0 {
            return None;
        }
        let m = total as f64;
        let vps = vps as f64 / m;
        let cen = cen as f64 / m;
        Some(LocalityRates {
            vps,
            cen,
            off_cen: 1.0 - (vps + cen),
        })
    }

    pub fn sum(&self) -> f64 {
        (self.vps + self.cen) + self.off_cen
    }
}

/// Byte-weighted reduce-data locality. Zero input counts as fully local and
/// sets `flagged`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReduceLocality {
    pub rate: f64,
    pub flagged: bool,
}

impl ReduceLocality {
    pub fn from_bytes(local: u64, total: u64) -> Self {
        if total == 0 {
            ReduceLocality {
                rate: 1.0,
                flagged: true,
            }
        } else {
            ReduceLocality {
                rate: local as f64 / total as f64,
                flagged: false,
            }
        }
    }
}

pub fn locality_rates<'a>(jobs: impl IntoIterator<Item = &'a JobRecord>) -> Option<LocalityRates> {
    let (mut v, mut c, mut m) = (0, 0, 0);
    for j in jobs {
        v += j.vps_local;
        c += j.cen_local;
        m += j.map_count;
    }
    LocalityRates::from_counts(v, c, m)
}

pub fn reduce_locality_rate<'a>(jobs: impl IntoIterator<Item = &'a JobRecord>) -> ReduceLocality {
    let (mut local, mut total) = (0, 0);
    for j in jobs {
        local += j.reduce_local_bytes;
        total += j.reduce_input_bytes;
    }
    ReduceLocality::from_bytes(local, total)
}

pub fn jtt(job: &JobRecord) -> f64 {
    job.completion - job.arrival
}

pub fn mean_jtt<'a>(jobs: impl IntoIterator<Item = &'a JobRecord>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for j in jobs {
        sum += jtt(j);
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn wtt<'a>(jobs: impl IntoIterator<Item = &'a JobRecord>) -> Option<f64> {
    let mut start = f64::INFINITY;
    let mut end = f64::NEG_INFINITY;
    for j in jobs {
        start = start.min(j.arrival);
        end = end.max(j.completion);
    }
    (start.is_finite() && end.is_finite()).then_some(end - start)
}

/// Mean and population standard deviation.
pub fn vps_load_stats(counts: &[u64]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let var = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// `(completion time, fraction of jobs completed)` per job, time-ordered.
pub fn completion_series(jobs: &[JobRecord]) -> Vec<(f64, f64)> {
    let mut times: Vec<f64> = jobs.iter().map(|j| j.completion).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    times
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, (i + 1) as f64 / n))
        .collect()
}

impl MetricsReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scheduler: &str,
        workload: &str,
        trace_fingerprint: String,
        seed: u64,
        jobs: Vec<JobRecord>,
        int_bytes: u64,
        vps_map_counts: Vec<u64>,
        assignments: Vec<Assignment>,
        events_processed: u64,
    ) -> Self {
        let completion_series = completion_series(&jobs);
        MetricsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            scheduler: scheduler.to_string(),
            workload: workload.to_string(),
            trace_fingerprint,
            seed,
            jobs,
            int_bytes,
            vps_map_counts,
            completion_series,
            assignments,
            events_processed,
        }
    }

    pub fn total_maps(&self) -> u64 {
        self.jobs.iter().map(|j| j.map_count).sum()
    }

    pub fn locality_rates(&self) -> Option<LocalityRates> {
        locality_rates(&self.jobs)
    }

    pub fn reduce_locality(&self) -> ReduceLocality {
        reduce_locality_rate(&self.jobs)
    }

    pub fn wtt(&self) -> f64 {
        wtt(&self.jobs).unwrap_or(0.0)
    }

    pub fn mean_jtt(&self) -> Option<f64> {
        mean_jtt(&self.jobs)
    }

    /// Mean JTT over jobs that did not take the bootstrap path.
    pub fn mean_jtt_excluding_bootstrap(&self) -> Option<f64> {
        mean_jtt(self.jobs.iter().filter(|j| j.route != Route::FifoBootstrap))
    }

    pub fn vps_load_stats(&self) -> (f64, f64) {
        vps_load_stats(&self.vps_map_counts)
    }

    pub fn job(&self, id: JobId) -> Option<&JobRecord> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// Summary rows: one per `(profile, class)` group, then one per profile
    /// and a final `all/all` row.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(String, String), Vec<&JobRecord>> = BTreeMap::new();
        for j in &self.jobs {
            groups
                .entry((j.profile.clone(), j.class.label().to_string()))
                .or_default()
                .push(j);
        }
        let mut per_profile: BTreeMap<String, Vec<&JobRecord>> = BTreeMap::new();
        for j in &self.jobs {
            per_profile.entry(j.profile.clone()).or_default().push(j);
        }
        let mut rows = Vec::new();
        for ((profile, class), jobs) in &groups {
            rows.push(self.row(profile, class, jobs));
        }
        for (profile, jobs) in &per_profile {
            if groups.keys().filter(|(p, _)| p == profile).count() > 1 {
                rows.push(self.row(profile, "all", jobs));
            }
        }
        let all: Vec<&JobRecord> = self.jobs.iter().collect();
        rows.push(self.row("all", "all", &all));
        rows
    }

    fn row(&self, profile: &str, class: &str, jobs: &[&JobRecord]) -> SummaryRow {
        let rates = locality_rates(jobs.iter().copied());
        let (load_mean, load_std) = if jobs.len() == self.jobs.len() {
            self.vps_load_stats()
        } else {
            let ids: std::collections::BTreeSet<JobId> = jobs.iter().map(|j| j.id).collect();
            let mut counts = vec![0u64; self.vps_map_counts.len()];
            for a in &self.assignments {
                if matches!(a.task.kind, TaskKind::Map(_)) && ids.contains(&a.task.job) {
                    if let Some(c) = counts.get_mut(a.vps.0) {
                        *c += 1;
                    }
                }
            }
            vps_load_stats(&counts)
        };
        SummaryRow {
            scheduler: self.scheduler.clone(),
            workload: self.workload.clone(),
            profile: profile.to_string(),
            job_class: class.to_string(),
            jobs: jobs.len() as u64,
            vps_rate: rates.map(|r| r.vps),
            cen_rate: rates.map(|r| r.cen),
            off_cen_rate: rates.map(|r| r.off_cen),
            reduce_locality: reduce_locality_rate(jobs.iter().copied()).rate,
            int_bytes: jobs.iter().map(|j| j.int_bytes).sum(),
            mean_jtt_s: mean_jtt(jobs.iter().copied()).unwrap_or(0.0),
            wtt_s: wtt(jobs.iter().copied()).unwrap_or(0.0),
            vps_load_mean: load_mean,
            vps_load_std: load_std,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: MetricsReport = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema version {} (expected {REPORT_SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.summary())
    }

    pub fn emit(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let text = match format {
            ReportFormat::Json => self.to_json()?,
            ReportFormat::Csv => self.to_csv(),
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scheduler: String,
    pub workload: String,
    pub profile: String,
    pub job_class: String,
    pub jobs: u64,
    pub vps_rate: Option<f64>,
    pub cen_rate: Option<f64>,
    pub off_cen_rate: Option<f64>,
    pub reduce_locality: f64,
    pub int_bytes: u64,
    pub mean_jtt_s: f64,
    pub wtt_s: f64,
    pub vps_load_mean: f64,
    pub vps_load_std: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheduler,
            r.workload,
            r.profile,
            r.job_class,
            r.jobs,
            opt(r.vps_rate),
            opt(r.cen_rate),
            opt(r.off_cen_rate),
            r.reduce_locality,
            r.int_bytes,
            r.mean_jtt_s,
            r.wtt_s,
            r.vps_load_mean,
            r.vps_load_std
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Report("empty CSV".into()))?;
    if header != CSV_COLUMNS.join(",") {
        return Err(Error::Report(format!("unexpected CSV header `{header}`")));
    }
    let bad = |n: usize, what: &str| Error::Report(format!("CSV line {}: bad {what}", n + 2));
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(bad(n, "field count"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n, CSV_COLUMNS[i]));
        let opt_num = |i: usize| -> Result<Option<f64>> {
            if f[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(SummaryRow {
            scheduler: f[0].to_string(),
            workload: f[1].to_string(),
            profile: f[2].to_string(),
            job_class: f[3].to_string(),
            jobs: f[4].parse().map_err(|_| bad(n, "jobs"))?,
            vps_rate: opt_num(5)?,
            cen_rate: opt_num(6)?,
            off_cen_rate: opt_num(7)?,
            reduce_locality: num(8)?,
            int_bytes: f[9].parse().map_err(|_| bad(n, "int_bytes"))?,
            mean_jtt_s: num(10)?,
            wtt_s: num(11)?,
            vps_load_mean: num(12)?,
            vps_load_std: num(13)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: JobId, arrival: f64, completion: f64, v: u64, c: u64, m: u64) -> JobRecord {
        JobRecord {
            id,
            profile: "WC".into(),
            class: JobClass::SmallMh,
            route: Route::Baseline,
            order: id,
            arrival,
            completion,
            map_count: m,
            vps_local: v,
            cen_local: c,
            off_cen: m - v - c,
            reduce_input_bytes: 100,
            reduce_local_bytes: 50,
            int_bytes: 7,
        }
    }

    fn report(jobs: Vec<JobRecord>) -> MetricsReport {
        MetricsReport::new(
            "fifo",
            "test",
            "00".into(),
            1,
            jobs,
            7,
            vec![3, 5],
            vec![],
            0,
        )
    }

    #[test]
    fn locality_arithmetic() {
        let r = LocalityRates::from_counts(5, 3, 10).unwrap();
        assert_eq!((r.vps, r.cen), (0.5, 0.3));
        assert!((r.off_cen - 0.2).abs() < 1e-15);
        assert_eq!(r.sum(), 1.0);
        let r = LocalityRates::from_counts(4, 0, 4).unwrap();
        assert_eq!((r.vps, r.cen, r.off_cen), (1.0, 0.0, 0.0));
        assert!(LocalityRates::from_counts(0, 0, 0).is_none());
    }

    #[test]
    fn reduce_locality_cases() {
        assert_eq!(ReduceLocality::from_bytes(50, 100).rate, 0.5);
        assert_eq!(ReduceLocality::from_bytes(0, 100).rate, 0.0);
        let z = ReduceLocality::from_bytes(0, 0);
        assert!(z.flagged && z.rate == 1.0);
    }

    #[test]
    fn turnaround_times() {
        let a = rec(1, 10.0, 70.0, 1, 0, 1);
        assert_eq!(jtt(&a), 60.0);
        let jobs = vec![rec(1, 0.0, 50.0, 1, 0, 1), rec(2, 100.0, 150.0, 1, 0, 1)];
        assert_eq!(wtt(&jobs), Some(150.0));
        assert_eq!(wtt(&jobs[..1]), Some(jtt(&jobs[0])));
        assert_eq!(wtt(&[]), None);
    }

    #[test]
    fn load_stats() {
        assert_eq!(vps_load_stats(&[80; 30]), (80.0, 0.0));
        assert_eq!(vps_load_stats(&[10, 0]), (5.0, 5.0));
    }

    #[test]
    fn series_ends_at_one() {
        let jobs = vec![rec(1, 0.0, 9.0, 1, 0, 1), rec(2, 0.0, 3.0, 1, 0, 1)];
        assert_eq!(completion_series(&jobs), vec![(3.0, 0.5), (9.0, 1.0)]);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let r = report(vec![
            rec(1, 0.1, 7.3, 1, 1, 3),
            rec(2, 1.0 / 3.0, 9.0, 0, 0, 1),
        ]);
        let text = r.to_json().unwrap();
        let back = MetricsReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn csv_round_trip() {
        let r = report(vec![rec(1, 0.0, 7.3, 1, 1, 3)]);
        let text = r.to_csv();
        assert!(text.starts_with("scheduler,workload,profile,job_class,jobs,vps_rate,cen_rate,off_cen_rate,reduce_locality,int_bytes,mean_jtt_s,wtt_s,vps_load_mean,vps_load_std\n"));
        assert_eq!(parse_csv(&text).unwrap(), r.summary());
        assert_eq!(rows_to_csv(&parse_csv(&text).unwrap()), text);
    }

    #[test]
    fn unknown_format_rejected() {
        assert!("xml".parse::<ReportFormat>().is_err());
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let mut r = report(vec![rec(1, 0.0, 1.0, 1, 0, 1)]);
        r.schema_version = 99;
        let text = serde_json::to_string(&r).unwrap();
        assert!(MetricsReport::from_json(&text).is_err());
    }

    proptest! {
        #[test]
        fn rates_sum_to_one(m in 1u64..100_000, a in 0u64..100_000, b in 0u64..100_000) {
            let v = a % (m + 1);
            let c = b % (m - v + 1);
            let r = LocalityRates::from_counts(v, c, m).unwrap();
            prop_assert_eq!(r.sum(), 1.0);
            prop_assert!(r.off_cen >= -1e-15);
        }
    }
}
