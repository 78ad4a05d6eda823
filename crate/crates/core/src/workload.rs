//! Benchmark profiles, synthetic job traces and task expansion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::cluster::JobId;
use crate::error::{Error, Result};

pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

/// Standard deviation applied to per-task filtering percentages of jobs on
/// web-document input.
pub const WEB_FP_STD: f64 = 0.03;
pub const NON_WEB_FP_STD: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProfile {
    pub name: String,
    /// Opaque input-data type, part of the registry key.
    pub input_type: String,
    /// Map-output bytes over map-input bytes.
    pub fp_mean: f64,
    pub fp_std: f64,
    /// Bytes per second.
    pub map_rate: f64,
    pub reduce_rate: f64,
}

impl BenchmarkProfile {
    pub fn new(name: &str, input_type: &str, fp_mean: f64, fp_std: f64) -> Self {
        BenchmarkProfile {
            name: name.to_string(),
            input_type: input_type.to_string(),
            fp_mean,
            fp_std,
            map_rate: (16 * MIB) as f64,
            reduce_rate: (16 * MIB) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Workload(format!("profile {}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return bad("name must be a non-empty token");
        }
        if self.input_type.is_empty() {
            return bad("input_type must be non-empty");
        }
        if !(self.fp_mean >= 0.0 && self.fp_mean.is_finite()) {
            return bad("fp_mean must be ≥ 0");
        }
        if !(self.fp_std >= 0.0 && self.fp_std.is_finite()) {
            return bad("fp_std must be ≥ 0");
        }
        if !(self.map_rate > 0.0 && self.reduce_rate > 0.0) {
            return bad("compute rates must be > 0");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable(BTreeMap<String, BenchmarkProfile>);

impl Default for ProfileTable {
    /// WC, SC, II and Grep run on web documents, Permu on plain text.
    fn default() -> Self {
        let mut table = ProfileTable(BTreeMap::new());
        for p in [
            BenchmarkProfile::new("WC", "web", 1.039, WEB_FP_STD),
            BenchmarkProfile::new("SC", "web", 0.569, WEB_FP_STD),
            BenchmarkProfile::new("II", "web", 1.166, WEB_FP_STD),
            BenchmarkProfile::new("Grep", "web", 0.10, WEB_FP_STD),
            BenchmarkProfile::new("Permu", "non-web", 3.0, NON_WEB_FP_STD),
        ] {
            table.insert(p);
        }
        table
    }
}

impl ProfileTable {
    pub fn empty() -> Self {
        ProfileTable(BTreeMap::new())
    }

    pub fn insert(&mut self, profile: BenchmarkProfile) {
        self.0.insert(profile.name.clone(), profile);
    }

    pub fn get(&self, name: &str) -> Result<&BenchmarkProfile> {
        self.0
            .get(name)
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &BenchmarkProfile> {
        self.0.values()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: JobId,
    pub profile: String,
    pub input_bytes: u64,
    pub reduce_tasks: u32,
    /// Seconds from simulation start.
    pub arrival: f64,
    /// 1-based submission order.
    pub order: u32,
}

impl JobSpec {
    /// `⌈|D| / S⌉`.
    pub fn block_count(&self, block_size: u64) -> usize {
        self.input_bytes.div_ceil(block_size) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadTrace {
    pub block_size: u64,
    pub seed: u64,
    pub jobs: Vec<JobSpec>,
}

impl WorkloadTrace {
    pub fn total_map_tasks(&self) -> usize {
        self.jobs
            .iter()
            .map(|j| j.block_count(self.block_size))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Workload("block size must be > 0".into()));
        }
        if self.jobs.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let mut ids = BTreeSet::new();
        let mut orders = BTreeSet::new();
        let mut last = 0.0;
        for job in &self.jobs {
            if !ids.insert(job.id) {
                return Err(Error::Workload(format!("duplicate job id {}", job.id)));
            }
            orders.insert(job.order);
            if job.input_bytes == 0 {
                return Err(Error::Workload(format!("job {} has empty input", job.id)));
            }
            if job.reduce_tasks == 0 {
                return Err(Error::Workload(format!("job {} needs r ≥ 1", job.id)));
            }
            if !(job.arrival >= 0.0 && job.arrival.is_finite()) {
                return Err(Error::Workload(format!(
                    "job {} has negative arrival",
                    job.id
                )));
            }
            if job.arrival < last {
                return Err(Error::Workload(format!(
                    "arrival times must be non-decreasing (job {})",
                    job.id
                )));
            }
            last = job.arrival;
        }
        let n = self.jobs.len() as u32;
        if orders.len() != self.jobs.len()
            || orders.first() != Some(&1)
            || orders.last() != Some(&n)
        {
            return Err(Error::Workload(
                "order indices must be a permutation of 1..N".into(),
            ));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("S={} seed={}\n", self.block_size, self.seed);
        for j in &self.jobs {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                j.id, j.profile, j.input_bytes, j.reduce_tasks, j.arrival, j.order
            );
        }
        out
    }

    /// Parses the line format written by [`WorkloadTrace::to_text`]. `origin`
    /// only labels diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::TraceParse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let Some((hline, header)) = lines.next() else {
            return Err(Error::EmptyTrace);
        };
        let mut block_size = None;
        let mut seed = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("S", v)) => {
                    block_size = Some(
                        v.parse::<u64>()
                            .map_err(|e| err(hline, format!("S: {e}")))?,
                    )
                }
                Some(("seed", v)) => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|e| err(hline, format!("seed: {e}")))?,
                    )
                }
                _ => return Err(err(hline, format!("unexpected header field `{field}`"))),
            }
        }
        let block_size = block_size.ok_or_else(|| err(hline, "header is missing S".into()))?;
        let seed = seed.ok_or_else(|| err(hline, "header is missing seed".into()))?;

        let mut jobs = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(err(n, format!("expected 6 fields, found {}", fields.len())));
            }
            let num = |idx: usize, name: &str| -> Result<u64> {
                fields[idx]
                    .parse::<u64>()
                    .map_err(|e| err(n, format!("{name}: {e}")))
            };
            let arrival: f64 = fields[4]
                .parse()
                .map_err(|e| err(n, format!("arrival_seconds: {e}")))?;
            if !(arrival >= 0.0 && arrival.is_finite()) {
                return Err(err(
                    n,
                    format!("arrival_seconds: negative or non-finite `{}`", fields[4]),
                ));
            }
            let input_bytes = num(2, "input_bytes")?;
            if input_bytes == 0 {
                return Err(err(n, "input_bytes: must be > 0".into()));
            }
            let r = num(3, "r")?;
            if r == 0 {
                return Err(err(n, "r: must be ≥ 1".into()));
            }
            jobs.push(JobSpec {
                id: num(0, "job_id")? as JobId,
                profile: fields[1].to_string(),
                input_bytes,
                reduce_tasks: r as u32,
                arrival,
                order: num(5, "order_index")? as u32,
            });
        }
        if jobs.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let trace = WorkloadTrace {
            block_size,
            seed,
            jobs,
        };
        trace.validate().map_err(|e| err(0, e.to_string()))?;
        Ok(trace)
    }
}

pub fn save_trace(trace: &WorkloadTrace, path: &Path) -> Result<()> {
    std::fs::write(path, trace.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_trace(path: &Path) -> Result<WorkloadTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    WorkloadTrace::parse(&text, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrivalModel {
    /// Poisson arrivals.
    Exponential { mean: f64 },
    /// Inter-arrival gaps matching a mean and standard deviation.
    Lognormal { mean: f64, std: f64 },
    /// Explicit gap before each job; the first entry is the first arrival.
    Intervals { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobGroup {
    pub profile: String,
    pub count: usize,
    pub input_bytes: u64,
}

fn default_reduce_tasks() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub groups: Vec<JobGroup>,
    pub arrival: ArrivalModel,
    #[serde(default = "default_reduce_tasks")]
    pub reduce_tasks: u32,
    /// Uniform ±fraction applied to each job's input size.
    #[serde(default)]
    pub size_jitter: f64,
}

impl WorkloadConfig {
    pub fn job_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }
}

enum GapSampler {
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
    List(Vec<f64>),
}

impl GapSampler {
    fn new(model: &ArrivalModel, jobs: usize) -> Result<Self> {
        let bad = |m: &str| Err(Error::Workload(m.to_string()));
        match model {
            ArrivalModel::Exponential { mean } => {
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("mean interval must be > 0");
                }
                Ok(GapSampler::Exp(
                    Exp::new(1.0 / mean).expect("positive rate"),
                ))
            }
            ArrivalModel::Lognormal { mean, std } => {
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("mean interval must be > 0");
                }
                if !(*std >= 0.0 && std.is_finite()) {
                    return bad("interval std must be ≥ 0");
                }
                let sigma2 = (1.0 + (std / mean).powi(2)).ln();
                let mu = mean.ln() - sigma2 / 2.0;
                Ok(GapSampler::LogNormal(
                    LogNormal::new(mu, sigma2.sqrt()).expect("finite parameters"),
                ))
            }
            ArrivalModel::Intervals { values } => {
                if values.len() != jobs {
                    return Err(Error::Workload(format!(
                        "interval list has {} entries for {} jobs",
                        values.len(),
                        jobs
                    )));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return bad("intervals must be ≥ 0");
                }
                Ok(GapSampler::List(values.clone()))
            }
        }
    }

    /// Gap before the `i`-th arriving job. Random models start the first
    /// job at t = 0.
    fn gap<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match self {
            GapSampler::List(v) => v[i],
            _ if i == 0 => 0.0,
            GapSampler::Exp(d) => d.sample(rng),
            GapSampler::LogNormal(d) => d.sample(rng),
        }
    }
}

/// Builds the configured job mix, shuffles it into a submission order and
/// stamps arrival times. Job ids follow the group listing; `order` is the
/// shuffled position.
pub fn generate_trace(
    config: &WorkloadConfig,
    profiles: &ProfileTable,
    block_size: u64,
    seed: u64,
) -> Result<WorkloadTrace> {
    if block_size == 0 {
        return Err(Error::Workload("block size must be > 0".into()));
    }
    if config.reduce_tasks == 0 {
        return Err(Error::Workload("reduce_tasks must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&config.size_jitter) {
        return Err(Error::Workload("size_jitter must lie in [0, 1)".into()));
    }
    let n = config.job_count();
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    let gaps = GapSampler::new(&config.arrival, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut jobs = Vec::with_capacity(n);
    for group in &config.groups {
        profiles.get(&group.profile)?;
        if group.input_bytes == 0 {
            return Err(Error::Workload(format!(
                "group {} has zero input size",
                group.profile
            )));
        }
        for _ in 0..group.count {
            let input_bytes = if config.size_jitter > 0.0 {
                let f = rng.random_range(-config.size_jitter..=config.size_jitter);
                ((group.input_bytes as f64 * (1.0 + f)).round() as u64).max(1)
            } else {
                group.input_bytes
            };
            jobs.push(JobSpec {
                id: jobs.len() as JobId + 1,
                profile: group.profile.clone(),
                input_bytes,
                reduce_tasks: config.reduce_tasks,
                arrival: 0.0,
                order: 0,
            });
        }
    }
    jobs.shuffle(&mut rng);

    let mut t = 0.0;
    for (i, job) in jobs.iter_mut().enumerate() {
        t += gaps.gap(i, &mut rng);
        job.arrival = t;
        job.order = i as u32 + 1;
    }
    Ok(WorkloadTrace {
        block_size,
        seed,
        jobs,
    })
}

/// Sizes of `B_1..B_m`: all equal to `S` except a possibly shorter last one.
pub fn block_sizes(input_bytes: u64, block_size: u64) -> Result<Vec<u64>> {
    if block_size == 0 {
        return Err(Error::Workload("block size must be > 0".into()));
    }
    if input_bytes == 0 {
        return Err(Error::Workload("job has empty input".into()));
    }
    let m = input_bytes.div_ceil(block_size);
    let mut sizes = vec![block_size; m as usize];
    sizes[m as usize - 1] = input_bytes - (m - 1) * block_size;
    Ok(sizes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    /// 0-based block index.
    Map(usize),
    /// 0-based reduce index.
    Reduce(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskRef {
    pub job: JobId,
    pub kind: TaskKind,
}

impl TaskRef {
    pub fn map(job: JobId, block: usize) -> Self {
        TaskRef {
            job,
            kind: TaskKind::Map(block),
        }
    }

    pub fn reduce(job: JobId, index: usize) -> Self {
        TaskRef {
            job,
            kind: TaskKind::Reduce(index),
        }
    }
}

impl std::fmt::Display for TaskRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            TaskKind::Map(i) => write!(f, "J{}.M{}", self.job, i + 1),
            TaskKind::Reduce(j) => write!(f, "J{}.R{}", self.job, j + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskState {
    Pending,
    Queued,
    Running,
    Done,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskInstance {
    pub task: TaskRef,
    pub state: TaskState,
    /// Input block size for maps.
    pub input_bytes: u64,
    /// Per-task filtering percentage; maps only.
    pub fp: Option<f64>,
}

/// Expands a job into its `m` map tasks and `r` reduce tasks.
pub fn expand_tasks(
    job: &JobSpec,
    block_size: u64,
) -> Result<(Vec<TaskInstance>, Vec<TaskInstance>)> {
    let sizes = block_sizes(job.input_bytes, block_size)?;
    let maps = sizes
        .into_iter()
        .enumerate()
        .map(|(i, size)| TaskInstance {
            task: TaskRef::map(job.id, i),
            state: TaskState::Pending,
            input_bytes: size,
            fp: None,
        })
        .collect();
    let reduces = (0..job.reduce_tasks as usize)
        .map(|j| TaskInstance {
            task: TaskRef::reduce(job.id, j),
            state: TaskState::Pending,
            input_bytes: 0,
            fp: None,
        })
        .collect();
    Ok((maps, reduces))
}

/// One draw of a map task's filtering percentage: normal around the
/// profile mean, resampled while negative.
pub fn sample_task_fp<R: Rng + ?Sized>(profile: &BenchmarkProfile, rng: &mut R) -> f64 {
    if profile.fp_std == 0.0 {
        return profile.fp_mean;
    }
    let normal = Normal::new(profile.fp_mean, profile.fp_std).expect("finite std");
    // fp_mean ≥ 0, so each draw is accepted with probability ≥ 1/2.
    for _ in 0..64 {
        let v = normal.sample(rng);
        if v >= 0.0 {
            return v;
        }
    }
    0.0
}

/// Per-map filtering percentages for every job of a trace, drawn once so
/// that every scheduler sees identical map-output sizes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FpSamples(BTreeMap<JobId, Vec<f64>>);

impl FpSamples {
    pub fn generate(trace: &WorkloadTrace, profiles: &ProfileTable, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids: Vec<&JobSpec> = trace.jobs.iter().collect();
        ids.sort_by_key(|j| j.id);
        let mut out = BTreeMap::new();
        for job in ids {
            let profile = profiles.get(&job.profile)?;
            let m = job.block_count(trace.block_size);
            out.insert(
                job.id,
                (0..m).map(|_| sample_task_fp(profile, &mut rng)).collect(),
            );
        }
        Ok(FpSamples(out))
    }

    pub fn insert(&mut self, job: JobId, fps: Vec<f64>) {
        self.0.insert(job, fps);
    }

    pub fn job(&self, job: JobId) -> &[f64] {
        self.0.get(&job).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, job: JobId, block: usize) -> f64 {
        self.job(job)[block]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> WorkloadConfig {
        WorkloadConfig {
            groups: [
                ("WC", 60),
                ("SC", 59),
                ("II", 59),
                ("Grep", 61),
                ("Permu", 61),
            ]
            .into_iter()
            .map(|(p, c)| JobGroup {
                profile: p.into(),
                count: c,
                input_bytes: GIB,
            })
            .collect(),
            arrival: ArrivalModel::Lognormal {
                mean: 27.70,
                std: 36.52,
            },
            reduce_tasks: 1,
            size_jitter: 0.0,
        }
    }

    #[test]
    fn small_workload_has_300_jobs_and_2400_maps() {
        let trace =
            generate_trace(&small_config(), &ProfileTable::default(), 128 * MIB, 5).unwrap();
        assert_eq!(trace.jobs.len(), 300);
        assert_eq!(trace.total_map_tasks(), 2400);
        let permu = trace.jobs.iter().filter(|j| j.profile == "Permu").count();
        assert_eq!(permu, 61);
        trace.validate().unwrap();
        assert_eq!(trace.jobs[0].arrival, 0.0);
    }

    #[test]
    fn mixed_workload_has_100_jobs() {
        let g = |p: &str, c, gb| JobGroup {
            profile: p.into(),
            count: c,
            input_bytes: gb * GIB,
        };
        let cfg = WorkloadConfig {
            groups: vec![
                g("WC", 26, 1),
                g("II", 20, 1),
                g("SC", 10, 1),
                g("Grep", 5, 1),
                g("Permu", 3, 1),
                g("Permu", 19, 5),
                g("WC", 6, 12),
                g("II", 11, 12),
            ],
            arrival: ArrivalModel::Exponential { mean: 42.26 },
            reduce_tasks: 1,
            size_jitter: 0.0,
        };
        let trace = generate_trace(&cfg, &ProfileTable::default(), 128 * MIB, 1).unwrap();
        assert_eq!(trace.jobs.len(), 100);
        assert_eq!(
            trace
                .jobs
                .iter()
                .filter(|j| j.input_bytes == 12 * GIB)
                .count(),
            17
        );
        assert_eq!(
            trace
                .jobs
                .iter()
                .filter(|j| j.profile == "Permu" && j.input_bytes == 5 * GIB)
                .count(),
            19
        );
    }

    #[test]
    fn singleton_interval_list() {
        let cfg = WorkloadConfig {
            groups: vec![JobGroup {
                profile: "WC".into(),
                count: 1,
                input_bytes: GIB,
            }],
            arrival: ArrivalModel::Intervals { values: vec![0.0] },
            reduce_tasks: 1,
            size_jitter: 0.0,
        };
        let trace = generate_trace(&cfg, &ProfileTable::default(), 128 * MIB, 0).unwrap();
        assert_eq!(trace.jobs.len(), 1);
        assert_eq!(trace.jobs[0].arrival, 0.0);
        assert_eq!(trace.jobs[0].order, 1);
    }

    #[test]
    fn generation_errors() {
        let mut cfg = small_config();
        cfg.groups[0].profile = "Sort".into();
        assert!(matches!(
            generate_trace(&cfg, &ProfileTable::default(), 128 * MIB, 0),
            Err(Error::UnknownProfile(_))
        ));
        let mut cfg = small_config();
        cfg.arrival = ArrivalModel::Exponential { mean: 0.0 };
        assert!(generate_trace(&cfg, &ProfileTable::default(), 128 * MIB, 0).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_trace(&small_config(), &ProfileTable::default(), 128 * MIB, 9).unwrap();
        let b = generate_trace(&small_config(), &ProfileTable::default(), 128 * MIB, 9).unwrap();
        let c = generate_trace(&small_config(), &ProfileTable::default(), 128 * MIB, 10).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn expand_counts() {
        let job = |bytes| JobSpec {
            id: 1,
            profile: "WC".into(),
            input_bytes: bytes,
            reduce_tasks: 1,
            arrival: 0.0,
            order: 1,
        };
        let (maps, reduces) = expand_tasks(&job(GIB), 128 * MIB).unwrap();
        assert_eq!((maps.len(), reduces.len()), (8, 1));
        // ⌈12·1024 / 128⌉ = 96
        let (maps, _) = expand_tasks(&job(12 * GIB), 128 * MIB).unwrap();
        assert_eq!(maps.len(), 96);
        let (maps, _) = expand_tasks(&job(1), 128 * MIB).unwrap();
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].input_bytes, 1);
        assert!(expand_tasks(&job(0), 128 * MIB).is_err());
    }

    #[test]
    fn remainder_block() {
        assert_eq!(block_sizes(300, 128).unwrap(), vec![128, 128, 44]);
    }

    #[test]
    fn fp_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let exact = BenchmarkProfile::new("Permu", "non-web", 3.0, 0.0);
        assert_eq!(sample_task_fp(&exact, &mut rng), 3.0);
        let grep = BenchmarkProfile::new("Grep", "web", 0.10, 0.15);
        for _ in 0..1000 {
            assert!(sample_task_fp(&grep, &mut rng) >= 0.0);
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| sample_task_fp(&grep, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
    }

    #[test]
    fn trace_parse_errors() {
        let neg = "S=134217728 seed=1\n1 WC 1073741824 1 -5 1\n";
        match WorkloadTrace::parse(neg, "t.trace") {
            Err(Error::TraceParse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("arrival_seconds"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            WorkloadTrace::parse("", "e").unwrap_err().to_string(),
            "no jobs"
        );
        assert!(matches!(
            WorkloadTrace::parse("S=1 seed=1\n", "e"),
            Err(Error::EmptyTrace)
        ));
        assert!(WorkloadTrace::parse("S=1 seed=1\n1 WC 10 1 0\n", "e").is_err());
    }
}
