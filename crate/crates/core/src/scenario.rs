//! Scenario configuration and the multi-scheduler experiment harness.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselinePolicy, BaselineScheduler, CapacityConfig};
use crate::classify::{job_hash, FpRegistry};
use crate::cluster::{BlockPlacement, ClusterTopology, DatacenterSpec, TopologySpec};
use crate::engine::{self, CostModel, RunInputs, RunOutcome};
use crate::error::{Error, Result};
use crate::joss::{Assigner, JossScheduler};
use crate::sched::{SchedulerKind, TaskScheduler};
use crate::workload::{
    load_trace, ArrivalModel, BenchmarkProfile, FpSamples, JobGroup, ProfileTable, WorkloadConfig,
    WorkloadTrace, MIB,
};

pub const SMALL_PRESET: &str = include_str!("../presets/small.scenario");
pub const MIXED_PRESET: &str = include_str!("../presets/mixed.scenario");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub placement: u64,
    pub workload: u64,
    pub fp: u64,
    pub engine: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub vps: usize,
    #[serde(default = "one")]
    pub map_slots: u32,
    #[serde(default = "one")]
    pub reduce_slots: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub datacenters: Vec<DcConfig>,
}

/// Rates in MiB/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub intra_vps_read_mib_s: f64,
    pub intra_dc_mib_s: f64,
    pub inter_dc_mib_s: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            intra_vps_read_mib_s: 128.0,
            intra_dc_mib_s: 64.0,
            inter_dc_mib_s: 16.0,
        }
    }
}

impl CostConfig {
    pub fn model(&self) -> CostModel {
        let m = MIB as f64;
        CostModel {
            intra_vps_read_rate: self.intra_vps_read_mib_s * m,
            intra_dc_bandwidth: self.intra_dc_mib_s * m,
            inter_dc_bandwidth: self.inter_dc_mib_s * m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    pub input_type: String,
    pub fp_mean: f64,
    pub fp_std: f64,
    #[serde(default = "default_rate")]
    pub map_mib_s: f64,
    #[serde(default = "default_rate")]
    pub reduce_mib_s: f64,
}

fn default_rate() -> f64 {
    16.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub profile: String,
    pub count: usize,
    pub input_mib: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub groups: Vec<GroupConfig>,
    pub arrival: ArrivalModel,
    #[serde(default = "one")]
    pub reduce_tasks: u32,
    #[serde(default)]
    pub size_jitter: f64,
}

impl WorkloadSection {
    pub fn to_config(&self) -> WorkloadConfig {
        WorkloadConfig {
            groups: self
                .groups
                .iter()
                .map(|g| JobGroup {
                    profile: g.profile.clone(),
                    count: g.count,
                    input_bytes: g.input_mib * MIB,
                })
                .collect(),
            arrival: self.arrival.clone(),
            reduce_tasks: self.reduce_tasks,
            size_jitter: self.size_jitter,
        }
    }
}

/// Initial content of the filtering-percentage registry.
#[derive(Clone, Debug, PartialEq)]
pub enum RegistryMode {
    /// Empty; every profile's first job takes the bootstrap path.
    Cold,
    /// Pre-filled with each profile's nominal mean.
    Warm,
    File(PathBuf),
}

impl RegistryMode {
    pub fn parse(s: &str) -> Self {
        match s {
            "cold" => RegistryMode::Cold,
            "warm" => RegistryMode::Warm,
            path => RegistryMode::File(PathBuf::from(path)),
        }
    }
}

fn default_registry() -> String {
    "warm".into()
}

fn default_block_mib() -> u64 {
    128
}

fn default_all() -> Vec<String> {
    SchedulerKind::ALL
        .iter()
        .map(|k| k.name().to_string())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_block_mib")]
    pub block_size_mib: u64,
    #[serde(default = "one_usize")]
    pub replication: usize,
    #[serde(default = "default_all")]
    pub schedulers: Vec<String>,
    /// `cold`, `warm`, or a registry file path.
    #[serde(default = "default_registry")]
    pub registry: String,
    /// Replay this trace instead of generating one from `workload`.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    pub seeds: Seeds,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub cost: CostConfig,
    /// Added to, or replacing entries of, the built-in profile table.
    #[serde(default)]
    pub profiles: Vec<ProfileConfig>,
    #[serde(default)]
    pub workload: Option<WorkloadSection>,
    #[serde(default)]
    pub capacity: Option<CapacityConfig>,
}

fn one_usize() -> usize {
    1
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "small" => SMALL_PRESET,
            "mixed" => MIXED_PRESET,
            other => return Err(Error::config("preset", format!("unknown preset `{other}`"))),
        };
        Self::parse(text, &format!("{name}.scenario"))
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| Error::config(origin, e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a file, or one of the built-in presets by name (`small`,
    /// `mixed`). Relative `trace` and registry paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            if let Some(name) = path.to_str() {
                if matches!(name, "small" | "mixed") {
                    return Self::preset(name);
                }
            }
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = cfg.trace.as_mut() {
            if t.is_relative() {
                *t = base.join(&*t);
            }
        }
        if let RegistryMode::File(p) = cfg.registry_mode() {
            if p.is_relative() {
                cfg.registry = base.join(p).display().to_string();
            }
        }
        Ok(cfg)
    }

    pub fn registry_mode(&self) -> RegistryMode {
        RegistryMode::parse(&self.registry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size_mib == 0 {
            return Err(Error::config("block_size_mib", "must be > 0"));
        }
        if self.replication == 0 {
            return Err(Error::config("replication", "must be ≥ 1"));
        }
        if self.topology.datacenters.len() < 2 {
            return Err(Error::config(
                "topology.datacenters",
                "at least 2 datacenters required",
            ));
        }
        for (i, dc) in self.topology.datacenters.iter().enumerate() {
            if dc.vps == 0 {
                return Err(Error::config(
                    format!("topology.datacenters[{i}].vps"),
                    "must be ≥ 1",
                ));
            }
        }
        self.cost.model().validate()?;
        if self.schedulers.is_empty() {
            return Err(Error::config(
                "schedulers",
                "at least one scheduler required",
            ));
        }
        for (i, s) in self.schedulers.iter().enumerate() {
            s.parse::<SchedulerKind>().map_err(|_| {
                Error::config(
                    format!("schedulers[{i}]"),
                    format!("unknown scheduler `{s}`"),
                )
            })?;
        }
        let profiles = self.profile_table()?;
        match (&self.workload, &self.trace) {
            (None, None) => {
                return Err(Error::config(
                    "workload",
                    "either `workload` or `trace` is required",
                ))
            }
            (Some(w), _) => {
                if w.groups.is_empty() {
                    return Err(Error::config(
                        "workload.groups",
                        "at least one group required",
                    ));
                }
                for (i, g) in w.groups.iter().enumerate() {
                    if profiles.get(&g.profile).is_err() {
                        return Err(Error::config(
                            format!("workload.groups[{i}].profile"),
                            format!("undefined profile `{}`", g.profile),
                        ));
                    }
                    if g.input_mib == 0 {
                        return Err(Error::config(
                            format!("workload.groups[{i}].input_mib"),
                            "must be > 0",
                        ));
                    }
                }
                if w.reduce_tasks == 0 {
                    return Err(Error::config("workload.reduce_tasks", "must be ≥ 1"));
                }
            }
            (None, Some(_)) => {}
        }
        if let Some(c) = &self.capacity {
            c.validate()?;
        }
        Ok(())
    }

    pub fn topology_spec(&self) -> TopologySpec {
        TopologySpec {
            datacenters: self
                .topology
                .datacenters
                .iter()
                .map(|d| DatacenterSpec {
                    name: d.name.clone(),
                    vps: d.vps,
                    map_slots: d.map_slots,
                    reduce_slots: d.reduce_slots,
                })
                .collect(),
        }
    }

    pub fn profile_table(&self) -> Result<ProfileTable> {
        let mut table = ProfileTable::default();
        for (i, p) in self.profiles.iter().enumerate() {
            let profile = BenchmarkProfile {
                name: p.name.clone(),
                input_type: p.input_type.clone(),
                fp_mean: p.fp_mean,
                fp_std: p.fp_std,
                map_rate: p.map_mib_s * MIB as f64,
                reduce_rate: p.reduce_mib_s * MIB as f64,
            };
            profile
                .validate()
                .map_err(|e| Error::config(format!("profiles[{i}]"), e.to_string()))?;
            table.insert(profile);
        }
        Ok(table)
    }

    pub fn block_size(&self) -> u64 {
        self.block_size_mib * MIB
    }

    pub fn scheduler_kinds(&self) -> Result<Vec<SchedulerKind>> {
        self.schedulers.iter().map(|s| s.parse()).collect()
    }

    pub fn generate_trace(&self) -> Result<WorkloadTrace> {
        let w = self
            .workload
            .as_ref()
            .ok_or_else(|| Error::config("workload", "no workload section to generate from"))?;
        crate::workload::generate_trace(
            &w.to_config(),
            &self.profile_table()?,
            self.block_size(),
            self.seeds.workload,
        )
    }
}

/// Everything a set of schedulers shares within one comparison.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub topology: ClusterTopology,
    pub profiles: ProfileTable,
    pub trace: WorkloadTrace,
    pub placement: BlockPlacement,
    pub fp_samples: FpSamples,
    pub registry: FpRegistry,
    pub cost: CostModel,
    pub capacity: CapacityConfig,
    pub engine_seed: u64,
}

impl Scenario {
    pub fn prepare(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let topology = ClusterTopology::build(&cfg.topology_spec())?;
        let profiles = cfg.profile_table()?;
        let trace = match &cfg.trace {
            Some(path) => {
                let t = load_trace(path)?;
                if t.block_size != cfg.block_size() {
                    return Err(Error::config(
                        "trace",
                        format!(
                            "trace block size {} differs from block_size_mib {}",
                            t.block_size, cfg.block_size_mib
                        ),
                    ));
                }
                for j in &t.jobs {
                    profiles.get(&j.profile)?;
                }
                t
            }
            None => cfg.generate_trace()?,
        };
        Self::from_parts(cfg, topology, profiles, trace)
    }

    pub fn from_parts(
        cfg: &ScenarioConfig,
        topology: ClusterTopology,
        profiles: ProfileTable,
        trace: WorkloadTrace,
    ) -> Result<Self> {
        let placement = BlockPlacement::generate(
            &topology,
            trace
                .jobs
                .iter()
                .map(|j| (j.id, j.block_count(trace.block_size))),
            cfg.replication,
            cfg.seeds.placement,
        );
        let fp_samples = FpSamples::generate(&trace, &profiles, cfg.seeds.fp)?;
        let registry = match cfg.registry_mode() {
            RegistryMode::Cold => FpRegistry::new(),
            RegistryMode::Warm => warm_registry(&profiles)?,
            RegistryMode::File(p) => FpRegistry::load(&p)?,
        };
        Ok(Scenario {
            name: cfg.name.clone(),
            topology,
            profiles,
            trace,
            placement,
            fp_samples,
            registry,
            cost: cfg.cost.model(),
            capacity: cfg.capacity.clone().unwrap_or_default(),
            engine_seed: cfg.seeds.engine,
        })
    }

    pub fn inputs(&self, event_log: bool) -> RunInputs<'_> {
        RunInputs {
            topology: &self.topology,
            trace: &self.trace,
            profiles: &self.profiles,
            placement: &self.placement,
            fp_samples: &self.fp_samples,
            cost: &self.cost,
            seed: self.engine_seed,
            workload_name: &self.name,
            event_log,
        }
    }

    pub fn scheduler(&self, kind: SchedulerKind) -> Result<Box<dyn TaskScheduler + Send>> {
        build_scheduler(kind, &self.topology, self.registry.clone(), &self.capacity)
    }

    pub fn run(&self, kind: SchedulerKind, event_log: bool) -> Result<RunOutcome> {
        let mut s = self.scheduler(kind)?;
        engine::run(self.inputs(event_log), s.as_mut())
    }

    /// One simulation per scheduler, in parallel, over the shared trace and
    /// placement. Results keep the order of `kinds`.
    pub fn run_all(&self, kinds: &[SchedulerKind], event_log: bool) -> Vec<Result<RunOutcome>> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = kinds
                .iter()
                .map(|&k| scope.spawn(move || self.run(k, event_log)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread panicked"))
                .collect()
        })
    }
}

/// Registry holding each profile's nominal mean.
pub fn warm_registry(profiles: &ProfileTable) -> Result<FpRegistry> {
    let mut r = FpRegistry::new();
    for p in profiles.iter() {
        r.insert(job_hash(&p.name, &p.input_type)?, p.fp_mean);
    }
    Ok(r)
}

pub fn build_scheduler(
    kind: SchedulerKind,
    topology: &ClusterTopology,
    registry: FpRegistry,
    capacity: &CapacityConfig,
) -> Result<Box<dyn TaskScheduler + Send>> {
    Ok(match kind {
        SchedulerKind::JossT => Box::new(JossScheduler::new(
            Assigner::TaskDriven,
            topology,
            registry,
        )?),
        SchedulerKind::JossJ => {
            Box::new(JossScheduler::new(Assigner::JobDriven, topology, registry)?)
        }
        SchedulerKind::Fifo => Box::new(BaselineScheduler::fifo()),
        SchedulerKind::Fair => Box::new(BaselineScheduler::fair()),
        SchedulerKind::Capacity => Box::new(BaselineScheduler::new(BaselinePolicy::Capacity(
            capacity.clone(),
        ))?),
    })
}
