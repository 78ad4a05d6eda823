//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::HashMap;

use geomr::cluster::{BlockPlacement, ClusterTopology, JobId, VpsId};
use geomr::metrics::MetricsReport;
use geomr::scenario::{Scenario, ScenarioConfig, Seeds};
use geomr::workload::{FpSamples, TaskKind, WorkloadTrace};

/// Inter-datacenter bytes rebuilt from a report's assignment list alone.
///
/// A map task crosses when no replica of its block sits in the mapper's
/// datacenter. Each (mapper, reducer) pair moves its partition, which
/// crosses when the two are in different datacenters.
pub fn int_oracle(
    report: &MetricsReport,
    topology: &ClusterTopology,
    trace: &WorkloadTrace,
    placement: &BlockPlacement,
    fps: &FpSamples,
) -> u64 {
    let dc = |v: VpsId| topology.dc_of(v);
    let mut mapper: HashMap<(JobId, usize), VpsId> = HashMap::new();
    let mut reducer: HashMap<(JobId, usize), VpsId> = HashMap::new();
    for a in &report.assignments {
        match a.task.kind {
            TaskKind::Map(i) => mapper.insert((a.task.job, i), a.vps),
            TaskKind::Reduce(j) => reducer.insert((a.task.job, j), a.vps),
        };
    }
    let mut total = 0u64;
    for job in &trace.jobs {
        let s = trace.block_size;
        let m = job.input_bytes.div_ceil(s) as usize;
        let r = job.reduce_tasks as u64;
        for i in 0..m {
            let size = if i + 1 == m {
                job.input_bytes - s * (m as u64 - 1)
            } else {
                s
            };
            let at = mapper[&(job.id, i)];
            let replicas = placement.replicas(job.id, i).unwrap();
            if !replicas.iter().any(|&v| dc(v) == dc(at)) {
                total += size;
            }
            let out = (size as f64 * fps.get(job.id, i)).round() as u64;
            for j in 0..r {
                let part = out / r + u64::from(j < out % r);
                if dc(reducer[&(job.id, j as usize)]) != dc(at) {
                    total += part;
                }
            }
        }
    }
    total
}

pub fn preset_with_seed(name: &str, seed: u64) -> Scenario {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    cfg.seeds = Seeds {
        placement: seed,
        workload: seed,
        fp: seed,
        engine: seed,
    };
    Scenario::prepare(&cfg).unwrap()
}
