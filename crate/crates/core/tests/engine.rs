mod common;

use geomr::baselines::CapacityConfig;
use geomr::classify::FpRegistry;
use geomr::classify::JobClass;
use geomr::cluster::{BlockPlacement, ClusterTopology, TopologySpec, VpsId};
use geomr::engine::{self, CostModel, RunInputs};
use geomr::error::Error;
use geomr::joss::{Assigner, JossScheduler};
use geomr::scenario::{build_scheduler, warm_registry};
use geomr::sched::{
    ClusterView, JobInfo, Route, SchedulerKind, SlotKind, Submission, TaskScheduler,
};
use geomr::workload::{
    BenchmarkProfile, FpSamples, JobSpec, ProfileTable, TaskRef, WorkloadTrace, MIB,
};
use proptest::prelude::*;

use common::int_oracle;

fn trace_of(jobs: Vec<(&str, u64, u32, f64)>) -> WorkloadTrace {
    WorkloadTrace {
        block_size: 128 * MIB,
        seed: 0,
        jobs: jobs
            .into_iter()
            .enumerate()
            .map(|(i, (p, bytes, r, t))| JobSpec {
                id: i as u32 + 1,
                profile: p.into(),
                input_bytes: bytes,
                reduce_tasks: r,
                arrival: t,
                order: i as u32 + 1,
            })
            .collect(),
    }
}

fn inputs<'a>(
    topo: &'a ClusterTopology,
    trace: &'a WorkloadTrace,
    profiles: &'a ProfileTable,
    placement: &'a BlockPlacement,
    fps: &'a FpSamples,
    cost: &'a CostModel,
) -> RunInputs<'a> {
    RunInputs {
        topology: topo,
        trace,
        profiles,
        placement,
        fp_samples: fps,
        cost,
        seed: 3,
        workload_name: "t",
        event_log: true,
    }
}

#[test]
fn single_local_job_turnaround() {
    let topo = ClusterTopology::build(&TopologySpec::uniform(2, 1)).unwrap();
    let mut profiles = ProfileTable::default();
    profiles.insert(BenchmarkProfile::new("Solo", "raw", 1.0, 0.0));
    let trace = trace_of(vec![("Solo", 128 * MIB, 1, 5.0)]);
    let mut placement = BlockPlacement::new(1);
    placement.insert(1, vec![vec![VpsId(0)]]);
    let fps = FpSamples::generate(&trace, &profiles, 1).unwrap();
    let cost = CostModel::default();
    let mut s = JossScheduler::new(
        Assigner::TaskDriven,
        &topo,
        warm_registry(&profiles).unwrap(),
    )
    .unwrap();
    let out = engine::run(
        inputs(&topo, &trace, &profiles, &placement, &fps, &cost),
        &mut s,
    )
    .unwrap();
    let job = &out.report.jobs[0];
    // local read 1 s + map 8 s, local shuffle 1 s, reduce 8 s
    assert_eq!(job.completion - job.arrival, 18.0);
    assert_eq!(out.report.wtt(), 18.0);
    assert_eq!(job.route, Route::PolicyB);
    assert_eq!((job.vps_local, job.reduce_local_bytes), (1, 128 * MIB));
    assert_eq!(out.report.int_bytes, 0);
    assert!(out.transfers.iter().all(|t| !t.crosses_datacenter));
}

#[test]
fn event_log_is_time_ordered() {
    let topo = ClusterTopology::build(&TopologySpec::uniform(2, 2)).unwrap();
    let profiles = ProfileTable::default();
    let trace = trace_of(vec![
        ("WC", 300 * MIB, 2, 0.0),
        ("Permu", 200 * MIB, 1, 1.5),
    ]);
    let placement = BlockPlacement::generate(&topo, [(1, 3), (2, 2)], 1, 4);
    let fps = FpSamples::generate(&trace, &profiles, 4).unwrap();
    let cost = CostModel::default();
    let mut s = build_scheduler(
        SchedulerKind::Fair,
        &topo,
        FpRegistry::new(),
        &CapacityConfig::default(),
    )
    .unwrap();
    let out = engine::run(
        inputs(&topo, &trace, &profiles, &placement, &fps, &cost),
        s.as_mut(),
    )
    .unwrap();
    let times: Vec<f64> = out
        .event_log
        .iter()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(' ').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(
        out.event_log
            .iter()
            .filter(|l| l.contains("JOB_DONE"))
            .count(),
        2
    );
    // last block is 44 MiB
    assert_eq!(out.report.jobs.iter().map(|j| j.map_count).sum::<u64>(), 5);
}

struct Idle;

impl TaskScheduler for Idle {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Fifo
    }

    fn submit(&mut self, _job: &JobInfo, _view: &ClusterView<'_>) -> geomr::Result<Submission> {
        Ok(Submission {
            class: JobClass::Unknown,
            route: Route::Baseline,
        })
    }

    fn next_task(
        &mut self,
        _vps: VpsId,
        _slot: SlotKind,
        _view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        None
    }

    fn dump(&self) -> String {
        "idle".into()
    }
}

#[test]
fn stall_is_reported() {
    let topo = ClusterTopology::build(&TopologySpec::uniform(2, 1)).unwrap();
    let profiles = ProfileTable::default();
    let trace = trace_of(vec![("WC", 128 * MIB, 1, 0.0)]);
    let placement = BlockPlacement::generate(&topo, [(1, 1)], 1, 1);
    let fps = FpSamples::default();
    let cost = CostModel::default();
    match engine::run(
        inputs(&topo, &trace, &profiles, &placement, &fps, &cost),
        &mut Idle,
    ) {
        Err(Error::Stalled { msg, .. }) => assert!(msg.contains("idle")),
        other => panic!("expected stall, got {other:?}"),
    }
}

#[test]
fn missing_placement_is_filled_from_seed() {
    let topo = ClusterTopology::build(&TopologySpec::uniform(2, 2)).unwrap();
    let profiles = ProfileTable::default();
    let trace = trace_of(vec![("Grep", 512 * MIB, 1, 0.0)]);
    let fps = FpSamples::generate(&trace, &profiles, 2).unwrap();
    let cost = CostModel::default();
    let empty = BlockPlacement::new(1);
    let run = || {
        let mut s = build_scheduler(
            SchedulerKind::Fifo,
            &topo,
            FpRegistry::new(),
            &CapacityConfig::default(),
        )
        .unwrap();
        engine::run(
            inputs(&topo, &trace, &profiles, &empty, &fps, &cost),
            s.as_mut(),
        )
        .unwrap()
        .report
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn int_matches_oracle(
        k in 2usize..4,
        n in 1usize..4,
        rho in 1usize..3,
        jobs in prop::collection::vec((0usize..5, 1u64..1300, 1u32..3, 0u32..40), 1..6),
        sched in 0usize..5,
        warm in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let topo = ClusterTopology::build(&TopologySpec::uniform(k, n)).unwrap();
        let profiles = ProfileTable::default();
        let names = ["WC", "SC", "II", "Grep", "Permu"];
        let trace = trace_of(
            jobs.iter()
                .map(|&(p, mib, r, t)| (names[p], mib * MIB, r, t as f64))
                .collect(),
        );
        let placement = BlockPlacement::generate(
            &topo,
            trace.jobs.iter().map(|j| (j.id, j.block_count(trace.block_size))),
            rho,
            seed,
        );
        let fps = FpSamples::generate(&trace, &profiles, seed).unwrap();
        let cost = CostModel::default();
        let registry = if warm { warm_registry(&profiles).unwrap() } else { FpRegistry::new() };
        let kind = SchedulerKind::ALL[sched];
        let mut s = build_scheduler(kind, &topo, registry, &CapacityConfig::default()).unwrap();
        let out = engine::run(inputs(&topo, &trace, &profiles, &placement, &fps, &cost), s.as_mut()).unwrap();
        let r = &out.report;
        prop_assert_eq!(r.int_bytes, int_oracle(r, &topo, &trace, &placement, &fps));
        prop_assert_eq!(r.vps_map_counts.iter().sum::<u64>(), trace.total_map_tasks() as u64);
        let rates = r.locality_rates().unwrap();
        prop_assert_eq!((rates.vps + rates.cen) + rates.off_cen, 1.0);
        let series = &r.completion_series;
        prop_assert!(series.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        prop_assert_eq!(series.last().unwrap().1, 1.0);
        for j in &r.jobs {
            prop_assert!(j.vps_local + j.cen_local + j.off_cen == j.map_count);
            prop_assert!(j.completion >= j.arrival);
        }
    }
}
