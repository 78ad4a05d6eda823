//! Discrete-event simulation core.
//!
//! Events are ordered by `(timestamp, insertion sequence)`. A VPS asks its
//! scheduler for work whenever one of its slots frees up, and every idle
//! slot in the cluster is polled (in a seeded random order) when a job
//! arrives. Transfers for one consuming task are serialized and never
//! contend with other tasks' transfers.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, job_hash, threshold, JobClass};
use crate::cluster::{BlockPlacement, ClusterTopology, JobId, Locality, VpsId};
use crate::error::{Error, Result};
use crate::metrics::{Assignment, JobRecord, MetricsReport};
use crate::sched::{ClusterView, JobInfo, Route, SlotKind, Submission, TaskScheduler};
use crate::workload::{
    block_sizes, FpSamples, ProfileTable, TaskKind, TaskRef, WorkloadTrace, MIB,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Local disk read, bytes/s.
    pub intra_vps_read_rate: f64,
    pub intra_dc_bandwidth: f64,
    pub inter_dc_bandwidth: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            intra_vps_read_rate: (128 * MIB) as f64,
            intra_dc_bandwidth: (64 * MIB) as f64,
            inter_dc_bandwidth: (16 * MIB) as f64,
        }
    }
}

impl CostModel {
    /// Rejects non-positive rates; an inverted tier ordering only warns.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("intra_vps_read_rate", self.intra_vps_read_rate),
            ("intra_dc_bandwidth", self.intra_dc_bandwidth),
            ("inter_dc_bandwidth", self.inter_dc_bandwidth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("cost.{name}"), "must be > 0"));
            }
        }
        if !(self.inter_dc_bandwidth <= self.intra_dc_bandwidth
            && self.intra_dc_bandwidth <= self.intra_vps_read_rate)
        {
            warn!("cost model tiers are not ordered inter_dc ≤ intra_dc ≤ intra_vps");
        }
        Ok(())
    }

    pub fn rate(&self, locality: Locality) -> f64 {
        match locality {
            Locality::VpsLocal => self.intra_vps_read_rate,
            Locality::CenLocal => self.intra_dc_bandwidth,
            Locality::OffCen => self.inter_dc_bandwidth,
        }
    }

    /// Rate between two VPSs, classified like a block read.
    pub fn link_rate(&self, topology: &ClusterTopology, src: VpsId, dst: VpsId) -> f64 {
        self.rate(tier(topology, src, dst))
    }
}

fn tier(topology: &ClusterTopology, src: VpsId, dst: VpsId) -> Locality {
    if src == dst {
        Locality::VpsLocal
    } else if topology.dc_of(src) == topology.dc_of(dst) {
        Locality::CenLocal
    } else {
        Locality::OffCen
    }
}

/// Fetch at the tier rate, then compute; the two phases do not overlap.
pub fn map_task_duration(
    block_bytes: u64,
    locality: Locality,
    cost: &CostModel,
    map_rate: f64,
) -> f64 {
    let b = block_bytes as f64;
    b / cost.rate(locality) + b / map_rate
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferCause {
    MapInput,
    Shuffle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub job: JobId,
    pub src: VpsId,
    pub dst: VpsId,
    pub bytes: u64,
    pub crosses_datacenter: bool,
    pub cause: TransferCause,
}

impl TransferRecord {
    pub fn new(
        topology: &ClusterTopology,
        job: JobId,
        src: VpsId,
        dst: VpsId,
        bytes: u64,
        cause: TransferCause,
    ) -> Self {
        TransferRecord {
            job,
            src,
            dst,
            bytes,
            crosses_datacenter: topology.dc_of(src) != topology.dc_of(dst),
            cause,
        }
    }
}

/// Inter-datacenter bytes.
pub fn account_traffic(records: &[TransferRecord]) -> u64 {
    records
        .iter()
        .filter(|r| r.crosses_datacenter)
        .map(|r| r.bytes)
        .sum()
}

/// Bytes map task output sends to reducer `j` of `r`: the rounded map output
/// split as evenly as integers allow, earlier reducers taking the remainder.
pub fn partition_bytes(block_bytes: u64, fp: f64, r: usize, j: usize) -> u64 {
    let total = (block_bytes as f64 * fp).round() as u64;
    let r = r as u64;
    total / r + u64::from((j as u64) < total % r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    JobArrival {
        job: usize,
    },
    MapDone {
        job: usize,
        block: usize,
        vps: VpsId,
    },
    ShufflePieceDone {
        job: usize,
        reducer: usize,
        block: usize,
    },
    ReduceReady {
        job: usize,
        reducer: usize,
    },
    ReduceDone {
        job: usize,
        reducer: usize,
        vps: VpsId,
    },
    SlotIdle {
        vps: VpsId,
        slot: SlotKind,
    },
}

#[derive(Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Default)]
struct Reducer {
    vps: Option<VpsId>,
    ready: VecDeque<usize>,
    busy: bool,
    received: usize,
    bytes: u64,
    local_bytes: u64,
}

#[derive(Debug)]
struct JobState {
    info: JobInfo,
    arrival: f64,
    map_rate: f64,
    reduce_rate: f64,
    nominal: JobClass,
    submission: Option<Submission>,
    blocks: Vec<u64>,
    fps: Vec<f64>,
    /// `(completion time, mapper)` per block.
    map_done: Vec<Option<(f64, VpsId)>>,
    done_order: Vec<usize>,
    reducers: Vec<Reducer>,
    reduces_done: usize,
    completion: Option<f64>,
    locality: [u64; 3],
    int_bytes: u64,
}

/// Immutable inputs shared by every scheduler of one comparison.
#[derive(Clone, Copy)]
pub struct RunInputs<'a> {
    pub topology: &'a ClusterTopology,
    pub trace: &'a WorkloadTrace,
    pub profiles: &'a ProfileTable,
    pub placement: &'a BlockPlacement,
    pub fp_samples: &'a FpSamples,
    pub cost: &'a CostModel,
    /// Drives idle-slot polling order and placement of jobs missing from
    /// `placement`.
    pub seed: u64,
    pub workload_name: &'a str,
    pub event_log: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub transfers: Vec<TransferRecord>,
    pub event_log: Vec<String>,
}

struct Sim<'a, 's> {
    inputs: RunInputs<'a>,
    placement: BlockPlacement,
    scheduler: &'s mut dyn TaskScheduler,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    jobs: Vec<JobState>,
    index_of: std::collections::HashMap<JobId, usize>,
    free_maps: Vec<u32>,
    free_reduces: Vec<u32>,
    vps_maps: Vec<u64>,
    assignments: Vec<Assignment>,
    transfers: Vec<TransferRecord>,
    log: Option<Vec<String>>,
    processed: u64,
}

/// Simulates the whole trace under `scheduler`.
pub fn run(inputs: RunInputs<'_>, scheduler: &mut dyn TaskScheduler) -> Result<RunOutcome> {
    inputs.cost.validate()?;
    let td = threshold(inputs.topology.k())?;
    let avg = inputs.topology.avg_vps();
    let mut placement = inputs.placement.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed);

    let mut jobs = Vec::with_capacity(inputs.trace.jobs.len());
    let mut index_of = std::collections::HashMap::new();
    for spec in &inputs.trace.jobs {
        let profile = inputs.profiles.get(&spec.profile)?;
        let blocks = block_sizes(spec.input_bytes, inputs.trace.block_size)?;
        let m = blocks.len();
        if !placement.contains_job(spec.id) {
            let replicas =
                crate::cluster::place_blocks(inputs.topology, m, placement.replication(), &mut rng);
            placement.insert(spec.id, replicas);
        }
        if placement.block_count(spec.id) != Some(m) {
            return Err(Error::Workload(format!(
                "placement of job {} does not cover its {m} blocks",
                spec.id
            )));
        }
        let mut fps = inputs.fp_samples.job(spec.id).to_vec();
        if fps.len() != m {
            // no pre-drawn samples: the profile mean stands in for every task
            fps = vec![profile.fp_mean; m];
        }
        let r = spec.reduce_tasks as usize;
        index_of.insert(spec.id, jobs.len());
        jobs.push(JobState {
            info: JobInfo {
                id: spec.id,
                profile: spec.profile.clone(),
                hash: job_hash(&profile.name, &profile.input_type)?,
                map_count: m,
                reduce_count: r,
                order: spec.order,
            },
            arrival: spec.arrival,
            map_rate: profile.map_rate,
            reduce_rate: profile.reduce_rate,
            nominal: classify(Some(profile.fp_mean), td, m as u64, avg),
            submission: None,
            blocks,
            fps,
            map_done: vec![None; m],
            done_order: Vec::with_capacity(m),
            reducers: (0..r).map(|_| Reducer::default()).collect(),
            reduces_done: 0,
            completion: None,
            locality: [0; 3],
            int_bytes: 0,
        });
    }

    let nodes = inputs.topology.nodes();
    let mut sim = Sim {
        inputs,
        placement,
        scheduler,
        rng,
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        jobs,
        index_of,
        free_maps: nodes.iter().map(|n| n.map_slots).collect(),
        free_reduces: nodes.iter().map(|n| n.reduce_slots).collect(),
        vps_maps: vec![0; nodes.len()],
        assignments: Vec::new(),
        transfers: Vec::new(),
        log: inputs.event_log.then(Vec::new),
        processed: 0,
    };
    for job in 0..sim.jobs.len() {
        let t = sim.jobs[job].arrival;
        sim.push(t, EventKind::JobArrival { job });
    }
    sim.run_loop()?;
    sim.finish()
}

impl Sim<'_, '_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn trace(&mut self, line: impl FnOnce() -> String) {
        if let Some(log) = self.log.as_mut() {
            log.push(line());
        }
    }

    fn run_loop(&mut self) -> Result<()> {
        while let Some(ev) = self.heap.pop() {
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            self.processed += 1;
            match ev.kind {
                EventKind::JobArrival { job } => self.on_arrival(job)?,
                EventKind::SlotIdle { vps, slot } => self.on_slot_idle(vps, slot)?,
                EventKind::MapDone { job, block, vps } => self.on_map_done(job, block, vps),
                EventKind::ShufflePieceDone {
                    job,
                    reducer,
                    block,
                } => self.on_piece_done(job, reducer, block),
                EventKind::ReduceReady { job, reducer } => self.on_reduce_ready(job, reducer),
                EventKind::ReduceDone { job, reducer, vps } => {
                    self.on_reduce_done(job, reducer, vps)
                }
            }
        }
        let stuck: Vec<JobId> = self
            .jobs
            .iter()
            .filter(|j| j.completion.is_none())
            .map(|j| j.info.id)
            .collect();
        if !stuck.is_empty() {
            return Err(Error::Stalled {
                time: self.now,
                msg: format!(
                    "{} job(s) never completed (first: {}); scheduler state:\n{}",
                    stuck.len(),
                    stuck[0],
                    self.scheduler.dump()
                ),
            });
        }
        Ok(())
    }

    fn on_arrival(&mut self, job: usize) -> Result<()> {
        let info = self.jobs[job].info.clone();
        let view = ClusterView {
            topology: self.inputs.topology,
            placement: &self.placement,
        };
        let submission = self.scheduler.submit(&info, &view)?;
        self.jobs[job].submission = Some(submission);
        let now = self.now;
        self.trace(|| {
            format!(
                "{now:.6} JOB_ARRIVAL job={} m={} r={} route={}",
                info.id,
                info.map_count,
                info.reduce_count,
                submission.route.label()
            )
        });

        let mut idle: Vec<(VpsId, SlotKind)> = Vec::new();
        for v in 0..self.free_maps.len() {
            if self.free_maps[v] > 0 {
                idle.push((VpsId(v), SlotKind::Map));
            }
            if self.free_reduces[v] > 0 {
                idle.push((VpsId(v), SlotKind::Reduce));
            }
        }
        idle.shuffle(&mut self.rng);
        for (vps, slot) in idle {
            self.push(now, EventKind::SlotIdle { vps, slot });
        }
        Ok(())
    }

    fn on_slot_idle(&mut self, vps: VpsId, slot: SlotKind) -> Result<()> {
        loop {
            let free = match slot {
                SlotKind::Map => self.free_maps[vps.0],
                SlotKind::Reduce => self.free_reduces[vps.0],
            };
            if free == 0 {
                return Ok(());
            }
            let view = ClusterView {
                topology: self.inputs.topology,
                placement: &self.placement,
            };
            let Some(task) = self.scheduler.next_task(vps, slot, &view) else {
                return Ok(());
            };
            match (task.kind, slot) {
                (TaskKind::Map(block), SlotKind::Map) => self.start_map(task.job, block, vps)?,
                (TaskKind::Reduce(j), SlotKind::Reduce) => self.start_reduce(task.job, j, vps)?,
                _ => {
                    return Err(Error::Stalled {
                        time: self.now,
                        msg: format!("scheduler returned {task} for a {slot:?} slot"),
                    })
                }
            }
        }
    }

    fn job_index(&self, id: JobId) -> Result<usize> {
        self.index_of
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Stalled {
                time: self.now,
                msg: format!("scheduler returned a task of unknown job {id}"),
            })
    }

    fn start_map(&mut self, id: JobId, block: usize, vps: VpsId) -> Result<()> {
        let job = self.job_index(id)?;
        let topology = self.inputs.topology;
        let (locality, src) = self.placement.nearest_replica(topology, vps, id, block)?;
        let bytes = self.jobs[job].blocks[block];
        let dur = map_task_duration(bytes, locality, self.inputs.cost, self.jobs[job].map_rate);
        if locality != Locality::VpsLocal {
            let rec = TransferRecord::new(topology, id, src, vps, bytes, TransferCause::MapInput);
            self.jobs[job].int_bytes += if rec.crosses_datacenter { bytes } else { 0 };
            self.transfers.push(rec);
        }
        let slot = match locality {
            Locality::VpsLocal => 0,
            Locality::CenLocal => 1,
            Locality::OffCen => 2,
        };
        self.jobs[job].locality[slot] += 1;
        self.free_maps[vps.0] -= 1;
        self.vps_maps[vps.0] += 1;
        self.assignments.push(Assignment {
            task: TaskRef::map(id, block),
            vps,
            time: self.now,
        });
        let now = self.now;
        self.trace(|| {
            format!(
                "{now:.6} MAP_START job={id} block={} vps={} {locality:?}",
                block + 1,
                vps.0
            )
        });
        self.push(now + dur, EventKind::MapDone { job, block, vps });
        Ok(())
    }

    fn start_reduce(&mut self, id: JobId, j: usize, vps: VpsId) -> Result<()> {
        let job = self.job_index(id)?;
        self.free_reduces[vps.0] -= 1;
        self.assignments.push(Assignment {
            task: TaskRef::reduce(id, j),
            vps,
            time: self.now,
        });
        let now = self.now;
        self.trace(|| {
            format!(
                "{now:.6} REDUCE_START job={id} reduce={} vps={}",
                j + 1,
                vps.0
            )
        });
        let state = &mut self.jobs[job];
        let done: Vec<usize> = state.done_order.clone();
        let reducer = &mut state.reducers[j];
        reducer.vps = Some(vps);
        reducer.ready.extend(done);
        if state.info.map_count == 0 {
            self.push(now, EventKind::ReduceReady { job, reducer: j });
        } else {
            self.kick(job, j);
        }
        Ok(())
    }

    /// Starts the next queued partition transfer to reducer `j` if its link
    /// is idle.
    fn kick(&mut self, job: usize, j: usize) {
        let topology = self.inputs.topology;
        let state = &mut self.jobs[job];
        let reducer = &mut state.reducers[j];
        if reducer.busy {
            return;
        }
        let Some(block) = reducer.ready.pop_front() else {
            return;
        };
        let dst = reducer.vps.expect("assigned reducer");
        let (_, src) = state.map_done[block].expect("finished map");
        let bytes = partition_bytes(
            state.blocks[block],
            state.fps[block],
            state.info.reduce_count,
            j,
        );
        reducer.busy = true;
        let dur = bytes as f64 / self.inputs.cost.link_rate(topology, src, dst);
        let rec = TransferRecord::new(
            topology,
            state.info.id,
            src,
            dst,
            bytes,
            TransferCause::Shuffle,
        );
        if rec.crosses_datacenter {
            state.int_bytes += bytes;
        }
        self.transfers.push(rec);
        let now = self.now;
        self.push(
            now + dur,
            EventKind::ShufflePieceDone {
                job,
                reducer: j,
                block,
            },
        );
    }

    fn on_map_done(&mut self, job: usize, block: usize, vps: VpsId) {
        let now = self.now;
        let state = &mut self.jobs[job];
        state.map_done[block] = Some((now, vps));
        state.done_order.push(block);
        let id = state.info.id;
        let waiting: Vec<usize> = state
            .reducers
            .iter_mut()
            .enumerate()
            .filter(|(_, r)| r.vps.is_some())
            .map(|(j, r)| {
                r.ready.push_back(block);
                j
            })
            .collect();
        self.trace(|| {
            format!(
                "{now:.6} MAP_DONE job={id} block={} vps={}",
                block + 1,
                vps.0
            )
        });
        for j in waiting {
            self.kick(job, j);
        }
        self.free_maps[vps.0] += 1;
        self.scheduler.task_finished(TaskRef::map(id, block), vps);
        self.push(
            now,
            EventKind::SlotIdle {
                vps,
                slot: SlotKind::Map,
            },
        );
    }

    fn on_piece_done(&mut self, job: usize, j: usize, block: usize) {
        let topology = self.inputs.topology;
        let now = self.now;
        let state = &mut self.jobs[job];
        let (_, src) = state.map_done[block].expect("finished map");
        let bytes = partition_bytes(
            state.blocks[block],
            state.fps[block],
            state.info.reduce_count,
            j,
        );
        let reducer = &mut state.reducers[j];
        let dst = reducer.vps.expect("assigned reducer");
        reducer.busy = false;
        reducer.received += 1;
        reducer.bytes += bytes;
        if topology.dc_of(src) == topology.dc_of(dst) {
            reducer.local_bytes += bytes;
        }
        let complete = reducer.received == state.info.map_count;
        let id = state.info.id;
        self.trace(|| {
            format!(
                "{now:.6} SHUFFLE_PIECE_DONE job={id} reduce={} block={} bytes={bytes}",
                j + 1,
                block + 1
            )
        });
        if complete {
            self.push(now, EventKind::ReduceReady { job, reducer: j });
        } else {
            self.kick(job, j);
        }
    }

    fn on_reduce_ready(&mut self, job: usize, j: usize) {
        let now = self.now;
        let state = &self.jobs[job];
        let reducer = &state.reducers[j];
        let vps = reducer.vps.expect("assigned reducer");
        let dur = reducer.bytes as f64 / state.reduce_rate;
        let id = state.info.id;
        self.trace(|| format!("{now:.6} REDUCE_READY job={id} reduce={}", j + 1));
        self.push(
            now + dur,
            EventKind::ReduceDone {
                job,
                reducer: j,
                vps,
            },
        );
    }

    fn on_reduce_done(&mut self, job: usize, j: usize, vps: VpsId) {
        let now = self.now;
        self.free_reduces[vps.0] += 1;
        let id = self.jobs[job].info.id;
        self.scheduler.task_finished(TaskRef::reduce(id, j), vps);
        self.trace(|| {
            format!(
                "{now:.6} REDUCE_DONE job={id} reduce={} vps={}",
                j + 1,
                vps.0
            )
        });
        let state = &mut self.jobs[job];
        state.reduces_done += 1;
        if state.reduces_done == state.info.reduce_count {
            state.completion = Some(now);
            debug!("job {id} completed at {now:.3}");
            let info = state.info.clone();
            let fps = state.fps.clone();
            self.scheduler.job_completed(&info, &fps);
            self.trace(|| format!("{now:.6} JOB_DONE job={id}"));
        }
        self.push(
            now,
            EventKind::SlotIdle {
                vps,
                slot: SlotKind::Reduce,
            },
        );
    }

    fn finish(self) -> Result<RunOutcome> {
        let mut records: Vec<JobRecord> = self
            .jobs
            .iter()
            .map(|j| {
                let submission = j.submission.expect("submitted");
                let class = match submission.class {
                    JobClass::Unknown => j.nominal,
                    c => c,
                };
                JobRecord {
                    id: j.info.id,
                    profile: j.info.profile.clone(),
                    class,
                    route: submission.route,
                    order: j.info.order,
                    arrival: j.arrival,
                    completion: j.completion.expect("completed"),
                    map_count: j.info.map_count as u64,
                    vps_local: j.locality[0],
                    cen_local: j.locality[1],
                    off_cen: j.locality[2],
                    reduce_input_bytes: j.reducers.iter().map(|r| r.bytes).sum(),
                    reduce_local_bytes: j.reducers.iter().map(|r| r.local_bytes).sum(),
                    int_bytes: j.int_bytes,
                }
            })
            .collect();
        records.sort_by_key(|r| r.order);
        let int_bytes = account_traffic(&self.transfers);
        debug_assert_eq!(int_bytes, records.iter().map(|r| r.int_bytes).sum::<u64>());
        let report = MetricsReport::new(
            self.scheduler.kind().name(),
            self.inputs.workload_name,
            trace_fingerprint(self.inputs.trace),
            self.inputs.seed,
            records,
            int_bytes,
            self.vps_maps,
            self.assignments,
            self.processed,
        );
        let mut log = self.log.unwrap_or_default();
        if !log.is_empty() {
            let mut tail = String::new();
            let _ = write!(tail, "# events={}", self.processed);
            log.push(tail);
        }
        Ok(RunOutcome {
            report,
            transfers: self.transfers,
            event_log: log,
        })
    }
}

/// Stable digest of a trace's text form, used to match reports.
pub fn trace_fingerprint(trace: &WorkloadTrace) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(trace.to_text().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Routes reported for jobs that went through the bootstrap FIFO path.
pub fn is_bootstrap(route: Route) -> bool {
    route == Route::FifoBootstrap
}
