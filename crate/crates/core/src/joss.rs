//! Job-driven scheduling: the task scheduler with policies A, B and C, the
//! per-datacenter queue fabric and the two task assigners.
//!
//! Every datacenter owns a permanent map queue and a permanent reduce queue
//! (label 0) for small jobs. Each large job gets fresh dynamic queues (labels
//! 1, 2, ...) in the datacenters it touches; a dynamic queue is retired as
//! soon as it drains. Jobs whose filtering percentage has never been
//! observed go to the two global FIFO queues instead.
//!
//! Idle slots are served from the FIFO queues first, then round-robin over
//! the live queues of the slot's own datacenter. The task-driven assigner
//! takes the head of the selected queue; the job-driven assigner applies
//! the Hadoop-FIFO locality preference inside it.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use crate::classify::{classify, threshold, FpRegistry, JobClass};
use crate::cluster::{AvgVps, ClusterTopology, DcId, JobId, VpsId};
use crate::error::{Error, Result};
use crate::sched::{
    fifo_pick, ClusterView, JobInfo, Route, SchedulerKind, SlotKind, Submission, TaskScheduler,
};
use crate::workload::TaskRef;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assigner {
    /// Head of the round-robin queue.
    TaskDriven,
    /// Hadoop-FIFO locality preference inside the round-robin queue.
    JobDriven,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueueId {
    Fifo,
    /// `label` 0 is the permanent queue.
    Dc {
        dc: DcId,
        label: u32,
    },
}

impl QueueId {
    pub fn permanent(dc: DcId) -> Self {
        QueueId::Dc { dc, label: 0 }
    }

    pub fn is_permanent(&self) -> bool {
        matches!(self, QueueId::Dc { label: 0, .. })
    }

    pub fn dc(&self) -> Option<DcId> {
        match self {
            QueueId::Fifo => None,
            QueueId::Dc { dc, .. } => Some(*dc),
        }
    }

    fn render(&self, slot: SlotKind) -> String {
        let prefix = match slot {
            SlotKind::Map => "MQ",
            SlotKind::Reduce => "RQ",
        };
        match self {
            QueueId::Fifo => format!("{prefix}_FIFO"),
            QueueId::Dc { dc, label } => format!("{prefix}_{{{},{}}}", dc.0 + 1, label),
        }
    }
}

/// Queue-level activity, recorded when journaling is enabled.
#[derive(Clone, Debug, PartialEq)]
pub enum QueueEvent {
    Create {
        queue: QueueId,
        slot: SlotKind,
    },
    Enqueue {
        queue: QueueId,
        slot: SlotKind,
        task: TaskRef,
    },
    Dequeue {
        queue: QueueId,
        slot: SlotKind,
        task: TaskRef,
        vps: VpsId,
    },
    Retire {
        queue: QueueId,
        slot: SlotKind,
    },
}

/// Where the scheduler put one job's tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub job: JobId,
    pub class: JobClass,
    pub route: Route,
    pub maps: Vec<(QueueId, Vec<TaskRef>)>,
    pub reduces: (QueueId, Vec<TaskRef>),
}

#[derive(Clone, Debug)]
struct TaskQueue {
    label: u32,
    tasks: VecDeque<TaskRef>,
}

#[derive(Clone, Debug)]
struct QueueSet {
    queues: Vec<TaskQueue>,
    cursor: usize,
    next_label: u32,
}

impl QueueSet {
    fn new() -> Self {
        QueueSet {
            queues: vec![TaskQueue {
                label: 0,
                tasks: VecDeque::new(),
            }],
            cursor: 0,
            next_label: 1,
        }
    }

    fn pending(&self) -> usize {
        self.queues.iter().map(|q| q.tasks.len()).sum()
    }

    fn create(&mut self) -> u32 {
        let label = self.next_label;
        self.next_label += 1;
        self.queues.push(TaskQueue {
            label,
            tasks: VecDeque::new(),
        });
        label
    }

    fn queue_mut(&mut self, label: u32) -> &mut TaskQueue {
        self.queues
            .iter_mut()
            .find(|q| q.label == label)
            .expect("live queue")
    }

    /// One round-robin pass starting at the cursor. Empty queues are
    /// skipped; the cursor advances past every queue it visits. Returns the
    /// chosen task, its queue label and whether that queue was retired.
    fn round_robin(
        &mut self,
        mut pick: impl FnMut(&VecDeque<TaskRef>) -> Option<usize>,
    ) -> Option<(TaskRef, u32, bool)> {
        let n = self.queues.len();
        for _ in 0..n {
            self.cursor %= n;
            let qi = self.cursor;
            self.cursor += 1;
            let Some(pos) = pick(&self.queues[qi].tasks) else {
                continue;
            };
            let label = self.queues[qi].label;
            let task = self.queues[qi].tasks.remove(pos).expect("picked position");
            let retired = label != 0 && self.queues[qi].tasks.is_empty();
            if retired {
                self.queues.remove(qi);
                // keep pointing at the queue that followed the retired one
                self.cursor -= 1;
                self.cursor %= self.queues.len();
            }
            return Some((task, label, retired));
        }
        None
    }
}

#[derive(Clone, Debug)]
struct DcQueues {
    maps: QueueSet,
    reduces: QueueSet,
}

pub struct JossScheduler {
    assigner: Assigner,
    td: f64,
    avg: AvgVps,
    registry: FpRegistry,
    dcs: Vec<DcQueues>,
    fifo_maps: VecDeque<TaskRef>,
    fifo_reduces: VecDeque<TaskRef>,
    decisions: Vec<Decision>,
    journal: Option<Vec<QueueEvent>>,
}

impl JossScheduler {
    pub fn new(
        assigner: Assigner,
        topology: &ClusterTopology,
        registry: FpRegistry,
    ) -> Result<Self> {
        let td = threshold(topology.k())?;
        Ok(JossScheduler {
            assigner,
            td,
            avg: topology.avg_vps(),
            registry,
            dcs: (0..topology.k())
                .map(|_| DcQueues {
                    maps: QueueSet::new(),
                    reduces: QueueSet::new(),
                })
                .collect(),
            fifo_maps: VecDeque::new(),
            fifo_reduces: VecDeque::new(),
            decisions: Vec::new(),
            journal: None,
        })
    }

    pub fn with_journal(mut self) -> Self {
        self.journal = Some(Vec::new());
        self
    }

    pub fn journal(&self) -> &[QueueEvent] {
        self.journal.as_deref().unwrap_or(&[])
    }

    pub fn registry(&self) -> &FpRegistry {
        &self.registry
    }

    pub fn threshold(&self) -> f64 {
        self.td
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    fn log(&mut self, event: QueueEvent) {
        if let Some(j) = self.journal.as_mut() {
            j.push(event);
        }
    }

    /// Tasks waiting in the datacenter's own queues. FIFO-queue tasks and
    /// running tasks are not counted.
    pub fn pending_task_count(&self, dc: DcId) -> usize {
        let q = &self.dcs[dc.0];
        q.maps.pending() + q.reduces.pending()
    }

    /// Live map queues in `dc`, permanent queue included.
    pub fn map_queue_count(&self, dc: DcId) -> usize {
        self.dcs[dc.0].maps.queues.len()
    }

    pub fn reduce_queue_count(&self, dc: DcId) -> usize {
        self.dcs[dc.0].reduces.queues.len()
    }

    pub fn queue_contents(&self, queue: QueueId, slot: SlotKind) -> Option<Vec<TaskRef>> {
        match queue {
            QueueId::Fifo => Some(
                match slot {
                    SlotKind::Map => &self.fifo_maps,
                    SlotKind::Reduce => &self.fifo_reduces,
                }
                .iter()
                .copied()
                .collect(),
            ),
            QueueId::Dc { dc, label } => {
                let set = match slot {
                    SlotKind::Map => &self.dcs.get(dc.0)?.maps,
                    SlotKind::Reduce => &self.dcs.get(dc.0)?.reduces,
                };
                set.queues
                    .iter()
                    .find(|q| q.label == label)
                    .map(|q| q.tasks.iter().copied().collect())
            }
        }
    }

    /// Index of the queue each round-robin scan starts from next.
    pub fn cursors(&self, dc: DcId) -> (usize, usize) {
        let q = &self.dcs[dc.0];
        let norm = |s: &QueueSet| s.cursor % s.queues.len().max(1);
        (norm(&q.maps), norm(&q.reduces))
    }

    fn class_of(&self, job: &JobInfo) -> JobClass {
        classify(
            self.registry.lookup(job.hash),
            self.td,
            job.map_count as u64,
            self.avg,
        )
    }

    /// Routes all `m + r` tasks of `job` into queues.
    pub fn schedule_job(&mut self, job: &JobInfo, view: &ClusterView<'_>) -> Result<Decision> {
        let decision = match self.class_of(job) {
            JobClass::Unknown => self.fifo_bootstrap(job),
            JobClass::SmallRh => self.policy_a(job),
            JobClass::SmallMh => {
                let sets = view
                    .placement
                    .unique_blocks_per_datacenter(view.topology, job.id)?;
                self.policy_b(job, &sets)?
            }
            JobClass::Large => {
                let sets = view
                    .placement
                    .unique_blocks_per_datacenter(view.topology, job.id)?;
                self.policy_c(job, &sets)?
            }
        };
        self.decisions.push(decision.clone());
        Ok(decision)
    }

    fn fifo_bootstrap(&mut self, job: &JobInfo) -> Decision {
        let maps: Vec<TaskRef> = (0..job.map_count)
            .map(|i| TaskRef::map(job.id, i))
            .collect();
        let reduces = reduce_tasks(job);
        self.append(QueueId::Fifo, SlotKind::Map, &maps);
        self.append(QueueId::Fifo, SlotKind::Reduce, &reduces);
        Decision {
            job: job.id,
            class: JobClass::Unknown,
            route: Route::FifoBootstrap,
            maps: vec![(QueueId::Fifo, maps)],
            reduces: (QueueId::Fifo, reduces),
        }
    }

    /// Small reduce-heavy job: every task to the datacenter with the fewest
    /// pending tasks (lowest index on ties).
    pub fn policy_a(&mut self, job: &JobInfo) -> Decision {
        let w = (0..self.dcs.len())
            .map(DcId)
            .min_by_key(|dc| (self.pending_task_count(*dc), dc.0))
            .expect("k ≥ 2");
        let maps: Vec<TaskRef> = (0..job.map_count)
            .map(|i| TaskRef::map(job.id, i))
            .collect();
        let reduces = reduce_tasks(job);
        let q = QueueId::permanent(w);
        self.append(q, SlotKind::Map, &maps);
        self.append(q, SlotKind::Reduce, &reduces);
        Decision {
            job: job.id,
            class: JobClass::SmallRh,
            route: Route::PolicyA,
            maps: vec![(q, maps)],
            reduces: (q, reduces),
        }
    }

    /// Small map-heavy job: map tasks follow the greedy unique-block split
    /// into permanent queues; reduces go to the datacenter holding the most
    /// unique blocks.
    pub fn policy_b(&mut self, job: &JobInfo, sets: &[BTreeSet<usize>]) -> Result<Decision> {
        let split = greedy_block_split(sets, job.map_count, job.id)?;
        let mut maps = Vec::with_capacity(split.len());
        for (dc, blocks) in split {
            let tasks: Vec<TaskRef> = blocks
                .into_iter()
                .map(|b| TaskRef::map(job.id, b))
                .collect();
            let q = QueueId::permanent(dc);
            self.append(q, SlotKind::Map, &tasks);
            maps.push((q, tasks));
        }
        let e = first_largest(sets);
        let reduces = reduce_tasks(job);
        let rq = QueueId::permanent(e);
        self.append(rq, SlotKind::Reduce, &reduces);
        Ok(Decision {
            job: job.id,
            class: JobClass::SmallMh,
            route: Route::PolicyB,
            maps,
            reduces: (rq, reduces),
        })
    }

    /// Large job: the policy-B split, but into fresh dynamic queues (one per
    /// receiving datacenter, one for the reduces).
    pub fn policy_c(&mut self, job: &JobInfo, sets: &[BTreeSet<usize>]) -> Result<Decision> {
        let split = greedy_block_split(sets, job.map_count, job.id)?;
        let mut maps = Vec::with_capacity(split.len());
        for (dc, blocks) in split {
            let tasks: Vec<TaskRef> = blocks
                .into_iter()
                .map(|b| TaskRef::map(job.id, b))
                .collect();
            let q = self.create_queue(dc, SlotKind::Map);
            self.append(q, SlotKind::Map, &tasks);
            maps.push((q, tasks));
        }
        let e = first_largest(sets);
        let reduces = reduce_tasks(job);
        let rq = self.create_queue(e, SlotKind::Reduce);
        self.append(rq, SlotKind::Reduce, &reduces);
        Ok(Decision {
            job: job.id,
            class: JobClass::Large,
            route: Route::PolicyC,
            maps,
            reduces: (rq, reduces),
        })
    }

    fn create_queue(&mut self, dc: DcId, slot: SlotKind) -> QueueId {
        let set = match slot {
            SlotKind::Map => &mut self.dcs[dc.0].maps,
            SlotKind::Reduce => &mut self.dcs[dc.0].reduces,
        };
        let queue = QueueId::Dc {
            dc,
            label: set.create(),
        };
        self.log(QueueEvent::Create { queue, slot });
        queue
    }

    fn append(&mut self, queue: QueueId, slot: SlotKind, tasks: &[TaskRef]) {
        let target = match (queue, slot) {
            (QueueId::Fifo, SlotKind::Map) => &mut self.fifo_maps,
            (QueueId::Fifo, SlotKind::Reduce) => &mut self.fifo_reduces,
            (QueueId::Dc { dc, label }, SlotKind::Map) => {
                &mut self.dcs[dc.0].maps.queue_mut(label).tasks
            }
            (QueueId::Dc { dc, label }, SlotKind::Reduce) => {
                &mut self.dcs[dc.0].reduces.queue_mut(label).tasks
            }
        };
        target.extend(tasks.iter().copied());
        if self.journal.is_some() {
            for &task in tasks {
                self.log(QueueEvent::Enqueue { queue, slot, task });
            }
        }
    }

    pub fn tta_next_task(
        &mut self,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        self.assign(Assigner::TaskDriven, vps, slot, view)
    }

    pub fn jta_next_task(
        &mut self,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        self.assign(Assigner::JobDriven, vps, slot, view)
    }

    fn assign(
        &mut self,
        assigner: Assigner,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        let fifo = match slot {
            SlotKind::Map => &mut self.fifo_maps,
            SlotKind::Reduce => &mut self.fifo_reduces,
        };
        if !fifo.is_empty() {
            let pos = match slot {
                SlotKind::Map => fifo_pick(fifo.iter(), vps, view)?,
                SlotKind::Reduce => 0,
            };
            let task = fifo.remove(pos)?;
            self.log(QueueEvent::Dequeue {
                queue: QueueId::Fifo,
                slot,
                task,
                vps,
            });
            return Some(task);
        }

        let dc = view.topology.dc_of(vps);
        let set = match slot {
            SlotKind::Map => &mut self.dcs[dc.0].maps,
            SlotKind::Reduce => &mut self.dcs[dc.0].reduces,
        };
        let (task, label, retired) = match (slot, assigner) {
            (SlotKind::Map, Assigner::JobDriven) => set.round_robin(|q| fifo_pick(q, vps, view)),
            _ => set.round_robin(|q| if q.is_empty() { None } else { Some(0) }),
        }?;
        let queue = QueueId::Dc { dc, label };
        self.log(QueueEvent::Dequeue {
            queue,
            slot,
            task,
            vps,
        });
        if retired {
            self.log(QueueEvent::Retire { queue, slot });
        }
        Some(task)
    }
}

fn reduce_tasks(job: &JobInfo) -> Vec<TaskRef> {
    (0..job.reduce_count)
        .map(|j| TaskRef::reduce(job.id, j))
        .collect()
}

/// Index of the largest set; the lowest index wins ties.
fn first_largest(sets: &[BTreeSet<usize>]) -> DcId {
    let mut best = 0;
    for (c, s) in sets.iter().enumerate() {
        if s.len() > sets[best].len() {
            best = c;
        }
    }
    DcId(best)
}

/// Greedy map split shared by policies B and C: repeatedly take the first
/// largest remaining `L_d`, assign its blocks (ascending) to `cen_d` and
/// delete them from every other set.
pub fn greedy_block_split(
    sets: &[BTreeSet<usize>],
    map_count: usize,
    job: JobId,
) -> Result<Vec<(DcId, Vec<usize>)>> {
    let mut remaining = sets.to_vec();
    let mut alpha = map_count;
    let mut out = Vec::new();
    while alpha > 0 {
        let d = first_largest(&remaining);
        if remaining[d.0].is_empty() {
            return Err(Error::UnplaceableBlocks {
                job,
                remaining: alpha,
            });
        }
        let chosen: Vec<usize> = std::mem::take(&mut remaining[d.0]).into_iter().collect();
        for set in remaining.iter_mut() {
            for b in &chosen {
                set.remove(b);
            }
        }
        alpha = alpha.saturating_sub(chosen.len());
        out.push((d, chosen));
    }
    Ok(out)
}

impl fmt::Debug for JossScheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl TaskScheduler for JossScheduler {
    fn kind(&self) -> SchedulerKind {
        match self.assigner {
            Assigner::TaskDriven => SchedulerKind::JossT,
            Assigner::JobDriven => SchedulerKind::JossJ,
        }
    }

    fn submit(&mut self, job: &JobInfo, view: &ClusterView<'_>) -> Result<Submission> {
        let d = self.schedule_job(job, view)?;
        Ok(Submission {
            class: d.class,
            route: d.route,
        })
    }

    fn next_task(&mut self, vps: VpsId, slot: SlotKind, view: &ClusterView<'_>) -> Option<TaskRef> {
        self.assign(self.assigner, vps, slot, view)
    }

    fn job_completed(&mut self, job: &JobInfo, observed_fps: &[f64]) {
        self.registry.record(job.hash, observed_fps);
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        let list = |q: &VecDeque<TaskRef>| {
            q.iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "MQ_FIFO: {}", list(&self.fifo_maps));
        let _ = writeln!(out, "RQ_FIFO: {}", list(&self.fifo_reduces));
        for (c, dc) in self.dcs.iter().enumerate() {
            let id = DcId(c);
            let _ = writeln!(
                out,
                "{id} pending={} I_map={} I_red={}",
                self.pending_task_count(id),
                dc.maps.cursor,
                dc.reduces.cursor
            );
            for (slot, set) in [(SlotKind::Map, &dc.maps), (SlotKind::Reduce, &dc.reduces)] {
                for q in &set.queues {
                    let name = QueueId::Dc {
                        dc: id,
                        label: q.label,
                    }
                    .render(slot);
                    let _ = writeln!(out, "  {name}: {}", list(&q.tasks));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::job_hash;
    use crate::cluster::{BlockPlacement, DatacenterSpec, TopologySpec};

    fn topo(sizes: &[usize]) -> ClusterTopology {
        ClusterTopology::build(&TopologySpec {
            datacenters: sizes.iter().map(|&n| DatacenterSpec::with_vps(n)).collect(),
        })
        .unwrap()
    }

    fn job(id: JobId, profile: &str, input: &str, m: usize) -> JobInfo {
        JobInfo {
            id,
            profile: profile.into(),
            hash: job_hash(profile, input).unwrap(),
            map_count: m,
            reduce_count: 1,
            order: id,
        }
    }

    fn warm() -> FpRegistry {
        let mut reg = FpRegistry::new();
        reg.insert(job_hash("Permu", "non-web").unwrap(), 3.0);
        reg.insert(job_hash("WC", "web").unwrap(), 1.039);
        reg.insert(job_hash("II", "web").unwrap(), 1.166);
        reg
    }

    /// Blocks spread round-robin over all VPSs.
    fn spread(t: &ClusterTopology, p: &mut BlockPlacement, id: JobId, m: usize) {
        let n = t.vps_count();
        p.insert(id, (0..m).map(|i| vec![VpsId(i % n)]).collect());
    }

    fn sets(xs: &[&[usize]]) -> Vec<BTreeSet<usize>> {
        xs.iter().map(|s| s.iter().copied().collect()).collect()
    }

    #[test]
    fn unknown_hash_goes_to_fifo_queues() {
        let t = topo(&[15, 15]);
        let mut p = BlockPlacement::new(1);
        spread(&t, &mut p, 1, 8);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, FpRegistry::new()).unwrap();
        let d = s.schedule_job(&job(1, "WC", "web", 8), &view).unwrap();
        assert_eq!(d.route, Route::FifoBootstrap);
        assert_eq!(
            s.queue_contents(QueueId::Fifo, SlotKind::Map)
                .unwrap()
                .len(),
            8
        );
        assert_eq!(
            s.queue_contents(QueueId::Fifo, SlotKind::Reduce)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            s.pending_task_count(DcId(0)) + s.pending_task_count(DcId(1)),
            0
        );
    }

    #[test]
    fn dispatch_by_class() {
        let t = topo(&[15, 15]);
        let mut p = BlockPlacement::new(1);
        spread(&t, &mut p, 1, 8);
        spread(&t, &mut p, 2, 96);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        assert_eq!(
            s.schedule_job(&job(1, "Permu", "non-web", 8), &view)
                .unwrap()
                .route,
            Route::PolicyA
        );
        assert_eq!(
            s.schedule_job(&job(2, "II", "web", 96), &view)
                .unwrap()
                .route,
            Route::PolicyC
        );
    }

    #[test]
    fn policy_a_picks_least_loaded() {
        let t = topo(&[15, 15]);
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        let d = s.policy_a(&job(1, "Permu", "non-web", 8));
        assert_eq!(d.maps[0].0, QueueId::permanent(DcId(0)));
        assert_eq!(s.pending_task_count(DcId(0)), 9);
        let d = s.policy_a(&job(2, "Permu", "non-web", 2));
        assert_eq!(d.maps[0].0, QueueId::permanent(DcId(1)));
        assert_eq!(s.pending_task_count(DcId(1)), 3);
        let d = s.policy_a(&job(3, "Permu", "non-web", 2));
        assert_eq!(d.reduces.0, QueueId::permanent(DcId(1)));
    }

    #[test]
    fn pending_count_drops_on_assignment() {
        let t = topo(&[2, 2]);
        let p = BlockPlacement::new(1);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        s.policy_a(&job(1, "Permu", "non-web", 3));
        assert_eq!(s.pending_task_count(DcId(0)), 4);
        s.tta_next_task(VpsId(0), SlotKind::Reduce, &view).unwrap();
        assert_eq!(s.pending_task_count(DcId(0)), 3);
        // the other datacenter cannot see these tasks
        assert_eq!(s.tta_next_task(VpsId(2), SlotKind::Map, &view), None);
    }

    #[test]
    fn policy_b_single_holder_and_ties() {
        let t = topo(&[3, 3]);
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        let all = sets(&[&[0, 1, 2], &[]]);
        let d = s.policy_b(&job(1, "WC", "web", 3), &all).unwrap();
        assert_eq!(
            d.maps,
            vec![(
                QueueId::permanent(DcId(0)),
                (0..3).map(|i| TaskRef::map(1, i)).collect()
            )]
        );
        assert_eq!(d.reduces.0, QueueId::permanent(DcId(0)));

        let both = sets(&[&[0, 1, 2], &[0, 1, 2]]);
        let d = s.policy_b(&job(2, "WC", "web", 3), &both).unwrap();
        assert_eq!(d.maps.len(), 1);
        assert_eq!(d.maps[0].0, QueueId::permanent(DcId(0)));
        assert_eq!(d.reduces.0, QueueId::permanent(DcId(0)));
    }

    #[test]
    fn unplaceable_blocks_error() {
        let t = topo(&[3, 3]);
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        let err = s
            .policy_b(&job(1, "WC", "web", 4), &sets(&[&[0, 1], &[1]]))
            .unwrap_err();
        assert!(matches!(err, Error::UnplaceableBlocks { remaining: 2, .. }));
    }

    #[test]
    fn policy_c_creates_dynamic_queues() {
        let t = topo(&[3, 3]);
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm())
            .unwrap()
            .with_journal();
        let d = s
            .policy_c(&job(1, "II", "web", 5), &sets(&[&[0, 1, 2], &[3, 4]]))
            .unwrap();
        assert_eq!(d.maps.len(), 2);
        assert!(d.maps.iter().all(|(q, _)| !q.is_permanent()));
        assert!(!d.reduces.0.is_permanent());
        assert_eq!(s.map_queue_count(DcId(0)), 2);
        assert_eq!(s.map_queue_count(DcId(1)), 2);
        assert_eq!(s.reduce_queue_count(DcId(0)), 2);

        let d2 = s
            .policy_c(&job(2, "II", "web", 3), &sets(&[&[0, 1, 2], &[]]))
            .unwrap();
        assert_ne!(d.maps[0].0, d2.maps[0].0);
        assert_eq!(s.map_queue_count(DcId(0)), 3);
        let creates = s
            .journal()
            .iter()
            .filter(|e| matches!(e, QueueEvent::Create { .. }))
            .count();
        assert_eq!(creates, 2 + 1 + 1 + 1);
    }

    #[test]
    fn dynamic_queue_retires_when_drained() {
        let t = topo(&[1, 1]);
        let p = BlockPlacement::new(1);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        s.policy_c(&job(1, "II", "web", 2), &sets(&[&[0, 1], &[]]))
            .unwrap();
        assert_eq!(s.map_queue_count(DcId(0)), 2);
        s.tta_next_task(VpsId(0), SlotKind::Map, &view).unwrap();
        assert_eq!(s.map_queue_count(DcId(0)), 2);
        s.tta_next_task(VpsId(0), SlotKind::Map, &view).unwrap();
        assert_eq!(s.map_queue_count(DcId(0)), 1);
        assert_eq!(s.tta_next_task(VpsId(0), SlotKind::Map, &view), None);
        assert_eq!(s.cursors(DcId(0)).0, 0);
    }

    #[test]
    fn round_robin_over_three_queues() {
        let t = topo(&[1, 1]);
        let p = BlockPlacement::new(1);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        s.policy_b(&job(1, "WC", "web", 2), &sets(&[&[0, 1], &[]]))
            .unwrap();
        s.policy_c(&job(2, "II", "web", 2), &sets(&[&[0, 1], &[]]))
            .unwrap();
        s.policy_c(&job(3, "II", "web", 2), &sets(&[&[0, 1], &[]]))
            .unwrap();
        let got: Vec<TaskRef> = (0..3)
            .map(|_| s.tta_next_task(VpsId(0), SlotKind::Map, &view).unwrap())
            .collect();
        assert_eq!(
            got,
            vec![TaskRef::map(1, 0), TaskRef::map(2, 0), TaskRef::map(3, 0)]
        );
    }

    #[test]
    fn fifo_queue_served_first() {
        let t = topo(&[1, 1]);
        let mut p = BlockPlacement::new(1);
        spread(&t, &mut p, 1, 1);
        spread(&t, &mut p, 2, 1);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        s.policy_b(&job(1, "WC", "web", 1), &sets(&[&[0], &[]]))
            .unwrap();
        s.schedule_job(&job(2, "Grep", "web", 1), &view).unwrap();
        assert_eq!(
            s.tta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(2, 0))
        );
        assert_eq!(
            s.tta_next_task(VpsId(0), SlotKind::Reduce, &view),
            Some(TaskRef::reduce(2, 0))
        );
        assert_eq!(
            s.tta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(1, 0))
        );
    }

    #[test]
    fn jta_prefers_local_task_in_queue() {
        let t = topo(&[2, 2]);
        let mut p = BlockPlacement::new(1);
        // B1 off-cen for VPS 0, B2 local to VPS 0
        p.insert(1, vec![vec![VpsId(2)], vec![VpsId(0)]]);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let queue = sets(&[&[0, 1], &[]]);
        let mut tta = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        let mut jta = JossScheduler::new(Assigner::JobDriven, &t, warm()).unwrap();
        tta.policy_b(&job(1, "WC", "web", 2), &queue).unwrap();
        jta.policy_b(&job(1, "WC", "web", 2), &queue).unwrap();
        assert_eq!(
            tta.tta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(1, 0))
        );
        assert_eq!(
            jta.jta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(1, 1))
        );
        // single remaining task: both agree
        assert_eq!(
            tta.tta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(1, 1))
        );
        assert_eq!(
            jta.jta_next_task(VpsId(0), SlotKind::Map, &view),
            Some(TaskRef::map(1, 0))
        );
    }

    #[test]
    fn empty_state_assigns_nothing() {
        let t = topo(&[2, 2]);
        let p = BlockPlacement::new(1);
        let view = ClusterView {
            topology: &t,
            placement: &p,
        };
        let mut s = JossScheduler::new(Assigner::JobDriven, &t, FpRegistry::new()).unwrap();
        assert_eq!(s.jta_next_task(VpsId(0), SlotKind::Map, &view), None);
        assert_eq!(s.jta_next_task(VpsId(3), SlotKind::Reduce, &view), None);
        assert_eq!(s.pending_task_count(DcId(0)), 0);
    }

    #[test]
    fn dump_is_stable() {
        let t = topo(&[1, 1]);
        let mut s = JossScheduler::new(Assigner::TaskDriven, &t, warm()).unwrap();
        s.policy_a(&job(1, "Permu", "non-web", 2));
        let expected = "MQ_FIFO: \nRQ_FIFO: \ncen_1 pending=3 I_map=0 I_red=0\n  MQ_{1,0}: J1.M1 J1.M2\n  RQ_{1,0}: J1.R1\ncen_2 pending=0 I_map=0 I_red=0\n  MQ_{2,0}: \n  RQ_{2,0}: \n";
        assert_eq!(s.dump(), expected);
    }
}
