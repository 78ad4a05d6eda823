//! Hadoop's stock schedulers at simulator scale: FIFO, Fair (min running
//! tasks, no preemption) and Capacity (fractional queues, spill-over of
//! idle capacity).

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::JobClass;
use crate::cluster::{JobId, VpsId};
use crate::error::{Error, Result};
use crate::sched::{
    fifo_pick, ClusterView, JobInfo, Route, SchedulerKind, SlotKind, Submission, TaskScheduler,
};
use crate::workload::{TaskKind, TaskRef};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityQueue {
    pub name: String,
    pub fraction: f64,
    /// Profiles pinned to this queue. Jobs of unpinned profiles are spread
    /// round-robin by submission order over all queues.
    #[serde(default)]
    pub profiles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub queues: Vec<CapacityQueue>,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            queues: ["a", "b"]
                .into_iter()
                .map(|n| CapacityQueue {
                    name: n.to_string(),
                    fraction: 0.5,
                    profiles: Vec::new(),
                })
                .collect(),
        }
    }
}

impl CapacityConfig {
    pub fn single() -> Self {
        CapacityConfig {
            queues: vec![CapacityQueue {
                name: "default".into(),
                fraction: 1.0,
                profiles: Vec::new(),
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.queues.is_empty() {
            return Err(Error::config(
                "capacity.queues",
                "at least one queue required",
            ));
        }
        for (i, q) in self.queues.iter().enumerate() {
            if !(q.fraction > 0.0 && q.fraction <= 1.0) {
                return Err(Error::config(
                    format!("capacity.queues[{i}].fraction"),
                    "must lie in (0, 1]",
                ));
            }
        }
        let sum: f64 = self.queues.iter().map(|q| q.fraction).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "capacity.queues",
                format!("fractions sum to {sum}, expected 1"),
            ));
        }
        Ok(())
    }

    fn queue_for(&self, job: &JobInfo) -> usize {
        self.queues
            .iter()
            .position(|q| q.profiles.iter().any(|p| p == &job.profile))
            .unwrap_or((job.order.saturating_sub(1) as usize) % self.queues.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaselinePolicy {
    Fifo,
    Fair,
    Capacity(CapacityConfig),
}

#[derive(Clone, Debug)]
struct JobEntry {
    id: JobId,
    order: u32,
    queue: usize,
    pending_maps: Vec<TaskRef>,
    pending_reduces: VecDeque<TaskRef>,
    running_maps: u32,
    running_reduces: u32,
}

impl JobEntry {
    fn has_pending(&self, slot: SlotKind) -> bool {
        match slot {
            SlotKind::Map => !self.pending_maps.is_empty(),
            SlotKind::Reduce => !self.pending_reduces.is_empty(),
        }
    }

    fn running(&self, slot: SlotKind) -> u32 {
        match slot {
            SlotKind::Map => self.running_maps,
            SlotKind::Reduce => self.running_reduces,
        }
    }

    fn finished(&self) -> bool {
        self.pending_maps.is_empty()
            && self.pending_reduces.is_empty()
            && self.running_maps == 0
            && self.running_reduces == 0
    }
}

pub struct BaselineScheduler {
    policy: BaselinePolicy,
    /// Submission order.
    jobs: Vec<JobEntry>,
}

impl BaselineScheduler {
    pub fn new(policy: BaselinePolicy) -> Result<Self> {
        if let BaselinePolicy::Capacity(cfg) = &policy {
            cfg.validate()?;
        }
        Ok(BaselineScheduler {
            policy,
            jobs: Vec::new(),
        })
    }

    pub fn fifo() -> Self {
        BaselineScheduler::new(BaselinePolicy::Fifo).expect("valid")
    }

    pub fn fair() -> Self {
        BaselineScheduler::new(BaselinePolicy::Fair).expect("valid")
    }

    pub fn enroll(&mut self, job: &JobInfo) {
        let queue = match &self.policy {
            BaselinePolicy::Capacity(cfg) => cfg.queue_for(job),
            _ => 0,
        };
        let entry = JobEntry {
            id: job.id,
            order: job.order,
            queue,
            pending_maps: (0..job.map_count)
                .map(|i| TaskRef::map(job.id, i))
                .collect(),
            pending_reduces: (0..job.reduce_count)
                .map(|j| TaskRef::reduce(job.id, j))
                .collect(),
            running_maps: 0,
            running_reduces: 0,
        };
        let pos = self.jobs.partition_point(|j| j.order <= job.order);
        self.jobs.insert(pos, entry);
    }

    /// Index of the first job (submission order) with pending work.
    fn first_with_pending(&self, slot: SlotKind, queue: Option<usize>) -> Option<usize> {
        self.jobs
            .iter()
            .position(|j| j.has_pending(slot) && queue.is_none_or(|q| j.queue == q))
    }

    pub fn fifo_next(
        &mut self,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        let idx = self.first_with_pending(slot, None)?;
        Some(self.take(idx, vps, slot, view))
    }

    pub fn fair_next(
        &mut self,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        let idx = self
            .jobs
            .iter()
            .enumerate()
            .filter(|(_, j)| j.has_pending(slot))
            .min_by_key(|(i, j)| (j.running(slot), *i))
            .map(|(i, _)| i)?;
        Some(self.take(idx, vps, slot, view))
    }

    pub fn capacity_next(
        &mut self,
        vps: VpsId,
        slot: SlotKind,
        view: &ClusterView<'_>,
    ) -> Option<TaskRef> {
        let BaselinePolicy::Capacity(cfg) = &self.policy else {
            return self.fifo_next(vps, slot, view);
        };
        let mut best: Option<(f64, usize)> = None;
        for (qi, q) in cfg.queues.iter().enumerate() {
            if self.first_with_pending(slot, Some(qi)).is_none() {
                continue;
            }
            let running: u32 = self
                .jobs
                .iter()
                .filter(|j| j.queue == qi)
                .map(|j| j.running(slot))
                .sum();
            let load = running as f64 / q.fraction;
            if best.is_none_or(|(b, _)| load < b) {
                best = Some((load, qi));
            }
        }
        let (_, qi) = best?;
        let idx = self.first_with_pending(slot, Some(qi))?;
        Some(self.take(idx, vps, slot, view))
    }

    fn take(&mut self, idx: usize, vps: VpsId, slot: SlotKind, view: &ClusterView<'_>) -> TaskRef {
        let job = &mut self.jobs[idx];
        match slot {
            SlotKind::Map => {
                let pos = fifo_pick(job.pending_maps.iter(), vps, view).expect("pending map");
                job.running_maps += 1;
                job.pending_maps.remove(pos)
            }
            SlotKind::Reduce => {
                job.running_reduces += 1;
                job.pending_reduces.pop_front().expect("pending reduce")
            }
        }
    }

    pub fn running_tasks(&self, job: JobId, slot: SlotKind) -> u32 {
        self.jobs
            .iter()
            .find(|j| j.id == job)
            .map_or(0, |j| j.running(slot))
    }
}

impl TaskScheduler for BaselineScheduler {
    fn kind(&self) -> SchedulerKind {
        match self.policy {
            BaselinePolicy::Fifo => SchedulerKind::Fifo,
            BaselinePolicy::Fair => SchedulerKind::Fair,
            BaselinePolicy::Capacity(_) => SchedulerKind::Capacity,
        }
    }

    fn submit(&mut self, job: &JobInfo, _view: &ClusterView<'_>) -> Result<Submission> {
        self.enroll(job);
        Ok(Submission {
            class: JobClass::Unknown,
            route: Route::Baseline,
        })
    }

    fn next_task(&mut self, vps: VpsId, slot: SlotKind, view: &ClusterView<'_>) -> Option<TaskRef> {
        match self.policy {
            BaselinePolicy::Fifo => self.fifo_next(vps, slot, view),
            BaselinePolicy::Fair => self.fair_next(vps, slot, view),
            BaselinePolicy::Capacity(_) => self.capacity_next(vps, slot, view),
        }
    }

    fn task_finished(&mut self, task: TaskRef, _vps: VpsId) {
        let Some(idx) = self.jobs.iter().position(|j| j.id == task.job) else {
            return;
        };
        let job = &mut self.jobs[idx];
        match task.kind {
            TaskKind::Map(_) => job.running_maps = job.running_maps.saturating_sub(1),
            TaskKind::Reduce(_) => job.running_reduces = job.running_reduces.saturating_sub(1),
        }
        if job.finished() {
            self.jobs.remove(idx);
        }
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        for j in &self.jobs {
            let _ = writeln!(
                out,
                "J{} order={} queue={} pending_maps={} pending_reduces={} running={}/{}",
                j.id,
                j.order,
                j.queue,
                j.pending_maps.len(),
                j.pending_reduces.len(),
                j.running_maps,
                j.running_reduces
            );
        }
        out
    }
}
