//! Interface between the simulation engine and the task schedulers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{JobClass, JobHash};
use crate::cluster::{BlockPlacement, ClusterTopology, JobId, Locality, VpsId};
use crate::error::{Error, Result};
use crate::workload::{TaskKind, TaskRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotKind {
    Map,
    Reduce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    JossT,
    JossJ,
    Fifo,
    Fair,
    Capacity,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::JossT,
        SchedulerKind::JossJ,
        SchedulerKind::Fifo,
        SchedulerKind::Fair,
        SchedulerKind::Capacity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::JossT => "joss-t",
            SchedulerKind::JossJ => "joss-j",
            SchedulerKind::Fifo => "fifo",
            SchedulerKind::Fair => "fair",
            SchedulerKind::Capacity => "capacity",
        }
    }

    pub fn is_joss(&self) -> bool {
        matches!(self, SchedulerKind::JossT | SchedulerKind::JossJ)
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "joss-t" | "josst" | "tta" => SchedulerKind::JossT,
            "joss-j" | "jossj" | "jta" => SchedulerKind::JossJ,
            "fifo" => SchedulerKind::Fifo,
            "fair" => SchedulerKind::Fair,
            "capacity" | "capa" => SchedulerKind::Capacity,
            other => {
                return Err(Error::config(
                    "scheduler",
                    format!("unknown scheduler `{other}`"),
                ))
            }
        })
    }
}

/// Read-only cluster state handed to schedulers.
#[derive(Clone, Copy)]
pub struct ClusterView<'a> {
    pub topology: &'a ClusterTopology,
    pub placement: &'a BlockPlacement,
}

impl ClusterView<'_> {
    pub fn locality(&self, vps: VpsId, job: JobId, block: usize) -> Locality {
        self.placement
            .locality_level(self.topology, vps, job, block)
            .unwrap_or(Locality::OffCen)
    }
}

/// What a scheduler learns about a job when it arrives.
#[derive(Clone, Debug, PartialEq)]
pub struct JobInfo {
    pub id: JobId,
    pub profile: String,
    pub hash: JobHash,
    pub map_count: usize,
    pub reduce_count: usize,
    pub order: u32,
}

/// How a scheduler routed a job.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Unknown filtering percentage, bootstrap FIFO queues.
    FifoBootstrap,
    PolicyA,
    PolicyB,
    PolicyC,
    /// Enrolled by a baseline scheduler.
    Baseline,
}

impl Route {
    pub fn label(&self) -> &'static str {
        match self {
            Route::FifoBootstrap => "fifo_bootstrap",
            Route::PolicyA => "policy_a",
            Route::PolicyB => "policy_b",
            Route::PolicyC => "policy_c",
            Route::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Submission {
    pub class: JobClass,
    pub route: Route,
}

pub trait TaskScheduler {
    fn kind(&self) -> SchedulerKind;

    /// Called once per job at its arrival instant.
    fn submit(&mut self, job: &JobInfo, view: &ClusterView<'_>) -> Result<Submission>;

    /// Called when `vps` has an idle slot of `slot`. A returned task is
    /// considered running on `vps` from now on.
    fn next_task(&mut self, vps: VpsId, slot: SlotKind, view: &ClusterView<'_>) -> Option<TaskRef>;

    fn task_finished(&mut self, _task: TaskRef, _vps: VpsId) {}

    fn job_completed(&mut self, _job: &JobInfo, _observed_fps: &[f64]) {}

    /// Stable text snapshot of internal queues for debugging.
    fn dump(&self) -> String {
        String::new()
    }
}

/// Hadoop-FIFO choice among map tasks listed in queue order: the first
/// VPS-local task, else the first Cen-local task, else the head. Returns the
/// position of the chosen task.
pub fn fifo_pick<'t>(
    tasks: impl IntoIterator<Item = &'t TaskRef>,
    vps: VpsId,
    view: &ClusterView<'_>,
) -> Option<usize> {
    let mut first = None;
    let mut cen = None;
    for (pos, task) in tasks.into_iter().enumerate() {
        first.get_or_insert(pos);
        let TaskKind::Map(block) = task.kind else {
            continue;
        };
        match view.locality(vps, task.job, block) {
            Locality::VpsLocal => return Some(pos),
            Locality::CenLocal => {
                cen.get_or_insert(pos);
            }
            Locality::OffCen => {}
        }
    }
    cen.or(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::TopologySpec;

    fn fixture() -> (ClusterTopology, BlockPlacement) {
        let topo = ClusterTopology::build(&TopologySpec::uniform(2, 2)).unwrap();
        let mut p = BlockPlacement::new(1);
        // job 1: B1 on VPS 2 (other dc), B2 on VPS 0, B3 on VPS 1
        p.insert(
            1,
            vec![
                vec![VpsId(2)],
                vec![VpsId(0)],
                vec![VpsId(1)],
                vec![VpsId(3)],
            ],
        );
        (topo, p)
    }

    #[test]
    fn prefers_vps_local() {
        let (topo, p) = fixture();
        let view = ClusterView {
            topology: &topo,
            placement: &p,
        };
        let off = TaskRef::map(1, 0);
        let local = TaskRef::map(1, 1);
        let cen = TaskRef::map(1, 2);
        let off2 = TaskRef::map(1, 3);
        assert_eq!(fifo_pick(&[off, local], VpsId(0), &view), Some(1));
        assert_eq!(fifo_pick(&[cen, local], VpsId(0), &view), Some(1));
        assert_eq!(fifo_pick(&[off, cen], VpsId(0), &view), Some(1));
        assert_eq!(fifo_pick(&[off, off2], VpsId(0), &view), Some(0));
        assert_eq!(fifo_pick(&[], VpsId(0), &view), None);
    }

    #[test]
    fn scheduler_names_round_trip() {
        for k in SchedulerKind::ALL {
            assert_eq!(k.name().parse::<SchedulerKind>().unwrap(), k);
        }
        assert!("lifo".parse::<SchedulerKind>().is_err());
    }
}
