//! Discrete-event simulator of MapReduce scheduling on virtual clusters that
//! span several datacenters.

pub mod baselines;
pub mod classify;
pub mod cluster;
pub mod engine;
pub mod error;
pub mod joss;
pub mod metrics;
pub mod scenario;
pub mod sched;
pub mod workload;

pub use engine::{run, CostModel, RunInputs, RunOutcome};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use scenario::{Scenario, ScenarioConfig};
pub use sched::{SchedulerKind, TaskScheduler};
