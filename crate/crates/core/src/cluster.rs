//! Virtual cluster topology and input-block placement.
//!
//! Datacenters and VPSs are addressed by dense 0-based indices internally.
//! Human-facing output renders datacenters as `cen_1..cen_k` and block
//! indices as `B_1..B_m`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type JobId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DcId(pub usize);

impl fmt::Display for DcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cen_{}", self.0 + 1)
    }
}

/// Flat index of a VPS across the whole cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VpsId(pub usize);

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatacenterSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub vps: usize,
    #[serde(default = "one")]
    pub map_slots: u32,
    #[serde(default = "one")]
    pub reduce_slots: u32,
}

impl DatacenterSpec {
    pub fn with_vps(vps: usize) -> Self {
        DatacenterSpec {
            name: None,
            vps,
            map_slots: 1,
            reduce_slots: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub datacenters: Vec<DatacenterSpec>,
}

impl TopologySpec {
    pub fn uniform(k: usize, vps_per_dc: usize) -> Self {
        TopologySpec {
            datacenters: (0..k)
                .map(|_| DatacenterSpec::with_vps(vps_per_dc))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VpsNode {
    pub id: VpsId,
    pub dc: DcId,
    /// 0-based position inside its datacenter.
    pub local: usize,
    pub map_slots: u32,
    pub reduce_slots: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Datacenter {
    pub id: DcId,
    pub name: String,
    vps: Range<usize>,
}

/// Mean VPS count per datacenter, kept as an exact ratio `total / k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AvgVps {
    pub total: u64,
    pub k: u64,
}

impl AvgVps {
    /// `m <= total / k`, compared without rounding.
    pub fn admits(&self, m: u64) -> bool {
        m * self.k <= self.total
    }

    pub fn as_f64(&self) -> f64 {
        self.total as f64 / self.k as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTopology {
    dcs: Vec<Datacenter>,
    nodes: Vec<VpsNode>,
}

impl ClusterTopology {
    pub fn build(spec: &TopologySpec) -> Result<Self> {
        if spec.datacenters.len() < 2 {
            return Err(Error::Topology(format!(
                "k must be ≥ 2 (got {})",
                spec.datacenters.len()
            )));
        }
        let mut dcs = Vec::with_capacity(spec.datacenters.len());
        let mut nodes = Vec::new();
        for (c, dc) in spec.datacenters.iter().enumerate() {
            if dc.vps < 1 {
                return Err(Error::Topology(format!(
                    "datacenter {} must have at least one VPS",
                    c + 1
                )));
            }
            let start = nodes.len();
            for local in 0..dc.vps {
                nodes.push(VpsNode {
                    id: VpsId(nodes.len()),
                    dc: DcId(c),
                    local,
                    map_slots: dc.map_slots,
                    reduce_slots: dc.reduce_slots,
                });
            }
            dcs.push(Datacenter {
                id: DcId(c),
                name: dc.name.clone().unwrap_or_else(|| format!("cen_{}", c + 1)),
                vps: start..nodes.len(),
            });
        }
        Ok(ClusterTopology { dcs, nodes })
    }

    /// Number of datacenters.
    pub fn k(&self) -> usize {
        self.dcs.len()
    }

    pub fn vps_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn datacenters(&self) -> &[Datacenter] {
        &self.dcs
    }

    pub fn nodes(&self) -> &[VpsNode] {
        &self.nodes
    }

    pub fn node(&self, vps: VpsId) -> &VpsNode {
        &self.nodes[vps.0]
    }

    pub fn dc_of(&self, vps: VpsId) -> DcId {
        self.nodes[vps.0].dc
    }

    pub fn vps_in(&self, dc: DcId) -> impl Iterator<Item = VpsId> {
        self.dcs[dc.0].vps.clone().map(VpsId)
    }

    pub fn dc_size(&self, dc: DcId) -> usize {
        self.dcs[dc.0].vps.len()
    }

    pub fn avg_vps(&self) -> AvgVps {
        AvgVps {
            total: self.nodes.len() as u64,
            k: self.dcs.len() as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Locality {
    VpsLocal,
    CenLocal,
    OffCen,
}

/// Picks `min(rho, vps_count)` distinct VPSs per block, uniformly without
/// replacement. Each replica set is returned sorted.
pub fn place_blocks<R: Rng + ?Sized>(
    topology: &ClusterTopology,
    block_count: usize,
    rho: usize,
    rng: &mut R,
) -> Vec<Vec<VpsId>> {
    let n = topology.vps_count();
    let copies = rho.max(1).min(n);
    (0..block_count)
        .map(|_| {
            let mut set: Vec<VpsId> = sample(rng, n, copies).into_iter().map(VpsId).collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// Replica locations for the blocks of every job in a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockPlacement {
    replication: usize,
    jobs: BTreeMap<JobId, Vec<Vec<VpsId>>>,
}

impl BlockPlacement {
    pub fn new(replication: usize) -> Self {
        BlockPlacement {
            replication: replication.max(1),
            jobs: BTreeMap::new(),
        }
    }

    /// Places every `(job, block_count)` pair in the given order from one
    /// seeded stream.
    pub fn generate(
        topology: &ClusterTopology,
        jobs: impl IntoIterator<Item = (JobId, usize)>,
        rho: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut placement = BlockPlacement::new(rho);
        for (job, m) in jobs {
            let blocks = place_blocks(topology, m, rho, &mut rng);
            placement.insert(job, blocks);
        }
        placement
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn insert(&mut self, job: JobId, replicas: Vec<Vec<VpsId>>) {
        self.jobs.insert(job, replicas);
    }

    pub fn contains_job(&self, job: JobId) -> bool {
        self.jobs.contains_key(&job)
    }

    pub fn block_count(&self, job: JobId) -> Option<usize> {
        self.jobs.get(&job).map(Vec::len)
    }

    pub fn replicas(&self, job: JobId, block: usize) -> Result<&[VpsId]> {
        self.jobs
            .get(&job)
            .and_then(|b| b.get(block))
            .map(Vec::as_slice)
            .ok_or(Error::UnknownBlock { job, block })
    }

    /// `L_c` for every datacenter: the block indices with at least one
    /// replica inside `c`. Sets may overlap.
    pub fn unique_blocks_per_datacenter(
        &self,
        topology: &ClusterTopology,
        job: JobId,
    ) -> Result<Vec<BTreeSet<usize>>> {
        let blocks = self
            .jobs
            .get(&job)
            .ok_or(Error::UnknownBlock { job, block: 0 })?;
        let mut sets = vec![BTreeSet::new(); topology.k()];
        for (i, replicas) in blocks.iter().enumerate() {
            for vps in replicas {
                sets[topology.dc_of(*vps).0].insert(i);
            }
        }
        Ok(sets)
    }

    pub fn locality_level(
        &self,
        topology: &ClusterTopology,
        vps: VpsId,
        job: JobId,
        block: usize,
    ) -> Result<Locality> {
        self.nearest_replica(topology, vps, job, block)
            .map(|(l, _)| l)
    }

    /// Locality level plus the replica a reader on `vps` fetches from:
    /// itself, else the lowest-indexed replica in its datacenter, else the
    /// lowest-indexed replica anywhere.
    pub fn nearest_replica(
        &self,
        topology: &ClusterTopology,
        vps: VpsId,
        job: JobId,
        block: usize,
    ) -> Result<(Locality, VpsId)> {
        let replicas = self.replicas(job, block)?;
        if replicas.contains(&vps) {
            return Ok((Locality::VpsLocal, vps));
        }
        let dc = topology.dc_of(vps);
        if let Some(src) = replicas.iter().find(|r| topology.dc_of(**r) == dc) {
            return Ok((Locality::CenLocal, *src));
        }
        match replicas.first() {
            Some(src) => Ok((Locality::OffCen, *src)),
            None => Err(Error::UnknownBlock { job, block }),
        }
    }
}
