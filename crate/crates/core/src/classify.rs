//! Job classification: the filtering-percentage registry, the reduce-heavy /
//! map-heavy split and the small / large split.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::AvgVps;
use crate::error::{Error, Result};

/// First 64 bits of SHA-256 over `code \x1f input_type`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobHash(pub u64);

impl fmt::Display for JobHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

pub fn job_hash(code_id: &str, input_type: &str) -> Result<JobHash> {
    if code_id.is_empty() || input_type.is_empty() {
        return Err(Error::Classify(
            "job code and input type must be non-empty".into(),
        ));
    }
    let mut hasher = Sha256::new();
    hasher.update(code_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(input_type.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    Ok(JobHash(u64::from_be_bytes(head)))
}

/// `td = k / (k − 1)`.
pub fn threshold(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Classify(format!("k must be ≥ 2 (got {k})")));
    }
    Ok(k as f64 / (k - 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heaviness {
    ReduceHeavy,
    MapHeavy,
}

pub fn classify_heaviness(fp: f64, td: f64) -> Heaviness {
    if fp > td {
        Heaviness::ReduceHeavy
    } else {
        Heaviness::MapHeavy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Small,
    Large,
}

pub fn classify_scale(m: u64, avg: AvgVps) -> Scale {
    if avg.admits(m) {
        Scale::Small
    } else {
        Scale::Large
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JobClass {
    SmallMh,
    SmallRh,
    Large,
    /// Filtering percentage not yet learned; the job takes the FIFO path.
    Unknown,
}

impl JobClass {
    pub fn label(&self) -> &'static str {
        match self {
            JobClass::SmallMh => "small_mh",
            JobClass::SmallRh => "small_rh",
            JobClass::Large => "large",
            JobClass::Unknown => "unknown",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "small_mh" => JobClass::SmallMh,
            "small_rh" => JobClass::SmallRh,
            "large" => JobClass::Large,
            "unknown" => JobClass::Unknown,
            _ => return None,
        })
    }
}

impl fmt::Display for JobClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Combines both splits. Large jobs are large whatever their heaviness.
pub fn classify(fp: Option<f64>, td: f64, m: u64, avg: AvgVps) -> JobClass {
    let Some(fp) = fp else {
        return JobClass::Unknown;
    };
    match (classify_scale(m, avg), classify_heaviness(fp, td)) {
        (Scale::Large, _) => JobClass::Large,
        (Scale::Small, Heaviness::ReduceHeavy) => JobClass::SmallRh,
        (Scale::Small, Heaviness::MapHeavy) => JobClass::SmallMh,
    }
}

/// Worst-case inter-datacenter bytes under each classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorstCaseTraffic {
    /// Treated as reduce-heavy: every map input fetched remotely.
    pub as_reduce_heavy: f64,
    /// Treated as map-heavy: `(k−1)/k` of the reduce input fetched remotely.
    pub as_map_heavy: f64,
}

impl WorstCaseTraffic {
    pub fn prefers_reduce_heavy(&self) -> bool {
        self.as_map_heavy > self.as_reduce_heavy
    }
}

pub fn worst_case_traffic(block_sizes: &[u64], fp: f64, k: usize) -> Result<WorstCaseTraffic> {
    if k < 2 {
        return Err(Error::Classify(format!("k must be ≥ 2 (got {k})")));
    }
    let total = block_sizes.iter().sum::<u64>() as f64;
    // fp·(k−1) first so that the indifference point fp = k/(k−1) lands on
    // exactly k·total / k.
    let as_map_heavy = fp * (k - 1) as f64 * total / k as f64;
    Ok(WorstCaseTraffic {
        as_reduce_heavy: total,
        as_map_heavy,
    })
}

/// Learned average filtering percentage per job hash. First writer wins.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FpRegistry {
    entries: BTreeMap<JobHash, f64>,
}

impl FpRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, hash: JobHash) -> Option<f64> {
        self.entries.get(&hash).copied()
    }

    pub fn contains(&self, hash: JobHash) -> bool {
        self.entries.contains_key(&hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores the mean of `observed`. Returns `false` (and changes nothing)
    /// if the hash is already known or nothing was observed.
    pub fn record(&mut self, hash: JobHash, observed: &[f64]) -> bool {
        if observed.is_empty() || self.entries.contains_key(&hash) {
            return false;
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        self.entries.insert(hash, mean);
        true
    }

    pub fn insert(&mut self, hash: JobHash, fp_mean: f64) {
        self.entries.insert(hash, fp_mean);
    }

    pub fn iter(&self) -> impl Iterator<Item = (JobHash, f64)> + '_ {
        self.entries.iter().map(|(h, v)| (*h, *v))
    }

    /// `hash fp_mean` per line, sorted by hash.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (h, v) in &self.entries {
            let _ = writeln!(out, "{h} {v}");
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut reg = FpRegistry::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::RegistryParse {
                path: origin.to_string(),
                line: i + 1,
                msg,
            };
            let mut parts = line.split_whitespace();
            let (Some(h), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `hash fp_mean`".into()));
            };
            let hash = u64::from_str_radix(h, 16).map_err(|e| err(format!("hash: {e}")))?;
            let fp: f64 = v.parse().map_err(|e| err(format!("fp_mean: {e}")))?;
            if !(fp >= 0.0 && fp.is_finite()) {
                return Err(err("fp_mean must be ≥ 0".into()));
            }
            reg.insert(JobHash(hash), fp);
        }
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}
