//! Problem data: tasks, worker types, the compatibility graph and per-task utilities.
//!
//! An [`Instance`] is immutable once built. It caches the edge lists incident to every task and
//! worker so the hot simulation loops never rescan the edge set.

mod generate;
mod io;
mod oracle;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gen_random, gen_star_example, split_high_rate_types, GenParams, UtilityChoice};
pub use io::{load_json, save_json, SCHEMA_VERSION};
pub use oracle::{OracleTable, MAX_ORACLE_GROUND};

/// Relative tolerance on `Σ r_j = T`.
pub const RATE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("unknown worker index {0}")]
    UnknownWorker(usize),
    #[error("unknown task index {0}")]
    UnknownTask(usize),
    #[error("subset is not tabulated by the explicit oracle")]
    TableMiss,
    #[error("explicit oracle ground set has {0} elements (limit {MAX_ORACLE_GROUND})")]
    OracleTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("no edges generated after 100 attempts")]
    EmptyGraph,
    #[error("instance has no arrival rates (offline instance)")]
    NotOnline,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("allocation infeasible: {0}")]
    InfeasibleAllocation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityKind {
    /// `g(S) = Σ_k w_k · min(1, Σ_{j∈S} χ_jk)`
    WeightedCoverage,
    /// `g(S) = Σ_k sqrt(w_k · Σ_{j∈S} χ_jk)`
    SqrtDiversity,
    ExplicitOracle {
        table: OracleTable,
    },
}

impl UtilityKind {
    pub fn is_coverage(&self) -> bool {
        matches!(self, UtilityKind::WeightedCoverage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub capacity: u32,
    pub utility: UtilityKind,
    #[serde(default)]
    pub feature_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub capacity: u32,
    #[serde(with = "bits")]
    pub features: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate: Option<f64>,
}

/// One reason an instance fails validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EdgeOutOfRange { edge: usize },
    DuplicateEdge { task: usize, worker: usize },
    TaskCapacity { task: usize },
    WorkerCapacity { worker: usize },
    FeatureWeightsLength { task: usize, len: usize },
    FeatureWeightRange { task: usize, feature: usize },
    WorkerFeaturesLength { worker: usize, len: usize },
    MissingRate { worker: usize },
    NonPositiveRate { worker: usize },
    RateSum { sum: f64, horizon: u32 },
    ZeroHorizon,
    OracleGround { task: usize },
    OracleIncomplete { task: usize },
    OracleNotSubmodular { task: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EdgeOutOfRange { edge } => write!(f, "edge #{edge} references a missing task or worker"),
            Violation::DuplicateEdge { task, worker } => write!(f, "duplicate edge ({task}, {worker})"),
            Violation::TaskCapacity { task } => write!(f, "task {task} has capacity < 1"),
            Violation::WorkerCapacity { worker } => write!(f, "worker {worker} has capacity < 1"),
            Violation::FeatureWeightsLength { task, len } => {
                write!(f, "task {task} has {len} feature weights, expected num_features")
            }
            Violation::FeatureWeightRange { task, feature } => {
                write!(f, "task {task} weight for feature {feature} outside [0,1]")
            }
            Violation::WorkerFeaturesLength { worker, len } => {
                write!(f, "worker {worker} has {len} features, expected num_features")
            }
            Violation::MissingRate { worker } => write!(f, "worker {worker} has no arrival rate"),
            Violation::NonPositiveRate { worker } => write!(f, "worker {worker} has a non-positive arrival rate"),
            Violation::RateSum { sum, horizon } => {
                write!(f, "arrival rates sum to {sum}, expected horizon {horizon}")
            }
            Violation::ZeroHorizon => write!(f, "horizon must be at least 1"),
            Violation::OracleGround { task } => {
                write!(f, "task {task} oracle ground set differs from its neighbor set")
            }
            Violation::OracleIncomplete { task } => {
                write!(
                    f,
                    "task {task} oracle does not cover every subset up to the task capacity"
                )
            }
            Violation::OracleNotSubmodular { task } => {
                write!(f, "task {task} oracle is not normalized monotone submodular")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    tasks: Vec<TaskSpec>,
    workers: Vec<WorkerSpec>,
    edges: Vec<(usize, usize)>,
    num_features: usize,
    horizon: Option<u32>,
    task_edges: Vec<Vec<usize>>,
    worker_edges: Vec<Vec<usize>>,
}

impl Instance {
    /// Builds an instance and its incidence lists. Out-of-range edges are kept in the edge list
    /// (so [`Instance::validate`] can report them) but left out of the incidence lists.
    pub fn new(
        tasks: Vec<TaskSpec>,
        workers: Vec<WorkerSpec>,
        edges: Vec<(usize, usize)>,
        num_features: usize,
        horizon: Option<u32>,
    ) -> Self {
        let mut task_edges = vec![Vec::new(); tasks.len()];
        let mut worker_edges = vec![Vec::new(); workers.len()];
        for (e, &(i, j)) in edges.iter().enumerate() {
            if i < tasks.len() && j < workers.len() {
                task_edges[i].push(e);
                worker_edges[j].push(e);
            }
        }
        Self {
            tasks,
            workers,
            edges,
            num_features,
            horizon,
            task_edges,
            worker_edges,
        }
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn workers(&self) -> &[WorkerSpec] {
        &self.workers
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn horizon(&self) -> Option<u32> {
        self.horizon
    }

    pub fn is_online(&self) -> bool {
        self.horizon.is_some()
    }

    /// Edge ids incident to task `i`, in edge order.
    pub fn task_edges(&self, i: usize) -> &[usize] {
        &self.task_edges[i]
    }

    /// Edge ids incident to worker `j`, in edge order.
    pub fn worker_edges(&self, j: usize) -> &[usize] {
        &self.worker_edges[j]
    }

    /// Sorted neighbor set `N_i`.
    pub fn task_neighbors(&self, i: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.task_edges[i].iter().map(|&e| self.edges[e].1).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn rate(&self, j: usize) -> f64 {
        self.workers[j].arrival_rate.unwrap_or(0.0)
    }

    /// Arrival rates, or [`InstanceError::NotOnline`] for offline instances.
    pub fn rates(&self) -> Result<Vec<f64>, InstanceError> {
        if self.horizon.is_none() {
            return Err(InstanceError::NotOnline);
        }
        self.workers
            .iter()
            .map(|w| w.arrival_rate.ok_or(InstanceError::NotOnline))
            .collect()
    }

    pub fn all_coverage(&self) -> bool {
        self.tasks.iter().all(|t| t.utility.is_coverage())
    }

    /// Every invariant violation; an empty list means the instance is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            if i >= self.tasks.len() || j >= self.workers.len() {
                out.push(Violation::EdgeOutOfRange { edge: e });
            } else if !seen.insert((i, j)) {
                out.push(Violation::DuplicateEdge { task: i, worker: j });
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.capacity < 1 {
                out.push(Violation::TaskCapacity { task: i });
            }
            let needs_weights = !matches!(t.utility, UtilityKind::ExplicitOracle { .. });
            if (needs_weights || !t.feature_weights.is_empty()) && t.feature_weights.len() != self.num_features {
                out.push(Violation::FeatureWeightsLength {
                    task: i,
                    len: t.feature_weights.len(),
                });
            }
            for (k, &w) in t.feature_weights.iter().enumerate() {
                if !(0.0..=1.0).contains(&w) {
                    out.push(Violation::FeatureWeightRange { task: i, feature: k });
                }
            }
            if let UtilityKind::ExplicitOracle { table } = &t.utility {
                if table.ground() != self.task_neighbors(i).as_slice() {
                    out.push(Violation::OracleGround { task: i });
                } else if table.max_size() < (t.capacity as usize).min(table.ground_size()) {
                    out.push(Violation::OracleIncomplete { task: i });
                } else {
                    match table.is_monotone_submodular() {
                        Ok(true) => {}
                        Ok(false) => out.push(Violation::OracleNotSubmodular { task: i }),
                        Err(_) => out.push(Violation::OracleIncomplete { task: i }),
                    }
                }
            }
        }
        for (j, w) in self.workers.iter().enumerate() {
            if w.capacity < 1 {
                out.push(Violation::WorkerCapacity { worker: j });
            }
            if w.features.len() != self.num_features {
                out.push(Violation::WorkerFeaturesLength {
                    worker: j,
                    len: w.features.len(),
                });
            }
        }
        if let Some(horizon) = self.horizon {
            if horizon == 0 {
                out.push(Violation::ZeroHorizon);
            }
            let mut sum = 0.0;
            for (j, w) in self.workers.iter().enumerate() {
                match w.arrival_rate {
                    None => out.push(Violation::MissingRate { worker: j }),
                    Some(r) if !(r > 0.0) || !r.is_finite() => out.push(Violation::NonPositiveRate { worker: j }),
                    Some(r) => sum += r,
                }
            }
            let target = horizon as f64;
            if horizon > 0 && (sum - target).abs() > RATE_SUM_TOL * target {
                out.push(Violation::RateSum { sum, horizon });
            }
        }
        out
    }

    /// `g_i` on the distinct workers in `assigned`; repeated workers add nothing.
    pub fn utility_value(&self, task: usize, assigned: &[usize]) -> Result<f64, InstanceError> {
        let spec = self.tasks.get(task).ok_or(InstanceError::UnknownTask(task))?;
        if let Some(&bad) = assigned.iter().find(|&&j| j >= self.workers.len()) {
            return Err(InstanceError::UnknownWorker(bad));
        }
        match &spec.utility {
            UtilityKind::WeightedCoverage => {
                let mut covered = vec![false; self.num_features];
                for &j in assigned {
                    for (c, &x) in covered.iter_mut().zip(&self.workers[j].features) {
                        *c |= x;
                    }
                }
                Ok(covered
                    .iter()
                    .zip(&spec.feature_weights)
                    .filter(|(c, _)| **c)
                    .map(|(_, w)| w)
                    .sum())
            }
            UtilityKind::SqrtDiversity => {
                let distinct = dedup(assigned);
                let mut counts = vec![0u32; self.num_features];
                for &j in &distinct {
                    for (c, &x) in counts.iter_mut().zip(&self.workers[j].features) {
                        *c += x as u32;
                    }
                }
                Ok(counts
                    .iter()
                    .zip(&spec.feature_weights)
                    .map(|(&c, &w)| (w * c as f64).sqrt())
                    .sum())
            }
            UtilityKind::ExplicitOracle { table } => table.value(assigned),
        }
    }

    /// Tabulates task `i`'s utility over `N_i` up to its capacity.
    pub fn task_oracle(&self, i: usize) -> Result<OracleTable, InstanceError> {
        let ground = self.task_neighbors(i);
        let cap = self.tasks[i].capacity as usize;
        let mut err = None;
        let table = OracleTable::from_fn(ground.clone(), cap, |mask| {
            let set: Vec<usize> = (0..ground.len())
                .filter(|p| mask >> p & 1 == 1)
                .map(|p| ground[p])
                .collect();
            self.utility_value(i, &set).unwrap_or_else(|e| {
                err.get_or_insert(e);
                f64::NAN
            })
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(table),
        }
    }
}

/// Exhaustive monotone-submodularity check of a tabulated utility.
pub fn is_monotone_submodular(table: &OracleTable) -> Result<bool, InstanceError> {
    table.is_monotone_submodular()
}

pub(crate) fn dedup(workers: &[usize]) -> Vec<usize> {
    let mut v = workers.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// A multiset of matched edges, stored as a multiplicity per edge id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    counts: Vec<u32>,
}

impl Allocation {
    pub fn empty(num_edges: usize) -> Self {
        Self {
            counts: vec![0; num_edges],
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    /// Matches every edge whose indicator is set.
    pub fn from_indicator(indicator: &[bool]) -> Self {
        Self {
            counts: indicator.iter().map(|&b| b as u32).collect(),
        }
    }

    pub fn add(&mut self, edge: usize) {
        self.counts[edge] += 1;
    }

    pub fn count(&self, edge: usize) -> u32 {
        self.counts[edge]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Distinct workers matched to task `i`.
    pub fn task_workers(&self, instance: &Instance, i: usize) -> Vec<usize> {
        let mut ws: Vec<usize> = instance
            .task_edges(i)
            .iter()
            .filter(|&&e| self.counts[e] > 0)
            .map(|&e| instance.edges()[e].1)
            .collect();
        ws.sort_unstable();
        ws.dedup();
        ws
    }

    /// Checks both capacity sides. Online allocations may reuse a worker type once per
    /// arrival, so worker loads are compared against `b_j` times `arrivals[j]` when given.
    pub fn check_feasible(&self, instance: &Instance, arrivals: Option<&[u32]>) -> Result<(), InstanceError> {
        if self.counts.len() != instance.num_edges() {
            return Err(InstanceError::InfeasibleAllocation(format!(
                "allocation has {} edges, instance has {}",
                self.counts.len(),
                instance.num_edges()
            )));
        }
        for (i, t) in instance.tasks().iter().enumerate() {
            let load: u32 = instance.task_edges(i).iter().map(|&e| self.counts[e]).sum();
            if load > t.capacity {
                return Err(InstanceError::InfeasibleAllocation(format!(
                    "task {i} load {load} exceeds capacity {}",
                    t.capacity
                )));
            }
        }
        for (j, w) in instance.workers().iter().enumerate() {
            let load: u32 = instance.worker_edges(j).iter().map(|&e| self.counts[e]).sum();
            let cap = w.capacity * arrivals.map_or(1, |a| a[j]);
            if load > cap {
                return Err(InstanceError::InfeasibleAllocation(format!(
                    "worker {j} load {load} exceeds capacity {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// `Σ_i g_i(distinct workers matched to i)`; rejects allocations violating the static capacities.
pub fn allocation_utility(instance: &Instance, allocation: &Allocation) -> Result<f64, InstanceError> {
    if allocation.counts.len() != instance.num_edges() {
        return Err(InstanceError::InfeasibleAllocation("edge count mismatch".into()));
    }
    for (i, t) in instance.tasks().iter().enumerate() {
        let load: u32 = instance.task_edges(i).iter().map(|&e| allocation.counts[e]).sum();
        if load > t.capacity {
            return Err(InstanceError::InfeasibleAllocation(format!("task {i} over capacity")));
        }
    }
    utility_unchecked(instance, allocation)
}

pub(crate) fn utility_unchecked(instance: &Instance, allocation: &Allocation) -> Result<f64, InstanceError> {
    let mut total = 0.0;
    for i in 0..instance.num_tasks() {
        let ws = allocation.task_workers(instance, i);
        if !ws.is_empty() {
            total += instance.utility_value(i, &ws)?;
        }
    }
    Ok(total)
}

mod bits {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[bool], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&b| b as u8).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("feature bit {other} is not 0/1"))),
            })
            .collect()
    }
}
