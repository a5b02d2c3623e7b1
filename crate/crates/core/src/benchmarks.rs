//! Benchmark LPs: the offline coverage LP, its online counterpart with rate-scaled worker
//! constraints, and the configuration LP over worker subsets of each task.

use thiserror::Error;

use crate::instance::{Instance, InstanceError, UtilityKind};
use crate::lpsolver::{solve_max, LinearProgram, LpError, LpSolution, LpStatus};

pub const DEFAULT_MAX_VARS: usize = 100_000;
/// Largest task capacity accepted by [`build_config_lp`].
pub const MAX_CONFIG_CAPACITY: u32 = 4;
/// Slack allowed by [`verify_marginal_feasibility`].
pub const MARGINAL_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("task {task} does not use a weighted coverage utility")]
    NotCoverage { task: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("task {task} has capacity {capacity}, above the configuration LP limit {MAX_CONFIG_CAPACITY}")]
    CapacityTooLarge { task: usize, capacity: u32 },
    #[error("configuration LP needs {needed} variables, limit is {max}")]
    TooManyVariables { needed: usize, max: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP solve ended with status {0:?}")]
    NotOptimal(LpStatus),
}

/// A task-feature pair `f = (i, k)` with its weight and the task's edges whose worker covers `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub task: usize,
    pub feature: usize,
    pub weight: f64,
    pub edges: Vec<usize>,
}

/// Every `(i, k)` pair, task-major.
pub fn feature_pairs(instance: &Instance) -> Vec<FeaturePair> {
    let mut out = Vec::with_capacity(instance.num_tasks() * instance.num_features());
    for (i, task) in instance.tasks().iter().enumerate() {
        for k in 0..instance.num_features() {
            let edges = instance
                .task_edges(i)
                .iter()
                .copied()
                .filter(|&e| instance.workers()[instance.edges()[e].1].features[k])
                .collect();
            out.push(FeaturePair {
                task: i,
                feature: k,
                weight: task.feature_weights.get(k).copied().unwrap_or(0.0),
                edges,
            });
        }
    }
    out
}

/// A coverage LP together with the variable index of every edge (`x`) and feature pair (`z`).
#[derive(Debug, Clone)]
pub struct CoverageLp {
    pub lp: LinearProgram,
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub pairs: Vec<FeaturePair>,
}

impl CoverageLp {
    pub fn edge_values(&self, sol: &LpSolution) -> Vec<f64> {
        self.x.iter().map(|&v| sol.values[v]).collect()
    }

    pub fn pair_values(&self, sol: &LpSolution) -> Vec<f64> {
        self.z.iter().map(|&v| sol.values[v]).collect()
    }
}

fn require_coverage(instance: &Instance) -> Result<(), BenchmarkError> {
    match instance.tasks().iter().position(|t| !t.utility.is_coverage()) {
        Some(task) => Err(BenchmarkError::NotCoverage { task }),
        None => Ok(()),
    }
}

/// Shared skeleton: `x_e ∈ [0, x_cap(e)]`, `z_f ∈ [0,1]`, task rows, worker rows with
/// right-hand side `worker_rhs(j)` and coverage rows `z_f − Σ_{E_f} x_e ≤ 0`.
fn coverage_lp(instance: &Instance, x_cap: impl Fn(usize) -> f64, worker_rhs: impl Fn(usize) -> f64) -> CoverageLp {
    let mut lp = LinearProgram::new();
    let x: Vec<usize> = instance
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| lp.add_var(format!("x_{i}_{j}"), 0.0, x_cap(e), 0.0))
        .collect();
    let pairs = feature_pairs(instance);
    let z: Vec<usize> = pairs
        .iter()
        .map(|f| lp.add_var(format!("z_{}_{}", f.task, f.feature), 0.0, 1.0, f.weight))
        .collect();
    for (i, t) in instance.tasks().iter().enumerate() {
        let terms: Vec<(usize, f64)> = instance.task_edges(i).iter().map(|&e| (x[e], 1.0)).collect();
        lp.add_le(&terms, t.capacity as f64);
    }
    for j in 0..instance.num_workers() {
        let terms: Vec<(usize, f64)> = instance.worker_edges(j).iter().map(|&e| (x[e], 1.0)).collect();
        lp.add_le(&terms, worker_rhs(j));
    }
    for (f, pair) in pairs.iter().enumerate() {
        let mut terms = vec![(z[f], 1.0)];
        terms.extend(pair.edges.iter().map(|&e| (x[e], -1.0)));
        lp.add_le(&terms, 0.0);
    }
    CoverageLp { lp, x, z, pairs }
}

/// Offline coverage LP: maximize `Σ_f w_f z_f` with `z_f ≤ min(1, Σ_{E_f} x_e)` and both
/// capacity sides. Arrival rates, if any, are ignored.
pub fn build_offline_lp(instance: &Instance) -> Result<CoverageLp, BenchmarkError> {
    require_coverage(instance)?;
    Ok(coverage_lp(
        instance,
        |_| 1.0,
        |j| instance.workers()[j].capacity as f64,
    ))
}

/// Online coverage LP: as the offline LP with `x_e ≤ r_j` and worker rows `Σ_{E_j} x_e ≤ b_j r_j`.
pub fn build_online_coverage_lp(instance: &Instance) -> Result<CoverageLp, BenchmarkError> {
    require_coverage(instance)?;
    let rates = instance.rates()?;
    Ok(coverage_lp(
        instance,
        |e| rates[instance.edges()[e].1].min(1.0),
        |j| instance.workers()[j].capacity as f64 * rates[j],
    ))
}

/// One configuration `(i, S)`: a subset of task `i`'s neighbors of size at most `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSet {
    pub task: usize,
    /// Sorted worker indices.
    pub workers: Vec<usize>,
    /// Edge id of `(i, j)` for each worker, aligned with `workers`.
    pub edges: Vec<usize>,
    pub utility: f64,
}

/// Configuration LP; variable `v` is `x_{i,S}` for `configs[v]`.
#[derive(Debug, Clone)]
pub struct ConfigLp {
    pub lp: LinearProgram,
    pub configs: Vec<ConfigurationSet>,
}

fn binomial_saturating(n: usize, k: usize) -> usize {
    let mut acc: usize = 1;
    for t in 0..k {
        acc = match acc.checked_mul(n - t) {
            Some(v) => v / (t + 1),
            None => return usize::MAX,
        };
    }
    acc
}

/// `|Λ_i| = Σ_{k ≤ b_i} C(|N_i|, k)`.
pub fn config_count(neighbors: usize, capacity: u32) -> usize {
    (0..=(capacity as usize).min(neighbors))
        .map(|k| binomial_saturating(neighbors, k))
        .fold(0usize, usize::saturating_add)
}

/// Subsets of `0..n` of size at most `b`, in colex order (ascending as bitmasks).
fn colex_subsets(n: usize, b: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, b: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == b {
            return;
        }
        for p in start..n {
            cur.push(p);
            rec(p + 1, n, b, cur, out);
            cur.pop();
        }
    }
    rec(0, n, b, &mut cur, &mut out);
    out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    out
}

/// Configuration LP: maximize `Σ_i Σ_S g_i(S) x_{i,S}` subject to one distribution per task,
/// `Σ_{S ∋ j} x_{i,S} ≤ r_j` per edge, and `Σ_i Σ_{S ∋ j} x_{i,S} ≤ b_j r_j` per worker.
pub fn build_config_lp(instance: &Instance, max_vars: usize) -> Result<ConfigLp, BenchmarkError> {
    let rates = instance.rates()?;
    let mut needed = 0usize;
    for (i, t) in instance.tasks().iter().enumerate() {
        if t.capacity > MAX_CONFIG_CAPACITY {
            return Err(BenchmarkError::CapacityTooLarge {
                task: i,
                capacity: t.capacity,
            });
        }
        needed = needed.saturating_add(config_count(instance.task_edges(i).len(), t.capacity));
    }
    if needed > max_vars {
        return Err(BenchmarkError::TooManyVariables { needed, max: max_vars });
    }

    let mut lp = LinearProgram::new();
    let mut configs = Vec::with_capacity(needed);
    // rows collected as sparse terms first, then added once all variables exist
    let mut task_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.num_tasks()];
    let mut edge_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.num_edges()];
    let mut worker_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.num_workers()];
    for (i, t) in instance.tasks().iter().enumerate() {
        let mut local: Vec<(usize, usize)> = instance
            .task_edges(i)
            .iter()
            .map(|&e| (instance.edges()[e].1, e))
            .collect();
        local.sort_unstable();
        for subset in colex_subsets(local.len(), t.capacity as usize) {
            let workers: Vec<usize> = subset.iter().map(|&p| local[p].0).collect();
            let edges: Vec<usize> = subset.iter().map(|&p| local[p].1).collect();
            let utility = if workers.is_empty() {
                0.0
            } else {
                instance.utility_value(i, &workers)?
            };
            let name = format!(
                "x_{i}_{{{}}}",
                workers.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",")
            );
            let v = lp.add_var(name, 0.0, 1.0, utility);
            task_terms[i].push((v, 1.0));
            for (&j, &e) in workers.iter().zip(&edges) {
                edge_terms[e].push((v, 1.0));
                worker_terms[j].push((v, 1.0));
            }
            configs.push(ConfigurationSet {
                task: i,
                workers,
                edges,
                utility,
            });
        }
    }
    for terms in &task_terms {
        lp.add_le(terms, 1.0);
    }
    for (e, terms) in edge_terms.iter().enumerate() {
        lp.add_le(terms, rates[instance.edges()[e].1]);
    }
    for (j, terms) in worker_terms.iter().enumerate() {
        lp.add_le(terms, instance.workers()[j].capacity as f64 * rates[j]);
    }
    Ok(ConfigLp { lp, configs })
}

/// `y_e = Σ_{S ∋ j} x_{i,S}` for every edge `e = (i, j)`.
pub fn marginals_from_config(values: &[f64], configs: &[ConfigurationSet], num_edges: usize) -> Vec<f64> {
    let mut y = vec![0.0; num_edges];
    for (c, &x) in configs.iter().zip(values) {
        for &e in &c.edges {
            y[e] += x;
        }
    }
    y
}

/// Utility bound of each task under a configuration solution, `Σ_S g_i(S) x_{i,S}`.
pub fn task_values_from_config(values: &[f64], configs: &[ConfigurationSet], num_tasks: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_tasks];
    for (c, &x) in configs.iter().zip(values) {
        out[c.task] += c.utility * x;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarginalViolation {
    Length { got: usize, expected: usize },
    EdgeRate { edge: usize, value: f64, rate: f64 },
    WorkerLoad { worker: usize, load: f64, limit: f64 },
    TaskLoad { task: usize, load: f64, limit: f64 },
}

/// Checks `y_e ≤ r_j`, `Σ_{E_j} y_e ≤ r_j b_j` and `Σ_{E_i} y_e ≤ b_i` with slack [`MARGINAL_TOL`].
pub fn verify_marginal_feasibility(instance: &Instance, y: &[f64]) -> Vec<MarginalViolation> {
    if y.len() != instance.num_edges() {
        return vec![MarginalViolation::Length {
            got: y.len(),
            expected: instance.num_edges(),
        }];
    }
    let mut out = Vec::new();
    for (e, &(_, j)) in instance.edges().iter().enumerate() {
        let rate = instance.rate(j);
        if y[e] > rate + MARGINAL_TOL {
            out.push(MarginalViolation::EdgeRate {
                edge: e,
                value: y[e],
                rate,
            });
        }
    }
    for (j, w) in instance.workers().iter().enumerate() {
        let load: f64 = instance.worker_edges(j).iter().map(|&e| y[e]).sum();
        let limit = instance.rate(j) * w.capacity as f64;
        if load > limit + MARGINAL_TOL {
            out.push(MarginalViolation::WorkerLoad { worker: j, load, limit });
        }
    }
    for (i, t) in instance.tasks().iter().enumerate() {
        let load: f64 = instance.task_edges(i).iter().map(|&e| y[e]).sum();
        let limit = t.capacity as f64;
        if load > limit + MARGINAL_TOL {
            out.push(MarginalViolation::TaskLoad { task: i, load, limit });
        }
    }
    out
}

/// Solves and insists on an optimal status.
pub fn solve_optimal(lp: &LinearProgram) -> Result<LpSolution, BenchmarkError> {
    let sol = solve_max(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        s => Err(BenchmarkError::NotOptimal(s)),
    }
}

/// True when the configuration LP can value every task (explicit oracles included).
pub fn supports_config(instance: &Instance) -> bool {
    instance.tasks().iter().all(|t| {
        t.capacity <= MAX_CONFIG_CAPACITY
            && match &t.utility {
                UtilityKind::ExplicitOracle { table } => table.max_size() >= t.capacity as usize,
                _ => true,
            }
    })
}

/// Which of the three problem variants an instance is treated as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    OffCcm,
    OnCcm,
    OnCsm,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::OffCcm => "off-ccm",
            Model::OnCcm => "on-ccm",
            Model::OnCsm => "on-csm",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off-ccm" => Ok(Model::OffCcm),
            "on-ccm" => Ok(Model::OnCcm),
            "on-csm" => Ok(Model::OnCsm),
            other => Err(format!("unknown model '{other}' (expected off-ccm, on-ccm or on-csm)")),
        }
    }
}

/// Optimum of the model's benchmark LP.
pub fn lp_bound(instance: &Instance, model: Model) -> Result<f64, BenchmarkError> {
    let lp = match model {
        Model::OffCcm => build_offline_lp(instance)?.lp,
        Model::OnCcm => build_online_coverage_lp(instance)?.lp,
        Model::OnCsm => build_config_lp(instance, DEFAULT_MAX_VARS)?.lp,
    };
    Ok(solve_optimal(&lp)?.objective)
}
