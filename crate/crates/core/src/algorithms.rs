//! LP-guided assignment algorithms and the greedy baseline.
//!
//! The online policies share the contract [`OnlinePolicy`]: on each arrival they see the
//! worker type, the current [`MatchState`] and a random generator, and return the edges to
//! match now. The LP-guided ones precompute one rounding star per worker type; their
//! proposals depend only on the arriving type and the randomness, and the state is used only
//! to drop proposals that are no longer feasible or useful.

use std::sync::Arc;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::benchmarks::{
    build_config_lp, build_offline_lp, build_online_coverage_lp, marginals_from_config, solve_optimal,
    task_values_from_config, BenchmarkError, DEFAULT_MAX_VARS,
};
use crate::instance::{Allocation, Instance, InstanceError, TaskSpec};
use crate::rounding::{dependent_round, dependent_round_star, sanitize_star, FractionalAssignment};

#[derive(Debug, Error)]
pub enum AlgError {
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Progress of one online run.
#[derive(Debug, Clone)]
pub struct MatchState {
    remaining: Vec<u32>,
    matched: Vec<u32>,
    workers: Vec<Vec<usize>>,
    utility: Vec<f64>,
}

impl MatchState {
    pub fn new(instance: &Instance) -> Self {
        Self {
            remaining: instance.tasks().iter().map(|t| t.capacity).collect(),
            matched: vec![0; instance.num_edges()],
            workers: vec![Vec::new(); instance.num_tasks()],
            utility: vec![0.0; instance.num_tasks()],
        }
    }

    pub fn remaining(&self, task: usize) -> u32 {
        self.remaining[task]
    }

    pub fn matched_count(&self, edge: usize) -> u32 {
        self.matched[edge]
    }

    /// Distinct workers matched to `task`, sorted.
    pub fn task_workers(&self, task: usize) -> &[usize] {
        &self.workers[task]
    }

    pub fn task_utility(&self, task: usize) -> f64 {
        self.utility[task]
    }

    pub fn total_utility(&self) -> f64 {
        self.utility.iter().sum()
    }

    /// `g_i(W_i ∪ {j}) − g_i(W_i)` for edge `e = (i, j)`.
    pub fn marginal_gain(&self, instance: &Instance, edge: usize) -> Result<f64, InstanceError> {
        let (i, j) = instance.edges()[edge];
        let ws = &self.workers[i];
        match ws.binary_search(&j) {
            Ok(_) => Ok(0.0),
            Err(p) => {
                let mut with = ws.clone();
                with.insert(p, j);
                Ok(instance.utility_value(i, &with)? - self.utility[i])
            }
        }
    }

    /// Matches `edge`; the caller has checked that its task has capacity left.
    pub fn apply(&mut self, instance: &Instance, edge: usize) -> Result<(), InstanceError> {
        let (i, j) = instance.edges()[edge];
        if self.remaining[i] == 0 {
            return Err(InstanceError::InfeasibleAllocation(format!("task {i} is full")));
        }
        self.remaining[i] -= 1;
        self.matched[edge] += 1;
        if let Err(p) = self.workers[i].binary_search(&j) {
            self.workers[i].insert(p, j);
            self.utility[i] = instance.utility_value(i, &self.workers[i])?;
        }
        Ok(())
    }

    pub fn allocation(&self) -> Allocation {
        Allocation::from_counts(self.matched.clone())
    }
}

/// Decision rule of an online algorithm. One value is used per trial.
pub trait OnlinePolicy {
    fn name(&self) -> &str;

    /// Edges (incident to `worker`) to match at this arrival.
    fn on_arrival(&mut self, round: u32, worker: usize, state: &MatchState, rng: &mut dyn RngCore) -> Vec<usize>;
}

/// Offline dependent-rounding algorithm on the coverage LP.
#[derive(Debug, Clone)]
pub struct Alg1 {
    fa: FractionalAssignment,
    lp_value: f64,
}

impl Alg1 {
    pub fn new(instance: &Instance) -> Result<Self, AlgError> {
        let cov = build_offline_lp(instance)?;
        let sol = solve_optimal(&cov.lp)?;
        let mut fa = FractionalAssignment::new(
            instance.num_tasks(),
            instance.num_workers(),
            instance.edges().to_vec(),
            cov.edge_values(&sol),
        );
        let task_caps: Vec<f64> = instance.tasks().iter().map(|t| t.capacity as f64).collect();
        let worker_caps: Vec<f64> = instance.workers().iter().map(|w| w.capacity as f64).collect();
        fa.cap_node_sums(&task_caps, &worker_caps);
        Ok(Self {
            fa,
            lp_value: sol.objective,
        })
    }

    pub fn lp_value(&self) -> f64 {
        self.lp_value
    }

    pub fn fractional(&self) -> &FractionalAssignment {
        &self.fa
    }

    pub fn round<R: Rng + ?Sized>(&self, rng: &mut R) -> Allocation {
        Allocation::from_indicator(&dependent_round(&self.fa, rng))
    }
}

/// Solves the offline coverage LP and rounds it once.
pub fn alg1_offline<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<Allocation, AlgError> {
    Ok(Alg1::new(instance)?.round(rng))
}

/// Per-worker rounding stars: `values[j][k]` is the rounding probability of edge `edges[j][k]`.
#[derive(Debug, Clone)]
pub struct StarPlan {
    edges: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl StarPlan {
    /// Stars `{u_e / r_j : e ∈ E_j}`, sanitized to `[0,1]` with sum at most `b_j`. A zero rate
    /// gives an all-zero star.
    pub fn from_edge_values(instance: &Instance, u: &[f64]) -> Self {
        let mut edges = Vec::with_capacity(instance.num_workers());
        let mut values = Vec::with_capacity(instance.num_workers());
        for j in 0..instance.num_workers() {
            let r = instance.rate(j);
            let es = instance.worker_edges(j).to_vec();
            let mut vs: Vec<f64> = es.iter().map(|&e| if r > 0.0 { u[e] / r } else { 0.0 }).collect();
            sanitize_star(&mut vs, instance.workers()[j].capacity as f64);
            edges.push(es);
            values.push(vs);
        }
        Self { edges, values }
    }

    pub fn star(&self, worker: usize) -> (&[usize], &[f64]) {
        (&self.edges[worker], &self.values[worker])
    }

    /// Rounds worker `worker`'s star.
    pub fn propose<R: Rng + ?Sized>(&self, worker: usize, rng: &mut R) -> Vec<usize> {
        let picks = dependent_round_star(&self.values[worker], rng);
        self.edges[worker]
            .iter()
            .zip(picks)
            .filter(|(_, p)| *p)
            .map(|(&e, _)| e)
            .collect()
    }
}

/// LP data shared by all trials of the online coverage algorithm.
#[derive(Debug, Clone)]
pub struct Alg2Plan {
    pub lp_value: f64,
    /// Optimal `x*_e`.
    pub x: Vec<f64>,
    /// Optimal `z*_f`, aligned with `pairs`.
    pub z: Vec<f64>,
    pub pairs: Vec<crate::benchmarks::FeaturePair>,
    pub stars: StarPlan,
}

impl Alg2Plan {
    pub fn new(instance: &Instance) -> Result<Self, AlgError> {
        let cov = build_online_coverage_lp(instance)?;
        let sol = solve_optimal(&cov.lp)?;
        let x = cov.edge_values(&sol);
        Ok(Self {
            lp_value: sol.objective,
            z: cov.pair_values(&sol),
            stars: StarPlan::from_edge_values(instance, &x),
            x,
            pairs: cov.pairs,
        })
    }
}

/// Online coverage policy: round the arriving type's star; match a rounded edge if it was never
/// matched before and its task has capacity left.
#[derive(Debug, Clone)]
pub struct Alg2Policy {
    plan: Arc<Alg2Plan>,
    tasks: Arc<Vec<usize>>,
}

impl Alg2Policy {
    pub fn new(instance: &Instance, plan: Arc<Alg2Plan>) -> Self {
        Self {
            plan,
            tasks: Arc::new(edge_tasks(instance)),
        }
    }

    pub fn plan(&self) -> &Alg2Plan {
        &self.plan
    }

    pub fn propose<R: Rng + ?Sized>(&self, worker: usize, rng: &mut R) -> Vec<usize> {
        self.plan.stars.propose(worker, rng)
    }
}

fn edge_tasks(instance: &Instance) -> Vec<usize> {
    instance.edges().iter().map(|&(i, _)| i).collect()
}

/// Builds the online coverage policy (solves the LP once).
pub fn alg2_policy(instance: &Instance) -> Result<Alg2Policy, AlgError> {
    Ok(Alg2Policy::new(instance, Arc::new(Alg2Plan::new(instance)?)))
}

impl OnlinePolicy for Alg2Policy {
    fn name(&self) -> &str {
        "alg2"
    }

    fn on_arrival(&mut self, _round: u32, worker: usize, state: &MatchState, rng: &mut dyn RngCore) -> Vec<usize> {
        self.propose(worker, rng)
            .into_iter()
            .filter(|&e| state.matched_count(e) == 0 && state.remaining(self.tasks[e]) > 0)
            .collect()
    }
}

/// Configuration-LP data shared by all trials of the online submodular algorithm.
#[derive(Debug, Clone)]
pub struct Alg3Plan {
    pub lp_value: f64,
    /// Edge marginals `y*_e`.
    pub y: Vec<f64>,
    /// Per-task LP value `Σ_S g_i(S) x*_{i,S}`.
    pub task_values: Vec<f64>,
    pub stars: StarPlan,
}

impl Alg3Plan {
    pub fn new(instance: &Instance) -> Result<Self, AlgError> {
        Self::with_max_vars(instance, DEFAULT_MAX_VARS)
    }

    pub fn with_max_vars(instance: &Instance, max_vars: usize) -> Result<Self, AlgError> {
        let cfg = build_config_lp(instance, max_vars)?;
        let sol = solve_optimal(&cfg.lp)?;
        let y = marginals_from_config(&sol.values, &cfg.configs, instance.num_edges());
        Ok(Self {
            lp_value: sol.objective,
            task_values: task_values_from_config(&sol.values, &cfg.configs, instance.num_tasks()),
            stars: StarPlan::from_edge_values(instance, &y),
            y,
        })
    }
}

/// Online submodular policy: round the arriving type's star on `y*`; match a rounded edge if
/// its task has capacity left.
#[derive(Debug, Clone)]
pub struct Alg3Policy {
    plan: Arc<Alg3Plan>,
    tasks: Arc<Vec<usize>>,
}

impl Alg3Policy {
    pub fn new(instance: &Instance, plan: Arc<Alg3Plan>) -> Self {
        Self {
            plan,
            tasks: Arc::new(edge_tasks(instance)),
        }
    }

    pub fn plan(&self) -> &Alg3Plan {
        &self.plan
    }

    pub fn propose<R: Rng + ?Sized>(&self, worker: usize, rng: &mut R) -> Vec<usize> {
        self.plan.stars.propose(worker, rng)
    }
}

pub fn alg3_policy(instance: &Instance) -> Result<Alg3Policy, AlgError> {
    Ok(Alg3Policy::new(instance, Arc::new(Alg3Plan::new(instance)?)))
}

impl OnlinePolicy for Alg3Policy {
    fn name(&self) -> &str {
        "alg3"
    }

    fn on_arrival(&mut self, _round: u32, worker: usize, state: &MatchState, rng: &mut dyn RngCore) -> Vec<usize> {
        self.propose(worker, rng)
            .into_iter()
            .filter(|&e| state.remaining(self.tasks[e]) > 0)
            .collect()
    }
}

/// Greedy baseline: assign the arriving worker to up to `b_j` neighbors with capacity left, in
/// decreasing order of marginal gain (ties to the lower task index).
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    instance: Arc<Instance>,
    /// Whether edges with zero marginal gain are still taken.
    pub take_zero_gain: bool,
}

pub fn greedy_policy(instance: &Instance) -> GreedyPolicy {
    GreedyPolicy {
        instance: Arc::new(instance.clone()),
        take_zero_gain: true,
    }
}

impl OnlinePolicy for GreedyPolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn on_arrival(&mut self, _round: u32, worker: usize, state: &MatchState, _rng: &mut dyn RngCore) -> Vec<usize> {
        let inst = &self.instance;
        // every edge of a worker goes to a different task, so gains do not interact
        let mut cands: Vec<(f64, usize, usize)> = inst
            .worker_edges(worker)
            .iter()
            .filter_map(|&e| {
                let i = inst.edges()[e].0;
                if state.remaining(i) == 0 {
                    return None;
                }
                let gain = state.marginal_gain(inst, e).unwrap_or(0.0);
                (self.take_zero_gain || gain > 0.0).then_some((gain, i, e))
            })
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        cands
            .into_iter()
            .take(inst.workers()[worker].capacity as usize)
            .map(|(_, _, e)| e)
            .collect()
    }
}

/// The same instance with every task capacity set to `|J| · max_j b_j`, which no run can reach.
pub fn uncapacitated(instance: &Instance) -> Instance {
    let max_b = instance.workers().iter().map(|w| w.capacity).max().unwrap_or(1);
    let cap = (instance.num_workers() as u32).max(1) * max_b;
    let tasks: Vec<TaskSpec> = instance
        .tasks()
        .iter()
        .map(|t| TaskSpec {
            capacity: cap,
            ..t.clone()
        })
        .collect();
    Instance::new(
        tasks,
        instance.workers().to_vec(),
        instance.edges().to_vec(),
        instance.num_features(),
        instance.horizon(),
    )
}
