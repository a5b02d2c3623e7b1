use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Instance, InstanceError, OracleTable, TaskSpec, UtilityKind, WorkerSpec, MAX_ORACLE_GROUND};

/// Utility family drawn by [`gen_random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityChoice {
    Coverage,
    SqrtDiversity,
    /// A tabulated random monotone submodular function (coverage plus a concave-of-modular term).
    Explicit,
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub tasks: usize,
    pub workers: usize,
    pub features: usize,
    pub edge_prob: f64,
    pub feature_prob: f64,
    pub task_capacity: (u32, u32),
    pub worker_capacity: (u32, u32),
    pub utility: UtilityChoice,
    pub horizon: Option<u32>,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            tasks: 3,
            workers: 5,
            features: 4,
            edge_prob: 0.5,
            feature_prob: 0.5,
            task_capacity: (1, 2),
            worker_capacity: (1, 2),
            utility: UtilityChoice::Coverage,
            horizon: None,
            seed: 0,
        }
    }
}

const MAX_ATTEMPTS: usize = 100;

/// Seeded random instance. Arrival rates (online only) are drawn in `[0.2, 1)` and rescaled so
/// that they sum to the horizon.
pub fn gen_random(params: &GenParams) -> Result<Instance, InstanceError> {
    let p = params;
    if p.tasks == 0 || p.workers == 0 {
        return Err(InstanceError::InvalidParams(
            "need at least one task and one worker".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p.edge_prob) || !(0.0..=1.0).contains(&p.feature_prob) {
        return Err(InstanceError::InvalidParams("probabilities must lie in [0,1]".into()));
    }
    for (name, (lo, hi)) in [("task", p.task_capacity), ("worker", p.worker_capacity)] {
        if lo < 1 || hi < lo {
            return Err(InstanceError::InvalidParams(format!(
                "bad {name} capacity range {lo}..={hi}"
            )));
        }
    }
    if p.horizon == Some(0) {
        return Err(InstanceError::InvalidParams("horizon must be positive".into()));
    }
    if p.utility == UtilityChoice::Explicit && p.workers > MAX_ORACLE_GROUND {
        return Err(InstanceError::OracleTooLarge(p.workers));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut edges = Vec::new();
    for _ in 0..MAX_ATTEMPTS {
        edges.clear();
        for i in 0..p.tasks {
            for j in 0..p.workers {
                if rng.random_bool(p.edge_prob) {
                    edges.push((i, j));
                }
            }
        }
        if !edges.is_empty() {
            break;
        }
    }
    if edges.is_empty() {
        return Err(InstanceError::EmptyGraph);
    }

    let workers_raw: Vec<(u32, Vec<bool>, f64)> = (0..p.workers)
        .map(|_| {
            let cap = rng.random_range(p.worker_capacity.0..=p.worker_capacity.1);
            let features = (0..p.features).map(|_| rng.random_bool(p.feature_prob)).collect();
            let raw_rate = rng.random_range(0.2..1.0);
            (cap, features, raw_rate)
        })
        .collect();
    let rate_total: f64 = workers_raw.iter().map(|w| w.2).sum();
    let workers: Vec<WorkerSpec> = workers_raw
        .into_iter()
        .map(|(capacity, features, raw)| WorkerSpec {
            capacity,
            features,
            arrival_rate: p.horizon.map(|t| raw * t as f64 / rate_total),
        })
        .collect();

    let mut tasks = Vec::with_capacity(p.tasks);
    for i in 0..p.tasks {
        let capacity = rng.random_range(p.task_capacity.0..=p.task_capacity.1);
        let weights: Vec<f64> = (0..p.features).map(|_| rng.random::<f64>()).collect();
        let (utility, feature_weights) = match p.utility {
            UtilityChoice::Coverage => (UtilityKind::WeightedCoverage, weights),
            UtilityChoice::SqrtDiversity => (UtilityKind::SqrtDiversity, weights),
            UtilityChoice::Explicit => {
                let mut ground: Vec<usize> = edges.iter().filter(|e| e.0 == i).map(|e| e.1).collect();
                ground.sort_unstable();
                let extra: Vec<f64> = ground.iter().map(|_| rng.random::<f64>()).collect();
                let mix = rng.random::<f64>();
                let table = OracleTable::from_fn(ground.clone(), capacity as usize, |mask| {
                    let members = (0..ground.len()).filter(|q| mask >> q & 1 == 1);
                    let mut covered = vec![false; p.features];
                    let mut modular = 0.0;
                    for q in members {
                        for (c, &x) in covered.iter_mut().zip(&workers[ground[q]].features) {
                            *c |= x;
                        }
                        modular += extra[q];
                    }
                    let cov: f64 = covered.iter().zip(&weights).filter(|(c, _)| **c).map(|(_, w)| w).sum();
                    cov + mix * modular.sqrt()
                })?;
                (UtilityKind::ExplicitOracle { table }, Vec::new())
            }
        };
        tasks.push(TaskSpec {
            capacity,
            utility,
            feature_weights,
        });
    }

    Ok(Instance::new(tasks, workers, edges, p.features, p.horizon))
}

/// The star instance on which greedy assignment has vanishing competitive ratio: one
/// unit-capacity task, `n` unit-rate workers each covering its own feature, feature 0 worth 1
/// and the rest worth `eps`, horizon `n`.
pub fn gen_star_example(n: usize, eps: f64) -> Instance {
    let mut weights = vec![eps; n];
    if n > 0 {
        weights[0] = 1.0;
    }
    let task = TaskSpec {
        capacity: 1,
        utility: UtilityKind::WeightedCoverage,
        feature_weights: weights,
    };
    let workers = (0..n)
        .map(|j| WorkerSpec {
            capacity: 1,
            features: (0..n).map(|k| k == j).collect(),
            arrival_rate: Some(1.0),
        })
        .collect();
    let edges = (0..n).map(|j| (0, j)).collect();
    Instance::new(vec![task], workers, edges, n, Some(n as u32))
}

/// Replaces every worker type with `r_j > rate_cap` by `⌈r_j / rate_cap⌉` identical copies that
/// share its rate equally. Edges are duplicated per copy; explicit oracles are re-tabulated so
/// that a set of copies is valued as the set of workers they copy.
pub fn split_high_rate_types(instance: &Instance, rate_cap: f64) -> Result<Instance, InstanceError> {
    if !(rate_cap > 0.0) {
        return Err(InstanceError::InvalidParams(format!(
            "rate_cap must be positive, got {rate_cap}"
        )));
    }
    let rates = instance.rates()?;
    if rates.iter().all(|&r| r <= rate_cap) {
        return Ok(instance.clone());
    }

    let mut workers = Vec::new();
    // copies[j] = new indices of the copies of worker j
    let mut copies: Vec<Vec<usize>> = Vec::with_capacity(rates.len());
    let mut origin = Vec::new();
    for (j, (w, &r)) in instance.workers().iter().zip(&rates).enumerate() {
        let m = if r > rate_cap {
            ((r / rate_cap) - 1e-9).ceil().max(1.0) as usize
        } else {
            1
        };
        let mut ids = Vec::with_capacity(m);
        for _ in 0..m {
            ids.push(workers.len());
            origin.push(j);
            workers.push(WorkerSpec {
                arrival_rate: Some(r / m as f64),
                ..w.clone()
            });
        }
        copies.push(ids);
    }

    let mut edges = Vec::new();
    for &(i, j) in instance.edges() {
        for &c in &copies[j] {
            edges.push((i, c));
        }
    }

    let mut tasks = Vec::with_capacity(instance.num_tasks());
    for spec in instance.tasks() {
        let utility = match &spec.utility {
            UtilityKind::ExplicitOracle { table } => {
                let ground: Vec<usize> = table.ground().iter().flat_map(|&j| copies[j].iter().copied()).collect();
                if ground.len() > MAX_ORACLE_GROUND {
                    return Err(InstanceError::OracleTooLarge(ground.len()));
                }
                let mut sorted = ground.clone();
                sorted.sort_unstable();
                let mut miss = false;
                let new_table = OracleTable::from_fn(sorted.clone(), table.max_size(), |mask| {
                    let originals: Vec<usize> = (0..sorted.len())
                        .filter(|q| mask >> q & 1 == 1)
                        .map(|q| origin[sorted[q]])
                        .collect();
                    table.value(&originals).unwrap_or_else(|_| {
                        miss = true;
                        f64::NAN
                    })
                })?;
                if miss {
                    return Err(InstanceError::TableMiss);
                }
                UtilityKind::ExplicitOracle { table: new_table }
            }
            other => other.clone(),
        };
        tasks.push(TaskSpec {
            utility,
            ..spec.clone()
        });
    }

    Ok(Instance::new(
        tasks,
        workers,
        edges,
        instance.num_features(),
        instance.horizon(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_deterministic_and_valid() {
        let params = GenParams {
            tasks: 3,
            workers: 5,
            features: 4,
            edge_prob: 0.5,
            seed: 7,
            horizon: Some(10),
            ..Default::default()
        };
        let a = gen_random(&params).unwrap();
        let b = gen_random(&params).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().is_empty(), "{:?}", a.validate());
    }

    #[test]
    fn single_edge() {
        let params = GenParams {
            tasks: 1,
            workers: 1,
            edge_prob: 1.0,
            ..Default::default()
        };
        let inst = gen_random(&params).unwrap();
        assert_eq!(inst.edges(), &[(0, 0)]);
    }

    #[test]
    fn empty_graph_error() {
        let params = GenParams {
            edge_prob: 0.0,
            ..Default::default()
        };
        assert!(matches!(gen_random(&params), Err(InstanceError::EmptyGraph)));
    }

    #[test]
    fn explicit_generator_is_submodular() {
        for seed in 0..10 {
            let inst = gen_random(&GenParams {
                utility: UtilityChoice::Explicit,
                task_capacity: (1, 3),
                horizon: Some(4),
                seed,
                ..Default::default()
            })
            .unwrap();
            assert!(inst.validate().is_empty(), "seed {seed}: {:?}", inst.validate());
        }
    }

    #[test]
    fn star_matches_figure() {
        let inst = gen_star_example(3, 0.1);
        assert_eq!(inst.num_tasks(), 1);
        assert_eq!(inst.num_workers(), 3);
        assert_eq!(inst.num_features(), 3);
        assert_eq!(inst.tasks()[0].feature_weights, vec![1.0, 0.1, 0.1]);
        assert_eq!(inst.tasks()[0].capacity, 1);
        assert!(inst.workers().iter().all(|w| w.capacity == 1));
        for (j, w) in inst.workers().iter().enumerate() {
            assert_eq!(w.arrival_rate, Some(1.0));
            let unit: Vec<bool> = (0..3).map(|k| k == j).collect();
            assert_eq!(w.features, unit);
        }
        assert_eq!(inst.horizon(), Some(3));
        assert_eq!(inst.rates().unwrap().iter().sum::<f64>(), 3.0);
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn split_into_halves() {
        let inst = gen_star_example(2, 0.5);
        let split = split_high_rate_types(&inst, 0.5).unwrap();
        assert_eq!(split.num_workers(), 4);
        assert!(split.workers().iter().all(|w| w.arrival_rate == Some(0.5)));
        assert_eq!(split.num_edges(), 4);
        assert!(split.validate().is_empty());
    }

    #[test]
    fn split_identity_when_below_cap() {
        let inst = gen_star_example(3, 0.5);
        assert_eq!(split_high_rate_types(&inst, 1.0).unwrap(), inst);
        assert!(split_high_rate_types(&inst, 0.0).is_err());
    }

    #[test]
    fn split_preserves_rate_sum() {
        let inst = gen_random(&GenParams {
            workers: 6,
            horizon: Some(9),
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let before: f64 = inst.rates().unwrap().iter().sum();
        let split = split_high_rate_types(&inst, 0.3).unwrap();
        let after: f64 = split.rates().unwrap().iter().sum();
        assert!((before - after).abs() <= 1e-12 * before);
        assert!(split.rates().unwrap().iter().all(|&r| r <= 0.3 + 1e-12));
        assert!(split.validate().is_empty());
    }

    #[test]
    fn split_explicit_oracle_values_copies_as_originals() {
        let inst = gen_random(&GenParams {
            tasks: 1,
            workers: 3,
            edge_prob: 1.0,
            utility: UtilityChoice::Explicit,
            task_capacity: (2, 2),
            horizon: Some(3),
            seed: 11,
            ..Default::default()
        })
        .unwrap();
        let rates = inst.rates().unwrap();
        let cap = rates.iter().cloned().fold(0.0, f64::max) * 0.6;
        let split = split_high_rate_types(&inst, cap).unwrap();
        assert!(split.validate().is_empty(), "{:?}", split.validate());
        // copies of a worker together are worth the worker alone
        let first = split.task_neighbors(0);
        let v_pair = split.utility_value(0, &first[..2]).unwrap();
        let v_one = split.utility_value(0, &first[..1]).unwrap();
        assert!(v_pair >= v_one);
    }
}
