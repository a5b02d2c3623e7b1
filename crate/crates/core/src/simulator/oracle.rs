//! Clairvoyant optimum for tiny instances.
//!
//! Under the distinct-set utility semantics a second copy of a worker type never adds value to
//! the same task, so once the arrivals are known only their counts `c_j` matter: type `j` can
//! serve any set of distinct neighbor tasks of size at most `b_j c_j`. The optimum is therefore
//! a maximum over edge subsets with degree bounds `b_i` on tasks and `b_j c_j` on types, found
//! by depth-first search with a submodular upper bound.

use statrs::function::gamma::ln_gamma;

use super::{sample_arrivals, ArrivalSequence, SimError};
use crate::instance::Instance;
use crate::stats::{par_trials, Estimate};

/// Largest accepted product of per-type action counts.
pub const SEARCH_LIMIT: f64 = 1e7;
/// Largest accepted `|J|^T` in exact mode.
pub const EXACT_SEQUENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Number of joint actions the search may visit for arrival counts `counts`.
pub fn search_space(instance: &Instance, counts: &[u32]) -> f64 {
    let mut size = 1.0;
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let deg = instance.worker_edges(j).len();
        let cap = (instance.workers()[j].capacity as usize * c as usize).min(deg);
        size *= (0..=cap).map(|k| binomial(deg, k)).sum::<f64>();
    }
    size
}

struct Search<'a> {
    instance: &'a Instance,
    /// Candidate edges in search order.
    order: Vec<usize>,
    type_left: Vec<usize>,
    task_left: Vec<usize>,
    workers: Vec<Vec<usize>>,
    values: Vec<f64>,
    best: f64,
}

impl Search<'_> {
    fn value(&self, task: usize, workers: &[usize]) -> f64 {
        if workers.is_empty() {
            0.0
        } else {
            self.instance.utility_value(task, workers).unwrap_or(f64::NAN)
        }
    }

    /// Upper bound on the extra utility available from `order[k..]`.
    fn bound(&self, k: usize) -> f64 {
        let inst = self.instance;
        let mut cands: Vec<Vec<usize>> = vec![Vec::new(); inst.num_tasks()];
        for &e in &self.order[k..] {
            let (i, j) = inst.edges()[e];
            if self.task_left[i] > 0 && self.type_left[j] > 0 {
                cands[i].push(j);
            }
        }
        let mut total = 0.0;
        for (i, cs) in cands.iter().enumerate() {
            if cs.is_empty() {
                continue;
            }
            let base = self.values[i];
            let mut gains: Vec<f64> = cs
                .iter()
                .map(|&j| {
                    let mut w = self.workers[i].clone();
                    w.push(j);
                    w.sort_unstable();
                    self.value(i, &w) - base
                })
                .collect();
            gains.sort_by(|a, b| b.total_cmp(a));
            let top: f64 = gains.iter().take(self.task_left[i]).sum();
            let mut all = self.workers[i].clone();
            all.extend(cs);
            all.sort_unstable();
            let joint = self.value(i, &all) - base;
            total += if joint.is_nan() { top } else { top.min(joint) };
        }
        total
    }

    fn dfs(&mut self, k: usize, current: f64) {
        if current > self.best {
            self.best = current;
        }
        if k == self.order.len() || current + self.bound(k) <= self.best + 1e-12 {
            return;
        }
        let e = self.order[k];
        let (i, j) = self.instance.edges()[e];
        if self.task_left[i] > 0 && self.type_left[j] > 0 {
            let old = self.values[i];
            let p = self.workers[i].binary_search(&j).unwrap_err();
            self.workers[i].insert(p, j);
            let new = self.value(i, &self.workers[i]);
            self.values[i] = new;
            self.task_left[i] -= 1;
            self.type_left[j] -= 1;
            self.dfs(k + 1, current - old + new);
            self.task_left[i] += 1;
            self.type_left[j] += 1;
            self.values[i] = old;
            self.workers[i].remove(p);
        }
        self.dfs(k + 1, current);
    }
}

/// Clairvoyant optimum given only the arrival count of every worker type.
pub fn per_count_optimum(instance: &Instance, counts: &[u32]) -> Result<f64, SimError> {
    let size = search_space(instance, counts);
    if size > SEARCH_LIMIT {
        return Err(SimError::SearchTooLarge {
            size,
            limit: SEARCH_LIMIT,
        });
    }
    let inst = instance;
    let mut order: Vec<usize> = (0..inst.num_edges())
        .filter(|&e| counts[inst.edges()[e].1] > 0)
        .collect();
    // strongest single edges first, for an early incumbent
    let single: Vec<f64> = (0..inst.num_edges())
        .map(|e| {
            let (i, j) = inst.edges()[e];
            inst.utility_value(i, &[j]).unwrap_or(0.0)
        })
        .collect();
    order.sort_by(|&a, &b| single[b].total_cmp(&single[a]).then(a.cmp(&b)));
    let mut search = Search {
        instance: inst,
        order,
        type_left: inst
            .workers()
            .iter()
            .zip(counts)
            .map(|(w, &c)| w.capacity as usize * c as usize)
            .collect(),
        task_left: inst.tasks().iter().map(|t| t.capacity as usize).collect(),
        workers: vec![Vec::new(); inst.num_tasks()],
        values: vec![0.0; inst.num_tasks()],
        best: 0.0,
    };
    search.dfs(0, 0.0);
    Ok(search.best)
}

/// Best total utility achievable after seeing `sequence`.
pub fn per_sequence_optimum(instance: &Instance, sequence: &ArrivalSequence) -> Result<f64, SimError> {
    per_count_optimum(instance, &sequence.counts(instance.num_workers()))
}

fn compositions(total: u32, parts: usize, cur: &mut Vec<u32>, out: &mut dyn FnMut(&[u32])) {
    if parts == 1 {
        cur.push(total);
        out(cur);
        cur.pop();
        return;
    }
    for c in 0..=total {
        cur.push(c);
        compositions(total - c, parts - 1, cur, out);
        cur.pop();
    }
}

/// Expected clairvoyant optimum. Exact mode sums over arrival-count vectors with their
/// multinomial probabilities, which equals the sum over all `|J|^T` sequences.
pub fn clairvoyant_opt(instance: &Instance, mode: OptMode) -> Result<Estimate, SimError> {
    let rates = instance.rates()?;
    let horizon = instance.horizon().unwrap_or(0);
    match mode {
        OptMode::Exact => {
            let sequences = (instance.num_workers() as f64).powi(horizon as i32);
            if sequences > EXACT_SEQUENCE_LIMIT {
                return Err(SimError::ExactTooLarge { sequences });
            }
            let t = horizon as f64;
            let log_p: Vec<f64> = rates.iter().map(|r| (r / t).ln()).collect();
            let mut terms = Vec::new();
            let mut failure = None;
            compositions(horizon, instance.num_workers(), &mut Vec::new(), &mut |counts| {
                if failure.is_some() {
                    return;
                }
                let mut lw = ln_gamma(t + 1.0);
                for (&c, &lp) in counts.iter().zip(&log_p) {
                    lw += c as f64 * lp - ln_gamma(c as f64 + 1.0);
                }
                match per_count_optimum(instance, counts) {
                    Ok(v) => terms.push(lw.exp() * v),
                    Err(e) => failure = Some(e),
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(Estimate::exact(crate::stats::pairwise_sum(&terms)))
        }
        OptMode::MonteCarlo { trials, seed } => {
            let samples: Result<Vec<f64>, SimError> = par_trials(seed, trials, |_, rng| {
                per_sequence_optimum(instance, &sample_arrivals(instance, rng)?)
            })
            .into_iter()
            .collect();
            Ok(Estimate::from_samples(&samples?, seed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{dedup, gen_random, gen_star_example, GenParams, UtilityChoice};
    use crate::stats::trial_rng;

    /// Literal search: every arrival independently picks up to `b_j` incident edges whose tasks
    /// still have room; value is taken on distinct workers. No pruning, no count collapsing.
    fn plain_enumeration(inst: &Instance, seq: &[usize]) -> f64 {
        fn rec(inst: &Instance, seq: &[usize], t: usize, left: &mut Vec<u32>, assigned: &mut Vec<Vec<usize>>) -> f64 {
            if t == seq.len() {
                return (0..inst.num_tasks())
                    .map(|i| {
                        let ws = dedup(&assigned[i]);
                        if ws.is_empty() {
                            0.0
                        } else {
                            inst.utility_value(i, &ws).unwrap()
                        }
                    })
                    .sum();
            }
            let j = seq[t];
            let es = inst.worker_edges(j).to_vec();
            let b = inst.workers()[j].capacity as usize;
            let mut best = f64::NEG_INFINITY;
            for mask in 0u32..1 << es.len() {
                if mask.count_ones() as usize > b {
                    continue;
                }
                let chosen: Vec<usize> = (0..es.len())
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| inst.edges()[es[k]].0)
                    .collect();
                if chosen.iter().any(|&i| left[i] == 0) {
                    continue;
                }
                for &i in &chosen {
                    left[i] -= 1;
                    assigned[i].push(j);
                }
                best = best.max(rec(inst, seq, t + 1, left, assigned));
                for &i in &chosen {
                    left[i] += 1;
                    assigned[i].pop();
                }
            }
            best
        }
        let mut left: Vec<u32> = inst.tasks().iter().map(|t| t.capacity).collect();
        let mut assigned = vec![Vec::new(); inst.num_tasks()];
        rec(inst, seq, 0, &mut left, &mut assigned)
    }

    #[test]
    fn star_sequence_with_first_worker() {
        let inst = gen_star_example(3, 0.1);
        assert_eq!(
            per_sequence_optimum(&inst, &ArrivalSequence(vec![2, 0, 1])).unwrap(),
            1.0
        );
        assert_eq!(
            per_sequence_optimum(&inst, &ArrivalSequence(vec![2, 2, 1])).unwrap(),
            0.1
        );
    }

    #[test]
    fn no_neighbors_zero() {
        let base = gen_star_example(3, 0.1);
        let inst = Instance::new(base.tasks().to_vec(), base.workers().to_vec(), vec![], 3, Some(3));
        assert_eq!(
            per_sequence_optimum(&inst, &ArrivalSequence(vec![0, 1, 2])).unwrap(),
            0.0
        );
    }

    #[test]
    fn matches_plain_enumeration() {
        let mut checked = 0;
        for seed in 0..50u64 {
            let utility = [
                UtilityChoice::Coverage,
                UtilityChoice::SqrtDiversity,
                UtilityChoice::Explicit,
            ][seed as usize % 3];
            let inst = gen_random(&GenParams {
                tasks: 2 + seed as usize % 2,
                workers: 3,
                features: 3,
                task_capacity: (1, 2),
                worker_capacity: (1, 2),
                utility,
                horizon: Some(4),
                seed,
                ..Default::default()
            })
            .unwrap();
            let seq = sample_arrivals(&inst, &mut trial_rng(seed, 0)).unwrap();
            let fast = per_sequence_optimum(&inst, &seq).unwrap();
            let slow = plain_enumeration(&inst, &seq.0);
            assert!((fast - slow).abs() < 1e-9, "seed {seed}: {fast} vs {slow}");
            checked += 1;
        }
        assert_eq!(checked, 50);
    }

    #[test]
    fn star_exact_expectation() {
        let inst = gen_star_example(3, 0.1);
        let exact = clairvoyant_opt(&inst, OptMode::Exact).unwrap();
        let q = (2.0f64 / 3.0).powi(3);
        assert!((exact.mean - ((1.0 - q) + q * 0.1)).abs() < 1e-12);
        assert_eq!(exact.se, 0.0);
    }

    #[test]
    fn multiset_sum_equals_sequence_sum() {
        let inst = gen_random(&GenParams {
            tasks: 2,
            workers: 3,
            task_capacity: (1, 2),
            utility: UtilityChoice::SqrtDiversity,
            horizon: Some(4),
            seed: 12,
            ..Default::default()
        })
        .unwrap();
        let rates = inst.rates().unwrap();
        let mut literal = 0.0;
        for code in 0..81usize {
            let seq: Vec<usize> = (0..4).map(|t| code / 3usize.pow(t) % 3).collect();
            let p: f64 = seq.iter().map(|&j| rates[j] / 4.0).product();
            literal += p * plain_enumeration(&inst, &seq);
        }
        let exact = clairvoyant_opt(&inst, OptMode::Exact).unwrap();
        assert!((exact.mean - literal).abs() < 1e-12);
        let mc = clairvoyant_opt(
            &inst,
            OptMode::MonteCarlo {
                trials: 20_000,
                seed: 1,
            },
        )
        .unwrap();
        assert!(mc.within(exact.mean, 4.0));
    }

    #[test]
    fn single_type_single_task() {
        let base = gen_star_example(1, 0.5);
        assert_eq!(clairvoyant_opt(&base, OptMode::Exact).unwrap().mean, 1.0);
    }

    #[test]
    fn limits_enforced() {
        let inst = gen_star_example(20, 0.01);
        assert!(matches!(
            clairvoyant_opt(&inst, OptMode::Exact),
            Err(SimError::ExactTooLarge { .. })
        ));
        let wide = gen_random(&GenParams {
            tasks: 12,
            workers: 2,
            edge_prob: 1.0,
            worker_capacity: (12, 12),
            horizon: Some(2),
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            per_count_optimum(&wide, &[1, 1]),
            Err(SimError::SearchTooLarge { .. })
        ));
    }
}
