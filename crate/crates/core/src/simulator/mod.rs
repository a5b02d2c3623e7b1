//! Known-IID arrivals, trial execution and Monte Carlo estimation.
//!
//! Trial `t` of a run with root seed `s` draws both its arrival sequence and the policy's
//! randomness from stream `t` of `s`, so results are reproducible and independent of the
//! thread count.

mod oracle;
mod report;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::algorithms::{AlgError, MatchState, OnlinePolicy};
use crate::benchmarks::BenchmarkError;
use crate::instance::{allocation_utility, Allocation, Instance, InstanceError};
use crate::stats::{par_trials, Estimate};

pub use oracle::{
    clairvoyant_opt, per_count_optimum, per_sequence_optimum, search_space, OptMode, EXACT_SEQUENCE_LIMIT, SEARCH_LIMIT,
};
pub use report::{competitive_ratio_report, PolicyKind, RatioReport, ReportRow, REPORT_VERSION};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error("policy '{policy}' made an infeasible decision in round {round}: {detail}")]
    Feasibility { policy: String, round: u32, detail: String },
    #[error("clairvoyant search space {size} exceeds the limit {limit}")]
    SearchTooLarge { size: f64, limit: f64 },
    #[error("exact expectation needs {sequences} sequences, limit is {EXACT_SEQUENCE_LIMIT}")]
    ExactTooLarge { sequences: f64 },
    #[error("at least {0} trials are required")]
    TooFewTrials(u64),
}

/// Worker types arriving in rounds `0..T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSequence(pub Vec<usize>);

impl ArrivalSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Arrivals per worker type.
    pub fn counts(&self, num_workers: usize) -> Vec<u32> {
        let mut c = vec![0; num_workers];
        for &j in &self.0 {
            c[j] += 1;
        }
        c
    }
}

/// `T` independent draws with `Pr[j] = r_j / T`.
pub fn sample_arrivals<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<ArrivalSequence, SimError> {
    let rates = instance.rates()?;
    let horizon = instance.horizon().ok_or(InstanceError::NotOnline)?;
    let law = WeightedIndex::new(&rates).map_err(|e| InstanceError::InvalidParams(format!("arrival rates: {e}")))?;
    Ok(ArrivalSequence((0..horizon).map(|_| law.sample(rng)).collect()))
}

/// Result of one online run.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub allocation: Allocation,
    pub utility: f64,
    pub state: MatchState,
}

/// Feeds `sequence` to `policy`, rejecting any decision that is not incident to the arriving
/// worker, repeats an edge, exceeds `b_j`, or overfills a task.
pub fn run_trial<P: OnlinePolicy + ?Sized>(
    policy: &mut P,
    instance: &Instance,
    sequence: &ArrivalSequence,
    rng: &mut dyn RngCore,
) -> Result<TrialOutcome, SimError> {
    let mut state = MatchState::new(instance);
    for (t, &j) in sequence.0.iter().enumerate() {
        let round = t as u32;
        let picks = policy.on_arrival(round, j, &state, rng);
        let fail = |detail: String| SimError::Feasibility {
            policy: policy.name().to_string(),
            round,
            detail,
        };
        if picks.len() > instance.workers()[j].capacity as usize {
            return Err(fail(format!("worker {j} assigned {} edges", picks.len())));
        }
        for (k, &e) in picks.iter().enumerate() {
            if e >= instance.num_edges() || instance.edges()[e].1 != j {
                return Err(fail(format!("edge {e} is not incident to worker {j}")));
            }
            if picks[..k].contains(&e) {
                return Err(fail(format!("edge {e} chosen twice")));
            }
            state.apply(instance, e).map_err(|err| fail(err.to_string()))?;
        }
    }
    let allocation = state.allocation();
    allocation
        .check_feasible(instance, Some(&sequence.counts(instance.num_workers())))
        .map_err(|err| SimError::Feasibility {
            policy: policy.name().to_string(),
            round: sequence.len() as u32,
            detail: err.to_string(),
        })?;
    let utility = allocation_utility(instance, &allocation)?;
    Ok(TrialOutcome {
        allocation,
        utility,
        state,
    })
}

/// Runs `trials` independent trials and maps each outcome through `observe`, in trial order.
pub fn simulate_with<F, P, T, O>(
    factory: F,
    instance: &Instance,
    trials: u64,
    seed: u64,
    observe: O,
) -> Result<Vec<T>, SimError>
where
    F: Fn() -> P + Sync,
    P: OnlinePolicy,
    T: Send,
    O: Fn(&ArrivalSequence, &TrialOutcome) -> T + Sync,
{
    par_trials(seed, trials, |_, rng| {
        let seq = sample_arrivals(instance, rng)?;
        let mut policy = factory();
        let out = run_trial(&mut policy, instance, &seq, rng)?;
        Ok(observe(&seq, &out))
    })
    .into_iter()
    .collect()
}

/// Mean utility of a policy over `trials` independent arrival sequences.
pub fn estimate_performance<F, P>(factory: F, instance: &Instance, trials: u64, seed: u64) -> Result<Estimate, SimError>
where
    F: Fn() -> P + Sync,
    P: OnlinePolicy,
{
    if trials < 2 {
        return Err(SimError::TooFewTrials(2));
    }
    let samples = simulate_with(factory, instance, trials, seed, |_, out| out.utility)?;
    Ok(Estimate::from_samples(&samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{alg2_policy, greedy_policy};
    use crate::instance::{gen_random, gen_star_example, GenParams, TaskSpec, UtilityKind, WorkerSpec};
    use crate::stats::trial_rng;

    #[test]
    fn single_type_repeats() {
        let inst = Instance::new(
            vec![TaskSpec {
                capacity: 1,
                utility: UtilityKind::WeightedCoverage,
                feature_weights: vec![1.0],
            }],
            vec![WorkerSpec {
                capacity: 1,
                features: vec![true],
                arrival_rate: Some(4.0),
            }],
            vec![(0, 0)],
            1,
            Some(4),
        );
        let seq = sample_arrivals(&inst, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(seq.0, vec![0; 4]);
    }

    #[test]
    fn star_frequencies_uniform() {
        let inst = gen_star_example(5, 0.1);
        let mut counts = vec![0u64; 5];
        let mut total = 0u64;
        let mut t = 0;
        while total < 100_000 {
            let seq = sample_arrivals(&inst, &mut trial_rng(1, t)).unwrap();
            for j in seq.0 {
                counts[j] += 1;
                total += 1;
            }
            t += 1;
        }
        let p = 0.2;
        let se = (p * (1.0 - p) / total as f64).sqrt();
        for c in counts {
            assert!((c as f64 / total as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn empty_sequence_zero_utility() {
        let inst = gen_star_example(3, 0.1);
        let out = run_trial(
            &mut greedy_policy(&inst),
            &inst,
            &ArrivalSequence(vec![]),
            &mut trial_rng(0, 0),
        )
        .unwrap();
        assert_eq!(out.utility, 0.0);
    }

    #[test]
    fn greedy_all_first_worker() {
        let inst = gen_star_example(3, 0.1);
        let out = run_trial(
            &mut greedy_policy(&inst),
            &inst,
            &ArrivalSequence(vec![0; 3]),
            &mut trial_rng(0, 0),
        )
        .unwrap();
        assert_eq!(out.utility, 1.0);
    }

    struct Cheater;

    impl OnlinePolicy for Cheater {
        fn name(&self) -> &str {
            "cheater"
        }

        fn on_arrival(&mut self, _: u32, _: usize, _: &MatchState, _: &mut dyn RngCore) -> Vec<usize> {
            vec![0]
        }
    }

    #[test]
    fn infeasible_policy_rejected() {
        let inst = gen_star_example(3, 0.1);
        let err = run_trial(&mut Cheater, &inst, &ArrivalSequence(vec![1]), &mut trial_rng(0, 0));
        assert!(matches!(err, Err(SimError::Feasibility { .. })));
        let err = run_trial(&mut Cheater, &inst, &ArrivalSequence(vec![0, 0]), &mut trial_rng(0, 0));
        assert!(matches!(err, Err(SimError::Feasibility { round: 1, .. })));
    }

    #[test]
    fn utility_double_entry() {
        let inst = gen_random(&GenParams {
            tasks: 3,
            workers: 5,
            task_capacity: (1, 3),
            worker_capacity: (1, 2),
            horizon: Some(8),
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let alg2 = alg2_policy(&inst).unwrap();
        let diffs = simulate_with(
            || alg2.clone(),
            &inst,
            500,
            3,
            |_, out| {
                let mut recomputed = 0.0;
                for i in 0..inst.num_tasks() {
                    let ws = out.allocation.task_workers(&inst, i);
                    recomputed += inst.utility_value(i, &ws).unwrap();
                }
                (recomputed - out.utility).abs() + (out.state.total_utility() - out.utility).abs()
            },
        )
        .unwrap();
        assert!(diffs.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn deterministic_and_se_zero_when_constant() {
        let inst = Instance::new(
            vec![TaskSpec {
                capacity: 1,
                utility: UtilityKind::WeightedCoverage,
                feature_weights: vec![0.5],
            }],
            vec![WorkerSpec {
                capacity: 1,
                features: vec![true],
                arrival_rate: Some(2.0),
            }],
            vec![(0, 0)],
            1,
            Some(2),
        );
        let g = greedy_policy(&inst);
        let e = estimate_performance(|| g.clone(), &inst, 100, 1).unwrap();
        assert_eq!((e.mean, e.se), (0.5, 0.0));
        let star = gen_star_example(6, 0.1);
        let g = greedy_policy(&star);
        let a = estimate_performance(|| g.clone(), &star, 1000, 4).unwrap();
        let b = estimate_performance(|| g.clone(), &star, 1000, 4).unwrap();
        assert_eq!(a, b);
        assert!(estimate_performance(|| g.clone(), &star, 1, 4).is_err());
    }

    #[test]
    fn quadrupling_trials_halves_se() {
        let star = gen_star_example(6, 0.1);
        let g = greedy_policy(&star);
        let a = estimate_performance(|| g.clone(), &star, 20_000, 4).unwrap();
        let b = estimate_performance(|| g.clone(), &star, 80_000, 9).unwrap();
        let ratio = a.se / b.se;
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }
}
