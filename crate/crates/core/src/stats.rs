//! Monte Carlo plumbing: per-trial random streams, order-independent aggregation and
//! mean/standard-error estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean of `trials` i.i.d. samples with its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = if n == 0 { 0.0 } else { pairwise_sum(samples) / n as f64 };
        let se = if n < 2 {
            0.0
        } else {
            let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
        };
        Self {
            mean,
            se,
            trials: n as u64,
            seed,
        }
    }

    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            se: 0.0,
            trials: 0,
            seed: 0,
        }
    }

    /// `mean ≥ bound − k·se`
    pub fn at_least(&self, bound: f64, k: f64) -> bool {
        self.mean >= bound - k * self.se
    }

    /// `|mean − target| ≤ k·se` (with a tiny absolute floor for exact estimates).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-12
    }
}

/// Recursive pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Independent stream `trial` of the root `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f(trial, rng)` for every trial in parallel and returns the results in trial order, so
/// the output does not depend on the thread count.
pub fn par_trials<T, F>(seed: u64, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            f(t, &mut rng)
        })
        .collect()
}
