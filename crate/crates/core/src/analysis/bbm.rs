use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::{poisson_pmf, poisson_sf, AnalysisError};
use crate::stats::{par_trials, Estimate};

pub const MAX_HORIZON: u32 = 10_000;
pub const BBM2_HORIZON: u32 = 10_000;
const DOMAIN_TOL: f64 = 1e-12;
const MIN_EXPECTED: f64 = 5.0;

fn check_bbm1(p: f64, q: f64, b: u32, horizon: u32) -> Result<(), AnalysisError> {
    let ok = p >= 0.0 && q >= 0.0 && b >= 1 && p + q <= b as f64 + DOMAIN_TOL && b <= horizon && horizon <= MAX_HORIZON;
    if !ok {
        return Err(AnalysisError::Domain(format!(
            "balls-and-bins needs p, q ≥ 0, p + q ≤ b ≤ T ≤ {MAX_HORIZON}; got p={p} q={q} b={b} T={horizon}"
        )));
    }
    Ok(())
}

/// Exact `E[Z]` for one bin of capacity `b` over `T` rounds, where each round brings a type-I
/// ball with probability `p/T` and a type-II ball with probability `q/T`; `Z = 1` iff a type-I
/// ball arrives before the bin is full:
/// `Σ_t (p/T)(1 − p/T)^{t−1} Pr[Bin(t−1, q/(T−p)) ≤ b−1]`.
pub fn bbm1_exact(p: f64, q: f64, b: u32, horizon: u32) -> Result<f64, AnalysisError> {
    check_bbm1(p, q, b, horizon)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    let t_f = horizon as f64;
    let ln_fact: Vec<f64> = (0..=horizon).map(|k| ln_gamma(k as f64 + 1.0)).collect();
    let s = if q == 0.0 { 0.0 } else { (q / (t_f - p)).min(1.0) };
    let (ln_s, ln_1ms) = (s.ln(), (-s).ln_1p());
    let ln_stay = (-p / t_f).ln_1p();
    let cap = b as usize - 1;
    let mut total = 0.0;
    for t in 1..=horizon as usize {
        let n = t - 1;
        let weight = if n == 0 {
            p / t_f
        } else {
            p / t_f * (n as f64 * ln_stay).exp()
        };
        if weight == 0.0 {
            break;
        }
        let cdf = if n <= cap || s == 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            (0..=cap)
                .map(|k| (ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * ln_s + (n - k) as f64 * ln_1ms).exp())
                .sum::<f64>()
                .min(1.0)
        };
        total += weight * cdf;
    }
    Ok(total)
}

/// Rounds until the next ball when each round brings one with probability `rate`.
fn skip<R: Rng + ?Sized>(geo: &Option<Geometric>, rng: &mut R) -> u64 {
    match geo {
        Some(g) => g.sample(rng).saturating_add(1),
        None => u64::MAX,
    }
}

fn geometric(rate: f64) -> Option<Geometric> {
    if rate > 0.0 {
        Geometric::new(rate.min(1.0)).ok()
    } else {
        None
    }
}

/// Monte Carlo estimate of the same `E[Z]`, simulating the stopping process directly.
pub fn bbm1_simulate(p: f64, q: f64, b: u32, horizon: u32, trials: u64, seed: u64) -> Result<Estimate, AnalysisError> {
    check_bbm1(p, q, b, horizon)?;
    let rate = (p + q) / horizon as f64;
    let geo = geometric(rate);
    let type_one = if p + q > 0.0 { p / (p + q) } else { 0.0 };
    let samples = par_trials(seed, trials, |_, rng| {
        let mut round = 0u64;
        let mut filled = 0;
        loop {
            round = round.saturating_add(skip(&geo, rng));
            if round > horizon as u64 {
                return 0.0;
            }
            if rng.random::<f64>() < type_one {
                return 1.0;
            }
            filled += 1;
            if filled == b {
                return 0.0;
            }
        }
    });
    Ok(Estimate::from_samples(&samples, seed))
}

/// Empirical law of the truncated arrival count `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalLaw {
    pub b: u32,
    pub horizon: u32,
    pub trials: u64,
    /// `counts[a]` = trials with `A = a`, for `a ∈ 0..=b`.
    pub counts: Vec<u64>,
}

impl ArrivalLaw {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.trials as f64).collect()
    }
}

/// Simulates `T = 10⁴` rounds with one arrival per round with probability `b/T`, stopping at
/// the `b`-th arrival, and tallies the number of arrivals.
pub fn bbm2_truncated_arrivals(b: u32, trials: u64, seed: u64) -> Result<ArrivalLaw, AnalysisError> {
    if b == 0 || b > BBM2_HORIZON {
        return Err(AnalysisError::Domain(format!("need 1 ≤ b ≤ {BBM2_HORIZON}, got {b}")));
    }
    let geo = geometric(b as f64 / BBM2_HORIZON as f64);
    let draws = par_trials(seed, trials, |_, rng| {
        let mut round = 0u64;
        let mut arrivals = 0;
        while arrivals < b {
            round = round.saturating_add(skip(&geo, rng));
            if round > BBM2_HORIZON as u64 {
                break;
            }
            arrivals += 1;
        }
        arrivals
    });
    let mut counts = vec![0; b as usize + 1];
    for a in draws {
        counts[a as usize] += 1;
    }
    Ok(ArrivalLaw {
        b,
        horizon: BBM2_HORIZON,
        trials,
        counts,
    })
}

/// Law of `min(b, Pois(b))` on `0..=b`.
pub fn bbm2_law(b: u32) -> Result<Vec<f64>, AnalysisError> {
    let lambda = b as f64;
    let mut law: Vec<f64> = (0..b)
        .map(|k| poisson_pmf(lambda, k as u64))
        .collect::<Result<_, _>>()?;
    law.push(poisson_sf(lambda, b as u64)?);
    Ok(law)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test; adjacent bins are pooled until each expects at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult, AnalysisError> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(AnalysisError::Domain("observed and expected bins differ".into()));
    }
    let n: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += p * n as f64;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dof = bins.len() as u32 - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let law = ChiSquared::new(dof as f64).map_err(|e| AnalysisError::Domain(e.to_string()))?;
        law.sf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
    })
}
