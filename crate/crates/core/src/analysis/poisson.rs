use statrs::function::gamma::ln_gamma;

use super::AnalysisError;

pub const MAX_LAMBDA: f64 = 1e4;

fn check(lambda: f64) -> Result<(), AnalysisError> {
    if !(lambda >= 0.0) || lambda > MAX_LAMBDA {
        return Err(AnalysisError::Domain(format!(
            "Poisson mean {lambda} outside [0, {MAX_LAMBDA}]"
        )));
    }
    Ok(())
}

fn ln_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)
}

/// `Pr[Pois(λ) = k]`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<f64, AnalysisError> {
    check(lambda)?;
    Ok(ln_pmf(lambda, k).exp())
}

/// `Pr[Pois(λ) ≤ k]`.
pub fn poisson_cdf(lambda: f64, k: u64) -> Result<f64, AnalysisError> {
    check(lambda)?;
    let mut sum = 0.0;
    for m in 0..=k {
        sum += ln_pmf(lambda, m).exp();
    }
    Ok(sum.min(1.0))
}

/// `Pr[Pois(λ) ≥ k]`. Below the mean it is the complement of a short sum; above it the tail
/// is summed directly so small tails keep their relative accuracy.
pub fn poisson_sf(lambda: f64, k: u64) -> Result<f64, AnalysisError> {
    check(lambda)?;
    if k == 0 {
        return Ok(1.0);
    }
    if (k as f64) <= lambda {
        return Ok(1.0 - poisson_cdf(lambda, k - 1)?);
    }
    let mut sum = 0.0;
    let mut m = k;
    loop {
        let term = ln_pmf(lambda, m).exp();
        sum += term;
        if term <= sum * 1e-17 || term == 0.0 {
            break;
        }
        m += 1;
    }
    Ok(sum)
}
