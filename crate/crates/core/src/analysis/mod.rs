//! Numerical evaluation of the constants behind the approximation and competitive ratios, the
//! two balls-and-bins processes, and brute-force checks of set-function extension inequalities.

mod bbm;
mod extensions;
mod poisson;
mod quadrature;
mod report;

use thiserror::Error;

use crate::instance::InstanceError;
use crate::lpsolver::LpError;

pub use bbm::{
    bbm1_exact, bbm1_simulate, bbm2_law, bbm2_truncated_arrivals, chi_square_gof, ArrivalLaw, ChiSquareResult,
    BBM2_HORIZON, MAX_HORIZON,
};
pub use extensions::{
    concave_closure, extension_bounds_check, multilinear, star_extension, swap_rounding_check, ExtensionReport,
    SwapReport, EXACT_SWAP_ELL, EXACT_SWAP_GROUND, MAX_EXTENSION_GROUND, MAX_SWAP_GROUND,
};
pub use poisson::{poisson_cdf, poisson_pmf, poisson_sf, MAX_LAMBDA};
pub use quadrature::{integrate, QuadratureResult, DEFAULT_MAX_NODES, DEFAULT_TOL};
pub use report::{analysis_report, AnalysisOptions, AnalysisReport, Check, REPORT_VERSION};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge within {nodes} nodes")]
    Quadrature { nodes: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP ended with status {0}")]
    LpStatus(String),
}

pub const MAX_Q: u32 = 10_000;
pub const MAX_PHI_B: u32 = 1000;

/// `H(q) = ∫₀¹ e^{−ζ} Pr[Pois(ζq) ≤ q] dζ`
pub fn h(q: u32) -> Result<QuadratureResult, AnalysisError> {
    if q > MAX_Q {
        return Err(AnalysisError::Domain(format!("q = {q} exceeds {MAX_Q}")));
    }
    let q64 = q as u64;
    integrate(
        |z| (-z).exp() * poisson_cdf(z * q as f64, q64).unwrap_or(f64::NAN),
        0.0,
        1.0,
        DEFAULT_TOL,
        DEFAULT_MAX_NODES,
    )
}

/// `(19 − 67/e³)/27`
pub fn h2_closed_form() -> f64 {
    (19.0 - 67.0 * (-3.0f64).exp()) / 27.0
}

/// `H_L(q) = ∫₀¹ e^{−ζ} (1 − exp(−q(1−ζ)²/2)) dζ`
pub fn h_l(q: f64) -> Result<QuadratureResult, AnalysisError> {
    if !(q > 0.0) {
        return Err(AnalysisError::Domain(format!("H_L needs q > 0, got {q}")));
    }
    integrate(
        |z| (-z).exp() * -(-q * (1.0 - z) * (1.0 - z) / 2.0).exp_m1(),
        0.0,
        1.0,
        DEFAULT_TOL,
        DEFAULT_MAX_NODES,
    )
}

/// `κ(b, ℓ) = 1 − (1 − 1/b)^ℓ`
pub fn kappa(b: u32, ell: u32) -> f64 {
    -(ell as f64 * (-1.0 / b as f64).ln_1p()).exp_m1()
}

/// `φ(b, ℓ) = 1 − e^{−1 + (1−1/b)^ℓ} = 1 − e^{−κ(b, ℓ)}`
pub fn phi(b: u32, ell: u32) -> f64 {
    let decay = (1.0 - 1.0 / b as f64).powi(ell as i32);
    -(decay - 1.0).exp_m1()
}

/// `Φ(b) = Pr[Pois(b)=1]/b + Σ_{2≤ℓ<b} Pr[Pois(b)=ℓ] φ(b,ℓ) + Pr[Pois(b)≥b] φ(b,b)`
pub fn big_phi(b: u32) -> Result<f64, AnalysisError> {
    if !(2..=MAX_PHI_B).contains(&b) {
        return Err(AnalysisError::Domain(format!(
            "Φ(b) needs 2 ≤ b ≤ {MAX_PHI_B}, got {b}"
        )));
    }
    let lambda = b as f64;
    let mut total = poisson_pmf(lambda, 1)? / lambda;
    for ell in 2..b {
        total += poisson_pmf(lambda, ell as u64)? * phi(b, ell);
    }
    total += poisson_sf(lambda, b as u64)? * phi(b, b);
    Ok(total)
}

/// `τ(b) = ½(1 − e^{−1+1/e}) + ¼(1 − e^{−2+1/b}) − (1 + e^{−2+1/b})/√(2π(b−2)) − b e^{−b}`
pub fn tau(b: u32) -> Result<f64, AnalysisError> {
    if b < 3 {
        return Err(AnalysisError::Domain(format!("τ(b) needs b ≥ 3, got {b}")));
    }
    let bf = b as f64;
    let e = (-2.0 + 1.0 / bf).exp();
    Ok(0.5 * (1.0 - (-1.0 + (-1.0f64).exp()).exp()) + 0.25 * (1.0 - e)
        - (1.0 + e) / (2.0 * std::f64::consts::PI * (bf - 2.0)).sqrt()
        - bf * (-bf).exp())
}

/// Median and mode of `Pois(λ)`; the median is the least `k` with `Pr[≤ k] ≥ 1/2`.
pub fn poisson_median_mode(lambda: f64) -> Result<(u64, u64), AnalysisError> {
    let mut cdf = 0.0;
    let mut median = None;
    let mut mode = 0;
    let mut best = -1.0;
    let top = (lambda + 10.0 * lambda.sqrt() + 10.0) as u64;
    for k in 0..=top {
        let p = poisson_pmf(lambda, k)?;
        cdf += p;
        if median.is_none() && cdf >= 0.5 {
            median = Some(k);
        }
        if p > best {
            best = p;
            mode = k;
        }
    }
    Ok((median.unwrap_or(top), mode))
}

/// `Pr[Pois(ζq) > q] ≤ exp(−q(1−ζ)²/2)`; returns the worst slack (bound minus probability).
pub fn poisson_tail_slack(q: u32, zeta: f64) -> Result<f64, AnalysisError> {
    let prob = poisson_sf(zeta * q as f64, q as u64 + 1)?;
    Ok((-(q as f64) * (1.0 - zeta) * (1.0 - zeta) / 2.0).exp() - prob)
}

/// First three decimals, truncated.
pub fn truncate3(x: f64) -> f64 {
    (x * 1000.0).floor() / 1000.0
}
