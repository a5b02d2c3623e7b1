use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::AnalysisError;
use crate::instance::OracleTable;
use crate::lpsolver::{solve_max, LinearProgram, LpStatus};
use crate::stats::{par_trials, Estimate};

pub const MAX_SWAP_GROUND: usize = 10;
pub const EXACT_SWAP_GROUND: usize = 6;
pub const EXACT_SWAP_ELL: u32 = 3;
pub const MAX_EXTENSION_GROUND: usize = 8;
const CHECK_TOL: f64 = 1e-9;

fn full_values(table: &OracleTable, limit: usize) -> Result<Vec<f64>, AnalysisError> {
    let n = table.ground_size();
    if n > limit {
        return Err(AnalysisError::Domain(format!("ground set of {n} exceeds {limit}")));
    }
    if table.max_size() < n {
        return Err(AnalysisError::Domain("the oracle table must cover every subset".into()));
    }
    (0..1u32 << n)
        .map(|m| table.value_mask(m).map_err(AnalysisError::from))
        .collect()
}

fn check_point(x: &[f64], n: usize) -> Result<(), AnalysisError> {
    if x.len() != n || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(AnalysisError::Domain(format!("need a point of [0,1]^{n}")));
    }
    Ok(())
}

fn multilinear_of(values: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    (0..values.len())
        .map(|mask| {
            let weight: f64 = (0..n)
                .map(|j| if mask >> j & 1 == 1 { x[j] } else { 1.0 - x[j] })
                .product();
            weight * values[mask]
        })
        .sum()
}

/// `G(x) = E[g(R(x))]`, `R(x)` containing each element `j` independently with probability `x_j`.
pub fn multilinear(table: &OracleTable, x: &[f64]) -> Result<f64, AnalysisError> {
    let values = full_values(table, MAX_EXTENSION_GROUND)?;
    check_point(x, table.ground_size())?;
    Ok(multilinear_of(&values, x))
}

fn closure_of(values: &[f64], x: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len();
    let mut lp = LinearProgram::new();
    let vars: Vec<usize> = (0..values.len())
        .map(|m| lp.add_var(format!("p{m}"), 0.0, 1.0, values[m]))
        .collect();
    let all: Vec<(usize, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
    let neg: Vec<(usize, f64)> = vars.iter().map(|&v| (v, -1.0)).collect();
    lp.add_le(&all, 1.0);
    lp.add_le(&neg, -1.0);
    for j in 0..n {
        let hit: Vec<(usize, f64)> = (0..values.len())
            .filter(|m| m >> j & 1 == 1)
            .map(|m| (vars[m], 1.0))
            .collect();
        let miss: Vec<(usize, f64)> = hit.iter().map(|&(v, _)| (v, -1.0)).collect();
        lp.add_le(&hit, x[j]);
        lp.add_le(&miss, -x[j]);
    }
    let sol = solve_max(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(AnalysisError::LpStatus(format!("{:?}", sol.status)));
    }
    Ok(sol.objective)
}

/// `g⁺(x)`: the largest `E[g(S)]` over distributions of `S` with marginals `x`, solved as an LP
/// over one probability per subset.
pub fn concave_closure(table: &OracleTable, x: &[f64]) -> Result<f64, AnalysisError> {
    let values = full_values(table, MAX_EXTENSION_GROUND)?;
    check_point(x, table.ground_size())?;
    closure_of(&values, x)
}

fn star_of(values: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    (0..values.len())
        .map(|s| {
            let gain: f64 = (0..n)
                .filter(|j| s >> j & 1 == 0)
                .map(|j| x[j] * (values[s | 1 << j] - values[s]))
                .sum();
            values[s] + gain
        })
        .fold(f64::INFINITY, f64::min)
}

/// `g*(x) = min_S (g(S) + Σ_j x_j (g(S ∪ {j}) − g(S)))`
pub fn star_extension(table: &OracleTable, x: &[f64]) -> Result<f64, AnalysisError> {
    let values = full_values(table, MAX_EXTENSION_GROUND)?;
    check_point(x, table.ground_size())?;
    Ok(star_of(&values, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub b: f64,
    /// `G(b·x)`
    pub multilinear: f64,
    /// `g⁺(x)`
    pub concave: f64,
    /// `g*(x)`
    pub star: f64,
    /// `(1 − e^{−b}) g⁺(x)`
    pub scaled_concave: f64,
    pub multilinear_holds: bool,
    pub star_holds: bool,
}

/// Evaluates the three extensions at `x` and checks `G(b·x) ≥ (1 − e^{−b}) g⁺(x)` and
/// `g*(x) ≥ g⁺(x)` up to 1e-9.
pub fn extension_bounds_check(table: &OracleTable, x: &[f64], b: f64) -> Result<ExtensionReport, AnalysisError> {
    let values = full_values(table, MAX_EXTENSION_GROUND)?;
    check_point(x, table.ground_size())?;
    if !(0.0..=1.0).contains(&b) {
        return Err(AnalysisError::Domain(format!("scale b = {b} outside [0, 1]")));
    }
    let scaled: Vec<f64> = x.iter().map(|v| b * v).collect();
    let multilinear = multilinear_of(&values, &scaled);
    let concave = closure_of(&values, x)?;
    let star = star_of(&values, x);
    let scaled_concave = -(-b).exp_m1() * concave;
    Ok(ExtensionReport {
        b,
        multilinear,
        concave,
        star,
        scaled_concave,
        multilinear_holds: multilinear >= scaled_concave - CHECK_TOL,
        star_holds: star >= concave - CHECK_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapReport {
    pub ell: u32,
    /// Union of `ℓ` single draws from the law `x`.
    pub lhs: Estimate,
    /// Union of `ℓ` independent sets with marginals `x`.
    pub rhs: Estimate,
    pub exact_lhs: Option<f64>,
    pub exact_rhs: Option<f64>,
}

/// Compares `E[g(∪ of ℓ categorical draws from x)]` with `E[g(∪ of ℓ independent roundings of
/// x)]`, by Monte Carlo and, for ground sets of at most 6 and `ℓ ≤ 3`, exactly.
pub fn swap_rounding_check(
    table: &OracleTable,
    x: &[f64],
    ell: u32,
    trials: u64,
    seed: u64,
) -> Result<SwapReport, AnalysisError> {
    let values = full_values(table, MAX_SWAP_GROUND)?;
    let n = table.ground_size();
    check_point(x, n)?;
    if (x.iter().sum::<f64>() - 1.0).abs() > CHECK_TOL {
        return Err(AnalysisError::Domain("x must be a probability vector".into()));
    }
    if ell == 0 {
        return Err(AnalysisError::Domain("ℓ must be positive".into()));
    }
    let law = WeightedIndex::new(x).map_err(|e| AnalysisError::Domain(e.to_string()))?;
    let pairs = par_trials(seed, trials, |_, rng| {
        let mut cat = 0usize;
        let mut ind = 0usize;
        for _ in 0..ell {
            cat |= 1 << law.sample(rng);
            for (j, &p) in x.iter().enumerate() {
                if rng.random::<f64>() < p {
                    ind |= 1 << j;
                }
            }
        }
        (values[cat], values[ind])
    });
    let (l, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (exact_lhs, exact_rhs) = if n <= EXACT_SWAP_GROUND && ell <= EXACT_SWAP_ELL {
        let mut lhs = 0.0;
        let sequences = n.pow(ell);
        for code in 0..sequences {
            let (mut rest, mut mask, mut weight) = (code, 0usize, 1.0);
            for _ in 0..ell {
                let j = rest % n;
                rest /= n;
                mask |= 1 << j;
                weight *= x[j];
            }
            lhs += weight * values[mask];
        }
        let cover: Vec<f64> = x.iter().map(|&p| 1.0 - (1.0 - p).powi(ell as i32)).collect();
        (Some(lhs), Some(multilinear_of(&values, &cover)))
    } else {
        (None, None)
    };
    Ok(SwapReport {
        ell,
        lhs: Estimate::from_samples(&l, seed),
        rhs: Estimate::from_samples(&r, seed),
        exact_lhs,
        exact_rhs,
    })
}
