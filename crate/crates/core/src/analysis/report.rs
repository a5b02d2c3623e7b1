use serde::Serialize;

use super::{
    bbm1_exact, bbm1_simulate, bbm2_law, bbm2_truncated_arrivals, big_phi, chi_square_gof, h, h2_closed_form, h_l,
    poisson_median_mode, poisson_tail_slack, tau, truncate3, AnalysisError, ChiSquareResult, QuadratureResult,
};
use crate::stats::Estimate;

pub const REPORT_VERSION: u32 = 1;

const BBM_GRID: [(f64, f64, u32); 10] = [
    (1.0, 1.0, 2),
    (1.0, 2.0, 3),
    (0.5, 2.5, 3),
    (2.0, 0.0, 2),
    (1.5, 3.5, 5),
    (0.2, 0.8, 1),
    (0.7, 1.0, 2),
    (3.0, 1.0, 4),
    (1.0, 0.0, 1),
    (0.3, 4.7, 5),
];
const BBM_HORIZON: u32 = 500;

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub trials: u64,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
        }
    }
}

/// One verified bound: `passed` is `value` compared against `target` with `tolerance` slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_least(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            passed: value >= target - tolerance,
        }
    }

    fn close(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HPoint {
    pub q: u32,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPoint {
    pub b: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbmPoint {
    pub p: f64,
    pub q: f64,
    pub b: u32,
    pub horizon: u32,
    pub exact: f64,
    pub simulated: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalFit {
    pub b: u32,
    pub counts: Vec<u64>,
    pub law: Vec<f64>,
    pub chi_square: ChiSquareResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub version: u32,
    pub trials: u64,
    pub seed: u64,
    pub h: Vec<HPoint>,
    pub h_argmin: u32,
    pub h2_closed_form: f64,
    pub h_l_100: QuadratureResult,
    pub big_phi: Vec<PhiPoint>,
    pub big_phi_argmin: u32,
    pub big_phi_min: f64,
    pub tau_1000: f64,
    pub bbm1: Vec<BbmPoint>,
    pub bbm2: Vec<ArrivalFit>,
    pub checks: Vec<Check>,
}

impl AnalysisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Evaluates every constant and cross-check and records each bound as a [`Check`].
pub fn analysis_report(opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let mut checks = Vec::new();

    let hs: Vec<HPoint> = (0..=100)
        .map(|q| {
            h(q).map(|r| HPoint {
                q,
                value: r.value,
                error: r.error,
            })
        })
        .collect::<Result<_, _>>()?;
    let h_min = hs.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("non-empty");
    let closed = h2_closed_form();
    checks.push(Check::close("H(2) closed form", hs[2].value, closed, 1e-9));
    checks.push(Check::close("argmin H over 0..=100", h_min.q as f64, 2.0, 0.0));

    let h_l_100 = h_l(100.0)?;
    checks.push(Check::at_least("H_L(100)", h_l_100.value, 0.582, 0.0));
    let mut gap = f64::INFINITY;
    let mut rise = f64::INFINITY;
    let mut prev = 0.0;
    for q in 1..=200u32 {
        let hl = h_l(q as f64)?.value;
        let hq = if q <= 100 { hs[q as usize].value } else { h(q)?.value };
        gap = gap.min(hq - hl);
        rise = rise.min(hl - prev);
        prev = hl;
    }
    checks.push(Check::at_least("min H(q) - H_L(q) over 1..=200", gap, 0.0, 1e-10));
    checks.push(Check::at_least("min H_L step over 1..=200", rise, 0.0, 0.0));

    let phis: Vec<PhiPoint> = (2..=1000)
        .map(|b| big_phi(b).map(|value| PhiPoint { b, value }))
        .collect::<Result<_, _>>()?;
    let phi_min = phis
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("non-empty");
    checks.push(Check::at_least("min Phi over 2..=1000", phi_min.value, 0.436, 0.0));
    checks.push(Check::close("argmin Phi", phi_min.b as f64, 4.0, 0.0));
    checks.push(Check::close(
        "min Phi truncated to 3 decimals",
        truncate3(phi_min.value),
        0.436,
        1e-12,
    ));

    let tau_1000 = tau(1000)?;
    checks.push(Check::close(
        "tau(1000) truncated to 3 decimals",
        truncate3(tau_1000),
        0.436,
        1e-12,
    ));
    let mut tau_rise = f64::INFINITY;
    let mut tau_prev = tau(3)?;
    for b in 4..=2000 {
        let t = tau(b)?;
        tau_rise = tau_rise.min(t - tau_prev);
        tau_prev = t;
    }
    checks.push(Check::at_least("min tau step over 3..=2000", tau_rise, 0.0, 0.0));
    let mut phi_tau = f64::INFINITY;
    for p in phis.iter().filter(|p| p.b >= 10) {
        phi_tau = phi_tau.min(p.value - tau(p.b)?);
    }
    checks.push(Check::at_least("min Phi(b) - tau(b) over 10..=1000", phi_tau, 0.0, 0.0));

    let mut mismatches = 0;
    for b in 3..=1000u32 {
        let bf = b as f64;
        let (median, mode) = poisson_median_mode(bf * (1.0 - 1.0 / bf).powi(2))?;
        if median != b as u64 - 2 || mode != b as u64 - 2 {
            mismatches += 1;
        }
    }
    checks.push(Check::close(
        "median/mode of Pois(b(1-1/b)^2) != b-2, count over 3..=1000",
        mismatches as f64,
        0.0,
        0.0,
    ));

    let mut slack = f64::INFINITY;
    for q in 1..=100 {
        for step in 0..=20 {
            slack = slack.min(poisson_tail_slack(q, step as f64 / 20.0)?);
        }
    }
    checks.push(Check::at_least("min Poisson tail-bound slack", slack, 0.0, 1e-15));

    let mut bbm1 = Vec::new();
    for (k, &(p, q, b)) in BBM_GRID.iter().enumerate() {
        let exact = bbm1_exact(p, q, b, BBM_HORIZON)?;
        let simulated = bbm1_simulate(p, q, b, BBM_HORIZON, opts.trials, opts.seed.wrapping_add(k as u64))?;
        checks.push(Check::close(
            &format!("bbm1 exact vs simulated (p={p}, q={q}, b={b})"),
            simulated.mean,
            exact,
            4.0 * simulated.se + 1e-12,
        ));
        bbm1.push(BbmPoint {
            p,
            q,
            b,
            horizon: BBM_HORIZON,
            exact,
            simulated,
        });
    }
    for b in 2..=4u32 {
        let exact = bbm1_exact(1.0, (b - 1) as f64, b, 2000)?;
        checks.push(Check::close(
            &format!("bbm1(1, {}, {b}, 2000) vs H({})", b - 1, b - 1),
            exact,
            hs[b as usize - 1].value,
            2e-3,
        ));
    }

    let mut bbm2 = Vec::new();
    for b in [1u32, 2, 3, 5] {
        let law = bbm2_truncated_arrivals(b, opts.trials, opts.seed.wrapping_add(100 + b as u64))?;
        let target = bbm2_law(b)?;
        let chi_square = chi_square_gof(&law.counts, &target)?;
        checks.push(Check::at_least(
            &format!("bbm2 chi-square p-value (b={b})"),
            chi_square.p_value,
            0.001,
            0.0,
        ));
        bbm2.push(ArrivalFit {
            b,
            counts: law.counts,
            law: target,
            chi_square,
        });
    }

    Ok(AnalysisReport {
        version: REPORT_VERSION,
        trials: opts.trials,
        seed: opts.seed,
        h_argmin: h_min.q,
        h: hs.clone(),
        h2_closed_form: closed,
        h_l_100,
        big_phi_argmin: phi_min.b,
        big_phi_min: phi_min.value,
        big_phi: phis.clone(),
        tau_1000,
        bbm1,
        bbm2,
        checks,
    })
}
