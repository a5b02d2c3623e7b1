use std::str::FromStr;

use serde::Serialize;

use super::{clairvoyant_opt, estimate_performance, OptMode, SimError};
use crate::algorithms::{alg2_policy, alg3_policy, greedy_policy};
use crate::benchmarks::{lp_bound, Model};
use crate::instance::{Instance, InstanceError};
use crate::stats::Estimate;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Alg2,
    Alg3,
    Greedy,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Alg2 => "alg2",
            PolicyKind::Alg3 => "alg3",
            PolicyKind::Greedy => "greedy",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alg2" => Ok(PolicyKind::Alg2),
            "alg3" => Ok(PolicyKind::Alg3),
            "greedy" => Ok(PolicyKind::Greedy),
            other => Err(format!("unknown policy '{other}' (expected alg2, alg3 or greedy)")),
        }
    }
}

/// One line of the report; also the CSV row layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub policy: String,
    pub instance_id: String,
    pub trials: u64,
    pub mean: f64,
    pub se: f64,
    pub lp_bound: f64,
    pub ratio_lp: f64,
    pub opt_estimate: Option<f64>,
    pub ratio_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub version: u32,
    pub instance_id: String,
    pub model: Model,
    pub horizon: u32,
    pub trials: u64,
    pub seed: u64,
    pub opt: Option<Estimate>,
    pub rows: Vec<ReportRow>,
}

/// Estimates every policy on `instance` (same arrival streams for all policies) and relates the
/// means to the model's LP bound and, when requested, to the clairvoyant optimum.
pub fn competitive_ratio_report(
    instance: &Instance,
    instance_id: &str,
    model: Model,
    policies: &[PolicyKind],
    trials: u64,
    seed: u64,
    opt_mode: Option<OptMode>,
) -> Result<RatioReport, SimError> {
    if model == Model::OffCcm {
        return Err(InstanceError::InvalidParams("the ratio report covers the online models only".into()).into());
    }
    let lp = lp_bound(instance, model)?;
    let opt = opt_mode.map(|m| clairvoyant_opt(instance, m)).transpose()?;
    let mut rows = Vec::with_capacity(policies.len());
    for &kind in policies {
        let est = match kind {
            PolicyKind::Alg2 => {
                let p = alg2_policy(instance)?;
                estimate_performance(|| p.clone(), instance, trials, seed)?
            }
            PolicyKind::Alg3 => {
                let p = alg3_policy(instance)?;
                estimate_performance(|| p.clone(), instance, trials, seed)?
            }
            PolicyKind::Greedy => {
                let p = greedy_policy(instance);
                estimate_performance(|| p.clone(), instance, trials, seed)?
            }
        };
        let ratio = |den: f64| if den > 0.0 { est.mean / den } else { f64::NAN };
        rows.push(ReportRow {
            policy: kind.as_str().to_string(),
            instance_id: instance_id.to_string(),
            trials,
            mean: est.mean,
            se: est.se,
            lp_bound: lp,
            ratio_lp: ratio(lp),
            opt_estimate: opt.map(|o| o.mean),
            ratio_opt: opt.map(|o| ratio(o.mean)),
        });
    }
    Ok(RatioReport {
        version: REPORT_VERSION,
        instance_id: instance_id.to_string(),
        model,
        horizon: instance.horizon().unwrap_or(0),
        trials,
        seed,
        opt,
        rows,
    })
}
