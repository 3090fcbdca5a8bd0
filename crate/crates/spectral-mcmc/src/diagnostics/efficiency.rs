//! Computational-time comparison of samplers.
//!
//! CT = IACT x density evaluations per iteration (setup amortized over the
//! run), an implementation-independent cost of one effectively independent
//! draw. RCT compares a full-data chain against a subsampling chain per
//! parameter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcmc::ChainOutput;

use super::iact::iact;

/// Per-parameter efficiency of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainEfficiency {
    pub names: Vec<String>,
    pub iact: Vec<f64>,
    /// Density evaluations per iteration, setup included.
    pub evals_per_iteration: f64,
    /// ct[i] = iact[i] * evals_per_iteration.
    pub ct: Vec<f64>,
}

/// Efficiency report for a full-data chain, optionally against a
/// subsampling chain (then RCT = CT_full / CT_sub per parameter, with
/// min/mean/max summaries across parameters).
#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyReport {
    pub full: ChainEfficiency,
    pub subsample: Option<ChainEfficiency>,
    pub rct: Option<Vec<f64>>,
    pub rct_min: Option<f64>,
    pub rct_mean: Option<f64>,
    pub rct_max: Option<f64>,
}

/// IACT and CT per parameter from raw pieces.
pub fn ct_from_parts(names: &[String], iact: &[f64], evals_per_iteration: f64) -> Result<ChainEfficiency> {
    if names.len() != iact.len() {
        return Err(Error::Shape("names and IACT vectors differ in length".into()));
    }
    if !(evals_per_iteration > 0.0) {
        return Err(Error::Shape("evaluation counts must be positive".into()));
    }
    Ok(ChainEfficiency {
        names: names.to_vec(),
        iact: iact.to_vec(),
        evals_per_iteration,
        ct: iact.iter().map(|v| v * evals_per_iteration).collect(),
    })
}

pub fn chain_efficiency(chain: &ChainOutput) -> Result<ChainEfficiency> {
    let iacts: Vec<f64> = (0..chain.dim())
        .map(|j| iact(&chain.column(j)))
        .collect::<Result<_>>()?;
    ct_from_parts(&chain.names, &iacts, chain.evals_per_iteration())
}

/// Builds the report; `subsample` enables the RCT columns.
pub fn compute_ct(full: &ChainOutput, subsample: Option<&ChainOutput>) -> Result<EfficiencyReport> {
    let full_eff = chain_efficiency(full)?;
    match subsample {
        None => Ok(EfficiencyReport {
            full: full_eff,
            subsample: None,
            rct: None,
            rct_min: None,
            rct_mean: None,
            rct_max: None,
        }),
        Some(sub) => {
            if sub.names != full.names {
                return Err(Error::Shape(
                    "full and subsample chains have different parameters".into(),
                ));
            }
            let sub_eff = chain_efficiency(sub)?;
            let rct: Vec<f64> = full_eff
                .ct
                .iter()
                .zip(&sub_eff.ct)
                .map(|(f, s)| f / s)
                .collect();
            let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for v in &rct {
                lo = lo.min(*v);
                hi = hi.max(*v);
                sum += v;
            }
            let mean = sum / rct.len() as f64;
            Ok(EfficiencyReport {
                full: full_eff,
                subsample: Some(sub_eff),
                rct: Some(rct),
                rct_min: Some(lo),
                rct_mean: Some(mean),
                rct_max: Some(hi),
            })
        }
    }
}
