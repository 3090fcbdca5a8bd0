//! The difference estimator of the log-likelihood and its block-updated
//! subsample state.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

use super::control_variates::ControlVariateSet;
use super::target::GroupedTarget;

/// m group indices drawn uniformly with replacement, organized as B
/// equal blocks so one block at a time can be refreshed (correlated
/// pseudo-marginal updates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampleState {
    n_groups: usize,
    blocks: usize,
    indices: Vec<usize>,
}

impl SubsampleState {
    /// Draws the initial subsample. `m` must be a positive multiple of `b`
    /// and at most... any m is allowed (sampling is with replacement).
    pub fn init<R: Rng + ?Sized>(
        n_groups: usize,
        m: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptySample);
        }
        if b == 0 || m % b != 0 {
            return Err(Error::Partition(format!(
                "block count {b} must divide the subsample size {m}"
            )));
        }
        if n_groups == 0 {
            return Err(Error::Partition("need at least one group".into()));
        }
        let indices = (0..m).map(|_| rng.random_range(0..n_groups)).collect();
        Ok(SubsampleState { n_groups, blocks: b, indices })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn block_size(&self) -> usize {
        self.indices.len() / self.blocks
    }
}

/// Returns a state in which exactly one block (chosen uniformly) has its
/// group indices redrawn uniformly with replacement; all other blocks are
/// carried over unchanged.
pub fn block_update<R: Rng + ?Sized>(state: &SubsampleState, rng: &mut R) -> SubsampleState {
    let mut next = state.clone();
    let b = rng.random_range(0..state.blocks);
    let size = state.block_size();
    for slot in next.indices[b * size..(b + 1) * size].iter_mut() {
        *slot = rng.random_range(0..state.n_groups);
    }
    next
}

/// Difference estimate of the full log-likelihood at `theta`:
/// ell_hat = q(theta) + (G/m) sum_i (ell_{u_i} - q_{u_i}), with the
/// variance estimate sigma2_hat = (G^2/m) * sample variance of the
/// differences (divisor m - 1; zero when m = 1).
#[derive(Debug, Clone)]
pub struct DiffEstimate {
    pub ell_hat: f64,
    pub sigma2_hat: f64,
    /// Per-sampled-group differences ell_u - q_u, aligned with the state's
    /// index vector.
    pub diffs: Vec<f64>,
    /// Elementary likelihood terms actually evaluated (unique groups).
    pub terms_evaluated: u64,
}

pub fn difference_estimator<T: GroupedTarget>(
    theta: &[f64],
    state: &SubsampleState,
    cv: &ControlVariateSet,
    target: &T,
) -> Result<DiffEstimate> {
    let m = state.m();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    if cv.n_groups() != target.n_groups() || state.n_groups != target.n_groups() {
        return Err(Error::Shape(
            "control variates, state and target disagree on the group count".into(),
        ));
    }
    let g = target.n_groups() as f64;

    // evaluate each distinct sampled group once
    let mut exact: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    let mut terms = 0u64;
    for &u in state.indices() {
        if !exact.contains_key(&u) {
            let v = target.group_loglik(theta, u)?;
            terms += target.group_terms(u);
            exact.insert(u, v);
        }
    }

    let diffs: Vec<f64> =
        state.indices().iter().map(|u| exact[u] - cv.q_group(theta, *u)).collect();
    let mean: f64 = diffs.iter().sum::<f64>() / m as f64;
    let ell_hat = cv.q_all(theta) + g * mean;
    let sigma2_hat = if m > 1 {
        let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
        g * g / m as f64 * (ss / (m as f64 - 1.0))
    } else {
        0.0
    };
    Ok(DiffEstimate { ell_hat, sigma2_hat, diffs, terms_evaluated: terms })
}

/// Log of the debiased likelihood estimate: ell_hat - sigma2_hat / 2.
pub fn bias_corrected_loglik(ell_hat: f64, sigma2_hat: f64) -> f64 {
    ell_hat - 0.5 * sigma2_hat
}
