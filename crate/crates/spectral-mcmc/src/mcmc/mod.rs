//! Full-data and spectral subsampling MCMC for the Whittle posterior.
//!
//! The subsampler is a block pseudo-marginal scheme: the log-likelihood is
//! estimated from m of G frequency groups with the difference estimator
//! around grouped quadratic control variates, the estimate is debiased by
//! half its variance estimate, and only one block of group indices is
//! refreshed per iteration so successive estimates stay correlated.

mod control_variates;
mod estimator;
mod groups;
mod optimize;
mod output;
mod sampler;
mod target;
#[cfg(test)]
pub(crate) mod testutil;

pub use control_variates::{
    ControlVariateSet, fit_control_variates, q_eval, stencil_sweeps,
};
pub use estimator::{
    DiffEstimate, SubsampleState, bias_corrected_loglik, block_update, difference_estimator,
};
pub use groups::{GroupPartition, build_groups};
pub use optimize::{OptimOptions, OptimResult, maximize};
pub use output::ChainOutput;
pub use sampler::{
    McmcSettings, SubsampleSettings, mh_step, run_full_mcmc, run_kalman_mcmc,
    run_subsample_mcmc,
};
pub use target::{GroupedTarget, WhittleTarget};
