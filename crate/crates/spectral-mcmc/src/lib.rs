//! Bayesian spectral inference for stationary multivariate time series.
//!
//! The library estimates VARMA and VARTFIMA (tempered fractionally
//! differenced) models through the multivariate Whittle likelihood, with
//! two samplers over the same posterior: full-data random-walk MCMC and
//! spectral subsampling MCMC, a block pseudo-marginal sampler that
//! estimates the log-likelihood from a random subset of periodogram
//! groups using grouped quadratic control variates.
//!
//! A typical pipeline:
//!
//! 1. [`ingest::MultiSeries`] loads and centers the data;
//! 2. [`spectral::periodogram`] produces the matrix periodogram;
//! 3. [`mcmc::run_full_mcmc`] or [`mcmc::run_subsample_mcmc`] draws from
//!    the posterior;
//! 4. [`diagnostics`] summarizes chains, spectra, coherences and delays.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `spectral-mcmc` binary wires the same pieces into a batch CLI.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod ingest;
mod linalg;
pub mod mcmc;
pub mod models;
pub mod prior;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
