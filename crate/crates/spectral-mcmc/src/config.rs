//! Run configuration: one JSON document driving every subcommand.
//!
//! Unknown keys are rejected. Command-line flags may override the scalar
//! fields (seed, threads, output directory); precedence is
//! flag > file > default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::BicSampleSize;
use crate::error::{Error, Result};
use crate::ingest::MultiSeries;
use crate::models::{ModelParams, ModelShape};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Input data CSV (one row per time point, one column per series).
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    /// Model to fit / diagnose.
    #[serde(default)]
    pub shape: Option<ModelShape>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    /// Output directory for all artifacts.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; absent = all available cores.
    #[serde(default)]
    pub threads: Option<usize>,
    /// True parameters and length for `simulate`.
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    /// Model list for `compare`.
    #[serde(default)]
    pub models: Vec<ModelShape>,
    /// Sample-size convention in the BIC penalty.
    #[serde(default)]
    pub bic_n: BicSampleSize,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

fn default_true() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default = "default_true")]
    pub interpolate: bool,
    #[serde(default)]
    pub log_shift: bool,
    /// Demeaning always happens last, immediately before spectral analysis.
    #[serde(default = "default_true")]
    pub demean: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { interpolate: true, log_shift: false, demean: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    /// Univariate AR order for the residual-variance estimates.
    #[serde(default = "default_ar_order")]
    pub ar_order: usize,
}

fn default_lambda0() -> f64 {
    1.0
}
fn default_theta0() -> f64 {
    0.2
}
fn default_ar_order() -> usize {
    crate::prior::DEFAULT_RESIDUAL_AR_ORDER
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            lambda0: default_lambda0(),
            theta0: default_theta0(),
            ar_order: default_ar_order(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    /// Control-variate groups G.
    #[serde(default = "default_groups")]
    pub groups: usize,
    /// Sampled groups per iteration m.
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    /// Pseudo-marginal blocks B.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_adapt_every")]
    pub adapt_every: usize,
}

fn default_iterations() -> usize {
    55_000
}
fn default_burnin() -> usize {
    5_000
}
fn default_groups() -> usize {
    1000
}
fn default_subsample() -> usize {
    10
}
fn default_blocks() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}
fn default_adapt_every() -> usize {
    200
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: default_iterations(),
            burnin: default_burnin(),
            groups: default_groups(),
            subsample: default_subsample(),
            blocks: default_blocks(),
            seed: default_seed(),
            adapt_every: default_adapt_every(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: ModelParams,
    pub t: usize,
    #[serde(default = "default_sim_burnin")]
    pub burnin: usize,
}

fn default_sim_burnin() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Frequency-grid size for spectral summaries.
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    /// Periodogram draws per posterior draw in the predictive check.
    #[serde(default = "default_draws_per_theta")]
    pub draws_per_theta: usize,
}

fn default_grid() -> usize {
    512
}
fn default_draws_per_theta() -> usize {
    100
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            grid_size: default_grid(),
            draws_per_theta: default_draws_per_theta(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    /// Checks every statically checkable module precondition before any
    /// work starts.
    pub fn validate_common(&self) -> Result<()> {
        if !(self.prior.lambda0 > 0.0) {
            return Err(Error::Config("prior.lambda0 must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.prior.theta0) {
            return Err(Error::Config("prior.theta0 must lie in [0, 1)".into()));
        }
        let m = &self.mcmc;
        if m.iterations == 0 || m.burnin >= m.iterations {
            return Err(Error::Config(
                "mcmc.iterations must exceed mcmc.burnin".into(),
            ));
        }
        if m.subsample == 0 || m.groups == 0 {
            return Err(Error::Config("mcmc.groups and mcmc.subsample must be positive".into()));
        }
        if m.subsample > m.groups {
            return Err(Error::Config(
                "mcmc.subsample cannot exceed mcmc.groups".into(),
            ));
        }
        if m.blocks == 0 || m.subsample % m.blocks != 0 {
            return Err(Error::Config(
                "mcmc.blocks must divide mcmc.subsample".into(),
            ));
        }
        if let Some(threads) = self.threads
            && threads == 0
        {
            return Err(Error::Config("threads must be positive when given".into()));
        }
        Ok(())
    }

    pub fn require_data(&self) -> Result<&PathBuf> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Config("config field 'data' is required".into()))
    }

    pub fn require_shape(&self) -> Result<&ModelShape> {
        self.shape
            .as_ref()
            .ok_or_else(|| Error::Config("config field 'shape' is required".into()))
    }

    /// Loads and preprocesses the data: interpolate, optional log-shift,
    /// demean last.
    pub fn load_series(&self) -> Result<MultiSeries> {
        let path = self.require_data()?;
        if !path.exists() {
            return Err(Error::Data(format!("data file {} does not exist", path.display())));
        }
        let mut series = MultiSeries::load_csv(path, self.has_header)?;
        if self.preprocess.interpolate {
            series = series.interpolate_missing()?;
        }
        if self.preprocess.log_shift {
            series = series.log_shift_transform()?;
        }
        if self.preprocess.demean {
            series = series.demean()?;
        }
        Ok(series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_reference_settings() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.mcmc.iterations, 55_000);
        assert_eq!(cfg.mcmc.burnin, 5_000);
        assert_eq!(cfg.mcmc.groups, 1000);
        assert_eq!(cfg.mcmc.subsample, 10);
        assert_eq!(cfg.mcmc.blocks, 10);
        assert_eq!(cfg.prior.lambda0, 1.0);
        assert_eq!(cfg.prior.theta0, 0.2);
        assert!(cfg.preprocess.demean);
        cfg.validate_common().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"no_such_key": 1}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<RunConfig>(r#"{"mcmc": {"iters": 10}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn validation_catches_bad_subsampling() {
        let mut cfg: RunConfig = serde_json::from_str("{}").unwrap();
        cfg.mcmc.blocks = 3; // does not divide 10
        assert!(cfg.validate_common().is_err());
        cfg.mcmc.blocks = 10;
        cfg.mcmc.subsample = 2000; // exceeds groups
        assert!(cfg.validate_common().is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"data": "x.csv", "shape": {"kind": "vartfima", "r": 2, "p": 1, "q": 1},
                "mcmc": {"seed": 7}, "out": "results"}"#,
        )
        .unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.mcmc.seed, 7);
        assert_eq!(back.shape.unwrap().r, 2);
        assert!(back.shape.unwrap().shared_lambda);
    }
}
