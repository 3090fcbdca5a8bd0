//! Chain efficiency metrics, model comparison and spectral summaries.

mod bic;
mod efficiency;
mod iact;
mod summary;

pub use bic::{BicResult, BicSampleSize, bic};
pub use efficiency::{ChainEfficiency, EfficiencyReport, chain_efficiency, compute_ct, ct_from_parts};
pub use iact::iact;
pub use summary::{
    PredictiveBands, QuantileBand, SpectralSummary, predictive_periodogram, spectral_summary,
    spectral_summary_with,
};
