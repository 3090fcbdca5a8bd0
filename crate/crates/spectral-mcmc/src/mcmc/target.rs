//! Targets whose log-likelihood decomposes as a sum over groups.
//!
//! The subsampling machinery (control variates, difference estimator,
//! samplers) is written against this trait so its statistical properties
//! can be tested on synthetic targets with known structure; the production
//! implementation wraps the Whittle likelihood over a frequency partition.

use crate::error::{Error, Result};
use crate::linalg::KahanSum;
use crate::models::ModelShape;
use crate::spectral::{PeriodogramSet, WhittleEvaluator};

use super::groups::GroupPartition;

/// A log-likelihood that is a sum of per-group contributions.
pub trait GroupedTarget: Sync {
    fn dim(&self) -> usize;

    fn n_groups(&self) -> usize;

    /// Number of elementary likelihood terms in group `g` (the unit of the
    /// density-evaluation counter).
    fn group_terms(&self, g: usize) -> u64;

    /// Log-likelihood contribution of group `g`.
    fn group_loglik(&self, theta: &[f64], g: usize) -> Result<f64>;

    /// All group contributions at once. Implementations may share setup
    /// work across groups.
    fn group_logliks(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (0..self.n_groups()).map(|g| self.group_loglik(theta, g)).collect()
    }

    /// Full log-likelihood (the sum over all groups).
    fn full_loglik(&self, theta: &[f64]) -> Result<f64> {
        let mut acc = KahanSum::default();
        for v in self.group_logliks(theta)? {
            acc.add(v);
        }
        Ok(acc.value())
    }

    fn total_terms(&self) -> u64 {
        (0..self.n_groups()).map(|g| self.group_terms(g)).sum()
    }
}

/// Maps numerical degeneracies (singular spectra, lost definiteness,
/// parameter values outside the representable domain such as an
/// underflowed tempering parameter) to a -inf log density so samplers
/// treat them as rejections; structural errors still propagate.
pub(crate) fn loglik_or_neg_inf(res: Result<f64>) -> Result<f64> {
    match res {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Ok(f64::NEG_INFINITY),
        Err(Error::SingularSpectrum { .. })
        | Err(Error::Conditioning(_))
        | Err(Error::Domain(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// The Whittle likelihood over a contiguous frequency partition.
pub struct WhittleTarget<'a> {
    pgram: &'a PeriodogramSet,
    shape: ModelShape,
    partition: GroupPartition,
}

impl<'a> WhittleTarget<'a> {
    pub fn new(
        pgram: &'a PeriodogramSet,
        shape: ModelShape,
        partition: GroupPartition,
    ) -> Result<Self> {
        if shape.r != pgram.r() {
            return Err(Error::Shape(format!(
                "model dimension {} does not match periodogram dimension {}",
                shape.r,
                pgram.r()
            )));
        }
        if partition.n() != pgram.n() {
            return Err(Error::Partition(format!(
                "partition covers {} frequencies, periodogram has {}",
                partition.n(),
                pgram.n()
            )));
        }
        Ok(WhittleTarget { pgram, shape, partition })
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn pgram(&self) -> &PeriodogramSet {
        self.pgram
    }

    /// Conjugate-pair shortcut for the full likelihood, used by the
    /// optimizer where only the value matters. Covers n/2 terms.
    pub fn half_loglik(&self, theta: &[f64]) -> Result<f64> {
        let params = self.shape.unpack(theta)?;
        WhittleEvaluator::new(&params, self.pgram)?.halved()
    }
}

impl GroupedTarget for WhittleTarget<'_> {
    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn n_groups(&self) -> usize {
        self.partition.n_groups()
    }

    fn group_terms(&self, g: usize) -> u64 {
        self.partition.group_size(g) as u64
    }

    fn group_loglik(&self, theta: &[f64], g: usize) -> Result<f64> {
        let params = self.shape.unpack(theta)?;
        WhittleEvaluator::new(&params, self.pgram)?.sum_range(self.partition.range(g))
    }

    fn group_logliks(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let params = self.shape.unpack(theta)?;
        WhittleEvaluator::new(&params, self.pgram)?.group_sums(self.partition.bounds())
    }

    fn full_loglik(&self, theta: &[f64]) -> Result<f64> {
        let params = self.shape.unpack(theta)?;
        WhittleEvaluator::new(&params, self.pgram)?.full()
    }

    fn total_terms(&self) -> u64 {
        self.pgram.n() as u64
    }
}
