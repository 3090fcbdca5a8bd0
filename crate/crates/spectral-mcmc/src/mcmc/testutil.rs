//! Synthetic targets for exercising the subsampling machinery in tests.

use super::target::GroupedTarget;

/// A target whose group log-likelihoods are exact quadratics, so finite
/// differences recover them up to roundoff.
pub(crate) struct QuadraticTarget {
    pub dim: usize,
    pub groups: usize,
    pub centers: Vec<f64>,   // groups x dim
    pub weights: Vec<f64>,   // groups
    pub linear: Vec<f64>,    // groups x dim
}

impl QuadraticTarget {
    pub fn make(dim: usize, groups: usize, seed: u64) -> Self {
        use rand::RngExt;
        let mut rng = crate::rng::stream_rng(seed, crate::rng::Stream::Simulation);
        QuadraticTarget {
            dim,
            groups,
            centers: (0..groups * dim).map(|_| rng.random::<f64>() - 0.5).collect(),
            weights: (0..groups).map(|_| 0.5 + rng.random::<f64>()).collect(),
            linear: (0..groups * dim).map(|_| rng.random::<f64>() - 0.5).collect(),
        }
    }
}

impl GroupedTarget for QuadraticTarget {
    fn dim(&self) -> usize {
        self.dim
    }
    fn n_groups(&self) -> usize {
        self.groups
    }
    fn group_terms(&self, _g: usize) -> u64 {
        1
    }
    fn group_loglik(&self, theta: &[f64], g: usize) -> crate::error::Result<f64> {
        let c = &self.centers[g * self.dim..(g + 1) * self.dim];
        let l = &self.linear[g * self.dim..(g + 1) * self.dim];
        let mut v = 0.0;
        for i in 0..self.dim {
            let d = theta[i] - c[i];
            v += -0.5 * self.weights[g] * d * d + l[i] * theta[i];
        }
        Ok(v)
    }
}

