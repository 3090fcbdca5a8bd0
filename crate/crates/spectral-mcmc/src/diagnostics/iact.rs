//! Integrated autocorrelation time.

use crate::error::{Error, Result};

/// IACT = 1 + 2 sum_k rho_k, estimated with Geyer's initial positive
/// sequence: paired autocorrelations Gamma_k = rho_{2k} + rho_{2k+1} are
/// summed while they stay positive. Chains must have at least 100
/// non-constant values.
pub fn iact(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 100 {
        return Err(Error::InputTooShort { t: n, min: 100 });
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let gamma0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::Degenerate("chain is constant".into()));
    }

    let rho = |lag: usize| -> f64 {
        if lag >= n {
            return 0.0;
        }
        let mut s = 0.0;
        for t in 0..(n - lag) {
            s += centered[t] * centered[t + lag];
        }
        s / (n as f64 * gamma0)
    };

    // paired sums; rho_0 = 1 is part of Gamma_0
    let mut total = 0.0;
    let mut k = 0usize;
    loop {
        let g = rho(2 * k) + rho(2 * k + 1);
        if g <= 0.0 || 2 * k >= n - 1 {
            break;
        }
        total += g;
        k += 1;
    }
    Ok(2.0 * total - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;
    use rand_distr::StandardNormal;

    #[test]
    fn white_noise_is_near_one() {
        let mut rng = crate::rng::stream_rng(3, crate::rng::Stream::Simulation);
        let chain: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let v = iact(&chain).unwrap();
        assert!(v > 0.9 && v < 1.2, "IACT = {v}");
    }

    #[test]
    fn ar1_matches_analytic_sum() {
        // IACT of an AR(1) chain with rho = 0.9 is (1+rho)/(1-rho) = 19
        let rho = 0.9;
        let mut rng = crate::rng::stream_rng(5, crate::rng::Stream::Simulation);
        let n = 200_000;
        let mut chain = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            x = rho * x + e;
            chain.push(x);
        }
        let v = iact(&chain).unwrap();
        assert!((v - 19.0).abs() < 0.2 * 19.0, "IACT = {v}");
    }

    #[test]
    fn alternating_chain_is_antithetic() {
        let chain: Vec<f64> = (0..1000).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v = iact(&chain).unwrap();
        assert!(v.is_finite());
        assert!(v < 1.0, "IACT = {v}");
    }

    #[test]
    fn affine_invariance() {
        let mut rng = crate::rng::stream_rng(9, crate::rng::Stream::Simulation);
        let mut chain = Vec::with_capacity(5000);
        let mut x = 0.0f64;
        for _ in 0..5000 {
            let e: f64 = rng.sample(StandardNormal);
            x = 0.6 * x + e;
            chain.push(x);
        }
        let base = iact(&chain).unwrap();
        let scaled: Vec<f64> = chain.iter().map(|v| -3.5 * v + 11.0).collect();
        let got = iact(&scaled).unwrap();
        assert!((got - base).abs() < 1e-10 * base.abs());
    }

    #[test]
    fn preconditions_are_enforced() {
        assert!(matches!(iact(&[1.0; 50]), Err(Error::InputTooShort { .. })));
        assert!(matches!(iact(&[2.5; 500]), Err(Error::Degenerate(_))));
    }
}
