//! Model simulation with Gaussian innovations.

use nalgebra::DMatrix;
use rand::RngExt;
use rand_distr::StandardNormal;

use super::tempering::inverse_tempered_truncated;
use super::{ModelKind, ModelParams, companion_spectral_radius};
use crate::error::{Error, Result};
use crate::ingest::MultiSeries;
use crate::rng::{Stream, stream_rng};

const FILTER_TAIL_BOUND: f64 = 1e-8;
const FILTER_MAX_LEN: usize = 10_000_000;

/// Simulates `t_len` observations from the model, discarding `burnin`
/// initial steps of the VARMA recursion. A VARTFIMA draw filters a VARMA
/// core with the truncated inverse tempering filter (tail sum below 1e-8).
/// Deterministic for a given seed.
pub fn simulate_model(
    params: &ModelParams,
    t_len: usize,
    burnin: usize,
    seed: u64,
) -> Result<MultiSeries> {
    let r = params.r();
    if t_len == 0 {
        return Err(Error::Domain("t_len must be positive".into()));
    }
    if !(companion_spectral_radius(params.ar.mats()) < 1.0) {
        return Err(Error::Domain("AR polynomial is not stationary".into()));
    }

    // per-series inverse tempering filters (VARTFIMA only)
    let filters: Vec<Vec<f64>> = match params.kind {
        ModelKind::Varma => Vec::new(),
        ModelKind::Vartfima => (0..r)
            .map(|k| {
                inverse_tempered_truncated(
                    params.d[k],
                    params.lambda_for(k),
                    FILTER_TAIL_BOUND,
                    FILTER_MAX_LEN,
                )
            })
            .collect::<Result<_>>()?,
    };
    let max_filter = filters.iter().map(|f| f.len() - 1).max().unwrap_or(0);

    let p = params.ar.order();
    let q = params.ma.order();
    let total = burnin + max_filter + t_len;
    let mut rng = stream_rng(seed, Stream::Simulation);

    // VARMA core recursion
    let mut core = vec![0.0f64; total * r];
    let mut eps = vec![0.0f64; total * r];
    let mut z = vec![0.0f64; r];
    for t in 0..total {
        for zk in z.iter_mut() {
            *zk = rng.sample(StandardNormal);
        }
        for i in 0..r {
            let mut e = 0.0;
            for j in 0..=i {
                e += params.sigma_chol[(i, j)] * z[j];
            }
            eps[t * r + i] = e;
        }
        for i in 0..r {
            let mut x = eps[t * r + i];
            for lag in 1..=p {
                if t >= lag {
                    let m = params.ar.coeff(lag);
                    for j in 0..r {
                        x += m[(i, j)] * core[(t - lag) * r + j];
                    }
                }
            }
            for lag in 1..=q {
                if t >= lag {
                    let m = params.ma.coeff(lag);
                    for j in 0..r {
                        x += m[(i, j)] * eps[(t - lag) * r + j];
                    }
                }
            }
            core[t * r + i] = x;
        }
    }

    let start = burnin + max_filter;
    let mut out = vec![0.0f64; t_len * r];
    match params.kind {
        ModelKind::Varma => {
            for t in 0..t_len {
                for k in 0..r {
                    out[t * r + k] = params.mu[k] + core[(start + t) * r + k];
                }
            }
        }
        ModelKind::Vartfima => {
            for t in 0..t_len {
                for k in 0..r {
                    let filt = &filters[k];
                    let mut y = 0.0;
                    for (j, c) in filt.iter().enumerate() {
                        y += c * core[(start + t - j) * r + k];
                    }
                    out[t * r + k] = params.mu[k] + y;
                }
            }
        }
    }
    MultiSeries::from_values(out, t_len, r)
}

/// Lag-`tau` sample autocovariance matrix (biased, 1/T normalization) of a
/// zero-mean interpretation of the series. Used by moment checks.
pub fn sample_autocovariance(series: &MultiSeries, tau: usize) -> DMatrix<f64> {
    let r = series.r();
    let t_len = series.t_len();
    let mut means = vec![0.0; r];
    for j in 0..r {
        means[j] = (0..t_len).map(|t| series.get(t, j)).sum::<f64>() / t_len as f64;
    }
    let mut g = DMatrix::zeros(r, r);
    for t in tau..t_len {
        for a in 0..r {
            for b in 0..r {
                g[(a, b)] +=
                    (series.get(t, a) - means[a]) * (series.get(t - tau, b) - means[b]);
            }
        }
    }
    g / t_len as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::solve_discrete_lyapunov;

    type Mat = DMatrix<f64>;

    #[test]
    fn same_seed_is_bit_identical() {
        let params = ModelParams::varma(
            vec![Mat::from_row_slice(2, 2, &[0.4, 0.1, -0.1, 0.2])],
            vec![Mat::from_row_slice(2, 2, &[0.3, 0.0, 0.1, -0.2])],
            Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]),
            vec![1.0, -2.0],
        )
        .unwrap();
        let a = simulate_model(&params, 500, 100, 42).unwrap();
        let b = simulate_model(&params, 500, 100, 42).unwrap();
        assert_eq!(a.values(), b.values());
        let c = simulate_model(&params, 500, 100, 43).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn white_noise_covariance_matches_sigma() {
        let sigma = Mat::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.9]);
        let params = ModelParams::varma(vec![], vec![], sigma.clone(), vec![0.0; 2]).unwrap();
        let t_len = 100_000;
        let s = simulate_model(&params, t_len, 0, 7).unwrap();
        let g0 = sample_autocovariance(&s, 0);
        for a in 0..2 {
            for b in 0..2 {
                // var of a sample covariance entry is (s_aa s_bb + s_ab^2)/T
                let se = ((sigma[(a, a)] * sigma[(b, b)] + sigma[(a, b)].powi(2))
                    / t_len as f64)
                    .sqrt();
                assert!(
                    (g0[(a, b)] - sigma[(a, b)]).abs() < 3.0 * se,
                    "entry ({a},{b}): {} vs {}",
                    g0[(a, b)],
                    sigma[(a, b)]
                );
            }
        }
    }

    #[test]
    fn var1_lag_one_autocovariance_matches_lyapunov() {
        let phi = Mat::from_row_slice(2, 2, &[0.6, 0.2, -0.1, 0.4]);
        let sigma = Mat::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.2]);
        let params =
            ModelParams::varma(vec![phi.clone()], vec![], sigma.clone(), vec![0.0; 2]).unwrap();
        let gamma0 = solve_discrete_lyapunov(&phi, &sigma).unwrap();
        let oracle = &phi * &gamma0;

        // replicate to get a Monte Carlo standard error of the mean
        let reps = 24;
        let t_len = 20_000;
        let mut sums = Mat::zeros(2, 2);
        let mut sumsq = Mat::zeros(2, 2);
        for rep in 0..reps {
            let s = simulate_model(&params, t_len, 500, 1000 + rep).unwrap();
            let g1 = sample_autocovariance(&s, 1);
            for a in 0..2 {
                for b in 0..2 {
                    sums[(a, b)] += g1[(a, b)];
                    sumsq[(a, b)] += g1[(a, b)] * g1[(a, b)];
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let mean = sums[(a, b)] / reps as f64;
                let var = (sumsq[(a, b)] - reps as f64 * mean * mean) / (reps as f64 - 1.0);
                let se = (var / reps as f64).sqrt();
                assert!(
                    (mean - oracle[(a, b)]).abs() < 3.0 * se.max(1e-6),
                    "entry ({a},{b}): {} vs {} (se {})",
                    mean,
                    oracle[(a, b)],
                    se
                );
            }
        }
    }

    #[test]
    fn spectral_density_integrates_to_variance() {
        // (2 pi / N) * sum of f over an N-point grid approximates Gamma(0);
        // compare against replicated simulations of the same process.
        use crate::models::spectrum::spectral_density;
        let shape = crate::models::ModelShape::new(ModelKind::Varma, 3, 1, 0, true).unwrap();
        let theta: Vec<f64> = vec![
            0.5, 0.2, -0.1, 0.0, 0.4, 0.1, -0.2, 0.1, 0.3, // AR block
            0.1, 0.2, -0.1, 0.05, 0.15, 0.0, // cholesky block
        ];
        assert_eq!(theta.len(), shape.dim());
        let params = shape.unpack(&theta).unwrap();

        let n_grid = 1 << 14;
        let mut integral = Mat::zeros(3, 3);
        for j in 0..n_grid {
            let omega = -std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_grid as f64;
            let f = spectral_density(&params, omega).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    integral[(a, b)] += f[(a, b)].re;
                }
            }
        }
        integral *= 2.0 * std::f64::consts::PI / n_grid as f64;

        let reps = 16;
        let t_len = 16_384;
        let mut sums = Mat::zeros(3, 3);
        let mut sumsq = Mat::zeros(3, 3);
        for rep in 0..reps {
            let s = simulate_model(&params, t_len, 300, 500 + rep).unwrap();
            let g0 = sample_autocovariance(&s, 0);
            for a in 0..3 {
                for b in 0..3 {
                    sums[(a, b)] += g0[(a, b)];
                    sumsq[(a, b)] += g0[(a, b)] * g0[(a, b)];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let mean = sums[(a, b)] / reps as f64;
                let var = (sumsq[(a, b)] - reps as f64 * mean * mean) / (reps as f64 - 1.0);
                let se = (var / reps as f64).sqrt();
                assert!(
                    (mean - integral[(a, b)]).abs() < 3.0 * se.max(1e-6),
                    "entry ({a},{b}): sim {} vs integral {} (se {})",
                    mean,
                    integral[(a, b)],
                    se
                );
            }
        }
    }

    #[test]
    fn vartfima_simulation_is_deterministic_and_finite() {
        let params = ModelParams::vartfima(
            vec![Mat::from_element(1, 1, 0.3)],
            vec![],
            Mat::identity(1, 1),
            vec![0.0],
            vec![0.3],
            vec![0.05],
        )
        .unwrap();
        let a = simulate_model(&params, 2000, 100, 5).unwrap();
        let b = simulate_model(&params, 2000, 100, 5).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn tiny_lambda_truncation_errors() {
        let params = ModelParams::vartfima(
            vec![],
            vec![],
            Mat::identity(1, 1),
            vec![0.0],
            vec![0.3],
            vec![1e-9],
        )
        .unwrap();
        assert!(matches!(
            simulate_model(&params, 100, 0, 1),
            Err(Error::Truncation { .. })
        ));
    }
}
