//! Log prior density over the unconstrained parameter vector.
//!
//! AR and MA coordinates get a Minnesota-style normal prior whose variance
//! shrinks with lag; Cholesky coordinates and log lambda get N(0, 0.1);
//! each d_k gets N(0, 1). The Minnesota variances are applied to the
//! unconstrained coordinates (the pre-image under the stationarity map),
//! which keeps the density evaluable without a Jacobian term; treat it as
//! an approximation to placing the prior on the raw coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MultiSeries;
use crate::models::{CoordKind, ModelShape};

/// Prior variance for Cholesky-parameterisation coordinates and log
/// lambda. "N(0, 0.1)" is read as variance 0.1; change here if the
/// standard-deviation convention is wanted instead.
pub const CHOL_PRIOR_VARIANCE: f64 = 0.1;
/// Prior variance for each fractional differencing exponent d_k.
pub const D_PRIOR_VARIANCE: f64 = 1.0;
/// Default univariate AR order used to estimate residual variances.
pub const DEFAULT_RESIDUAL_AR_ORDER: usize = 4;

/// Minnesota prior hyperparameters plus the per-series residual variances
/// that scale the cross-series terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinnesotaConfig {
    /// Overall tightness of the first-lag coefficients.
    pub lambda0: f64,
    /// Cross-series discount in [0, 1).
    pub theta0: f64,
    /// Residual variance of a univariate AR fit to each series.
    pub sigma2: Vec<f64>,
}

impl MinnesotaConfig {
    pub fn new(lambda0: f64, theta0: f64, sigma2: Vec<f64>) -> Result<Self> {
        if !(lambda0 > 0.0) {
            return Err(Error::Config("lambda0 must be positive".into()));
        }
        if !(0.0..1.0).contains(&theta0) {
            return Err(Error::Config("theta0 must lie in [0, 1)".into()));
        }
        if sigma2.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("residual variances must be positive".into()));
        }
        Ok(MinnesotaConfig { lambda0, theta0, sigma2 })
    }

    /// Paper defaults lambda0 = 1, theta0 = 0.2, with residual variances
    /// estimated from the series by univariate AR fits.
    pub fn from_series(series: &MultiSeries, ar_order: usize) -> Result<Self> {
        let sigma2 = residual_variances(series, ar_order)?;
        Self::new(1.0, 0.2, sigma2)
    }
}

/// Residual variance of a least-squares univariate AR(`ar_order`) fit per
/// column, on a demeaned series.
pub fn residual_variances(series: &MultiSeries, ar_order: usize) -> Result<Vec<f64>> {
    if !series.is_demeaned() {
        return Err(Error::NotDemeaned);
    }
    let t_len = series.t_len();
    if t_len <= 10 * ar_order {
        return Err(Error::InputTooShort { t: t_len, min: 10 * ar_order + 1 });
    }
    let mut out = Vec::with_capacity(series.r());
    for col in 0..series.r() {
        let x = series.column(col);
        out.push(univariate_ar_residual_variance(&x, ar_order, col + 1)?);
    }
    Ok(out)
}

fn univariate_ar_residual_variance(x: &[f64], order: usize, col: usize) -> Result<f64> {
    let t_len = x.len();
    let n_obs = t_len - order;
    if order == 0 {
        let v = x.iter().map(|v| v * v).sum::<f64>() / t_len as f64;
        if v <= 0.0 {
            return Err(Error::Degenerate(format!("column {col} is constant")));
        }
        return Ok(v);
    }
    // normal equations for x_t on (x_{t-1}, ..., x_{t-order})
    let mut xtx = vec![0.0; order * order];
    let mut xty = vec![0.0; order];
    for t in order..t_len {
        for a in 0..order {
            xty[a] += x[t - 1 - a] * x[t];
            for b in a..order {
                xtx[a * order + b] += x[t - 1 - a] * x[t - 1 - b];
            }
        }
    }
    for a in 0..order {
        for b in 0..a {
            xtx[a * order + b] = xtx[b * order + a];
        }
    }
    let scale = (0..order).map(|a| xtx[a * order + a]).fold(0.0, f64::max);
    if scale <= 1e-300 {
        return Err(Error::Degenerate(format!("column {col} is constant")));
    }
    let mut l = xtx.clone();
    crate::linalg::rchol_factor(&mut l, order)
        .map_err(|_| Error::Degenerate(format!("column {col} has a rank-deficient AR design")))?;
    let mut beta = xty.clone();
    crate::linalg::rchol_forward(&l, &mut beta, order);
    for i in (0..order).rev() {
        let mut acc = beta[i];
        for j in (i + 1)..order {
            acc -= l[j * order + i] * beta[j];
        }
        beta[i] = acc / l[i * order + i];
    }
    let mut rss = 0.0;
    for t in order..t_len {
        let mut pred = 0.0;
        for a in 0..order {
            pred += beta[a] * x[t - 1 - a];
        }
        let e = x[t] - pred;
        rss += e * e;
    }
    let dof = (n_obs - order).max(1);
    Ok(rss / dof as f64)
}

/// Prior variance v_{ij,l} for the lag-l coefficient linking regressor
/// series j to equation i: (lambda0 / l)^2 on own lags,
/// (lambda0 theta0 sigma_i / (l sigma_j))^2 across series. 1-based i, j.
pub fn minnesota_variance(i: usize, j: usize, l: usize, config: &MinnesotaConfig) -> f64 {
    debug_assert!(l >= 1 && i >= 1 && j >= 1);
    if i == j {
        (config.lambda0 / l as f64).powi(2)
    } else {
        let si = config.sigma2[i - 1].sqrt();
        let sj = config.sigma2[j - 1].sqrt();
        (config.lambda0 * config.theta0 * si / (l as f64 * sj)).powi(2)
    }
}

fn normal_logpdf(x: f64, variance: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + x * x / variance)
}

/// Log prior density of an unconstrained parameter vector.
pub fn log_prior(theta: &[f64], shape: &ModelShape, config: &MinnesotaConfig) -> Result<f64> {
    if theta.len() != shape.dim() {
        return Err(Error::Shape(format!(
            "theta has length {}, shape needs {}",
            theta.len(),
            shape.dim()
        )));
    }
    if config.sigma2.len() != shape.r {
        return Err(Error::Shape(format!(
            "prior has {} residual variances, model has r = {}",
            config.sigma2.len(),
            shape.r
        )));
    }
    let mut total = 0.0;
    for (x, kind) in theta.iter().zip(shape.coord_kinds()) {
        let variance = match kind {
            CoordKind::Ar { lag, i, j } | CoordKind::Ma { lag, i, j } => {
                minnesota_variance(i, j, lag, config)
            }
            CoordKind::Chol | CoordKind::LogLambda => CHOL_PRIOR_VARIANCE,
            CoordKind::D => D_PRIOR_VARIANCE,
        };
        total += normal_logpdf(*x, variance);
    }
    Ok(total)
}
