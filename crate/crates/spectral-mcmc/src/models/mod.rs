//! VARMA and VARTFIMA model parameterization, spectral densities,
//! simulation, and the exact time-domain likelihood.

mod kalman;
mod simulate;
pub mod spectrum;
pub mod stationary;
pub mod tempering;

pub use kalman::kalman_exact_loglik;
pub use simulate::{sample_autocovariance, simulate_model};
pub use spectrum::{varma_spectral_density, vartfima_spectral_density};
pub use stationary::{
    companion_spectral_radius, solve_discrete_lyapunov, stationary_from_unconstrained,
    unconstrained_from_stationary,
};
pub use tempering::{inverse_tempered_coeffs, tempered_coeffs};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Mat = DMatrix<f64>;

/// A flat unconstrained parameter vector, the coordinate system the
/// samplers and optimizers work in. Layout (see [`ModelShape::unpack`]):
/// AR blocks, MA blocks, Cholesky (log-diagonal), d, log lambda.
pub type UnconstrainedVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Varma,
    Vartfima,
}

/// Which model to fit: kind, dimension and lag orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub kind: ModelKind,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    /// One tempering parameter shared across series (the default) or one
    /// per series.
    #[serde(default = "default_true")]
    pub shared_lambda: bool,
}

fn default_true() -> bool {
    true
}

/// Classification of one coordinate of the unconstrained vector, used by
/// the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    /// AR block coordinate: (lag, row, col), 1-based lag.
    Ar { lag: usize, i: usize, j: usize },
    Ma { lag: usize, i: usize, j: usize },
    /// Log-diagonal or off-diagonal entry of the Cholesky factor.
    Chol,
    D,
    LogLambda,
}

impl ModelShape {
    pub fn new(kind: ModelKind, r: usize, p: usize, q: usize, shared_lambda: bool) -> Result<Self> {
        if r == 0 {
            return Err(Error::Shape("model dimension r must be at least 1".into()));
        }
        Ok(ModelShape { kind, r, p, q, shared_lambda })
    }

    fn n_lambda(&self) -> usize {
        match self.kind {
            ModelKind::Varma => 0,
            ModelKind::Vartfima => {
                if self.shared_lambda { 1 } else { self.r }
            }
        }
    }

    fn n_d(&self) -> usize {
        match self.kind {
            ModelKind::Varma => 0,
            ModelKind::Vartfima => self.r,
        }
    }

    /// Length of the unconstrained parameter vector:
    /// r^2 p + r^2 q + r(r+1)/2 (+ r and 1-or-r for VARTFIMA).
    pub fn dim(&self) -> usize {
        let rr = self.r * self.r;
        rr * self.p + rr * self.q + self.r * (self.r + 1) / 2 + self.n_d() + self.n_lambda()
    }

    /// Parameter names in vector order, used as draw-file headers.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for lag in 1..=self.p {
            for i in 1..=self.r {
                for j in 1..=self.r {
                    names.push(format!("ar{lag}_{i}_{j}"));
                }
            }
        }
        for lag in 1..=self.q {
            for i in 1..=self.r {
                for j in 1..=self.r {
                    names.push(format!("ma{lag}_{i}_{j}"));
                }
            }
        }
        for j in 1..=self.r {
            names.push(format!("lchol_{j}_{j}"));
            for i in (j + 1)..=self.r {
                names.push(format!("chol_{i}_{j}"));
            }
        }
        for k in 1..=self.n_d() {
            names.push(format!("d_{k}"));
        }
        match self.n_lambda() {
            0 => {}
            1 => names.push("loglambda".to_string()),
            _ => {
                for k in 1..=self.r {
                    names.push(format!("loglambda_{k}"));
                }
            }
        }
        names
    }

    /// Coordinate classification aligned with [`ModelShape::param_names`].
    pub fn coord_kinds(&self) -> Vec<CoordKind> {
        let mut kinds = Vec::with_capacity(self.dim());
        for lag in 1..=self.p {
            for i in 1..=self.r {
                for j in 1..=self.r {
                    kinds.push(CoordKind::Ar { lag, i, j });
                }
            }
        }
        for lag in 1..=self.q {
            for i in 1..=self.r {
                for j in 1..=self.r {
                    kinds.push(CoordKind::Ma { lag, i, j });
                }
            }
        }
        for _ in 0..self.r * (self.r + 1) / 2 {
            kinds.push(CoordKind::Chol);
        }
        for _ in 0..self.n_d() {
            kinds.push(CoordKind::D);
        }
        for _ in 0..self.n_lambda() {
            kinds.push(CoordKind::LogLambda);
        }
        kinds
    }

    /// Builds constrained model parameters from an unconstrained vector.
    pub fn unpack(&self, theta: &[f64]) -> Result<ModelParams> {
        if theta.len() != self.dim() {
            return Err(Error::Shape(format!(
                "parameter vector has length {}, shape needs {}",
                theta.len(),
                self.dim()
            )));
        }
        let r = self.r;
        let rr = r * r;
        let mut pos = 0usize;

        let take_mats = |count: usize, pos: &mut usize| -> Vec<Mat> {
            (0..count)
                .map(|_| {
                    let m = Mat::from_row_slice(r, r, &theta[*pos..*pos + rr]);
                    *pos += rr;
                    m
                })
                .collect()
        };

        let ar_unc = take_mats(self.p, &mut pos);
        let ma_unc = take_mats(self.q, &mut pos);

        let ar = stationary_from_unconstrained(&ar_unc);
        // the same contraction enforces invertibility; Theta_k = -map(A)_k
        let ma: Vec<Mat> = stationary_from_unconstrained(&ma_unc)
            .into_iter()
            .map(|m| -m)
            .collect();

        let mut chol = Mat::zeros(r, r);
        for j in 0..r {
            chol[(j, j)] = theta[pos].exp();
            pos += 1;
            for i in (j + 1)..r {
                chol[(i, j)] = theta[pos];
                pos += 1;
            }
        }

        let d: Vec<f64> = theta[pos..pos + self.n_d()].to_vec();
        pos += self.n_d();
        let lambda: Vec<f64> = theta[pos..pos + self.n_lambda()].iter().map(|v| v.exp()).collect();

        Ok(ModelParams {
            kind: self.kind,
            mu: vec![0.0; r],
            ar: LagPolynomial::new(r, ar),
            ma: LagPolynomial::new(r, ma),
            sigma_chol: chol,
            d,
            lambda,
        })
    }

    /// Inverse of [`ModelShape::unpack`]. Fails when the parameters do not
    /// match the shape or lie outside the image of the stationarity map.
    pub fn pack(&self, params: &ModelParams) -> Result<UnconstrainedVector> {
        if params.kind != self.kind
            || params.r() != self.r
            || params.ar.order() != self.p
            || params.ma.order() != self.q
            || params.d.len() != self.n_d()
            || params.lambda.len() != self.n_lambda()
        {
            return Err(Error::Shape("parameters do not match the model shape".into()));
        }
        let mut theta = Vec::with_capacity(self.dim());
        let ar_unc = unconstrained_from_stationary(params.ar.mats())?;
        for m in &ar_unc {
            theta.extend(m.transpose().iter().copied());
        }
        let ma_pos: Vec<Mat> = params.ma.mats().iter().map(|m| -m).collect();
        let ma_unc = unconstrained_from_stationary(&ma_pos)?;
        for m in &ma_unc {
            theta.extend(m.transpose().iter().copied());
        }
        for j in 0..self.r {
            let diag = params.sigma_chol[(j, j)];
            if !(diag > 0.0) {
                return Err(Error::Shape("Cholesky factor needs a positive diagonal".into()));
            }
            theta.push(diag.ln());
            for i in (j + 1)..self.r {
                theta.push(params.sigma_chol[(i, j)]);
            }
        }
        theta.extend_from_slice(&params.d);
        for l in &params.lambda {
            if !(*l > 0.0) {
                return Err(Error::Domain("lambda must be positive".into()));
            }
            theta.push(l.ln());
        }
        Ok(theta)
    }
}

/// Matrix lag polynomial coefficients Phi_1..Phi_p (or Theta_1..Theta_q).
/// The leading term is the identity by convention: the AR polynomial reads
/// I - sum Phi_k z^k, the MA polynomial I + sum Theta_k z^k.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolynomial {
    r: usize,
    mats: Vec<Mat>,
}

impl LagPolynomial {
    pub fn new(r: usize, mats: Vec<Mat>) -> Self {
        debug_assert!(mats.iter().all(|m| m.nrows() == r && m.ncols() == r));
        LagPolynomial { r, mats }
    }

    pub fn empty(r: usize) -> Self {
        LagPolynomial { r, mats: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn coeff(&self, lag: usize) -> &Mat {
        &self.mats[lag - 1]
    }
}

/// Constrained model parameters: lag polynomials, innovation Cholesky
/// factor, and for VARTFIMA the fractional differencing and tempering
/// parameters. `mu` is kept for simulation; it is fixed at zero and
/// excluded from the parameter vector when data are demeaned.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub mu: Vec<f64>,
    pub ar: LagPolynomial,
    pub ma: LagPolynomial,
    /// Lower triangular with strictly positive diagonal; Sigma = C C'.
    pub sigma_chol: Mat,
    /// Fractional differencing exponents, one per series (empty for VARMA).
    pub d: Vec<f64>,
    /// Tempering parameters, length 1 (shared) or r (empty for VARMA).
    pub lambda: Vec<f64>,
}

impl ModelParams {
    /// VARMA parameters from full matrices; checks Assumption-1 style
    /// stationarity/invertibility and that sigma is positive definite.
    pub fn varma(ar: Vec<Mat>, ma: Vec<Mat>, sigma: Mat, mu: Vec<f64>) -> Result<Self> {
        let r = sigma.nrows();
        if mu.len() != r {
            return Err(Error::Shape("mu length must match sigma dimension".into()));
        }
        let radius_ar = companion_spectral_radius(&ar);
        if !(radius_ar < 1.0) {
            return Err(Error::Domain(format!(
                "AR polynomial is not stationary (companion spectral radius {radius_ar:.4})"
            )));
        }
        let ma_as_ar: Vec<Mat> = ma.iter().map(|m| -m).collect();
        let radius_ma = companion_spectral_radius(&ma_as_ar);
        if !(radius_ma < 1.0) {
            return Err(Error::Domain(format!(
                "MA polynomial is not invertible (companion spectral radius {radius_ma:.4})"
            )));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("sigma must be positive definite".into()))?
            .l();
        Ok(ModelParams {
            kind: ModelKind::Varma,
            mu,
            ar: LagPolynomial::new(r, ar),
            ma: LagPolynomial::new(r, ma),
            sigma_chol: chol,
            d: Vec::new(),
            lambda: Vec::new(),
        })
    }

    /// VARTFIMA parameters; requires lambda > 0 elementwise.
    pub fn vartfima(
        ar: Vec<Mat>,
        ma: Vec<Mat>,
        sigma: Mat,
        mu: Vec<f64>,
        d: Vec<f64>,
        lambda: Vec<f64>,
    ) -> Result<Self> {
        let r = sigma.nrows();
        let mut params = Self::varma(ar, ma, sigma, mu)?;
        if d.len() != r {
            return Err(Error::Shape("d must have one entry per series".into()));
        }
        if lambda.len() != 1 && lambda.len() != r {
            return Err(Error::Shape("lambda must be shared (length 1) or per-series".into()));
        }
        if lambda.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Domain(
                "VARTFIMA requires lambda > 0 (stationarity fails otherwise)".into(),
            ));
        }
        params.kind = ModelKind::Vartfima;
        params.d = d;
        params.lambda = lambda;
        Ok(params)
    }

    pub fn r(&self) -> usize {
        self.sigma_chol.nrows()
    }

    /// Innovation covariance Sigma = C C'.
    pub fn sigma(&self) -> Mat {
        &self.sigma_chol * self.sigma_chol.transpose()
    }

    /// Tempering parameter for series k (handles the shared case).
    pub fn lambda_for(&self, k: usize) -> f64 {
        if self.lambda.len() == 1 { self.lambda[0] } else { self.lambda[k] }
    }

    /// The shape this parameter set conforms to.
    pub fn shape(&self) -> ModelShape {
        ModelShape {
            kind: self.kind,
            r: self.r(),
            p: self.ar.order(),
            q: self.ma.order(),
            shared_lambda: self.lambda.len() <= 1,
        }
    }
}

// --- JSON representation -----------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelParamsRepr {
    kind: ModelKind,
    mu: Vec<f64>,
    ar: Vec<Vec<Vec<f64>>>,
    ma: Vec<Vec<Vec<f64>>>,
    sigma_chol: Vec<Vec<f64>>,
    #[serde(default)]
    d: Vec<f64>,
    #[serde(default)]
    lambda: Vec<f64>,
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("matrix rows must be square".into()));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

impl From<ModelParams> for ModelParamsRepr {
    fn from(p: ModelParams) -> Self {
        ModelParamsRepr {
            kind: p.kind,
            mu: p.mu.clone(),
            ar: p.ar.mats().iter().map(mat_to_rows).collect(),
            ma: p.ma.mats().iter().map(mat_to_rows).collect(),
            sigma_chol: mat_to_rows(&p.sigma_chol),
            d: p.d.clone(),
            lambda: p.lambda.clone(),
        }
    }
}

impl TryFrom<ModelParamsRepr> for ModelParams {
    type Error = Error;

    fn try_from(repr: ModelParamsRepr) -> Result<Self> {
        let chol = mat_from_rows(&repr.sigma_chol)?;
        let r = chol.nrows();
        if (0..r).any(|j| !(chol[(j, j)] > 0.0)) {
            return Err(Error::Shape("sigma_chol needs a positive diagonal".into()));
        }
        let ar: Vec<Mat> = repr.ar.iter().map(|m| mat_from_rows(m)).collect::<Result<_>>()?;
        let ma: Vec<Mat> = repr.ma.iter().map(|m| mat_from_rows(m)).collect::<Result<_>>()?;
        if repr.mu.len() != r {
            return Err(Error::Shape("mu length must match sigma dimension".into()));
        }
        match repr.kind {
            ModelKind::Varma => {
                if !repr.d.is_empty() || !repr.lambda.is_empty() {
                    return Err(Error::Shape("VARMA parameters cannot carry d or lambda".into()));
                }
            }
            ModelKind::Vartfima => {
                if repr.d.len() != r {
                    return Err(Error::Shape("d must have one entry per series".into()));
                }
                if repr.lambda.len() != 1 && repr.lambda.len() != r {
                    return Err(Error::Shape("lambda must have length 1 or r".into()));
                }
                if repr.lambda.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::Domain("VARTFIMA requires lambda > 0".into()));
                }
            }
        }
        Ok(ModelParams {
            kind: repr.kind,
            mu: repr.mu,
            ar: LagPolynomial::new(r, ar),
            ma: LagPolynomial::new(r, ma),
            sigma_chol: chol,
            d: repr.d,
            lambda: repr.lambda,
        })
    }
}

impl Serialize for ModelParams {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelParamsRepr::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ModelParamsRepr::deserialize(deserializer)?;
        ModelParams::try_from(repr).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn dims_match_named_shapes() {
        let s = ModelShape::new(ModelKind::Vartfima, 2, 1, 1, true).unwrap();
        assert_eq!(s.dim(), 14);
        let s = ModelShape::new(ModelKind::Vartfima, 3, 2, 0, true).unwrap();
        assert_eq!(s.dim(), 28);
        let s = ModelShape::new(ModelKind::Vartfima, 4, 2, 0, true).unwrap();
        assert_eq!(s.dim(), 47);
        let s = ModelShape::new(ModelKind::Vartfima, 4, 1, 1, true).unwrap();
        assert_eq!(s.dim(), 47);
    }

    #[test]
    fn names_align_with_dim() {
        for shape in [
            ModelShape::new(ModelKind::Varma, 2, 1, 0, true).unwrap(),
            ModelShape::new(ModelKind::Vartfima, 3, 2, 1, false).unwrap(),
        ] {
            assert_eq!(shape.param_names().len(), shape.dim());
            assert_eq!(shape.coord_kinds().len(), shape.dim());
        }
    }

    #[test]
    fn unpack_then_pack_roundtrips() {
        let shape = ModelShape::new(ModelKind::Vartfima, 2, 1, 1, true).unwrap();
        let mut rng = crate::rng::stream_rng(5, crate::rng::Stream::Simulation);
        for _ in 0..20 {
            let theta: Vec<f64> =
                (0..shape.dim()).map(|_| 0.8 * (rng.random::<f64>() * 2.0 - 1.0)).collect();
            let params = shape.unpack(&theta).unwrap();
            let back = shape.pack(&params).unwrap();
            for (a, b) in theta.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn pack_then_unpack_roundtrips() {
        let shape = ModelShape::new(ModelKind::Varma, 2, 1, 1, true).unwrap();
        let theta: Vec<f64> = vec![0.3, -0.2, 0.1, 0.4, -0.5, 0.2, 0.0, 0.3, -0.7, 0.25, 0.1];
        assert_eq!(theta.len(), shape.dim());
        let params = shape.unpack(&theta).unwrap();
        let theta2 = shape.pack(&params).unwrap();
        let params2 = shape.unpack(&theta2).unwrap();
        for (a, b) in params.ar.mats().iter().zip(params2.ar.mats()) {
            assert!((a - b).norm() < 1e-10);
        }
        for (a, b) in params.ma.mats().iter().zip(params2.ma.mats()) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!((params.sigma_chol.clone() - params2.sigma_chol.clone()).norm() < 1e-12);
    }

    #[test]
    fn unpack_rejects_wrong_length() {
        let shape = ModelShape::new(ModelKind::Varma, 2, 1, 0, true).unwrap();
        assert!(matches!(shape.unpack(&[0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn unpacked_models_are_stationary_and_invertible() {
        let shape = ModelShape::new(ModelKind::Varma, 3, 2, 1, true).unwrap();
        let mut rng = crate::rng::stream_rng(9, crate::rng::Stream::Simulation);
        for _ in 0..50 {
            let theta: Vec<f64> =
                (0..shape.dim()).map(|_| 2.0 * (rng.random::<f64>() * 2.0 - 1.0)).collect();
            let params = shape.unpack(&theta).unwrap();
            assert!(companion_spectral_radius(params.ar.mats()) < 1.0);
            let ma_as_ar: Vec<Mat> = params.ma.mats().iter().map(|m| -m).collect();
            assert!(companion_spectral_radius(&ma_as_ar) < 1.0);
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let shape = ModelShape::new(ModelKind::Vartfima, 2, 1, 0, true).unwrap();
        let theta: Vec<f64> = vec![0.3, -0.2, 0.1, 0.4, -0.25, 0.17, 0.33, 0.21, -0.4, -1.2];
        assert_eq!(theta.len(), shape.dim());
        let params = shape.unpack(&theta).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn vartfima_requires_positive_lambda() {
        let err = ModelParams::vartfima(
            vec![],
            vec![],
            Mat::identity(2, 2),
            vec![0.0; 2],
            vec![0.3, 0.2],
            vec![0.0],
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
