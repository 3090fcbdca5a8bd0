//! Exact time-domain Gaussian log-likelihood for VARMA models via the
//! state space representation, used as an oracle for the Whittle
//! approximation.
//!
//! State alpha_t (dimension r * max(p, q+1)) evolves as
//! alpha_t = T alpha_{t-1} + R eps_t with x_t = mu + [I 0] alpha_t, the
//! filter initialized at the stationary state covariance from the
//! discrete Lyapunov equation.

use nalgebra::DMatrix;

use super::stationary::solve_discrete_lyapunov;
use super::{ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::ingest::MultiSeries;
use crate::linalg;

type Mat = DMatrix<f64>;

/// Exact log-likelihood of a gap-free series under VARMA parameters.
pub fn kalman_exact_loglik(params: &ModelParams, series: &MultiSeries) -> Result<f64> {
    if params.kind != ModelKind::Varma {
        return Err(Error::Domain(
            "the exact time-domain likelihood is only available for VARMA models".into(),
        ));
    }
    if series.has_missing() {
        return Err(Error::MissingValues);
    }
    let r = params.r();
    if series.r() != r {
        return Err(Error::Shape(format!(
            "series has {} columns, model expects {}",
            series.r(),
            r
        )));
    }

    let p = params.ar.order();
    let q = params.ma.order();
    let m = p.max(q + 1);
    let s = r * m;

    // transition T and innovation loading R
    let mut t_mat = Mat::zeros(s, s);
    for blk in 0..m {
        if blk < p {
            t_mat
                .view_mut((blk * r, 0), (r, r))
                .copy_from(params.ar.coeff(blk + 1));
        }
        if blk + 1 < m {
            for i in 0..r {
                t_mat[(blk * r + i, (blk + 1) * r + i)] = 1.0;
            }
        }
    }
    let mut r_mat = Mat::zeros(s, r);
    for i in 0..r {
        r_mat[(i, i)] = 1.0;
    }
    for blk in 1..m {
        if blk <= q {
            r_mat
                .view_mut((blk * r, 0), (r, r))
                .copy_from(params.ma.coeff(blk));
        }
    }
    let q_state = &r_mat * params.sigma() * r_mat.transpose();
    let p0 = solve_discrete_lyapunov(&t_mat, &q_state)
        .map_err(|_| Error::Conditioning("stationary state covariance solve failed".into()))?;

    // flatten to row-major buffers for the filter loop
    let flat = |m: &Mat| -> Vec<f64> {
        let (nr, nc) = m.shape();
        let mut out = vec![0.0; nr * nc];
        for i in 0..nr {
            for j in 0..nc {
                out[i * nc + j] = m[(i, j)];
            }
        }
        out
    };
    let tm = flat(&t_mat);
    let qm = flat(&q_state);
    let mut p_cov = flat(&p0);

    let t_len = series.t_len();
    let mut a_state = vec![0.0f64; s];
    let mut tp = vec![0.0f64; s * s];
    let mut tpt = vec![0.0f64; s * s];
    let mut w = vec![0.0f64; s * r];
    let mut x_sol = vec![0.0f64; r * s];
    let mut fmat = vec![0.0f64; r * r];
    let mut v = vec![0.0f64; r];
    let mut u = vec![0.0f64; r];
    let mut ta = vec![0.0f64; s];

    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut loglik = 0.0;

    for t in 0..t_len {
        // innovation v = x_t - mu - Z a, F = P[0..r, 0..r]
        for i in 0..r {
            v[i] = series.get(t, i) - params.mu[i] - a_state[i];
            for j in 0..r {
                fmat[i * r + j] = p_cov[i * s + j];
            }
        }
        let mut fl = fmat.clone();
        let logdet_f = linalg::rchol_factor(&mut fl, r).map_err(|_| {
            Error::Conditioning(format!(
                "prediction variance lost positive definiteness at t = {t}"
            ))
        })?;
        u.copy_from_slice(&v);
        linalg::rchol_forward(&fl, &mut u, r);
        let quad: f64 = u.iter().map(|x| x * x).sum();
        loglik += -0.5 * (r as f64 * ln2pi + logdet_f + quad);

        // time update: a <- T a + W F^{-1} v, P <- T P T' + Q - W F^{-1} W'
        linalg::rmul(&tm, &p_cov, &mut tp, s, s, s);
        linalg::rmul_bt(&tp, &tm, &mut tpt, s, s, s);
        // W = T P Z' = first r columns of T P
        for i in 0..s {
            for j in 0..r {
                w[i * r + j] = tp[i * s + j];
            }
        }
        // X = F^{-1} W' (r x s): solve with the Cholesky factor per column
        for col in 0..s {
            for i in 0..r {
                u[i] = w[col * r + i];
            }
            linalg::rchol_forward(&fl, &mut u, r);
            // adjoint solve (L' x = u) for the real lower factor
            for i in (0..r).rev() {
                let mut acc = u[i];
                for j in (i + 1)..r {
                    acc -= fl[j * r + i] * x_sol[j * s + col];
                }
                x_sol[i * s + col] = acc / fl[i * r + i];
            }
        }
        // a update
        for i in 0..s {
            let mut acc = 0.0;
            for j in 0..s {
                acc += tm[i * s + j] * a_state[j];
            }
            ta[i] = acc;
        }
        // F^{-1} v reuses the X machinery: u = L^{-1} v already computed as `u`?
        // recompute cleanly: solve F y = v
        let mut y = v.clone();
        linalg::rchol_forward(&fl, &mut y, r);
        for i in (0..r).rev() {
            let mut acc = y[i];
            for j in (i + 1)..r {
                acc -= fl[j * r + i] * y[j];
            }
            y[i] = acc / fl[i * r + i];
        }
        for i in 0..s {
            let mut acc = ta[i];
            for j in 0..r {
                acc += w[i * r + j] * y[j];
            }
            a_state[i] = acc;
        }
        // P update with symmetrization
        for i in 0..s {
            for j in 0..s {
                let mut acc = tpt[i * s + j] + qm[i * s + j];
                for k in 0..r {
                    acc -= w[i * r + k] * x_sol[k * s + j];
                }
                tp[i * s + j] = acc; // reuse tp as next P before symmetrizing
            }
        }
        for i in 0..s {
            for j in 0..s {
                p_cov[i * s + j] = 0.5 * (tp[i * s + j] + tp[j * s + i]);
            }
        }
    }
    Ok(loglik)
}
