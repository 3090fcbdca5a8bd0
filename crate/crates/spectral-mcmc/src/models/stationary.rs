//! Unconstrained <-> stationary reparametrization of AR coefficient blocks.
//!
//! Forward direction: each unconstrained r x r matrix A_s is contracted to
//! a partial autocorrelation matrix P_s = A_s (I + A_s' A_s)^{-1/2} with
//! all singular values below one, then a Levinson-type recursion (run with
//! identity stage-zero variance) turns P_1..P_p into coefficient matrices
//! whose companion matrix has spectral radius below one.
//!
//! Inverse direction: from stationary coefficients, reconstruct the
//! autocovariances of the process whose lag-zero covariance is the
//! identity (matching the forward convention), run the recursion upward
//! extracting the P_s, and expand each back to A_s = P_s (I - P_s' P_s)^{-1/2}.
//!
//! The same map enforces invertibility when applied to MA coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

type Mat = DMatrix<f64>;

/// Contracts an arbitrary matrix to one with singular values < 1.
pub fn sv_contract(a: &Mat) -> Mat {
    let n = a.nrows();
    let m = Mat::identity(n, n) + a.transpose() * a;
    a * sym_inv_sqrt(&m).expect("I + A'A is positive definite")
}

/// Inverse of [`sv_contract`]; requires all singular values of `p` < 1.
pub fn sv_expand(p: &Mat) -> Result<Mat> {
    let n = p.nrows();
    let m = Mat::identity(n, n) - p.transpose() * p;
    let inv_sqrt = sym_inv_sqrt(&m).map_err(|_| {
        Error::OutOfDomain("partial autocorrelation matrix has a singular value >= 1".into())
    })?;
    Ok(p * inv_sqrt)
}

fn sym_inv_sqrt(m: &Mat) -> Result<Mat> {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut diag = DVector::zeros(n);
    for i in 0..n {
        let ev = se.eigenvalues[i];
        if ev <= 1e-14 {
            return Err(Error::Conditioning("matrix not positive definite".into()));
        }
        diag[i] = 1.0 / ev.sqrt();
    }
    let v = &se.eigenvectors;
    Ok(v * Mat::from_diagonal(&diag) * v.transpose())
}

fn chol_lower(m: &Mat, context: &str) -> Result<Mat> {
    let sym = (m + m.transpose()) * 0.5;
    match sym.cholesky() {
        Some(c) => Ok(c.l()),
        None => Err(Error::OutOfDomain(format!(
            "{context}: stage variance lost positive definiteness"
        ))),
    }
}

/// Maps p unconstrained matrices to stationary AR coefficient matrices.
/// Total on all inputs; the output always passes the companion
/// spectral-radius check.
pub fn stationary_from_unconstrained(unconstrained: &[Mat]) -> Vec<Mat> {
    let pacf: Vec<Mat> = unconstrained.iter().map(sv_contract).collect();
    pacf_to_coefficients(&pacf)
}

/// Inverse of [`stationary_from_unconstrained`].
pub fn unconstrained_from_stationary(phi: &[Mat]) -> Result<Vec<Mat>> {
    let pacf = coefficients_to_pacf(phi)?;
    pacf.iter().map(sv_expand).collect()
}

/// Levinson-type recursion from partial autocorrelation matrices to AR
/// coefficients, with identity stage-zero variance.
fn pacf_to_coefficients(pacf: &[Mat]) -> Vec<Mat> {
    let p = pacf.len();
    if p == 0 {
        return Vec::new();
    }
    let r = pacf[0].nrows();
    let eye = Mat::identity(r, r);

    let mut fwd: Vec<Mat> = Vec::new(); // phi_{s,1..s}
    let mut bwd: Vec<Mat> = Vec::new(); // phi*_{s,1..s}
    let mut l_fwd = eye.clone();
    let mut l_bwd = eye.clone();

    for pk in pacf {
        // phi_{s+1,s+1} = L_s P (L*_s)^{-1}, phi*_{s+1,s+1} = L*_s P' L_s^{-1}
        let last_f = &l_fwd * pk * invert_lower(&l_bwd);
        let last_b = &l_bwd * pk.transpose() * invert_lower(&l_fwd);

        let s = fwd.len();
        let mut new_f = Vec::with_capacity(s + 1);
        let mut new_b = Vec::with_capacity(s + 1);
        for k in 0..s {
            new_f.push(&fwd[k] - &last_f * &bwd[s - 1 - k]);
            new_b.push(&bwd[k] - &last_b * &fwd[s - 1 - k]);
        }
        new_f.push(last_f);
        new_b.push(last_b);

        // Sigma_{s+1} = L_s (I - P P') L_s', Sigma*_{s+1} = L*_s (I - P' P) L*_s'
        let sig_f = &l_fwd * (&eye - pk * pk.transpose()) * l_fwd.transpose();
        let sig_b = &l_bwd * (&eye - pk.transpose() * pk) * l_bwd.transpose();
        l_fwd = chol_lower(&sig_f, "stationarity map").expect("contraction keeps variances PD");
        l_bwd = chol_lower(&sig_b, "stationarity map").expect("contraction keeps variances PD");

        fwd = new_f;
        bwd = new_b;
    }
    fwd
}

fn invert_lower(l: &Mat) -> Mat {
    let n = l.nrows();
    let mut inv = Mat::identity(n, n);
    for col in 0..n {
        let mut x = inv.column(col).clone_owned();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= l[(i, j)] * x[j];
            }
            x[i] = s / l[(i, i)];
        }
        inv.set_column(col, &x);
    }
    inv
}

/// Upward Levinson recursion on reconstructed autocovariances, extracting
/// partial autocorrelation matrices. Errors when `phi` is not stationary.
fn coefficients_to_pacf(phi: &[Mat]) -> Result<Vec<Mat>> {
    let p = phi.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let radius = companion_spectral_radius(phi);
    if !(radius < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "AR coefficients are not stationary (companion spectral radius {radius:.6})"
        )));
    }

    // Autocovariances Gamma(0..p) of the process with Gamma(0) = I, using
    // the innovation variance that makes that hold.
    let gammas = autocovariances_unit_variance(phi)?;

    let mut sig_f = gammas[0].clone();
    let mut sig_b = gammas[0].clone();
    let mut fwd: Vec<Mat> = Vec::new();
    let mut bwd: Vec<Mat> = Vec::new();
    let mut pacf = Vec::with_capacity(p);

    for s in 0..p {
        // Delta = Gamma(s+1) - sum_k phi_{s,k} Gamma(s+1-k)
        let mut delta = gammas[s + 1].clone();
        for (k, f) in fwd.iter().enumerate() {
            delta -= f * &gammas[s - k];
        }
        let l_f = chol_lower(&sig_f, "inverse stationarity map")?;
        let l_b = chol_lower(&sig_b, "inverse stationarity map")?;
        let sig_b_inv = invert_from_lower(&l_b);
        let sig_f_inv = invert_from_lower(&l_f);
        let last_f = &delta * &sig_b_inv;
        let last_b = delta.transpose() * &sig_f_inv;

        // P_{s+1} = L_s^{-1} phi_{s+1,s+1} L*_s
        let pk = invert_lower(&l_f) * &last_f * &l_b;
        pacf.push(pk);

        let mut new_f = Vec::with_capacity(s + 1);
        let mut new_b = Vec::with_capacity(s + 1);
        for k in 0..s {
            new_f.push(&fwd[k] - &last_f * &bwd[s - 1 - k]);
            new_b.push(&bwd[k] - &last_b * &fwd[s - 1 - k]);
        }
        new_f.push(last_f.clone());
        new_b.push(last_b.clone());

        // both variance updates read the stage-s values
        let next_sig_f = &sig_f - &last_f * &sig_b * last_f.transpose();
        let next_sig_b = &sig_b - &last_b * &sig_f * last_b.transpose();
        sig_f = next_sig_f;
        sig_b = next_sig_b;
        fwd = new_f;
        bwd = new_b;
    }
    Ok(pacf)
}

fn invert_from_lower(l: &Mat) -> Mat {
    let linv = invert_lower(l);
    linv.transpose() * linv
}

/// Spectral radius of the companion matrix of Phi(z) = I - sum phi_k z^k.
pub fn companion_spectral_radius(phi: &[Mat]) -> f64 {
    let p = phi.len();
    if p == 0 {
        return 0.0;
    }
    let r = phi[0].nrows();
    let n = r * p;
    let mut f = Mat::zeros(n, n);
    for (k, m) in phi.iter().enumerate() {
        f.view_mut((0, k * r), (r, r)).copy_from(m);
    }
    for i in 0..(p - 1) * r {
        f[(r + i, i)] = 1.0;
    }
    f.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves S = F S F' + Q for stationary F by doubling iterations.
/// Converges to full precision in O(log) steps when the spectral radius
/// of F is below one.
pub fn solve_discrete_lyapunov(f: &Mat, q: &Mat) -> Result<Mat> {
    let mut s = q.clone();
    let mut a = f.clone();
    for _ in 0..200 {
        let norm = a.norm();
        if norm < 1e-10 {
            return Ok((&s + s.transpose()) * 0.5);
        }
        if !norm.is_finite() || norm > 1e12 {
            return Err(Error::OutOfDomain(
                "Lyapunov iteration diverged; transition matrix is not stable".into(),
            ));
        }
        s = &s + &a * &s * a.transpose();
        a = &a * &a;
    }
    Err(Error::Conditioning(
        "Lyapunov iteration did not converge".into(),
    ))
}

/// Autocovariances Gamma(0..p) of the stationary VAR with coefficients
/// `phi` and the innovation variance chosen so that Gamma(0) = I.
fn autocovariances_unit_variance(phi: &[Mat]) -> Result<Vec<Mat>> {
    let p = phi.len();
    let r = phi[0].nrows();

    // Linear map sigma -> Gamma(0) on the space of symmetric matrices,
    // evaluated by Lyapunov solves on a symmetric basis.
    let dim = r * (r + 1) / 2;
    let mut basis = Vec::with_capacity(dim);
    for a in 0..r {
        for b in a..r {
            let mut e = Mat::zeros(r, r);
            if a == b {
                e[(a, a)] = 1.0;
            } else {
                e[(a, b)] = 1.0;
                e[(b, a)] = 1.0;
            }
            basis.push(e);
        }
    }

    let f = companion_matrix(phi);
    let mut m = Mat::zeros(dim, dim);
    for (col, e) in basis.iter().enumerate() {
        let g0 = companion_gamma0(&f, e, r, p)?;
        for (row, &(a, b)) in sym_index_pairs(r).iter().enumerate() {
            m[(row, col)] = g0[(a, b)];
        }
    }
    let mut rhs = DVector::zeros(dim);
    for (row, &(a, b)) in sym_index_pairs(r).iter().enumerate() {
        rhs[row] = if a == b { 1.0 } else { 0.0 };
    }
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::OutOfDomain("variance system is singular".into()))?;
    let mut sigma = Mat::zeros(r, r);
    for (idx, &(a, b)) in sym_index_pairs(r).iter().enumerate() {
        sigma[(a, b)] = sol[idx];
        sigma[(b, a)] = sol[idx];
    }
    if chol_lower(&sigma, "implied innovation variance").is_err() {
        return Err(Error::OutOfDomain(
            "no positive definite innovation variance matches the unit-variance convention".into(),
        ));
    }

    // Full companion state covariance with that variance, then read
    // Gamma(0..p-1) from the first block row and extend by Yule-Walker.
    let s = companion_state_cov(&f, &sigma, r, p)?;
    let mut gammas: Vec<Mat> = (0..p)
        .map(|j| s.view((0, j * r), (r, r)).clone_owned())
        .collect();
    // Gamma(p) by Yule-Walker: Gamma(j) = sum_k phi_k Gamma(j - k)
    let mut g = Mat::zeros(r, r);
    for (k, m) in phi.iter().enumerate() {
        let lag = p as isize - (k as isize + 1);
        let gl = if lag >= 0 {
            gammas[lag as usize].clone()
        } else {
            gammas[(-lag) as usize].transpose()
        };
        g += m * gl;
    }
    gammas.push(g);
    Ok(gammas)
}

fn sym_index_pairs(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..r {
        for b in a..r {
            out.push((a, b));
        }
    }
    out
}

fn companion_matrix(phi: &[Mat]) -> Mat {
    let p = phi.len();
    let r = phi[0].nrows();
    let n = r * p;
    let mut f = Mat::zeros(n, n);
    for (k, m) in phi.iter().enumerate() {
        f.view_mut((0, k * r), (r, r)).copy_from(m);
    }
    for i in 0..(p - 1) * r {
        f[(r + i, i)] = 1.0;
    }
    f
}

fn companion_state_cov(f: &Mat, sigma: &Mat, r: usize, p: usize) -> Result<Mat> {
    let n = r * p;
    let mut q = Mat::zeros(n, n);
    q.view_mut((0, 0), (r, r)).copy_from(sigma);
    solve_discrete_lyapunov(f, &q)
}

fn companion_gamma0(f: &Mat, sigma: &Mat, r: usize, p: usize) -> Result<Mat> {
    let s = companion_state_cov(f, sigma, r, p)?;
    Ok(s.view((0, 0), (r, r)).clone_owned())
}
