//! Tempered fractional differencing filter coefficients.
//!
//! The operator (1 - e^{-lambda} L)^d expands as sum_j b_j L^j with
//! b_j = (-1)^j C(d, j) e^{-lambda j}; its inverse uses c_j with -d in
//! place of d. Both are computed by a multiplicative recursion, never by
//! Gamma-function ratios, so they are overflow-free and O(J).

use crate::error::{Error, Result};

/// Coefficients b_0..b_J of (1 - e^{-lambda} L)^d.
///
/// Recursion: b_0 = 1, b_j = b_{j-1} e^{-lambda} (j - 1 - d) / j.
pub fn tempered_coeffs(d: f64, lambda: f64, j_max: usize) -> Vec<f64> {
    let eml = (-lambda).exp();
    let mut out = Vec::with_capacity(j_max + 1);
    out.push(1.0);
    for j in 1..=j_max {
        let prev = out[j - 1];
        out.push(prev * eml * ((j as f64 - 1.0 - d) / j as f64));
    }
    out
}

/// Coefficients c_0..c_J of the inverse operator (1 - e^{-lambda} L)^{-d}.
///
/// Recursion: c_0 = 1, c_j = c_{j-1} e^{-lambda} (j - 1 + d) / j.
pub fn inverse_tempered_coeffs(d: f64, lambda: f64, j_max: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(
            "inverse tempered filter requires lambda > 0".into(),
        ));
    }
    let eml = (-lambda).exp();
    let mut out = Vec::with_capacity(j_max + 1);
    out.push(1.0);
    for j in 1..=j_max {
        let prev = out[j - 1];
        out.push(prev * eml * ((j as f64 - 1.0 + d) / j as f64));
    }
    Ok(out)
}

/// Inverse-filter coefficients truncated where the absolute tail sum drops
/// below `tail_bound`. Errors when more than `max_len` terms would be
/// needed (lambda too small).
pub fn inverse_tempered_truncated(
    d: f64,
    lambda: f64,
    tail_bound: f64,
    max_len: usize,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(
            "inverse tempered filter requires lambda > 0".into(),
        ));
    }
    let eml = (-lambda).exp();
    let mut out = vec![1.0];
    let mut j = 1usize;
    loop {
        let prev = out[j - 1];
        let next = prev * eml * ((j as f64 - 1.0 + d) / j as f64);
        out.push(next);
        // Beyond j > |d| the ratio |c_{j+1}/c_j| = e^-lambda (j+d)/(j+1) is
        // bounded by rho < 1, giving the geometric tail bound below.
        if j as f64 > d.abs() + 1.0 {
            let rho = eml * ((j as f64 + d.abs()) / (j as f64 + 1.0)).max(eml);
            if rho < 1.0 {
                let tail = next.abs() * rho / (1.0 - rho);
                if tail < tail_bound {
                    return Ok(out);
                }
            }
        }
        j += 1;
        if j > max_len {
            return Err(Error::Truncation { needed: j });
        }
    }
}
