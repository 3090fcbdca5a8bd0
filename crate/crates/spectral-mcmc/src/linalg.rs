//! Small dense matrix helpers on flat row-major slices.
//!
//! The per-frequency likelihood loop works on r x r matrices with r
//! typically 1..4 and runs tens of millions of times per chain, so these
//! routines avoid heap allocation entirely; callers own the scratch
//! buffers. Entry (i, j) of an n x n matrix lives at `a[i * n + j]`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Compensated (Kahan) accumulator for deterministic reductions.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

// ---------------------------------------------------------------------------
// Complex routines
// ---------------------------------------------------------------------------

/// In-place LU factorization with partial pivoting.
///
/// `piv[k]` records the row swapped into position k. Fails when a pivot
/// magnitude falls below `tol * max_abs_entry`.
pub(crate) fn clu_factor(a: &mut [C64], piv: &mut [usize], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    let scale: f64 = a
        .iter()
        .map(|z| z.norm_sqr())
        .fold(0.0, f64::max)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].norm_sqr();
        for i in (k + 1)..n {
            let v = a[i * n + k].norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best.sqrt() <= tol {
            return Err(Error::SingularSpectrum { freq_index: None });
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let m = a[i * n + k] / pivot;
            a[i * n + k] = m;
            for j in (k + 1)..n {
                let akj = a[k * n + j];
                a[i * n + j] -= m * akj;
            }
        }
    }
    Ok(())
}

/// log |det A| from an LU factorization.
pub(crate) fn clu_log_abs_det(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..n {
        s += a[k * n + k].norm().ln();
    }
    s
}

/// Solves A x = b in place given the LU factorization of A.
pub(crate) fn clu_solve(a: &[C64], piv: &[usize], b: &mut [C64], n: usize) {
    for k in 0..n {
        b.swap(k, piv[k]);
    }
    for i in 1..n {
        let mut s = b[i];
        for j in 0..i {
            s -= a[i * n + j] * b[j];
        }
        b[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i * n + j] * b[j];
        }
        b[i] = s / a[i * n + i];
    }
}

/// y = A x.
pub(crate) fn cmatvec(a: &[C64], x: &[C64], y: &mut [C64], n: usize) {
    for i in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..n {
            s += a[i * n + j] * x[j];
        }
        y[i] = s;
    }
}

/// In-place lower Cholesky factor of a Hermitian positive definite matrix.
///
/// Only the lower triangle of the input is read. The strict upper triangle
/// is left untouched. Returns the log-determinant of the factored matrix.
pub(crate) fn cchol_factor(a: &mut [C64], n: usize) -> Result<f64> {
    let scale: f64 = (0..n).map(|i| a[i * n + i].re.abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if d <= tol {
            return Err(Error::SingularSpectrum { freq_index: None });
        }
        let l = d.sqrt();
        logdet += 2.0 * l.ln();
        a[j * n + j] = C64::new(l, 0.0);
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / l;
        }
    }
    Ok(logdet)
}

/// Solves L y = b in place, L lower triangular from `cchol_factor`.
pub(crate) fn cchol_forward(l: &[C64], b: &mut [C64], n: usize) {
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * n + j] * b[j];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves L^H x = b in place.
pub(crate) fn cchol_adjoint(l: &[C64], b: &mut [C64], n: usize) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= l[j * n + i].conj() * b[j];
        }
        b[i] = s / l[i * n + i].conj();
    }
}

// ---------------------------------------------------------------------------
// Real routines (Kalman filter hot loop)
// ---------------------------------------------------------------------------

/// out = A (m x k) * B (k x n).
pub(crate) fn rmul(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i * k + l] * b[l * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// out = A (m x k) * B^T where B is (n x k).
pub(crate) fn rmul_bt(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i * k + l] * b[j * k + l];
            }
            out[i * n + j] = s;
        }
    }
}

/// In-place lower Cholesky of a symmetric positive definite matrix.
/// Returns the log-determinant.
pub(crate) fn rchol_factor(a: &mut [f64], n: usize) -> Result<f64> {
    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= tol {
            return Err(Error::Conditioning(
                "matrix lost positive definiteness".into(),
            ));
        }
        let l = d.sqrt();
        logdet += 2.0 * l.ln();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    Ok(logdet)
}

/// Solves L y = b in place (lower triangular).
pub(crate) fn rchol_forward(l: &[f64], b: &mut [f64], n: usize) {
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * n + j] * b[j];
        }
        b[i] = s / l[i * n + i];
    }
}
