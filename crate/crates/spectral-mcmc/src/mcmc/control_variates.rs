//! Grouped quadratic control variates.
//!
//! Each group's summed log-likelihood is approximated by its second-order
//! Taylor expansion around a reference point theta*, with value, gradient
//! and Hessian obtained by central finite differences. Aggregates over
//! groups are precomputed so the total surrogate q(theta) costs
//! O(dim^2) regardless of the number of groups.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelShape;
use crate::spectral::PeriodogramSet;

use super::groups::GroupPartition;
use super::target::{GroupedTarget, WhittleTarget};

/// Relative step used for the finite-difference stencil.
const FD_STEP: f64 = 1e-5;

/// Per-group quadratic surrogates around theta*, plus their aggregates.
#[derive(Debug, Clone)]
pub struct ControlVariateSet {
    theta_star: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
    /// G x dim gradients.
    grads: Vec<f64>,
    /// G x dim x dim Hessians, row-major, symmetrized.
    hessians: Vec<f64>,
    total_value: f64,
    total_grad: Vec<f64>,
    total_hessian: Vec<f64>,
}

impl ControlVariateSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_groups(&self) -> usize {
        self.values.len()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn group_value(&self, g: usize) -> f64 {
        self.values[g]
    }

    /// Quadratic surrogate for group g:
    /// q_g(theta) = v_g + grad_g . delta + 0.5 delta' H_g delta.
    pub fn q_group(&self, theta: &[f64], g: usize) -> f64 {
        let d = self.dim;
        let grad = &self.grads[g * d..(g + 1) * d];
        let hess = &self.hessians[g * d * d..(g + 1) * d * d];
        quadratic(self.values[g], grad, hess, &self.theta_star, theta)
    }

    /// Total surrogate q(theta) = sum_g q_g(theta) via precomputed
    /// aggregates; cost independent of the number of groups.
    pub fn q_all(&self, theta: &[f64]) -> f64 {
        quadratic(
            self.total_value,
            &self.total_grad,
            &self.total_hessian,
            &self.theta_star,
            theta,
        )
    }
}

fn quadratic(value: f64, grad: &[f64], hess: &[f64], center: &[f64], theta: &[f64]) -> f64 {
    let d = center.len();
    let mut out = value;
    let mut quad = 0.0;
    for i in 0..d {
        let di = theta[i] - center[i];
        out += grad[i] * di;
        let mut row = 0.0;
        for j in 0..d {
            row += hess[i * d + j] * (theta[j] - center[j]);
        }
        quad += di * row;
    }
    out + 0.5 * quad
}

/// Evaluates q for a single group, or the whole sum when `group` is None.
pub fn q_eval(theta: &[f64], cv: &ControlVariateSet, group: Option<usize>) -> Result<f64> {
    if theta.len() != cv.dim() {
        return Err(Error::Shape(format!(
            "theta has length {}, control variates expect {}",
            theta.len(),
            cv.dim()
        )));
    }
    Ok(match group {
        Some(g) => cv.q_group(theta, g),
        None => cv.q_all(theta),
    })
}

/// Number of objective sweeps the finite-difference stencil performs
/// (each sweep evaluates every group once).
pub fn stencil_sweeps(dim: usize) -> u64 {
    (1 + 2 * dim + 2 * dim * (dim - 1)) as u64
}

/// Fits per-group quadratic surrogates at `theta_star` by central finite
/// differences with step 1e-5 (1 + |theta*_i|) per coordinate.
pub fn fit_control_variates_for<T: GroupedTarget>(
    target: &T,
    theta_star: &[f64],
) -> Result<ControlVariateSet> {
    let dim = target.dim();
    if theta_star.len() != dim {
        return Err(Error::Shape(format!(
            "theta_star has length {}, target needs {}",
            theta_star.len(),
            dim
        )));
    }
    let g_count = target.n_groups();
    let h: Vec<f64> = theta_star.iter().map(|t| FD_STEP * (1.0 + t.abs())).collect();

    // stencil points: center, +-e_i, and the four corners per (i < j)
    #[derive(Clone, Copy)]
    enum Point {
        Center,
        Axis(usize, f64),
        Corner(usize, usize, f64, f64),
    }
    let mut points: Vec<Point> = vec![Point::Center];
    for i in 0..dim {
        points.push(Point::Axis(i, 1.0));
        points.push(Point::Axis(i, -1.0));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                points.push(Point::Corner(i, j, si, sj));
            }
        }
    }
    debug_assert_eq!(points.len() as u64, stencil_sweeps(dim));

    let evaluate = |pt: &Point| -> Result<(usize, Vec<f64>)> {
        let mut theta = theta_star.to_vec();
        let coord = match *pt {
            Point::Center => 0,
            Point::Axis(i, s) => {
                theta[i] += s * h[i];
                i
            }
            Point::Corner(i, j, si, sj) => {
                theta[i] += si * h[i];
                theta[j] += sj * h[j];
                i
            }
        };
        let vals = target.group_logliks(&theta).map_err(|_| Error::Stencil { coord })?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Stencil { coord });
        }
        Ok((coord, vals))
    };

    let results: Vec<Result<(usize, Vec<f64>)>> =
        points.par_iter().map(evaluate).collect();
    let mut sweeps = Vec::with_capacity(points.len());
    for r in results {
        sweeps.push(r?.1);
    }

    // index helpers into the sweep list
    let center = &sweeps[0];
    let axis = |i: usize, sign: f64| -> &Vec<f64> {
        let off = 1 + 2 * i + usize::from(sign < 0.0);
        &sweeps[off]
    };
    let corner_base = 1 + 2 * dim;
    let pair_index = |i: usize, j: usize| -> usize {
        // position of (i, j), i < j, in lexicographic pair order
        let before_i: usize = (0..i).map(|a| dim - a - 1).sum();
        before_i + (j - i - 1)
    };
    let corner = |i: usize, j: usize, si: f64, sj: f64| -> &Vec<f64> {
        let quad = match (si > 0.0, sj > 0.0) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        &sweeps[corner_base + 4 * pair_index(i, j) + quad]
    };

    let mut values = vec![0.0; g_count];
    let mut grads = vec![0.0; g_count * dim];
    let mut hessians = vec![0.0; g_count * dim * dim];
    for g in 0..g_count {
        values[g] = center[g];
        for i in 0..dim {
            grads[g * dim + i] = (axis(i, 1.0)[g] - axis(i, -1.0)[g]) / (2.0 * h[i]);
            hessians[g * dim * dim + i * dim + i] =
                (axis(i, 1.0)[g] - 2.0 * center[g] + axis(i, -1.0)[g]) / (h[i] * h[i]);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = (corner(i, j, 1.0, 1.0)[g] - corner(i, j, 1.0, -1.0)[g]
                    - corner(i, j, -1.0, 1.0)[g]
                    + corner(i, j, -1.0, -1.0)[g])
                    / (4.0 * h[i] * h[j]);
                hessians[g * dim * dim + i * dim + j] = v;
                hessians[g * dim * dim + j * dim + i] = v;
            }
        }
    }

    let mut total_value = 0.0;
    let mut total_grad = vec![0.0; dim];
    let mut total_hessian = vec![0.0; dim * dim];
    for g in 0..g_count {
        total_value += values[g];
        for i in 0..dim {
            total_grad[i] += grads[g * dim + i];
        }
        for k in 0..dim * dim {
            total_hessian[k] += hessians[g * dim * dim + k];
        }
    }

    Ok(ControlVariateSet {
        theta_star: theta_star.to_vec(),
        dim,
        values,
        grads,
        hessians,
        total_value,
        total_grad,
        total_hessian,
    })
}

/// Control variates for the Whittle likelihood over a frequency partition.
pub fn fit_control_variates(
    theta_star: &[f64],
    pgram: &PeriodogramSet,
    partition: &GroupPartition,
    shape: &ModelShape,
) -> Result<ControlVariateSet> {
    let target = WhittleTarget::new(pgram, *shape, partition.clone())?;
    fit_control_variates_for(&target, theta_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::testutil::QuadraticTarget;

    #[test]
    fn recovers_exact_quadratic() {
        let target = QuadraticTarget::make(3, 4, 1);
        let theta_star = vec![0.2, -0.1, 0.4];
        let cv = fit_control_variates_for(&target, &theta_star).unwrap();
        use rand::RngExt;
        let mut rng = crate::rng::stream_rng(2, crate::rng::Stream::Simulation);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            for g in 0..4 {
                let exact = target.group_loglik(&theta, g).unwrap();
                let approx = cv.q_group(&theta, g);
                assert!(
                    (exact - approx).abs() < 1e-6 * (1.0 + exact.abs()),
                    "group {g}: {exact} vs {approx}"
                );
            }
            let q_sum: f64 = (0..4).map(|g| cv.q_group(&theta, g)).sum();
            assert!((cv.q_all(&theta) - q_sum).abs() < 1e-9 * (1.0 + q_sum.abs()));
        }
    }

    #[test]
    fn q_at_center_equals_value_and_total() {
        let target = QuadraticTarget::make(4, 6, 3);
        let theta_star = vec![0.1; 4];
        let cv = fit_control_variates_for(&target, &theta_star).unwrap();
        let full = target.full_loglik(&theta_star).unwrap();
        assert!((cv.q_all(&theta_star) - full).abs() < 1e-8 * (1.0 + full.abs()));
        let sum_values: f64 = (0..6).map(|g| cv.group_value(g)).sum();
        assert!((sum_values - full).abs() < 1e-8 * (1.0 + full.abs()));
    }

    #[test]
    fn second_difference_of_q_is_constant() {
        // q is an exact quadratic in theta: its second difference along any
        // direction is independent of the base point.
        let target = QuadraticTarget::make(3, 5, 7);
        let cv = fit_control_variates_for(&target, &vec![0.0; 3]).unwrap();
        use rand::RngExt;
        let mut rng = crate::rng::stream_rng(8, crate::rng::Stream::Simulation);
        let dir: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let step = 0.37;
        let mut second_diffs = Vec::new();
        for trial in 0..5 {
            let base: Vec<f64> =
                (0..3).map(|i| (trial as f64) * 0.21 - 0.4 + 0.1 * i as f64).collect();
            let at = |t: f64| -> f64 {
                let theta: Vec<f64> =
                    base.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
                cv.q_all(&theta)
            };
            second_diffs.push(at(step) - 2.0 * at(0.0) + at(-step));
        }
        let first = second_diffs[0];
        for sd in &second_diffs {
            assert!((sd - first).abs() <= 1e-8 * (1.0 + first.abs()));
        }
    }

    #[test]
    fn gradient_matches_directional_derivative() {
        // independent oracle at a different step size
        let target = QuadraticTarget::make(3, 2, 11);
        let theta_star = vec![0.3, 0.0, -0.2];
        let cv = fit_control_variates_for(&target, &theta_star).unwrap();
        let dir = [0.5, -0.3, 0.8];
        let t = 1e-4;
        for g in 0..2 {
            let mut plus = theta_star.clone();
            let mut minus = theta_star.clone();
            for i in 0..3 {
                plus[i] += t * dir[i];
                minus[i] -= t * dir[i];
            }
            let oracle = (target.group_loglik(&plus, g).unwrap()
                - target.group_loglik(&minus, g).unwrap())
                / (2.0 * t);
            let grad_dir: f64 =
                (0..3).map(|i| cv.grads[g * 3 + i] * dir[i]).sum();
            assert!(
                (oracle - grad_dir).abs() < 1e-4 * (1.0 + oracle.abs()),
                "group {g}: {oracle} vs {grad_dir}"
            );
        }
    }

    #[test]
    fn q_eval_dispatches_and_validates() {
        let target = QuadraticTarget::make(2, 3, 5);
        let cv = fit_control_variates_for(&target, &[0.0, 0.0]).unwrap();
        let theta = [0.2, -0.4];
        assert_eq!(q_eval(&theta, &cv, Some(1)).unwrap(), cv.q_group(&theta, 1));
        assert_eq!(q_eval(&theta, &cv, None).unwrap(), cv.q_all(&theta));
        assert!(q_eval(&[0.0; 3], &cv, None).is_err());
    }
}
