//! Quasi-Newton maximization with numeric gradients and multi-start.
//!
//! Used to locate the control-variate expansion point theta* (posterior
//! mode of the Whittle target) and the Whittle maximum-likelihood estimate
//! for BIC. BFGS with backtracking line search; five starts by default
//! (zero vector plus seeded perturbations), each explored briefly, the
//! best one refined to convergence.

use rand::RngExt;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{Stream, indexed_rng};

#[derive(Debug, Clone)]
pub struct OptimOptions {
    /// Starts: the supplied init (or zero vector) plus n_starts - 1 seeded
    /// perturbations.
    pub n_starts: usize,
    /// BFGS iterations spent exploring each start before the best one is
    /// refined.
    pub explore_iters: usize,
    /// Iteration cap for the refinement phase.
    pub max_iters: usize,
    /// Gradient infinity-norm tolerance, relative to 1 + |f|.
    pub grad_tol: f64,
    /// Relative objective-change tolerance.
    pub f_tol: f64,
    /// Scale of the random start perturbations.
    pub perturb_scale: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            n_starts: 5,
            explore_iters: 25,
            max_iters: 400,
            grad_tol: 1e-5,
            f_tol: 1e-10,
            perturb_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub theta: Vec<f64>,
    pub value: f64,
    /// Objective evaluations consumed (gradients and line searches included).
    pub evals: u64,
    pub converged: bool,
}

struct Tracker<'o> {
    obj: &'o dyn Fn(&[f64]) -> Result<f64>,
    evals: u64,
}

impl Tracker<'_> {
    fn eval(&mut self, theta: &[f64]) -> Result<f64> {
        self.evals += 1;
        match (self.obj)(theta) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Ok(f64::NEG_INFINITY),
            Err(Error::SingularSpectrum { .. }) | Err(Error::Conditioning(_)) => {
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    }

    fn gradient(&mut self, theta: &[f64], out: &mut [f64]) -> Result<bool> {
        let mut work = theta.to_vec();
        for i in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[i].abs());
            work[i] = theta[i] + h;
            let fp = self.eval(&work)?;
            work[i] = theta[i] - h;
            let fm = self.eval(&work)?;
            work[i] = theta[i];
            if !fp.is_finite() || !fm.is_finite() {
                return Ok(false);
            }
            out[i] = (fp - fm) / (2.0 * h);
        }
        Ok(true)
    }
}

/// Maximizes `obj` from `init` (or the zero vector) with multi-start BFGS.
/// Returns the best point found; `converged` reports whether the refined
/// start met the tolerances.
pub fn maximize(
    obj: &dyn Fn(&[f64]) -> Result<f64>,
    dim: usize,
    init: Option<&[f64]>,
    seed: u64,
    opts: &OptimOptions,
) -> Result<OptimResult> {
    let mut tracker = Tracker { obj, evals: 0 };
    let base: Vec<f64> = match init {
        Some(v) => {
            if v.len() != dim {
                return Err(Error::Shape("init length does not match dimension".into()));
            }
            v.to_vec()
        }
        None => vec![0.0; dim],
    };

    let mut starts = vec![base.clone()];
    for k in 1..opts.n_starts.max(1) {
        let mut rng = indexed_rng(seed, Stream::OptimizerStarts, k as u64);
        let pert: Vec<f64> = base
            .iter()
            .map(|b| b + opts.perturb_scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        starts.push(pert);
    }

    // explore every start briefly, keep the best
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        let f0 = tracker.eval(start)?;
        if !f0.is_finite() {
            continue;
        }
        let (theta, value, _) = bfgs(&mut tracker, start.clone(), f0, opts.explore_iters, opts)?;
        if best.as_ref().is_none_or(|(_, bv)| value > *bv) {
            best = Some((theta, value));
        }
    }
    let (theta0, f0) = best.ok_or_else(|| {
        Error::Initialization("objective is non-finite at every start".into())
    })?;

    // refine the winner to convergence
    let (theta, value, converged) = bfgs(&mut tracker, theta0, f0, opts.max_iters, opts)?;
    Ok(OptimResult { theta, value, evals: tracker.evals, converged })
}

/// BFGS ascent; returns (theta, value, converged-by-tolerance).
fn bfgs(
    tracker: &mut Tracker<'_>,
    mut theta: Vec<f64>,
    mut fval: f64,
    max_iters: usize,
    opts: &OptimOptions,
) -> Result<(Vec<f64>, f64, bool)> {
    let dim = theta.len();
    let mut hinv = identity(dim);
    let mut grad = vec![0.0; dim];
    if !tracker.gradient(&theta, &mut grad)? {
        return Ok((theta, fval, false));
    }
    let mut flat_count = 0usize;

    for _ in 0..max_iters {
        let gnorm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm <= opts.grad_tol * (1.0 + fval.abs()) {
            return Ok((theta, fval, true));
        }

        // ascent direction d = Hinv * grad
        let mut dir = vec![0.0; dim];
        for i in 0..dim {
            let mut s = 0.0;
            for j in 0..dim {
                s += hinv[i * dim + j] * grad[j];
            }
            dir[i] = s;
        }
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope <= 0.0 {
            // curvature went bad; reset to steepest ascent
            hinv = identity(dim);
            dir.copy_from_slice(&grad);
        }
        let slope = dir.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>();

        // backtracking line search (Armijo)
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> =
                theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let fc = tracker.eval(&cand)?;
            if fc.is_finite() && fc >= fval + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((new_theta, new_f)) = accepted else {
            // no admissible step along this direction
            return Ok((theta, fval, false));
        };

        let mut new_grad = vec![0.0; dim];
        if !tracker.gradient(&new_theta, &mut new_grad)? {
            return Ok((new_theta, new_f, false));
        }

        // BFGS update on the inverse Hessian of the NEGATIVE objective,
        // expressed for ascent: s = dtheta, y = -(dgrad)
        let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&new_grad).map(|(old, new)| old - new).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            bfgs_update(&mut hinv, &s, &y, sy);
        }

        let rel_change = (new_f - fval).abs() / (1.0 + fval.abs());
        if rel_change < opts.f_tol {
            flat_count += 1;
            if flat_count >= 2 {
                return Ok((new_theta, new_f, true));
            }
        } else {
            flat_count = 0;
        }
        theta = new_theta;
        fval = new_f;
        grad = new_grad;
    }
    Ok((theta, fval, false))
}

fn identity(dim: usize) -> Vec<f64> {
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        h[i * dim + i] = 1.0;
    }
    h
}

fn bfgs_update(hinv: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    // Hinv <- (I - rho s y') Hinv (I - rho y s') + rho s s'
    let mut hy = vec![0.0; dim];
    for i in 0..dim {
        let mut acc = 0.0;
        for j in 0..dim {
            acc += hinv[i * dim + j] * y[j];
        }
        hy[i] = acc;
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..dim {
        for j in 0..dim {
            hinv[i * dim + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
