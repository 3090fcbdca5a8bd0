//! Random-walk Metropolis samplers: full-data and spectral subsampling.
//!
//! Both chains draw proposal noise and acceptance uniforms from the same
//! named streams of the run seed, so a subsampling chain whose estimator
//! is exact reproduces the full-data chain decision for decision. The
//! proposal covariance is adapted during burn-in only (rescaled sample
//! covariance of past draws, refreshed every `adapt_every` iterations)
//! and frozen afterwards.

use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::MultiSeries;
use crate::linalg;
use crate::models::{ModelKind, ModelShape, kalman_exact_loglik};
use crate::prior::{MinnesotaConfig, log_prior};
use crate::rng::{Stream, stream_rng};
use crate::spectral::PeriodogramSet;

use super::control_variates::{fit_control_variates_for, stencil_sweeps};
use super::estimator::{SubsampleState, bias_corrected_loglik, block_update, difference_estimator};
use super::groups::build_groups;
use super::optimize::{OptimOptions, maximize};
use super::output::ChainOutput;
use super::target::{GroupedTarget, WhittleTarget, loglik_or_neg_inf};

/// Scale applied to the adapted sample covariance (2.38^2 / dim).
fn adaptation_scale(dim: usize) -> f64 {
    2.38 * 2.38 / dim as f64
}

/// Initial proposal standard deviation per coordinate, before any
/// adaptation information exists.
const INITIAL_PROPOSAL_SD: f64 = 0.1;

/// Variance-estimate level and run length that trigger the sticky-chain
/// warning.
const STICKY_SIGMA2: f64 = 10.0;
const STICKY_RUN: usize = 50;

#[derive(Debug, Clone)]
pub struct McmcSettings {
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Starting point; when absent the sampler maximizes the target first
    /// (the cost is charged to the density-evaluation counter).
    pub init: Option<Vec<f64>>,
    /// Proposal-covariance refresh cadence during burn-in.
    pub adapt_every: usize,
    pub optim: OptimOptions,
}

impl McmcSettings {
    /// Paper-style defaults: 55,000 iterations with 5,000 burn-in.
    pub fn defaults(seed: u64) -> Self {
        McmcSettings {
            iterations: 55_000,
            burnin: 5_000,
            seed,
            init: None,
            adapt_every: 200,
            optim: OptimOptions::default(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize, burnin: usize) -> Self {
        self.iterations = iterations;
        self.burnin = burnin;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burnin >= self.iterations {
            return Err(Error::Config(format!(
                "need iterations > burnin >= 0 (got {} and {})",
                self.iterations, self.burnin
            )));
        }
        Ok(())
    }
}

/// Subsampling knobs; defaults follow the paper's settings.
#[derive(Debug, Clone, Copy)]
pub struct SubsampleSettings {
    /// Number of groups G.
    pub groups: usize,
    /// Sampled groups per iteration m.
    pub subsample: usize,
    /// Pseudo-marginal blocks B (must divide m).
    pub blocks: usize,
}

impl Default for SubsampleSettings {
    fn default() -> Self {
        SubsampleSettings { groups: 1000, subsample: 10, blocks: 10 }
    }
}

/// One random-walk Metropolis step with a symmetric Gaussian proposal:
/// theta' = theta + N(0, proposal_cov), accepted with probability
/// min(1, exp(log_target' - log_target)). A non-finite proposed target is
/// a rejection.
pub fn mh_step<R: Rng + ?Sized>(
    current: (&[f64], f64),
    proposal_cov: &DMatrix<f64>,
    log_target: &mut dyn FnMut(&[f64]) -> f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64, bool)> {
    let dim = current.0.len();
    if proposal_cov.nrows() != dim || proposal_cov.ncols() != dim {
        return Err(Error::Shape("proposal covariance does not match theta".into()));
    }
    let chol = proposal_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("proposal covariance must be positive definite".into()))?;
    let mut flat = vec![0.0; dim * dim];
    let l = chol.l();
    for i in 0..dim {
        for j in 0..=i {
            flat[i * dim + j] = l[(i, j)];
        }
    }
    let proposal = RwProposal { dim, chol: flat };
    let cand = proposal.propose(current.0, rng);
    let cand_target = log_target(&cand);
    let u: f64 = rng.random();
    if cand_target.is_finite() && u.ln() < cand_target - current.1 {
        Ok((cand, cand_target, true))
    } else {
        Ok((current.0.to_vec(), current.1, false))
    }
}

struct RwProposal {
    dim: usize,
    /// Lower Cholesky factor of the proposal covariance, row-major.
    chol: Vec<f64>,
}

impl RwProposal {
    fn isotropic(dim: usize, sd: f64) -> Self {
        let mut chol = vec![0.0; dim * dim];
        for i in 0..dim {
            chol[i * dim + i] = sd;
        }
        RwProposal { dim, chol }
    }

    fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = theta.to_vec();
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.chol[i * self.dim + j] * z[j];
            }
            out[i] += s;
        }
        out
    }
}

/// Recomputes the proposal from the sample covariance of past draws,
/// keeping the old proposal when the history is too short or degenerate.
fn adapt_proposal(history: &[f64], dim: usize, current: RwProposal) -> RwProposal {
    let count = history.len() / dim;
    if count < 2 * dim {
        return current;
    }
    let mut mean = vec![0.0; dim];
    for row in history.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    for row in history.chunks_exact(dim) {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[i * dim + j] += di * (row[j] - mean[j]);
            }
        }
    }
    let scale = adaptation_scale(dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[i * dim + j] / (count as f64 - 1.0) * scale;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
        cov[i * dim + i] += 1e-8 * scale;
    }
    match linalg::rchol_factor(&mut cov, dim) {
        Ok(_) => {
            // rchol_factor leaves the factor in the lower triangle
            let mut chol = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..=i {
                    chol[i * dim + j] = cov[i * dim + j];
                }
            }
            RwProposal { dim, chol }
        }
        Err(_) => current,
    }
}

/// Everything a full-data chain needs: the (counted) likelihood, the
/// prior, and a cheaper objective for the initialization search.
pub(crate) struct FullChainSpec<'a> {
    pub names: Vec<String>,
    pub loglik: Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>,
    pub log_prior: Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>,
    pub optim_loglik: Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>,
    /// Likelihood terms covered by one chain evaluation.
    pub terms_per_iter: u64,
    /// Terms covered by one optimizer objective evaluation.
    pub optim_terms_per_eval: u64,
    pub n_terms: u64,
    pub settings_json: serde_json::Value,
}

pub(crate) fn run_full_chain(spec: &FullChainSpec<'_>, settings: &McmcSettings) -> Result<ChainOutput> {
    settings.validate()?;
    let dim = spec.names.len();
    let mut setup_evals = 0u64;

    let theta0 = match &settings.init {
        Some(t) => {
            if t.len() != dim {
                return Err(Error::Shape("init length does not match the model".into()));
            }
            t.clone()
        }
        None => {
            let posterior = |theta: &[f64]| -> Result<f64> {
                Ok(loglik_or_neg_inf((spec.optim_loglik)(theta))?
                    + (spec.log_prior)(theta)?)
            };
            let res = maximize(&posterior, dim, None, settings.seed, &settings.optim)?;
            setup_evals += res.evals * spec.optim_terms_per_eval;
            res.theta
        }
    };

    let mut rng_prop = stream_rng(settings.seed, Stream::Proposal);
    let mut rng_acc = stream_rng(settings.seed, Stream::Accept);

    let eval_post = |theta: &[f64]| -> Result<f64> {
        let ll = loglik_or_neg_inf((spec.loglik)(theta))?;
        if !ll.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(ll + (spec.log_prior)(theta)?)
    };

    let mut theta = theta0;
    let mut log_post = eval_post(&theta)?;
    let mut density_evals = setup_evals + spec.terms_per_iter;
    if !log_post.is_finite() {
        return Err(Error::Initialization(
            "log posterior is not finite at the starting point".into(),
        ));
    }

    let retained = settings.iterations - settings.burnin;
    let mut out = ChainOutput::empty(spec.names.clone(), settings, spec.n_terms, retained);
    out.settings_json = spec.settings_json.clone();
    let mut proposal = RwProposal::isotropic(dim, INITIAL_PROPOSAL_SD / (dim as f64).sqrt());
    let mut history: Vec<f64> = Vec::with_capacity(settings.burnin * dim);

    for iter in 1..=settings.iterations {
        let cand = proposal.propose(&theta, &mut rng_prop);
        let cand_post = eval_post(&cand)?;
        density_evals += spec.terms_per_iter;
        let u: f64 = rng_acc.random();
        let accepted = cand_post.is_finite() && u.ln() < cand_post - log_post;
        if accepted {
            theta = cand;
            log_post = cand_post;
        }

        if iter <= settings.burnin {
            history.extend_from_slice(&theta);
            if iter % settings.adapt_every == 0 {
                proposal = adapt_proposal(&history, dim, proposal);
            }
        } else {
            out.push_draw(&theta, log_post, f64::NAN, accepted);
        }
    }
    out.density_evals = density_evals;
    out.setup_evals = setup_evals;
    Ok(out)
}

/// Full-data Whittle MCMC: random-walk Metropolis on the unconstrained
/// vector targeting the Whittle posterior. Every iteration evaluates all
/// retained frequencies.
pub fn run_full_mcmc(
    pgram: &PeriodogramSet,
    shape: &ModelShape,
    prior: &MinnesotaConfig,
    settings: &McmcSettings,
) -> Result<ChainOutput> {
    let partition = build_groups(pgram.n(), 1)?;
    let target = WhittleTarget::new(pgram, *shape, partition)?;
    let n = pgram.n() as u64;
    let spec = FullChainSpec {
        names: shape.param_names(),
        loglik: Box::new(move |theta| target.full_loglik(theta)),
        log_prior: Box::new(move |theta| log_prior(theta, shape, prior)),
        optim_loglik: {
            let t2 = WhittleTarget::new(pgram, *shape, build_groups(pgram.n(), 1)?)?;
            Box::new(move |theta| t2.half_loglik(theta))
        },
        terms_per_iter: n,
        optim_terms_per_eval: n / 2,
        n_terms: n,
        settings_json: serde_json::json!({
            "sampler": "full", "shape": shape,
            "iterations": settings.iterations, "burnin": settings.burnin,
            "adapt_every": settings.adapt_every, "seed": settings.seed,
        }),
    };
    run_full_chain(&spec, settings)
}

/// Exact time-domain MCMC for VARMA models (the oracle posterior the
/// Whittle approximation is compared against). One iteration costs T
/// likelihood terms.
pub fn run_kalman_mcmc(
    series: &MultiSeries,
    shape: &ModelShape,
    prior: &MinnesotaConfig,
    settings: &McmcSettings,
) -> Result<ChainOutput> {
    if shape.kind != ModelKind::Varma {
        return Err(Error::Domain(
            "the time-domain sampler supports VARMA models only".into(),
        ));
    }
    let t = series.t_len() as u64;
    let loglik = move |theta: &[f64]| -> Result<f64> {
        let params = shape.unpack(theta)?;
        kalman_exact_loglik(&params, series)
    };
    let spec = FullChainSpec {
        names: shape.param_names(),
        loglik: Box::new(loglik),
        log_prior: Box::new(move |theta| log_prior(theta, shape, prior)),
        optim_loglik: {
            let ll = move |theta: &[f64]| -> Result<f64> {
                let params = shape.unpack(theta)?;
                kalman_exact_loglik(&params, series)
            };
            Box::new(ll)
        },
        terms_per_iter: t,
        optim_terms_per_eval: t,
        n_terms: t,
        settings_json: serde_json::json!({
            "sampler": "kalman", "shape": shape,
            "iterations": settings.iterations, "burnin": settings.burnin,
            "adapt_every": settings.adapt_every, "seed": settings.seed,
        }),
    };
    run_full_chain(&spec, settings)
}

/// Spectral subsampling MCMC over any grouped target (generic so its
/// statistical contracts can be tested on synthetic likelihoods).
pub(crate) fn run_subsample_chain<T: GroupedTarget>(
    target: &T,
    prior_fn: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    sub: &SubsampleSettings,
    settings: &McmcSettings,
    optim_loglik: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    optim_terms_per_eval: u64,
    names: Vec<String>,
    settings_json: serde_json::Value,
) -> Result<ChainOutput> {
    settings.validate()?;
    let dim = target.dim();
    let g = target.n_groups();
    if sub.subsample == 0 {
        return Err(Error::EmptySample);
    }
    if sub.subsample > g {
        return Err(Error::Partition(format!(
            "subsample size {} exceeds the group count {}",
            sub.subsample, g
        )));
    }

    let mut setup_evals = 0u64;
    // theta*: posterior mode of the full target, unless an init is given
    let theta_star = match &settings.init {
        Some(t) => {
            if t.len() != dim {
                return Err(Error::Shape("init length does not match the model".into()));
            }
            t.clone()
        }
        None => {
            let posterior = |theta: &[f64]| -> Result<f64> {
                Ok(loglik_or_neg_inf(optim_loglik(theta))? + prior_fn(theta)?)
            };
            let res = maximize(&posterior, dim, None, settings.seed, &settings.optim)?;
            setup_evals += res.evals * optim_terms_per_eval;
            res.theta
        }
    };

    let cv = fit_control_variates_for(target, &theta_star)?;
    setup_evals += stencil_sweeps(dim) * target.total_terms();

    let mut rng_prop = stream_rng(settings.seed, Stream::Proposal);
    let mut rng_acc = stream_rng(settings.seed, Stream::Accept);
    let mut rng_sub = stream_rng(settings.seed, Stream::Subsample);

    let mut state = SubsampleState::init(g, sub.subsample, sub.blocks, &mut rng_sub)?;
    let mut density_evals = setup_evals;

    let mut theta = theta_star.clone();
    let est = difference_estimator(&theta, &state, &cv, target)?;
    density_evals += est.terms_evaluated;
    let mut ell_hat = est.ell_hat;
    let mut sigma2_hat = est.sigma2_hat;
    let mut log_post = bias_corrected_loglik(ell_hat, sigma2_hat) + prior_fn(&theta)?;
    if !log_post.is_finite() {
        return Err(Error::Initialization(
            "estimated log posterior is not finite at the starting point".into(),
        ));
    }

    let retained = settings.iterations - settings.burnin;
    let mut out = ChainOutput::empty(names, settings, target.total_terms(), retained);
    out.settings_json = settings_json;
    let mut proposal = RwProposal::isotropic(dim, INITIAL_PROPOSAL_SD / (dim as f64).sqrt());
    let mut history: Vec<f64> = Vec::with_capacity(settings.burnin * dim);
    let mut sticky_run = 0usize;
    let mut warned_sticky = false;

    for iter in 1..=settings.iterations {
        let cand = proposal.propose(&theta, &mut rng_prop);
        let cand_state = block_update(&state, &mut rng_sub);
        let cand_log_post;
        let cand_est = match difference_estimator(&cand, &cand_state, &cv, target) {
            Ok(est) => {
                density_evals += est.terms_evaluated;
                cand_log_post = match prior_fn(&cand) {
                    Ok(pr) => bias_corrected_loglik(est.ell_hat, est.sigma2_hat) + pr,
                    Err(e) => return Err(e),
                };
                Some(est)
            }
            Err(Error::SingularSpectrum { .. }) | Err(Error::Conditioning(_)) => {
                cand_log_post = f64::NEG_INFINITY;
                None
            }
            Err(e) => return Err(e),
        };

        let u: f64 = rng_acc.random();
        let accepted = cand_log_post.is_finite() && u.ln() < cand_log_post - log_post;
        if accepted {
            let est = cand_est.expect("finite log posterior implies a valid estimate");
            theta = cand;
            state = cand_state;
            ell_hat = est.ell_hat;
            sigma2_hat = est.sigma2_hat;
            log_post = cand_log_post;
        }

        if sigma2_hat > STICKY_SIGMA2 {
            sticky_run += 1;
            if sticky_run >= STICKY_RUN && !warned_sticky {
                out.warnings.push(format!(
                    "likelihood-estimate variance stayed above {STICKY_SIGMA2} for \
                     {STICKY_RUN} consecutive iterations; the chain is likely stuck \
                     (more groups or a larger subsample may help)"
                ));
                warned_sticky = true;
            }
        } else {
            sticky_run = 0;
        }

        if iter <= settings.burnin {
            history.extend_from_slice(&theta);
            if iter % settings.adapt_every == 0 {
                proposal = adapt_proposal(&history, dim, proposal);
            }
        } else {
            out.push_draw(&theta, ell_hat, sigma2_hat, accepted);
        }
    }
    out.density_evals = density_evals;
    out.setup_evals = setup_evals;
    Ok(out)
}

/// Spectral subsampling MCMC on the Whittle posterior: block
/// pseudo-marginal sampling of (theta, u) with grouped quadratic control
/// variates and the bias-corrected difference estimator.
pub fn run_subsample_mcmc(
    pgram: &PeriodogramSet,
    shape: &ModelShape,
    prior: &MinnesotaConfig,
    sub: &SubsampleSettings,
    settings: &McmcSettings,
) -> Result<ChainOutput> {
    let partition = build_groups(pgram.n(), sub.groups)?;
    let target = WhittleTarget::new(pgram, *shape, partition)?;
    let optim_target = WhittleTarget::new(pgram, *shape, build_groups(pgram.n(), 1)?)?;
    let n = pgram.n() as u64;
    let prior_fn = move |theta: &[f64]| log_prior(theta, shape, prior);
    run_subsample_chain(
        &target,
        &prior_fn,
        sub,
        settings,
        &move |theta: &[f64]| optim_target.half_loglik(theta),
        n / 2,
        shape.param_names(),
        serde_json::json!({
            "sampler": "subsample", "shape": shape,
            "groups": sub.groups, "subsample": sub.subsample, "blocks": sub.blocks,
            "iterations": settings.iterations, "burnin": settings.burnin,
            "adapt_every": settings.adapt_every, "seed": settings.seed,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::testutil::QuadraticTarget;

    #[test]
    fn mh_accepts_always_on_constant_target() {
        let mut rng = stream_rng(1, Stream::Accept);
        let cov = DMatrix::identity(2, 2);
        let mut theta = vec![0.0, 0.0];
        let mut log_t = 0.0;
        let mut accepts = 0;
        for _ in 0..500 {
            let (t, l, acc) =
                mh_step((&theta, log_t), &cov, &mut |_| 0.0, &mut rng).unwrap();
            theta = t;
            log_t = l;
            accepts += usize::from(acc);
        }
        assert_eq!(accepts, 500);
    }

    #[test]
    fn mh_tiny_proposal_freezes_the_chain() {
        let mut rng = stream_rng(2, Stream::Accept);
        let cov = DMatrix::identity(3, 3) * 1e-20;
        let mut target = |t: &[f64]| -> f64 { -t.iter().map(|x| x * x).sum::<f64>() };
        let mut theta = vec![0.5, -0.5, 0.25];
        let mut log_t = target(&theta);
        let mut accepts = 0;
        let start = theta.clone();
        for _ in 0..200 {
            let (t, l, acc) = mh_step((&theta, log_t), &cov, &mut target, &mut rng).unwrap();
            theta = t;
            log_t = l;
            accepts += usize::from(acc);
        }
        assert!(accepts >= 195);
        for (a, b) in theta.iter().zip(&start) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn mh_calibrated_acceptance_on_standard_normal() {
        // dim-5 standard normal target, proposal 2.38^2/dim * I
        let dim = 5;
        let mut rng = stream_rng(3, Stream::Accept);
        let cov = DMatrix::identity(dim, dim) * (2.38 * 2.38 / dim as f64);
        let mut target =
            |t: &[f64]| -> f64 { -0.5 * t.iter().map(|x| x * x).sum::<f64>() };
        let mut theta = vec![0.0; dim];
        let mut log_t = target(&theta);
        let mut accepts = 0usize;
        let n = 100_000;
        for _ in 0..n {
            let (t, l, acc) = mh_step((&theta, log_t), &cov, &mut target, &mut rng).unwrap();
            theta = t;
            log_t = l;
            accepts += usize::from(acc);
        }
        let rate = accepts as f64 / n as f64;
        assert!(rate > 0.2 && rate < 0.4, "acceptance rate {rate}");
    }

    #[test]
    fn mh_rejects_nonfinite_proposals() {
        let mut rng = stream_rng(4, Stream::Accept);
        let cov = DMatrix::identity(1, 1);
        let mut target = |t: &[f64]| -> f64 {
            if t[0] > 0.0 { f64::NEG_INFINITY } else { 0.0 }
        };
        let mut rejected_nonfinite = false;
        let mut theta = vec![-0.1];
        let mut log_t = 0.0;
        for _ in 0..100 {
            let before = theta.clone();
            let (t, l, acc) = mh_step((&theta, log_t), &cov, &mut target, &mut rng).unwrap();
            if !acc && t[0] <= 0.0 && before == t {
                rejected_nonfinite = true;
            }
            theta = t;
            log_t = l;
            assert!(theta[0] <= 0.0);
        }
        assert!(rejected_nonfinite);
    }

    #[test]
    fn acceptance_decisions_are_invariant_to_target_constants() {
        // adding a constant to the log target leaves every decision
        // unchanged on the same rng stream
        for shift in [1e3, -1e6, 42.5] {
            let run = |c: f64| -> Vec<bool> {
                let mut rng_prop = stream_rng(9, Stream::Proposal);
                let mut rng_acc = stream_rng(9, Stream::Accept);
                let proposal = RwProposal::isotropic(2, 0.7);
                let target =
                    |t: &[f64]| -> f64 { -0.5 * t.iter().map(|x| x * x).sum::<f64>() + c };
                let mut theta = vec![0.3, -0.2];
                let mut log_t = target(&theta);
                let mut decisions = Vec::new();
                for _ in 0..400 {
                    let cand = proposal.propose(&theta, &mut rng_prop);
                    let cand_t = target(&cand);
                    let u: f64 = rng_acc.random();
                    let acc = u.ln() < cand_t - log_t;
                    if acc {
                        theta = cand;
                        log_t = cand_t;
                    }
                    decisions.push(acc);
                }
                decisions
            };
            assert_eq!(run(0.0), run(shift));
        }
    }

    fn quadratic_prior(_: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn toy_settings(seed: u64, iterations: usize, burnin: usize) -> McmcSettings {
        let mut s = McmcSettings::defaults(seed).with_iterations(iterations, burnin);
        s.optim.n_starts = 2;
        s.optim.explore_iters = 10;
        s
    }

    #[test]
    fn perfect_control_variates_reproduce_full_data_decisions() {
        // With an exactly quadratic target the surrogate equals the group
        // likelihoods, sigma2_hat vanishes, and the subsampling chain makes
        // the same accept/reject decisions as a full-data chain driven by
        // the same seed.
        let target = QuadraticTarget::make(3, 12, 77);
        let settings = toy_settings(21, 1200, 400);
        let sub = SubsampleSettings { groups: 12, subsample: 4, blocks: 2 };

        let spec = FullChainSpec {
            names: vec!["a".into(), "b".into(), "c".into()],
            loglik: Box::new(|theta| target.full_loglik(theta)),
            log_prior: Box::new(quadratic_prior),
            optim_loglik: Box::new(|theta| target.full_loglik(theta)),
            terms_per_iter: 12,
            optim_terms_per_eval: 12,
            n_terms: 12,
            settings_json: serde_json::Value::Null,
        };
        let full = run_full_chain(&spec, &settings).unwrap();

        let subchain = run_subsample_chain(
            &target,
            &quadratic_prior,
            &sub,
            &settings,
            &|theta| target.full_loglik(theta),
            12,
            vec!["a".into(), "b".into(), "c".into()],
            serde_json::Value::Null,
        )
        .unwrap();

        assert!(subchain.sigma2.iter().all(|s| *s < 1e-9));
        assert_eq!(full.accepted, subchain.accepted);
        for (a, b) in full.draws.iter().zip(&subchain.draws) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn full_chain_bookkeeping_and_determinism() {
        let target = QuadraticTarget::make(2, 6, 5);
        let spec = || FullChainSpec {
            names: vec!["x".into(), "y".into()],
            loglik: Box::new(|theta| target.full_loglik(theta)),
            log_prior: Box::new(quadratic_prior),
            optim_loglik: Box::new(|theta| target.full_loglik(theta)),
            terms_per_iter: 6,
            optim_terms_per_eval: 6,
            n_terms: 6,
            settings_json: serde_json::Value::Null,
        };
        let settings = toy_settings(5, 300, 299);
        let one = run_full_chain(&spec(), &settings).unwrap();
        assert_eq!(one.n_retained(), 1);

        let settings = toy_settings(5, 500, 100);
        let a = run_full_chain(&spec(), &settings).unwrap();
        let b = run_full_chain(&spec(), &settings).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.n_retained(), 400);
        assert_eq!(a.accepted.len(), 400);
        assert_eq!(a.loglik.len(), 400);
        // per-iteration evals: setup + (iterations + 1) * terms
        assert_eq!(a.density_evals - a.setup_evals, 501 * 6);
    }

    #[test]
    fn subsample_counter_tracks_sampled_share() {
        let target = QuadraticTarget::make(2, 40, 15);
        let settings = toy_settings(11, 400, 100);
        let sub = SubsampleSettings { groups: 40, subsample: 4, blocks: 2 };
        let chain = run_subsample_chain(
            &target,
            &quadratic_prior,
            &sub,
            &settings,
            &|theta| target.full_loglik(theta),
            40,
            vec!["x".into(), "y".into()],
            serde_json::Value::Null,
        )
        .unwrap();
        let per_iter =
            (chain.density_evals - chain.setup_evals) as f64 / (settings.iterations + 1) as f64;
        // 4 of 40 groups, one term per group; duplicates make it slightly less
        assert!(per_iter <= 4.0 + 1e-9);
        assert!(per_iter > 2.5, "per-iteration evals {per_iter}");
    }
}
