use nalgebra::DMatrix;
use spectral_mcmc::mcmc::{McmcSettings, SubsampleSettings, run_full_mcmc, run_kalman_mcmc, run_subsample_mcmc};
use spectral_mcmc::models::{ModelKind, ModelParams, ModelShape, simulate_model};
use spectral_mcmc::prior::MinnesotaConfig;
use spectral_mcmc::spectral::periodogram;
use std::time::Instant;

fn main() {
    // --- timing probe: VARTFIMA(1,1) r=2 at T=2^15 -------------------
    let shape = ModelShape::new(ModelKind::Vartfima, 2, 1, 1, true).unwrap();
    let truth_theta: Vec<f64> = vec![
        0.5, 0.15, -0.1, 0.35,   // ar unconstrained
        0.25, 0.0, 0.1, -0.2,    // ma unconstrained
        0.0, 0.2, -0.1,          // chol block
        0.3, 0.25,               // d
        (0.05f64).ln(),          // log lambda
    ];
    let truth = shape.unpack(&truth_theta).unwrap();
    let t0 = Instant::now();
    let series = simulate_model(&truth, 1 << 15, 500, 42).unwrap().demean().unwrap();
    println!("simulate T=2^15: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let pgram = periodogram(&series).unwrap();
    println!("periodogram n={}: {:?}", pgram.n(), t0.elapsed());

    let t0 = Instant::now();
    let ll = spectral_mcmc::spectral::whittle_loglik(&truth, &pgram).unwrap();
    let dt_full = t0.elapsed();
    let t0 = Instant::now();
    let llh = spectral_mcmc::spectral::whittle_loglik_halved(&truth, &pgram).unwrap();
    println!("loglik full {:.3} in {:?}; halved {:.3} in {:?}", ll, dt_full, llh, t0.elapsed());

    // short chains to estimate per-iteration cost
    let prior = MinnesotaConfig::from_series(&series, 4).unwrap();
    let settings = McmcSettings::defaults(7).with_iterations(600, 200);
    let t0 = Instant::now();
    let full = run_full_mcmc(&pgram, &shape, &prior, &settings).unwrap();
    println!("full chain 600 iters: {:?} accept {:.2} setup_evals {} total {}", t0.elapsed(), full.acceptance_rate(), full.setup_evals, full.density_evals);
    let t0 = Instant::now();
    let mut s2 = settings.clone();
    s2.init = None;
    let sub = run_subsample_mcmc(&pgram, &shape, &prior, &SubsampleSettings::default(), &s2).unwrap();
    println!("sub chain 600 iters: {:?} accept {:.2} setup_evals {} total {} warn {:?}", t0.elapsed(), sub.acceptance_rate(), sub.setup_evals, sub.density_evals, sub.warnings);
    println!("sub sigma2 mean {:.4} max {:.4}",
        sub.sigma2.iter().sum::<f64>() / sub.sigma2.len() as f64,
        sub.sigma2.iter().fold(0.0f64, |a, b| a.max(*b)));

    // --- criterion-1 probe: VARMA(1,0) r=2 at T=2^14 ------------------
    let shape_v = ModelShape::new(ModelKind::Varma, 2, 1, 0, true).unwrap();
    let truth_v_theta: Vec<f64> = vec![0.6, 0.2, -0.15, 0.4, 0.0, 0.25, -0.3];
    let truth_v = shape_v.unpack(&truth_v_theta).unwrap();
    let series_v = simulate_model(&truth_v, 1 << 14, 500, 11).unwrap().demean().unwrap();
    let pgram_v = periodogram(&series_v).unwrap();
    let prior_v = MinnesotaConfig::from_series(&series_v, 4).unwrap();
    let t0 = Instant::now();
    let k_ll = spectral_mcmc::models::kalman_exact_loglik(&truth_v, &series_v).unwrap();
    println!("kalman loglik {:.2}: {:?}", k_ll, t0.elapsed());
    let settings_v = McmcSettings::defaults(3).with_iterations(400, 100);
    let t0 = Instant::now();
    let kal = run_kalman_mcmc(&series_v, &shape_v, &prior_v, &settings_v).unwrap();
    println!("kalman chain 400 iters: {:?} accept {:.2}", t0.elapsed(), kal.acceptance_rate());
}
