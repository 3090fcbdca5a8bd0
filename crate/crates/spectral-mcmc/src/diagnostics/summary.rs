//! Posterior summaries of the spectral density matrix and posterior
//! predictive checks of the periodogram fit.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcmc::ChainOutput;
use crate::models::ModelShape;
use crate::models::spectrum::spectral_density;
use crate::rng::{Stream, stream_rng};
use crate::spectral::PeriodogramSet;

/// Pointwise posterior quantiles over a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct QuantileBand {
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Posterior quantiles (2.5 / 50 / 97.5 percent) of marginal spectra,
/// squared coherences and time delays.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    /// Grid over (0, pi), radians per sample.
    pub omegas: Vec<f64>,
    /// Sampling interval carried through for axis conversion at the
    /// reporting boundary.
    pub dt: f64,
    /// One panel per series: posterior of f_jj(omega).
    pub spectra: Vec<(String, QuantileBand)>,
    /// One panel per unordered pair i < j: posterior of |K_ij(omega)|^2.
    pub coherence2: Vec<(String, QuantileBand)>,
    /// One panel per ordered pair i != j: posterior of -arg f_ij / omega,
    /// in samples.
    pub delay: Vec<(String, QuantileBand)>,
}

const SUMMARY_MAX_DRAWS: usize = 2000;

/// Uniform-stride thinning to at most `max` draws.
fn thin_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let stride = n as f64 / max as f64;
    (0..max).map(|i| (i as f64 * stride) as usize).collect()
}

fn quantiles_of(mut pool: Vec<f64>) -> (f64, f64, f64) {
    let n = pool.len();
    let pick = |pool: &mut Vec<f64>, q: f64| -> f64 {
        let idx = ((n as f64 - 1.0) * q).round() as usize;
        *pool.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap()).1
    };
    let lo = pick(&mut pool, 0.025);
    let med = pick(&mut pool, 0.5);
    let hi = pick(&mut pool, 0.975);
    (lo, med, hi)
}

/// Evaluates the model spectral density over a grid for each retained
/// draw (thinned to at most 2000) and returns pointwise quantiles of the
/// marginal spectra, squared coherences and phase delays.
pub fn spectral_summary(
    chain: &ChainOutput,
    shape: &ModelShape,
    grid_size: usize,
) -> Result<SpectralSummary> {
    spectral_summary_with(chain, shape, grid_size, SUMMARY_MAX_DRAWS, 1.0)
}

pub fn spectral_summary_with(
    chain: &ChainOutput,
    shape: &ModelShape,
    grid_size: usize,
    max_draws: usize,
    dt: f64,
) -> Result<SpectralSummary> {
    if chain.dim() != shape.dim() {
        return Err(Error::Shape(format!(
            "chain has {} parameters, shape needs {}",
            chain.dim(),
            shape.dim()
        )));
    }
    if chain.n_retained() == 0 {
        return Err(Error::Data("chain holds no retained draws".into()));
    }
    if grid_size == 0 {
        return Err(Error::Config("grid size must be positive".into()));
    }
    let r = shape.r;
    // grid strictly inside (0, pi); omega = 0 is excluded so the delay
    // -arg(f)/omega is defined everywhere
    let omegas: Vec<f64> = (1..=grid_size)
        .map(|i| std::f64::consts::PI * i as f64 / (grid_size as f64 + 1.0))
        .collect();

    let draw_rows = thin_indices(chain.n_retained(), max_draws);
    let n_draws = draw_rows.len();

    let pairs_unordered: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| ((i + 1)..r).map(move |j| (i, j)))
        .collect();
    let pairs_ordered: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (0..r).filter(move |j| *j != i).map(move |j| (i, j)))
        .collect();

    let spec_w = r;
    let coh_w = pairs_unordered.len();
    let del_w = pairs_ordered.len();
    let row_width = (spec_w + coh_w + del_w) * omegas.len();

    // draw-major evaluation; each row is independent
    let rows: Vec<Result<Vec<f64>>> = draw_rows
        .par_iter()
        .map(|&row_idx| {
            let theta = chain.draw(row_idx);
            let params = shape.unpack(theta)?;
            let mut row = vec![0.0; row_width];
            for (w_idx, &omega) in omegas.iter().enumerate() {
                let f = spectral_density(&params, omega)?;
                for j in 0..r {
                    row[j * omegas.len() + w_idx] = f[(j, j)].re;
                }
                for (p_idx, &(i, j)) in pairs_unordered.iter().enumerate() {
                    let k2 = f[(i, j)].norm_sqr() / (f[(i, i)].re * f[(j, j)].re);
                    if !(0.0..=1.0 + 1e-9).contains(&k2) {
                        return Err(Error::Conditioning(format!(
                            "squared coherence {k2} outside [0, 1]"
                        )));
                    }
                    row[(spec_w + p_idx) * omegas.len() + w_idx] = k2;
                }
                for (p_idx, &(i, j)) in pairs_ordered.iter().enumerate() {
                    let phase = f[(i, j)].arg();
                    row[(spec_w + coh_w + p_idx) * omegas.len() + w_idx] = -phase / omega;
                }
            }
            Ok(row)
        })
        .collect();
    let mut matrix = Vec::with_capacity(n_draws);
    for row in rows {
        matrix.push(row?);
    }

    let band = |panel: usize| -> QuantileBand {
        let mut lower = Vec::with_capacity(omegas.len());
        let mut median = Vec::with_capacity(omegas.len());
        let mut upper = Vec::with_capacity(omegas.len());
        for w_idx in 0..omegas.len() {
            let pool: Vec<f64> =
                matrix.iter().map(|row| row[panel * omegas.len() + w_idx]).collect();
            let (lo, med, hi) = quantiles_of(pool);
            lower.push(lo);
            median.push(med);
            upper.push(hi);
        }
        QuantileBand { lower, median, upper }
    };

    let spectra = (0..r).map(|j| (format!("f_{}{}", j + 1, j + 1), band(j))).collect();
    let coherence2 = pairs_unordered
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| (format!("coh2_{}{}", i + 1, j + 1), band(spec_w + p)))
        .collect();
    let delay = pairs_ordered
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| (format!("delay_{}{}", i + 1, j + 1), band(spec_w + coh_w + p)))
        .collect();

    Ok(SpectralSummary { omegas, dt, spectra, coherence2, delay })
}

impl SpectralSummary {
    /// One CSV per panel: omega, lower, median, upper.
    pub fn write_csvs(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for (label, band) in
            self.spectra.iter().chain(&self.coherence2).chain(&self.delay)
        {
            let path = dir.join(format!("{stem}_{label}.csv"));
            let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(w, "omega,lower,median,upper")?;
            for (idx, omega) in self.omegas.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    omega, band.lower[idx], band.median[idx], band.upper[idx]
                )?;
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Posterior predictive bands for the diagonal periodogram ordinates,
/// with the observed ordinates for overlay.
#[derive(Debug, Clone, Serialize)]
pub struct PredictiveBands {
    /// Strictly positive retained frequencies.
    pub omegas: Vec<f64>,
    /// Per series: (label, band, observed diagonal ordinates).
    pub series: Vec<(String, QuantileBand, Vec<f64>)>,
}

const PREDICTIVE_MAX_DRAWS: usize = 200;

/// For each retained draw (thinned to at most 200), simulates
/// `draws_per_theta` periodogram ordinates per frequency from the
/// asymptotic law I_jj ~ Expon(f_jj(omega)) and returns pointwise
/// predictive quantiles plus the observed diagonal periodogram.
pub fn predictive_periodogram(
    chain: &ChainOutput,
    pgram: &PeriodogramSet,
    shape: &ModelShape,
    draws_per_theta: usize,
    seed: u64,
) -> Result<PredictiveBands> {
    if chain.dim() != shape.dim() {
        return Err(Error::Shape(format!(
            "chain has {} parameters, shape needs {}",
            chain.dim(),
            shape.dim()
        )));
    }
    if shape.r != pgram.r() {
        return Err(Error::Shape("model and periodogram dimensions differ".into()));
    }
    if draws_per_theta == 0 {
        return Err(Error::Config("draws_per_theta must be positive".into()));
    }
    let r = shape.r;
    let pos = pgram.positive_range();
    let freqs: Vec<usize> = pos.collect();
    let omegas: Vec<f64> = freqs.iter().map(|&i| pgram.omega(i)).collect();
    let n_freq = freqs.len();

    let draw_rows = thin_indices(chain.n_retained(), PREDICTIVE_MAX_DRAWS);
    let n_draws = draw_rows.len();

    // f_jj per (draw, frequency, series)
    let means: Vec<Result<Vec<f64>>> = draw_rows
        .par_iter()
        .map(|&row_idx| {
            let params = shape.unpack(chain.draw(row_idx))?;
            let mut out = vec![0.0; n_freq * r];
            for (k, &fi) in freqs.iter().enumerate() {
                let f = spectral_density(&params, pgram.omega(fi))?;
                for j in 0..r {
                    out[k * r + j] = f[(j, j)].re;
                }
            }
            Ok(out)
        })
        .collect();
    let mut f_means = Vec::with_capacity(n_draws);
    for m in means {
        f_means.push(m?);
    }

    let mut rng = stream_rng(seed, Stream::Predictive);
    let mut series = Vec::with_capacity(r);
    let mut pool = vec![0.0; n_draws * draws_per_theta];
    for j in 0..r {
        let mut lower = Vec::with_capacity(n_freq);
        let mut median = Vec::with_capacity(n_freq);
        let mut upper = Vec::with_capacity(n_freq);
        for k in 0..n_freq {
            for (d, fm) in f_means.iter().enumerate() {
                let mean = fm[k * r + j];
                for s in 0..draws_per_theta {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    pool[d * draws_per_theta + s] = -u.ln() * mean;
                }
            }
            let (lo, med, hi) = quantiles_of(pool.clone());
            lower.push(lo);
            median.push(med);
            upper.push(hi);
        }
        let observed: Vec<f64> =
            freqs.iter().map(|&fi| pgram.ordinate(fi)[j * r + j].re).collect();
        series.push((
            format!("I_{}{}", j + 1, j + 1),
            QuantileBand { lower, median, upper },
            observed,
        ));
    }
    Ok(PredictiveBands { omegas, series })
}

impl PredictiveBands {
    /// One CSV per series: omega, lower, median, upper, observed.
    pub fn write_csvs(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for (label, band, observed) in &self.series {
            let path = dir.join(format!("{stem}_predictive_{label}.csv"));
            let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(w, "omega,lower,median,upper,observed")?;
            for (idx, omega) in self.omegas.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    omega, band.lower[idx], band.median[idx], band.upper[idx], observed[idx]
                )?;
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::McmcSettings;
    use crate::models::{ModelKind, ModelParams};
    use nalgebra::DMatrix;

    /// A one-draw chain pinned at given parameters.
    fn point_mass_chain(shape: &ModelShape, params: &ModelParams, copies: usize) -> ChainOutput {
        let theta = shape.pack(params).unwrap();
        let settings = McmcSettings::defaults(1).with_iterations(copies + 1, 1);
        let mut out = ChainOutput::empty(shape.param_names(), &settings, 10, copies);
        for _ in 0..copies {
            out.push_draw(&theta, 0.0, 0.0, true);
        }
        out
    }

    #[test]
    fn correlated_white_noise_has_flat_squared_coherence() {
        let rho: f64 = 0.6;
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let params = ModelParams::varma(vec![], vec![], sigma, vec![0.0; 2]).unwrap();
        let shape = params.shape();
        let chain = point_mass_chain(&shape, &params, 3);
        let summary = spectral_summary(&chain, &shape, 64).unwrap();
        assert_eq!(summary.coherence2.len(), 1);
        let band = &summary.coherence2[0].1;
        for idx in 0..summary.omegas.len() {
            assert!((band.median[idx] - rho * rho).abs() < 1e-10);
            assert!(band.lower[idx] <= band.median[idx]);
            assert!(band.median[idx] <= band.upper[idx]);
        }
    }

    #[test]
    fn pure_delay_construction_reports_the_lag() {
        // x2 echoes x1 two samples later (AR(2) with entry (2,1) = 0.9 at
        // lag 2) plus its own small noise. The cross-spectrum is
        // 0.9 e^{-2 i omega} f_11(omega), so the delay panel reads 2.
        let phi1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        let phi2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.9, 0.0]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.05]);
        let params =
            ModelParams::varma(vec![phi1, phi2], vec![], sigma, vec![0.0; 2]).unwrap();
        let shape = params.shape();
        let chain = point_mass_chain(&shape, &params, 2);
        let summary = spectral_summary(&chain, &shape, 128).unwrap();
        // delay panel from series 2 to series 1 shows +2 at low frequency
        let (label, band) = summary
            .delay
            .iter()
            .find(|(l, _)| l == "delay_21")
            .expect("ordered pair 2->1 present");
        assert_eq!(label, "delay_21");
        for idx in 0..10 {
            assert!(
                (band.median[idx] - 2.0).abs() < 0.02 * 2.0,
                "low-frequency delay {} at omega {}",
                band.median[idx],
                summary.omegas[idx]
            );
        }
    }

    #[test]
    fn point_mass_white_noise_predictive_median_is_c_log2() {
        let c = 0.8;
        let sigma = DMatrix::from_element(1, 1, c * 2.0 * std::f64::consts::PI);
        let params = ModelParams::varma(vec![], vec![], sigma, vec![0.0]).unwrap();
        let shape = params.shape();
        let series = crate::models::simulate_model(&params, 256, 0, 9).unwrap();
        let pgram = crate::spectral::periodogram(&series.demean().unwrap()).unwrap();
        let chain = point_mass_chain(&shape, &params, 50);
        let bands = predictive_periodogram(&chain, &pgram, &shape, 100, 11).unwrap();
        let med = &bands.series[0].1.median;
        let expect = c * std::f64::consts::LN_2;
        let avg: f64 = med.iter().sum::<f64>() / med.len() as f64;
        assert!(
            (avg - expect).abs() < 0.05 * expect,
            "median level {avg} vs {expect}"
        );
    }

    #[test]
    fn band_centers_stable_in_draws_per_theta() {
        let sigma = DMatrix::from_element(1, 1, 2.0 * std::f64::consts::PI);
        let params = ModelParams::varma(vec![], vec![], sigma, vec![0.0]).unwrap();
        let shape = params.shape();
        let series = crate::models::simulate_model(&params, 128, 0, 13).unwrap();
        let pgram = crate::spectral::periodogram(&series.demean().unwrap()).unwrap();
        let chain = point_mass_chain(&shape, &params, 200);
        let few = predictive_periodogram(&chain, &pgram, &shape, 1, 5).unwrap();
        let many = predictive_periodogram(&chain, &pgram, &shape, 100, 5).unwrap();
        let avg = |b: &QuantileBand| b.median.iter().sum::<f64>() / b.median.len() as f64;
        let a = avg(&few.series[0].1);
        let b = avg(&many.series[0].1);
        assert!((a - b).abs() < 0.1 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn quantiles_are_monotone() {
        let shape = ModelShape::new(ModelKind::Vartfima, 2, 1, 0, true).unwrap();
        let settings = McmcSettings::defaults(1).with_iterations(60, 10);
        let mut chain = ChainOutput::empty(shape.param_names(), &settings, 10, 50);
        let mut rng = crate::rng::stream_rng(17, crate::rng::Stream::Simulation);
        for _ in 0..50 {
            let theta: Vec<f64> =
                (0..shape.dim()).map(|_| 0.5 * (rng.random::<f64>() - 0.5)).collect();
            chain.push_draw(&theta, 0.0, 0.0, true);
        }
        let summary = spectral_summary(&chain, &shape, 48).unwrap();
        for (_, band) in summary
            .spectra
            .iter()
            .chain(&summary.coherence2)
            .chain(&summary.delay)
        {
            for idx in 0..summary.omegas.len() {
                assert!(band.lower[idx] <= band.median[idx]);
                assert!(band.median[idx] <= band.upper[idx]);
            }
        }
        // coherences live in [0, 1]
        for (_, band) in &summary.coherence2 {
            assert!(band.lower.iter().all(|v| *v >= 0.0));
            assert!(band.upper.iter().all(|v| *v <= 1.0 + 1e-9));
        }
    }
}
