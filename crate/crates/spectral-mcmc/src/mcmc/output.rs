//! Posterior draws plus traces, counters and provenance, with CSV/JSON
//! persistence.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sampler::McmcSettings;

/// Output of one MCMC run. Draw rows cover the post-burn-in iterations;
/// counters cover the whole run including setup.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub names: Vec<String>,
    /// Retained draws, row-major (n_retained x dim).
    pub draws: Vec<f64>,
    /// Log-likelihood (or its subsampling estimate) at the current state,
    /// per retained iteration.
    pub loglik: Vec<f64>,
    /// Variance estimates sigma2_hat per retained iteration; NaN-free only
    /// for subsampling chains (empty otherwise is also fine).
    pub sigma2: Vec<f64>,
    pub accepted: Vec<bool>,
    /// Elementary likelihood-term evaluations, including setup work
    /// (initialization search and control-variate construction).
    pub density_evals: u64,
    /// The portion of `density_evals` spent before the first iteration.
    pub setup_evals: u64,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Likelihood terms in one full-data evaluation (retained frequencies
    /// for spectral chains, T for time-domain chains).
    pub n_terms: u64,
    pub warnings: Vec<String>,
    pub settings_json: serde_json::Value,
}

impl ChainOutput {
    pub(crate) fn empty(
        names: Vec<String>,
        settings: &McmcSettings,
        n_terms: u64,
        retained_capacity: usize,
    ) -> Self {
        let dim = names.len();
        ChainOutput {
            names,
            draws: Vec::with_capacity(retained_capacity * dim),
            loglik: Vec::with_capacity(retained_capacity),
            sigma2: Vec::with_capacity(retained_capacity),
            accepted: Vec::with_capacity(retained_capacity),
            density_evals: 0,
            setup_evals: 0,
            iterations: settings.iterations,
            burnin: settings.burnin,
            seed: settings.seed,
            n_terms,
            warnings: Vec::new(),
            settings_json: serde_json::Value::Null,
        }
    }

    pub(crate) fn push_draw(&mut self, theta: &[f64], loglik: f64, sigma2: f64, accepted: bool) {
        self.draws.extend_from_slice(theta);
        self.loglik.push(loglik);
        self.sigma2.push(sigma2);
        self.accepted.push(accepted);
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n_retained(&self) -> usize {
        if self.dim() == 0 { 0 } else { self.draws.len() / self.dim() }
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_retained()).map(|i| self.draws[i * self.dim() + j]).collect()
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let dim = self.dim();
        let n = self.n_retained().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in self.draws.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn posterior_sd(&self) -> Vec<f64> {
        let dim = self.dim();
        let n = self.n_retained();
        let mean = self.posterior_mean();
        let mut var = vec![0.0; dim];
        for row in self.draws.chunks_exact(dim) {
            for j in 0..dim {
                let d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= (n.max(2) - 1) as f64);
        var.iter().map(|v| v.sqrt()).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|a| **a).count() as f64 / self.accepted.len() as f64
    }

    /// Density evaluations per iteration, setup amortized over the run.
    pub fn evals_per_iteration(&self) -> f64 {
        self.density_evals as f64 / self.iterations as f64
    }

    pub fn draws_path(dir: &Path, stem: &str) -> PathBuf {
        dir.join(format!("{stem}_draws.csv"))
    }

    pub fn metadata_path(dir: &Path, stem: &str) -> PathBuf {
        dir.join(format!("{stem}_metadata.json"))
    }

    pub fn traces_path(dir: &Path, stem: &str) -> PathBuf {
        dir.join(format!("{stem}_traces.csv"))
    }

    /// Writes `<stem>_draws.csv`, `<stem>_metadata.json` and
    /// `<stem>_traces.csv` into `dir`; returns the paths written.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let draws = Self::draws_path(dir, stem);
        let meta = Self::metadata_path(dir, stem);
        let traces = Self::traces_path(dir, stem);
        self.write_draws_csv(&draws)?;
        self.write_metadata_json(&meta)?;
        self.write_traces_csv(&traces)?;
        Ok(vec![draws, meta, traces])
    }

    pub fn write_draws_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{}", self.names.join(","))?;
        for row in self.draws.chunks_exact(self.dim()) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn write_traces_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "loglik,sigma2,accepted")?;
        for i in 0..self.loglik.len() {
            writeln!(
                w,
                "{},{},{}",
                self.loglik[i],
                self.sigma2[i],
                u8::from(self.accepted[i])
            )?;
        }
        Ok(())
    }

    pub fn write_metadata_json(&self, path: &Path) -> Result<()> {
        let meta = ChainMetadata {
            seed: self.seed,
            iterations: self.iterations,
            burnin: self.burnin,
            dim: self.dim(),
            names: self.names.clone(),
            acceptance_rate: self.acceptance_rate(),
            density_evals: self.density_evals,
            setup_evals: self.setup_evals,
            n_terms: self.n_terms,
            warnings: self.warnings.clone(),
            settings: self.settings_json.clone(),
        };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &meta)
            .map_err(|e| Error::Data(format!("cannot write metadata: {e}")))?;
        writeln!(w)?;
        Ok(())
    }

    /// Reads a draws CSV together with its sibling metadata JSON.
    pub fn read_files(draws_path: &Path, metadata_path: &Path) -> Result<Self> {
        let meta: ChainMetadata = {
            let f = std::fs::File::open(metadata_path)?;
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| Error::Data(format!("bad metadata JSON: {e}")))?
        };
        let f = std::fs::File::open(draws_path)?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("draws file is empty".into()))??;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names != meta.names {
            return Err(Error::Data(
                "draws header does not match the metadata parameter names".into(),
            ));
        }
        let dim = names.len();
        let mut draws = Vec::new();
        for (idx, line) in lines.enumerate() {
            let row_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != dim {
                return Err(Error::Parse {
                    row: row_no,
                    col: cells.len().min(dim),
                    message: format!("expected {dim} values, found {}", cells.len()),
                });
            }
            for (col, cell) in cells.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row: row_no,
                    col: col + 1,
                    message: format!("cannot parse {cell:?} as a number"),
                })?;
                draws.push(v);
            }
        }
        Ok(ChainOutput {
            names,
            draws,
            loglik: Vec::new(),
            sigma2: Vec::new(),
            accepted: Vec::new(),
            density_evals: meta.density_evals,
            setup_evals: meta.setup_evals,
            iterations: meta.iterations,
            burnin: meta.burnin,
            seed: meta.seed,
            n_terms: meta.n_terms,
            warnings: meta.warnings,
            settings_json: meta.settings,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainMetadata {
    seed: u64,
    iterations: usize,
    burnin: usize,
    dim: usize,
    names: Vec<String>,
    acceptance_rate: f64,
    density_evals: u64,
    setup_evals: u64,
    n_terms: u64,
    warnings: Vec<String>,
    settings: serde_json::Value,
}
