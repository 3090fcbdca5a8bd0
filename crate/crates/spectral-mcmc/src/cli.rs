//! Batch front end: simulate, fit, compare, diagnose.
//!
//! These functions back the `spectral-mcmc` binary but are ordinary
//! library calls; each one reads a [`RunConfig`], writes its artifacts
//! into the configured output directory and returns the paths written.
//! On error, partially written outputs are removed.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{
    EfficiencyReport, compute_ct, predictive_periodogram, spectral_summary_with,
};
use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, McmcSettings, SubsampleSettings, run_full_mcmc, run_subsample_mcmc};
use crate::models::simulate_model;
use crate::prior::MinnesotaConfig;
use crate::spectral::periodogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Full,
    Subsample,
}

impl FitMode {
    pub fn stem(self) -> &'static str {
        match self {
            FitMode::Full => "full",
            FitMode::Subsample => "subsample",
        }
    }
}

/// Removes the listed files when `result` is an error, then passes it on.
fn cleanup_on_error<T>(result: Result<T>, written: &[PathBuf]) -> Result<T> {
    if result.is_err() {
        for path in written {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}

fn ensure_out_dir(config: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&config.out)?;
    Ok(config.out.clone())
}

fn mcmc_settings(config: &RunConfig) -> McmcSettings {
    let mut settings = McmcSettings::defaults(config.mcmc.seed);
    settings.iterations = config.mcmc.iterations;
    settings.burnin = config.mcmc.burnin;
    settings.adapt_every = config.mcmc.adapt_every;
    settings
}

fn minnesota(config: &RunConfig, series: &crate::ingest::MultiSeries) -> Result<MinnesotaConfig> {
    let sigma2 = crate::prior::residual_variances(series, config.prior.ar_order)?;
    MinnesotaConfig::new(config.prior.lambda0, config.prior.theta0, sigma2)
}

/// Writes a simulated dataset (data.csv) and the generating truth
/// (truth.json). Deterministic per seed.
pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate_common()?;
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("config field 'simulate' is required".into()))?;
    if sim.t == 0 {
        return Err(Error::Config("simulate.t must be positive".into()));
    }
    let dir = ensure_out_dir(config)?;
    let series = simulate_model(&sim.params, sim.t, sim.burnin, config.mcmc.seed)?;

    let data_path = dir.join("data.csv");
    let truth_path = dir.join("truth.json");
    let written = vec![data_path.clone(), truth_path.clone()];
    let result = (|| -> Result<()> {
        series.write_csv(&data_path)?;
        let truth = serde_json::json!({
            "params": sim.params,
            "shape": sim.params.shape(),
            "t": sim.t,
            "burnin": sim.burnin,
            "seed": config.mcmc.seed,
        });
        std::fs::write(&truth_path, serde_json::to_string_pretty(&truth).unwrap())?;
        Ok(())
    })();
    cleanup_on_error(result, &written)?;
    Ok(written)
}

/// Loads the data, builds the periodogram and runs one chain, writing
/// draws, metadata and traces. The metadata embeds the fully resolved
/// config so the run can be reproduced from it.
pub fn cmd_fit(config: &RunConfig, mode: FitMode) -> Result<Vec<PathBuf>> {
    config.validate_common()?;
    let shape = *config.require_shape()?;
    let series = config.load_series()?;
    let pgram = periodogram(&series)?;
    let prior = minnesota(config, &series)?;
    let settings = mcmc_settings(config);

    let mut chain = match mode {
        FitMode::Full => run_full_mcmc(&pgram, &shape, &prior, &settings)?,
        FitMode::Subsample => {
            let sub = SubsampleSettings {
                groups: config.mcmc.groups,
                subsample: config.mcmc.subsample,
                blocks: config.mcmc.blocks,
            };
            run_subsample_mcmc(&pgram, &shape, &prior, &sub, &settings)?
        }
    };
    for w in &chain.warnings {
        eprintln!("warning: {w}");
    }
    chain.settings_json = serde_json::json!({
        "mode": mode.stem(),
        "config": config,
        "n_retained_frequencies": pgram.n(),
    });

    let dir = ensure_out_dir(config)?;
    let paths = chain.write_files(&dir, mode.stem());
    match paths {
        Ok(paths) => Ok(paths),
        Err(e) => {
            for stem_file in ["_draws.csv", "_metadata.json", "_traces.csv"] {
                let _ = std::fs::remove_file(dir.join(format!("{}{stem_file}", mode.stem())));
            }
            Err(e)
        }
    }
}

#[derive(Debug, Serialize)]
struct BicRow {
    kind: String,
    p: usize,
    q: usize,
    parameters: usize,
    loglik: Option<f64>,
    bic: Option<f64>,
    /// set when the optimizer did not converge (value = best found) or the
    /// fit failed outright
    note: Option<String>,
    within_one_of_best: bool,
}

/// Fits every model in `config.models` by maximum Whittle likelihood and
/// writes a BIC table (CSV + JSON), sorted by descending BIC. Ties within
/// 1.0 of the best are flagged. Duplicate model specs are deduplicated
/// with a warning; per-model convergence failures are recorded in their
/// row and the run continues.
pub fn cmd_compare(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate_common()?;
    if config.models.is_empty() {
        return Err(Error::Config("config field 'models' must list at least one model".into()));
    }
    let series = config.load_series()?;
    let pgram = periodogram(&series)?;

    let mut models = Vec::new();
    let mut warnings = Vec::new();
    for shape in &config.models {
        if models.contains(shape) {
            let msg = format!(
                "duplicate model {:?}({},{}) removed from the comparison",
                shape.kind, shape.p, shape.q
            );
            eprintln!("warning: {msg}");
            warnings.push(msg);
        } else {
            models.push(*shape);
        }
    }

    let opts = crate::mcmc::OptimOptions::default();
    let mut rows: Vec<BicRow> = Vec::new();
    for shape in &models {
        let row = match crate::diagnostics::bic(
            &pgram,
            shape,
            config.bic_n,
            config.mcmc.seed,
            &opts,
        ) {
            Ok(res) => BicRow {
                kind: format!("{:?}", shape.kind).to_lowercase(),
                p: shape.p,
                q: shape.q,
                parameters: res.k,
                loglik: Some(res.loglik),
                bic: Some(res.value),
                note: None,
                within_one_of_best: false,
            },
            Err(Error::Convergence { best }) => BicRow {
                kind: format!("{:?}", shape.kind).to_lowercase(),
                p: shape.p,
                q: shape.q,
                parameters: shape.dim(),
                loglik: None,
                bic: Some(best),
                note: Some("optimizer did not converge; best value shown".into()),
                within_one_of_best: false,
            },
            Err(e) => BicRow {
                kind: format!("{:?}", shape.kind).to_lowercase(),
                p: shape.p,
                q: shape.q,
                parameters: shape.dim(),
                loglik: None,
                bic: None,
                note: Some(format!("fit failed: {e}")),
                within_one_of_best: false,
            },
        };
        rows.push(row);
    }
    rows.sort_by(|a, b| {
        b.bic
            .unwrap_or(f64::NEG_INFINITY)
            .partial_cmp(&a.bic.unwrap_or(f64::NEG_INFINITY))
            .unwrap()
    });
    if models.len() > 1
        && let Some(best) = rows.first().and_then(|r| r.bic)
    {
        for row in rows.iter_mut() {
            if let Some(v) = row.bic {
                row.within_one_of_best = (best - v).abs() <= 1.0;
            }
        }
    }

    let dir = ensure_out_dir(config)?;
    let csv_path = dir.join("bic_table.csv");
    let json_path = dir.join("bic_table.json");
    let written = vec![csv_path.clone(), json_path.clone()];
    let result = (|| -> Result<()> {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
        writeln!(w, "kind,p,q,parameters,loglik,bic,within_one_of_best,note")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.kind,
                r.p,
                r.q,
                r.parameters,
                r.loglik.map_or(String::new(), |v| v.to_string()),
                r.bic.map_or(String::new(), |v| v.to_string()),
                r.within_one_of_best,
                r.note.clone().unwrap_or_default().replace(',', ";"),
            )?;
        }
        drop(w);
        let json = serde_json::json!({ "rows": rows, "warnings": warnings, "config": config });
        std::fs::write(&json_path, serde_json::to_string_pretty(&json).unwrap())?;
        Ok(())
    })();
    cleanup_on_error(result, &written)?;
    Ok(written)
}

/// Reads one or two chains (draws CSV + sibling metadata JSON), computes
/// IACT/CT (and RCT when a full + subsample pair is supplied), posterior
/// spectral summaries and posterior predictive periodogram bands.
pub fn cmd_diagnose(config: &RunConfig, draws: &[PathBuf]) -> Result<Vec<PathBuf>> {
    config.validate_common()?;
    if draws.is_empty() {
        return Err(Error::Config("diagnose needs at least one draws file".into()));
    }
    if draws.len() > 2 {
        return Err(Error::Config("diagnose accepts at most two chains (full, subsample)".into()));
    }
    let shape = *config.require_shape()?;
    let series = config.load_series()?;
    let pgram = periodogram(&series)?;

    let mut chains = Vec::new();
    for path in draws {
        let meta = sibling_metadata(path)?;
        let chain = ChainOutput::read_files(path, &meta)?;
        if chain.dim() != shape.dim() {
            return Err(Error::Shape(format!(
                "chain {} has {} parameters, shape needs {}",
                path.display(),
                chain.dim(),
                shape.dim()
            )));
        }
        chains.push(chain);
    }

    // assemble the efficiency report: chains tagged by their sampler when
    // available, otherwise (full, subsample) in argument order
    let sampler_tag = |c: &ChainOutput| -> Option<String> {
        c.settings_json
            .get("config")
            .map(|_| c.settings_json.clone())
            .or(Some(c.settings_json.clone()))
            .and_then(|v| v.get("mode").and_then(|m| m.as_str().map(String::from)))
    };
    let mut note = None;
    let report: EfficiencyReport = if chains.len() == 2 {
        let tags: Vec<Option<String>> = chains.iter().map(sampler_tag).collect();
        let sub_first = matches!(tags[0].as_deref(), Some("subsample"))
            && !matches!(tags[1].as_deref(), Some("subsample"));
        let (full, sub) = if sub_first {
            (&chains[1], &chains[0])
        } else {
            (&chains[0], &chains[1])
        };
        compute_ct(full, Some(sub))?
    } else {
        note = Some("single chain supplied; RCT requires a full + subsample pair".to_string());
        compute_ct(&chains[0], None)?
    };

    let dir = ensure_out_dir(config)?;
    let mut written = Vec::new();
    let result = (|| -> Result<()> {
        for (idx, chain) in chains.iter().enumerate() {
            let stem = draws[idx]
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("chain")
                .trim_end_matches("_draws")
                .to_string();
            let summary = spectral_summary_with(
                chain,
                &shape,
                config.diagnostics.grid_size,
                2000,
                series.dt(),
            )?;
            written.extend(summary.write_csvs(&dir, &stem)?);
            let bands = predictive_periodogram(
                chain,
                &pgram,
                &shape,
                config.diagnostics.draws_per_theta,
                chain.seed,
            )?;
            written.extend(bands.write_csvs(&dir, &stem)?);
        }
        let report_path = dir.join("efficiency_report.json");
        let json = serde_json::json!({
            "report": report,
            "note": note,
            "config": config,
        });
        std::fs::write(&report_path, serde_json::to_string_pretty(&json).unwrap())?;
        written.push(report_path);
        Ok(())
    })();
    cleanup_on_error(result, &written)?;
    Ok(written)
}

/// `X_draws.csv -> X_metadata.json`.
fn sibling_metadata(draws: &Path) -> Result<PathBuf> {
    let name = draws
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Config(format!("bad draws path {}", draws.display())))?;
    let stem = name.strip_suffix("_draws.csv").ok_or_else(|| {
        Error::Config(format!(
            "draws files are expected to end in _draws.csv, got {name}"
        ))
    })?;
    Ok(draws.with_file_name(format!("{stem}_metadata.json")))
}
