//! Command implementations behind the `egpd-lasso` binary.
//!
//! Every command is a pure function of its configuration, input files and
//! seed, except the `timing` field of `report.json`.

pub mod config;
pub mod csvio;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use config::{OutputFormat, RunConfig, StudyConfig};
use csvio::{load_dataset, read_chains, read_table, write_chains, write_dataset, write_table};

use crate::diagnostics::{
    density_grid, diagonal_section, ks_normal, quantile_residuals, summarize, CoefficientSummary, KsResult,
    ResidualMode,
};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, PriorSpec, StandardizationStats};
use crate::sampler::{fit, PosteriorSamples};
use crate::simulation::{
    data_rng, run_monte_carlo_with, simulate_dataset, McResult, McStudy, ReplicateOutcome, ReplicateResult,
    Scenario,
};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CHAIN_DIR: &str = "chains";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub model: ModelSpec,
    pub n_observations: usize,
    pub column_names: Vec<String>,
    pub standardization: Option<StandardizationStats>,
    pub summary: Vec<CoefficientSummary>,
    /// Post-burn-in acceptance per chain, in coordinate order.
    pub acceptance_rates: Vec<Vec<f64>>,
    pub n_draws_per_chain: usize,
    pub timing: Timing,
}

impl FitReport {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Summary table with a leading text `name` column; names never contain
/// commas, so no quoting is needed.
fn write_summary_csv(path: &Path, summary: &[CoefficientSummary]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = String::from("name,mean,sd,lower,upper,ess,geweke_z,selected\n");
    for s in summary {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.name,
            s.mean,
            s.sd,
            s.lower,
            s.upper,
            opt(s.ess),
            opt(s.geweke_z),
            u8::from(s.selected)
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read the data, fit, summarize and write `report.json`, `chains/` and,
/// when CSV output is enabled, `summary.csv`.
pub fn cmd_fit(config: &RunConfig, out: &Path) -> Result<FitReport> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let data = load_dataset(&config.data)?;
    let spec = config.model.to_spec(data.p(), data.has_intercept())?;
    let prior = PriorSpec::from(&config.prior);
    let samples = fit(&spec, &prior, &data, &config.sampler)?;
    let summary = summarize(&samples, config.output.level)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_chains(&out.join(CHAIN_DIR), &samples)?;
    let report = FitReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.sampler.master_seed,
        config: config.clone(),
        model: spec,
        n_observations: data.n(),
        column_names: data.column_names().to_vec(),
        standardization: data.standardization().cloned(),
        summary,
        acceptance_rates: samples.acceptance_rates.clone(),
        n_draws_per_chain: samples.n_draws(),
        timing: Timing {
            started_unix_seconds: started,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        },
    };
    if config.output.formats.contains(&OutputFormat::Csv) {
        write_summary_csv(&out.join(SUMMARY_FILE), &report.summary)?;
    }
    // always written: downstream commands reload the fit from it
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// Fit artifacts reloaded from a `fit` output directory.
pub struct FitArtifacts {
    pub report: FitReport,
    pub samples: PosteriorSamples,
}

impl FitArtifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        let report = FitReport::load(dir)?;
        let samples = read_chains(&dir.join(CHAIN_DIR), report.config.sampler.clone())?;
        let layout = report.model.layout(&report.column_names)?;
        if layout.names() != samples.coordinate_names {
            return Err(Error::Config(format!(
                "chain header {:?} does not match the fitted model {:?}",
                samples.coordinate_names,
                layout.names()
            )));
        }
        Ok(Self { report, samples })
    }

    pub fn dataset(&self) -> Result<Dataset> {
        load_dataset(&self.report.config.data)
    }
}

pub fn cmd_simulate(scenario: u8, n: usize, seed: u64, out: &Path) -> Result<Dataset> {
    let s = Scenario::get(scenario)?;
    let data = simulate_dataset(&s, n, &mut data_rng(seed))?;
    write_dataset(out, &data)?;
    Ok(data)
}

pub fn replicate_file(dir: &Path, n: usize, rep: usize) -> PathBuf {
    dir.join(format!("n{n}")).join("replicates").join(format!("rep_{rep:04}.csv"))
}

fn replicate_header(r: &ReplicateResult) -> Vec<String> {
    let mut h: Vec<String> = ["rep", "n", "mise"].iter().map(|s| s.to_string()).collect();
    h.extend(r.coordinate_names.iter().cloned());
    h
}

fn write_replicate(path: &Path, r: &ReplicateResult) -> Result<()> {
    let mut row = vec![r.rep as f64, r.n as f64, r.mise];
    row.extend_from_slice(&r.posterior_means);
    write_table(path, &replicate_header(r), [row])
}

fn read_replicate(path: &Path, rep: usize, seed: u64, n: usize) -> Result<ReplicateResult> {
    let t = read_table(path)?;
    let row = &t.rows[0];
    if t.headers.len() < 3 || row[0] as usize != rep || row[1] as usize != n {
        return Err(Error::data(format!("{}: replicate file does not match its index", path.display())));
    }
    Ok(ReplicateResult {
        rep,
        seed,
        n,
        mise: row[2],
        coordinate_names: t.headers[3..].to_vec(),
        posterior_means: row[3..].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub version: String,
    pub scenario: u8,
    pub seed: u64,
    pub n_reps: usize,
    pub config: StudyConfig,
    pub results: Vec<McResult>,
}

/// Monte Carlo study over each sample size in `ns`. Replicate files that
/// already exist are reused, so an interrupted study resumes where it stopped.
pub fn cmd_mc_study(scenario: u8, ns: &[usize], reps: usize, seed: u64, config: &StudyConfig, out: &Path) -> Result<StudyReport> {
    Scenario::get(scenario)?;
    if ns.is_empty() || reps == 0 {
        return Err(Error::Config("mc-study needs at least one sample size and one replicate".into()));
    }
    let mut results = Vec::with_capacity(ns.len());
    for &n in ns {
        let study = McStudy {
            scenario,
            n,
            n_reps: reps,
            seed,
            prior: PriorSpec::from(&config.prior),
            sampler: config.sampler.clone(),
            mise: config.mise.clone(),
        };
        let cached = |rep: usize| {
            let path = replicate_file(out, n, rep);
            let seed = crate::simulation::replicate_seed(study.seed, rep);
            path.exists().then(|| read_replicate(&path, rep, seed, n).ok()).flatten().map(ReplicateOutcome::Ok)
        };
        let on_done = |o: &ReplicateOutcome| match o {
            ReplicateOutcome::Ok(r) => write_replicate(&replicate_file(out, n, r.rep), r),
            ReplicateOutcome::Failed { .. } => Ok(()),
        };
        results.push(run_monte_carlo_with(&study, cached, on_done)?);
    }
    let report = StudyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario,
        seed,
        n_reps: reps,
        config: config.clone(),
        results,
    };
    write_json(&out.join("aggregate.json"), &report)?;
    Ok(report)
}

/// Long-format density sections `(x_section, y, mean, lower, upper)`.
/// Sections are `x = (c, …, c)` on the raw covariate scale.
pub fn cmd_density_grid(fit_dir: &Path, sections: &[f64], y_grid: &[f64], max_draws: Option<usize>, out: &Path) -> Result<()> {
    let art = FitArtifacts::load(fit_dir)?;
    let spec = &art.report.model;
    let layout = spec.layout(&art.report.column_names)?;
    let mut rows = Vec::new();
    for &c in sections {
        let raw = diagonal_section(spec, c);
        let x = match &art.report.standardization {
            Some(st) => st.apply(&raw),
            None => raw,
        };
        let g = density_grid(spec, &layout, &art.samples, &x, y_grid, max_draws, art.report.config.output.level)?;
        for k in 0..g.y.len() {
            rows.push(vec![c, g.y[k], g.mean[k], g.lower[k], g.upper[k]]);
        }
    }
    let headers: Vec<String> = ["x_section", "y", "mean", "lower", "upper"].iter().map(|s| s.to_string()).collect();
    write_table(out, &headers, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub mode: ResidualMode,
    pub n_draws: usize,
    pub ks: KsResult,
}

/// QQ table `(k, theoretical, mean, lower, upper)` plus a KS test of the
/// per-observation mean residuals against N(0, 1).
pub fn cmd_residuals(
    fit_dir: &Path,
    mode: ResidualMode,
    max_draws: Option<usize>,
    out: &Path,
    format: OutputFormat,
) -> Result<ResidualReport> {
    let art = FitArtifacts::load(fit_dir)?;
    let data = art.dataset()?;
    let spec = &art.report.model;
    let layout = spec.layout(&art.report.column_names)?;
    let r = quantile_residuals(spec, &layout, &art.samples, &data, mode, max_draws, art.report.config.output.level)?;
    let report = ResidualReport {
        mode,
        n_draws: r.n_draws,
        ks: ks_normal(&r.per_observation),
    };
    match format {
        OutputFormat::Csv => {
            let headers: Vec<String> = ["k", "theoretical", "mean", "lower", "upper"].iter().map(|s| s.to_string()).collect();
            let rows = (0..r.theoretical.len())
                .map(|k| vec![(k + 1) as f64, r.theoretical[k], r.sorted_mean[k], r.sorted_lower[k], r.sorted_upper[k]]);
            write_table(out, &headers, rows)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Full<'a> {
                report: &'a ResidualReport,
                residuals: &'a crate::diagnostics::QuantileResiduals,
            }
            write_json(out, &Full { report: &report, residuals: &r })?;
        }
    }
    Ok(report)
}

/// Recompute summaries from chain files alone.
pub fn cmd_diagnose(chain_dir: &Path, level: f64, out: &Path, format: OutputFormat) -> Result<Vec<CoefficientSummary>> {
    let samples = read_chains(chain_dir, Default::default())?;
    let summary = summarize(&samples, level)?;
    match format {
        OutputFormat::Csv => write_summary_csv(out, &summary)?,
        OutputFormat::Json => write_json(out, &summary)?,
    }
    Ok(summary)
}

/// Parse `start:stop:count` into an evenly spaced grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("grid '{spec}' must look like start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let k: usize = parts[2].parse().map_err(|_| bad())?;
    if k < 2 || !(b > a) || a < 0.0 {
        return Err(bad());
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}
