use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use egpd_lasso::cli::{self, OutputFormat, RunConfig, StudyConfig};
use egpd_lasso::diagnostics::ResidualMode;
use egpd_lasso::{Error, Result};

#[derive(Parser)]
#[command(name = "egpd-lasso", version, about = "Bayesian Lasso EGPD regression")]
struct Cli {
    /// Worker threads for chains and replicates.
    #[arg(long, global = true, env = "EGPD_LASSO_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model described by a TOML configuration.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sampler.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict summary output to one format.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Write a simulated dataset for one of the four scenarios.
    Simulate {
        #[arg(long)]
        scenario: u8,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run (or resume) a Monte Carlo study.
    McStudy {
        #[arg(long)]
        scenario: u8,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Prior, sampler and MISE settings; desk defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior conditional density along diagonal covariate sections.
    DensityGrid {
        /// Output directory of a previous `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Section values c, giving x = (c, ..., c).
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        sections: Vec<f64>,
        /// Response grid as start:stop:count.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        max_draws: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized quantile residuals and a KS test against N(0, 1).
    Residuals {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, value_enum, default_value = "per-draw")]
        mode: ResidualModeArg,
        #[arg(long)]
        max_draws: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Summaries, ESS and Geweke scores from chain files.
    Diagnose {
        /// Directory holding chain_0.csv, chain_1.csv, ...
        #[arg(long)]
        chains: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ResidualModeArg {
    PerDraw,
    PosteriorMean,
}

impl From<ResidualModeArg> for ResidualMode {
    fn from(m: ResidualModeArg) -> Self {
        match m {
            ResidualModeArg::PerDraw => ResidualMode::PerDraw,
            ResidualModeArg::PosteriorMean => ResidualMode::PosteriorMean,
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit { config, seed, out, format } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.sampler.master_seed = s;
            }
            if let Some(f) = format {
                cfg.output.formats = vec![f];
            }
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            let report = cli::cmd_fit(&cfg, &out)?;
            eprintln!(
                "fit: {} observations, {} chains x {} draws in {:.1} s -> {}",
                report.n_observations,
                cfg.sampler.n_chains,
                report.n_draws_per_chain,
                report.timing.wall_clock_seconds,
                out.display()
            );
        }
        Command::Simulate { scenario, n, seed, out } => {
            cli::cmd_simulate(scenario, n, seed, &out)?;
        }
        Command::McStudy { scenario, n, reps, seed, config, out } => {
            let cfg = match config {
                Some(p) => StudyConfig::load(&p)?,
                None => StudyConfig::desk(),
            };
            let report = cli::cmd_mc_study(scenario, &n, reps, seed, &cfg, &out)?;
            for r in &report.results {
                let median = r.mise.as_ref().map_or(f64::NAN, |q| q.median);
                eprintln!("n={}: {} ok, {} failed, median MISE {median:.5}", r.n, r.n_reps - r.n_failed, r.n_failed);
            }
        }
        Command::DensityGrid { fit, sections, grid, max_draws, out } => {
            let y = cli::parse_grid(&grid)?;
            cli::cmd_density_grid(&fit, &sections, &y, max_draws, &out)?;
        }
        Command::Residuals { fit, mode, max_draws, out, format } => {
            let r = cli::cmd_residuals(&fit, mode.into(), max_draws, &out, format)?;
            eprintln!("residuals: KS D = {:.4}, p = {:.4} over {} draws", r.ks.statistic, r.ks.p_value, r.n_draws);
        }
        Command::Diagnose { chains, level, out, format } => {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::Config(format!("level must lie in (0, 1), got {level}")));
            }
            cli::cmd_diagnose(&chains, level, &out, format)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let pool = match args.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| run(args.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
