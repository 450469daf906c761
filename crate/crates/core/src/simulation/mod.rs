//! Scenario data, MISE scoring and the Monte Carlo study.
//!
//! The four scenarios use ten Uniform(0, 1) covariates with no intercept
//! column, the power carrier and exponential links on κ, ν and ξ.

mod rainfall;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rainfall::{rainfall_like, RAINFALL_COVARIATES, RAINFALL_N};

use crate::diagnostics::{quantile_sorted, summarize, thin_indices};
use crate::egpd::EgpdParams;
use crate::error::{Error, Result};
use crate::model::{predict_params, CoefficientSet, Dataset, Layout, ModelSpec, PriorSpec};
use crate::sampler::{fit, PosteriorSamples, SamplerConfig};

pub const N_COVARIATES: usize = 10;

/// Stream offsets inside one replicate seed (chains use streams `0..n_chains`).
const DATA_STREAM: u64 = 1 << 32;
const MISE_STREAM: u64 = 1 << 33;
const REPLICATE_STREAM: u64 = 1 << 34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// 1 to 4 for the published scenarios, 0 for custom coefficients.
    pub id: u8,
    pub beta: [f64; N_COVARIATES],
    pub alpha: [f64; N_COVARIATES],
    pub gamma: [f64; N_COVARIATES],
}

const BETA_LIGHT: [f64; 10] = [0.3, 0.0, 0.3, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0, -0.3];
const BETA_LARGE: [f64; 10] = [0.6, 0.0, 0.6, 0.0, 0.0, -0.6, 0.0, 0.0, 0.0, -0.6];
const ALPHA_LIGHT: [f64; 10] = [0.0, -0.3, 0.0, 0.0, 0.3, 0.0, 0.0, 0.3, 0.0, 0.0];
const ALPHA_LARGE: [f64; 10] = [0.0, -0.6, 0.0, 0.0, 0.6, 0.0, 0.0, 0.6, 0.0, 0.0];
const GAMMA_LIGHT: [f64; 10] = [0.3, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.3, -0.3];
const GAMMA_LARGE: [f64; 10] = [0.6, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0, 0.0, 0.6, -0.6];

impl Scenario {
    /// Scenario 1: light bulk and tail effects; 2: large tail effects;
    /// 3: large bulk effects; 4: large effects in both.
    pub fn get(id: u8) -> Result<Self> {
        let (beta, alpha, gamma) = match id {
            1 => (BETA_LIGHT, ALPHA_LIGHT, GAMMA_LIGHT),
            2 => (BETA_LIGHT, ALPHA_LARGE, GAMMA_LARGE),
            3 => (BETA_LARGE, ALPHA_LIGHT, GAMMA_LIGHT),
            4 => (BETA_LARGE, ALPHA_LARGE, GAMMA_LARGE),
            _ => return Err(Error::Config(format!("unknown scenario {id}; expected 1, 2, 3 or 4"))),
        };
        Ok(Self { id, beta, alpha, gamma })
    }

    /// All coefficients zero: every row is EGPD(κ = 1, σ = 0.5, ξ = 1).
    pub fn zero() -> Self {
        Self {
            id: 0,
            beta: [0.0; 10],
            alpha: [0.0; 10],
            gamma: [0.0; 10],
        }
    }

    pub fn spec() -> ModelSpec {
        ModelSpec::canonical(N_COVARIATES, false)
    }

    pub fn column_names() -> Vec<String> {
        (1..=N_COVARIATES).map(|j| format!("x{j}")).collect()
    }

    pub fn coefficients(&self, lambda: f64) -> CoefficientSet {
        CoefficientSet {
            beta: self.beta.to_vec(),
            alpha: self.alpha.to_vec(),
            gamma: self.gamma.to_vec(),
            lambda,
            kappa2_shift: None,
        }
    }

    /// True conditional distribution at `x`.
    pub fn params_at(&self, x: &[f64]) -> Result<EgpdParams> {
        predict_params(&Self::spec(), &self.coefficients(1.0), x)
    }

    /// True value per coordinate name of the fitted layout (λ excluded).
    pub fn truth_by_name(&self) -> Vec<(String, f64)> {
        let names = Self::column_names();
        let mut out = Vec::with_capacity(3 * N_COVARIATES);
        for (prefix, vals) in [("beta", &self.beta), ("alpha", &self.alpha), ("gamma", &self.gamma)] {
            for (n, v) in names.iter().zip(vals.iter()) {
                out.push((format!("{prefix}.{n}"), *v));
            }
        }
        out
    }
}

/// `n` rows; each row draws its ten covariates and then its response.
pub fn simulate_dataset<R: Rng + ?Sized>(scenario: &Scenario, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    let mut x = Vec::with_capacity(n * N_COVARIATES);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..N_COVARIATES).map(|_| rng.random::<f64>()).collect();
        let params = scenario.params_at(&row)?;
        y.push(params.sample_one(rng));
        x.extend_from_slice(&row);
    }
    Dataset::new(x, y, Scenario::column_names(), false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MiseConfig {
    /// Covariate points averaged over.
    pub n_x: usize,
    /// Intervals of the y-grid.
    pub grid_intervals: usize,
    /// Grading exponent: `y_k = q (k/K)^m`.
    pub grid_power: f64,
    /// Upper limit of integration as a probability of the true conditional law.
    pub quantile_cap: f64,
    /// Posterior draws averaged into the fitted density.
    pub max_draws: usize,
}

impl Default for MiseConfig {
    fn default() -> Self {
        Self {
            n_x: 200,
            grid_intervals: 400,
            grid_power: 4.0,
            quantile_cap: 0.999,
            max_draws: 200,
        }
    }
}

impl MiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.grid_intervals < 2 || self.max_draws == 0 {
            return Err(Error::Config("MISE needs positive n_x, max_draws and at least 2 grid intervals".into()));
        }
        if !(self.grid_power >= 1.0) || !(self.quantile_cap > 0.0 && self.quantile_cap < 1.0) {
            return Err(Error::Config("MISE grid_power must be >= 1 and quantile_cap in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Covariate points shared by every replicate of a study with this seed.
pub fn mise_points(n_x: usize, study_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(study_seed);
    rng.set_stream(MISE_STREAM);
    (0..n_x).map(|_| (0..N_COVARIATES).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Graded grid `q (k/K)^m`, `k = 1..=K`; the omitted `[0, y_1]` piece has
/// width `q K^-m`.
pub fn mise_grid(cap: f64, cfg: &MiseConfig) -> Vec<f64> {
    let k = cfg.grid_intervals as f64;
    (1..=cfg.grid_intervals).map(|i| cap * (i as f64 / k).powf(cfg.grid_power)).collect()
}

fn trapezoid(y: &[f64], f: &[f64]) -> f64 {
    y.windows(2).zip(f.windows(2)).map(|(yy, ff)| 0.5 * (yy[1] - yy[0]) * (ff[0] + ff[1])).sum()
}

/// Average over `points` of `∫ (f̂(y|x) - f(y|x))² dy`, integrated up to the
/// true conditional `quantile_cap` quantile. `fitted(x, grid)` returns the
/// estimated density on `grid`.
pub fn mise<F>(fitted: F, truth: &Scenario, points: &[Vec<f64>], cfg: &MiseConfig) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let mut total = 0.0;
    for x in points {
        let params = truth.params_at(x)?;
        let cap = params.quantile(cfg.quantile_cap)?;
        let grid = mise_grid(cap, cfg);
        let fhat = fitted(x, &grid)?;
        let sq: Vec<f64> = grid.iter().zip(&fhat).map(|(&y, &g)| (g - params.pdf(y)).powi(2)).collect();
        total += trapezoid(&grid, &sq);
    }
    Ok(total / points.len() as f64)
}

/// Posterior-mean density over an evenly thinned subset of pooled draws.
pub fn posterior_mean_density<'a>(
    spec: &'a ModelSpec,
    layout: &'a Layout,
    samples: &'a PosteriorSamples,
    max_draws: usize,
) -> impl Fn(&[f64], &[f64]) -> Result<Vec<f64>> + 'a {
    let all: Vec<&[f64]> = samples.iter_draws().collect();
    let coefs: Vec<CoefficientSet> = thin_indices(all.len(), Some(max_draws))
        .into_iter()
        .map(|i| layout.unflatten(all[i]))
        .collect();
    move |x: &[f64], grid: &[f64]| {
        let mut acc = vec![0.0; grid.len()];
        for c in &coefs {
            let params = predict_params(spec, c, x)?;
            for (a, &y) in acc.iter_mut().zip(grid) {
                *a += params.pdf(y);
            }
        }
        acc.iter_mut().for_each(|a| *a /= coefs.len() as f64);
        Ok(acc)
    }
}

/// Seed of replicate `rep` in a study keyed by `study_seed`.
pub fn replicate_seed(study_seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(study_seed);
    rng.set_stream(REPLICATE_STREAM);
    rng.set_word_pos(2 * rep as u128);
    rng.next_u64()
}

/// Random stream used to simulate a replicate's data.
pub fn data_rng(replicate_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed);
    rng.set_stream(DATA_STREAM);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStudy {
    pub scenario: u8,
    pub n: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub mise: MiseConfig,
}

impl McStudy {
    /// 50 replicates, one chain of 1000 + 5000 sweeps each.
    pub fn desk(scenario: u8, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            n,
            n_reps: 50,
            seed,
            prior: PriorSpec::default(),
            sampler: SamplerConfig {
                n_iter: 5000,
                burn_in: 1000,
                n_chains: 1,
                ..Default::default()
            },
            mise: MiseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub rep: usize,
    pub seed: u64,
    pub n: usize,
    pub mise: f64,
    pub coordinate_names: Vec<String>,
    pub posterior_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReplicateOutcome {
    Ok(ReplicateResult),
    Failed { rep: usize, seed: u64, message: String },
}

impl ReplicateOutcome {
    pub fn rep(&self) -> usize {
        match self {
            ReplicateOutcome::Ok(r) => r.rep,
            ReplicateOutcome::Failed { rep, .. } => *rep,
        }
    }
}

/// simulate → fit → summarize → MISE for one replicate seed.
pub fn run_replicate(
    scenario: &Scenario,
    n: usize,
    rep: usize,
    seed: u64,
    prior: &PriorSpec,
    sampler: &SamplerConfig,
    mise_cfg: &MiseConfig,
    points: &[Vec<f64>],
) -> Result<ReplicateResult> {
    let data = simulate_dataset(scenario, n, &mut data_rng(seed))?;
    let spec = Scenario::spec();
    let config = SamplerConfig {
        master_seed: seed,
        ..sampler.clone()
    };
    let samples = fit(&spec, prior, &data, &config)?;
    let layout = spec.layout(data.column_names())?;
    let summary = summarize(&samples, 0.95)?;
    let density = posterior_mean_density(&spec, &layout, &samples, mise_cfg.max_draws);
    let value = mise(density, scenario, points, mise_cfg)?;
    Ok(ReplicateResult {
        rep,
        seed,
        n,
        mise: value,
        coordinate_names: summary.iter().map(|s| s.name.clone()).collect(),
        posterior_means: summary.iter().map(|s| s.mean).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q3: quantile_sorted(&s, 0.75),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientAggregate {
    pub name: String,
    pub truth: Option<f64>,
    pub quartiles: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub scenario: u8,
    pub n: usize,
    pub n_reps: usize,
    pub n_failed: usize,
    pub failures: Vec<(usize, String)>,
    pub mise: Option<Quartiles>,
    pub coefficients: Vec<CoefficientAggregate>,
    pub replicates: Vec<ReplicateResult>,
}

/// Reduce replicate outcomes in replicate order.
pub fn aggregate(scenario: &Scenario, n: usize, mut outcomes: Vec<ReplicateOutcome>) -> McResult {
    outcomes.sort_by_key(|o| o.rep());
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes.iter() {
        match o {
            ReplicateOutcome::Ok(r) => replicates.push(r.clone()),
            ReplicateOutcome::Failed { rep, message, .. } => failures.push((*rep, message.clone())),
        }
    }
    let mise_vals: Vec<f64> = replicates.iter().map(|r| r.mise).collect();
    let truth = scenario.truth_by_name();
    let coefficients = replicates
        .first()
        .map(|first| {
            first
                .coordinate_names
                .iter()
                .enumerate()
                .filter_map(|(j, name)| {
                    let vals: Vec<f64> = replicates.iter().map(|r| r.posterior_means[j]).collect();
                    Quartiles::of(&vals).map(|q| CoefficientAggregate {
                        name: name.clone(),
                        truth: truth.iter().find(|(n, _)| n == name).map(|(_, v)| *v),
                        quartiles: q,
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    McResult {
        scenario: scenario.id,
        n,
        n_reps: outcomes.len(),
        n_failed: failures.len(),
        failures,
        mise: Quartiles::of(&mise_vals),
        coefficients,
        replicates,
    }
}

/// Run every replicate not supplied by `cached`, in parallel on the current
/// rayon pool; `on_done` sees each freshly computed outcome. Failures are
/// recorded and never abort the study.
pub fn run_monte_carlo_with<C, D>(study: &McStudy, cached: C, on_done: D) -> Result<McResult>
where
    C: Fn(usize) -> Option<ReplicateOutcome> + Sync,
    D: Fn(&ReplicateOutcome) -> Result<()> + Sync,
{
    let scenario = Scenario::get(study.scenario)?;
    study.sampler.validate()?;
    study.prior.validate()?;
    study.mise.validate()?;
    let points = mise_points(study.mise.n_x, study.seed);
    let outcomes: Vec<ReplicateOutcome> = (0..study.n_reps)
        .into_par_iter()
        .map(|rep| {
            if let Some(o) = cached(rep) {
                return Ok(o);
            }
            let seed = replicate_seed(study.seed, rep);
            let outcome = match run_replicate(
                &scenario,
                study.n,
                rep,
                seed,
                &study.prior,
                &study.sampler,
                &study.mise,
                &points,
            ) {
                Ok(r) => ReplicateOutcome::Ok(r),
                Err(e) => ReplicateOutcome::Failed { rep, seed, message: e.to_string() },
            };
            on_done(&outcome)?;
            Ok(outcome)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(&scenario, study.n, outcomes))
}

pub fn run_monte_carlo(study: &McStudy) -> Result<McResult> {
    run_monte_carlo_with(study, |_| None, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_table() {
        let s1 = Scenario::get(1).unwrap();
        assert_eq!(s1.beta, [0.3, 0.0, 0.3, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0, -0.3]);
        assert_eq!(s1.alpha, [0.0, -0.3, 0.0, 0.0, 0.3, 0.0, 0.0, 0.3, 0.0, 0.0]);
        assert_eq!(s1.gamma, [0.3, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.3, -0.3]);
        let s4 = Scenario::get(4).unwrap();
        assert_eq!(s4.alpha, [0.0, -0.6, 0.0, 0.0, 0.6, 0.0, 0.0, 0.6, 0.0, 0.0]);
        assert_eq!(Scenario::get(2).unwrap().beta, s1.beta);
        assert_eq!(Scenario::get(3).unwrap().gamma, s1.gamma);
        assert!(Scenario::get(5).is_err());
    }

    #[test]
    fn exact_fit_has_zero_mise() {
        let s = Scenario::get(1).unwrap();
        let cfg = MiseConfig { n_x: 5, ..Default::default() };
        let pts = mise_points(5, 1);
        let truth = |x: &[f64], g: &[f64]| -> Result<Vec<f64>> {
            let p = s.params_at(x)?;
            Ok(g.iter().map(|&y| p.pdf(y)).collect())
        };
        assert!(mise(truth, &s, &pts, &cfg).unwrap().abs() < 1e-8);
        let wide = |x: &[f64], g: &[f64]| -> Result<Vec<f64>> {
            let mut p = s.params_at(x)?;
            p.gpd.sigma *= 2.0;
            Ok(g.iter().map(|&y| p.pdf(y)).collect())
        };
        assert!(mise(wide, &s, &pts, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn replicate_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..5).map(|r| replicate_seed(9, r)).collect();
        let b: Vec<u64> = (0..5).map(|r| replicate_seed(9, r)).collect();
        assert_eq!(a, b);
        let mut s = a.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn quartiles_match_sort() {
        let q = Quartiles::of(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
    }
}
