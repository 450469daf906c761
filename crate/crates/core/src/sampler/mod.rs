//! Adaptive random-walk Metropolis-within-Gibbs.
//!
//! One sweep visits every Metropolis coordinate once with a Gaussian
//! random-walk proposal, then calls the target's exact conditional step
//! (the shrinkage parameter λ for the regression posterior). Proposal
//! scales adapt on the log scale during burn-in and are frozen afterwards.
//!
//! Chain `c` draws from `ChaCha8Rng::seed_from_u64(master_seed)` switched to
//! stream `c`, so each chain depends only on `(master_seed, c)`.

mod posterior;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use posterior::{initial_coefficients, lambda_full_conditional, PosteriorCache, PosteriorTarget};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, PriorSpec};

pub const INITIAL_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Retained draws per chain.
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub master_seed: u64,
    pub target_accept: f64,
    pub adapt_window: usize,
    /// Last sweep (exclusive) at which scales may change; `None` means `burn_in`.
    pub adapt_until: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iter: 20_000,
            burn_in: 1_000,
            thin: 1,
            n_chains: 4,
            master_seed: 0,
            target_accept: 0.44,
            adapt_window: 50,
            adapt_until: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_iter", self.n_iter),
            ("thin", self.thin),
            ("n_chains", self.n_chains),
            ("adapt_window", self.adapt_window),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("sampler {name} must be positive")));
            }
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "sampler target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }

    pub fn adapt_until(&self) -> usize {
        self.adapt_until.unwrap_or(self.burn_in)
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.n_iter * self.thin
    }
}

/// Random stream for chain `c`.
pub fn chain_rng(master_seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chain as u64);
    rng
}

/// Unnormalized log density with cached state for single-coordinate moves.
pub trait Target: Sync {
    type Cache: Clone + Send;

    fn dim(&self) -> usize;

    fn names(&self) -> Vec<String>;

    /// Coordinates updated by random-walk Metropolis, in sweep order.
    fn mh_coordinates(&self) -> Vec<usize>;

    /// Build the cache at `theta` and return the log density.
    fn init(&self, theta: &[f64]) -> Result<(Self::Cache, f64)>;

    /// Log density with `theta[j]` replaced by `value`. May stage work in
    /// the cache for a following [`Target::commit_move`].
    fn eval_move(&self, cache: &mut Self::Cache, theta: &[f64], j: usize, value: f64) -> f64;

    /// Accept the move most recently passed to [`Target::eval_move`].
    fn commit_move(&self, cache: &mut Self::Cache, theta: &mut [f64], j: usize, value: f64);

    /// Exact or Metropolis conditional updates run once per sweep after the
    /// coordinate moves. Returns the new log density and, per touched
    /// coordinate, whether its value changed.
    fn conditional_step<R: Rng + ?Sized>(
        &self,
        _cache: &mut Self::Cache,
        _theta: &mut [f64],
        log_density: f64,
        _rng: &mut R,
    ) -> (f64, Vec<(usize, bool)>) {
        (log_density, Vec::new())
    }

    /// Called once per sweep; may rebuild caches from `theta` to bound
    /// floating-point drift. Returns the (possibly recomputed) log density.
    fn refresh(&self, _cache: &mut Self::Cache, _theta: &[f64], log_density: f64) -> f64 {
        log_density
    }
}

#[derive(Debug, Clone)]
pub struct ChainState<C> {
    pub theta: Vec<f64>,
    pub cache: C,
    pub log_density: f64,
    pub scales: Vec<f64>,
    pub accepts: Vec<u64>,
    pub attempts: Vec<u64>,
}

impl<C> ChainState<C> {
    pub fn new<T: Target<Cache = C>>(target: &T, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != target.dim() {
            return Err(Error::Config(format!(
                "initial state has {} entries, target has {}",
                theta.len(),
                target.dim()
            )));
        }
        let (cache, log_density) = target.init(&theta)?;
        let d = theta.len();
        Ok(Self {
            theta,
            cache,
            log_density,
            scales: vec![INITIAL_SCALE; d],
            accepts: vec![0; d],
            attempts: vec![0; d],
        })
    }

    fn reset_counts(&mut self) {
        self.accepts.iter_mut().for_each(|a| *a = 0);
        self.attempts.iter_mut().for_each(|a| *a = 0);
    }

    /// Per-coordinate acceptance since the last reset; NaN where untouched.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepts
            .iter()
            .zip(&self.attempts)
            .map(|(&a, &n)| if n == 0 { f64::NAN } else { a as f64 / n as f64 })
            .collect()
    }
}

/// Gaussian random-walk update of coordinate `j`. Returns whether the
/// proposal was accepted; proposals with log density `-∞` or NaN are rejected.
pub fn mh_update_coordinate<T: Target, R: Rng + ?Sized>(
    target: &T,
    state: &mut ChainState<T::Cache>,
    j: usize,
    rng: &mut R,
) -> bool {
    let z: f64 = StandardNormal.sample(rng);
    let proposal = state.theta[j] + state.scales[j] * z;
    let log_u = rng.random::<f64>().ln();
    state.attempts[j] += 1;
    let lp = target.eval_move(&mut state.cache, &state.theta, j, proposal);
    if !lp.is_nan() && log_u < lp - state.log_density {
        target.commit_move(&mut state.cache, &mut state.theta, j, proposal);
        state.log_density = lp;
        state.accepts[j] += 1;
        true
    } else {
        false
    }
}

/// Robbins–Monro nudge after adaptation window `k` (1-based):
/// `log s += (rate - target) / √k`.
pub fn adapt_scales(scales: &mut [f64], window_rates: &[f64], k: usize, target_accept: f64) {
    let step = 1.0 / (k as f64).sqrt();
    for (s, &rate) in scales.iter_mut().zip(window_rates) {
        if rate.is_nan() {
            continue;
        }
        *s *= ((rate - target_accept) * step).exp();
    }
}

/// Draws of every chain, stored iteration-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub coordinate_names: Vec<String>,
    /// `draws[c][t * dim + j]`.
    pub draws: Vec<Vec<f64>>,
    /// Post-burn-in acceptance per chain and coordinate (NaN for Gibbs-only).
    pub acceptance_rates: Vec<Vec<f64>>,
    pub final_scales: Vec<Vec<f64>>,
    pub config: SamplerConfig,
}

impl PosteriorSamples {
    /// Assemble from per-chain row-major draw buffers.
    pub fn from_chains(coordinate_names: Vec<String>, draws: Vec<Vec<f64>>, config: SamplerConfig) -> Result<Self> {
        let dim = coordinate_names.len();
        if dim == 0 || draws.is_empty() {
            return Err(Error::data("posterior samples need at least one chain and one coordinate"));
        }
        let len = draws[0].len();
        if len == 0 || len % dim != 0 || draws.iter().any(|d| d.len() != len) {
            return Err(Error::data("chains have inconsistent lengths"));
        }
        let n_chains = draws.len();
        Ok(Self {
            coordinate_names,
            draws,
            acceptance_rates: vec![vec![f64::NAN; dim]; n_chains],
            final_scales: vec![vec![f64::NAN; dim]; n_chains],
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.coordinate_names.len()
    }

    pub fn n_chains(&self) -> usize {
        self.draws.len()
    }

    /// Retained draws per chain.
    pub fn n_draws(&self) -> usize {
        self.draws[0].len() / self.dim()
    }

    pub fn draw(&self, chain: usize, t: usize) -> &[f64] {
        let d = self.dim();
        &self.draws[chain][t * d..(t + 1) * d]
    }

    pub fn chain_column(&self, chain: usize, j: usize) -> Vec<f64> {
        self.draws[chain].iter().skip(j).step_by(self.dim()).copied().collect()
    }

    /// Coordinate `j` for every chain, chain after chain.
    pub fn pooled_column(&self, j: usize) -> Vec<f64> {
        (0..self.n_chains()).flat_map(|c| self.chain_column(c, j)).collect()
    }

    /// Every retained draw, chain after chain.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let d = self.dim();
        self.draws.iter().flat_map(move |c| c.chunks(d))
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains() * self.n_draws()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coordinate_names.iter().position(|n| n == name)
    }
}

/// Output of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
    pub final_scales: Vec<f64>,
}

/// Run one chain from `theta0` with its own random stream.
pub fn run_chain<T: Target, R: Rng + ?Sized>(
    target: &T,
    theta0: Vec<f64>,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    let mut state = ChainState::new(target, theta0)?;
    let coords = target.mh_coordinates();
    let dim = target.dim();
    let adapt_until = config.adapt_until();
    let mut draws = Vec::with_capacity(config.n_iter * dim);
    let mut window_index = 0usize;
    for sweep in 0..config.total_sweeps() {
        if sweep == config.burn_in {
            state.reset_counts();
        }
        for &j in &coords {
            mh_update_coordinate(target, &mut state, j, rng);
        }
        let (lp, touched) = target.conditional_step(&mut state.cache, &mut state.theta, state.log_density, rng);
        state.log_density = lp;
        for (j, moved) in touched {
            state.attempts[j] += 1;
            state.accepts[j] += u64::from(moved);
        }
        state.log_density = target.refresh(&mut state.cache, &state.theta, state.log_density);

        let done = sweep + 1;
        if done <= adapt_until && done % config.adapt_window == 0 {
            window_index += 1;
            let rates = state.acceptance_rates();
            let mut masked = vec![f64::NAN; dim];
            for &j in &coords {
                masked[j] = rates[j];
            }
            adapt_scales(&mut state.scales, &masked, window_index, config.target_accept);
            if done < config.burn_in {
                state.reset_counts();
            }
        }
        if done > config.burn_in && (done - config.burn_in) % config.thin == 0 {
            draws.extend_from_slice(&state.theta);
        }
    }
    if !state.log_density.is_finite() {
        return Err(Error::Numerical("chain ended at a non-finite log density".into()));
    }
    Ok(ChainOutput {
        draws,
        acceptance_rates: state.acceptance_rates(),
        final_scales: state.scales,
    })
}

/// Run `config.n_chains` chains concurrently on the current rayon pool.
/// Output order follows the chain index.
pub fn run<T: Target>(target: &T, theta0: &[f64], config: &SamplerConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    let outputs: Vec<ChainOutput> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(config.master_seed, c);
            run_chain(target, theta0.to_vec(), config, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut samples = PosteriorSamples::from_chains(
        target.names(),
        outputs.iter().map(|o| o.draws.clone()).collect(),
        config.clone(),
    )?;
    samples.acceptance_rates = outputs.iter().map(|o| o.acceptance_rates.clone()).collect();
    samples.final_scales = outputs.into_iter().map(|o| o.final_scales).collect();
    Ok(samples)
}

/// Fit the regression posterior from the default starting point.
pub fn fit(spec: &ModelSpec, prior: &PriorSpec, data: &Dataset, config: &SamplerConfig) -> Result<PosteriorSamples> {
    let target = PosteriorTarget::new(spec, prior, data)?;
    run(&target, &target.initial_state(), config)
}

/// Sample the prior hierarchy with the likelihood switched off.
pub fn sample_prior(
    spec: &ModelSpec,
    prior: &PriorSpec,
    column_names: &[String],
    config: &SamplerConfig,
) -> Result<PosteriorSamples> {
    let target = PosteriorTarget::prior_only(spec, prior, column_names)?;
    run(&target, &target.initial_state(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent N(0, 1) coordinates, optionally flat.
    struct Gauss {
        dim: usize,
        flat: bool,
    }

    impl Target for Gauss {
        type Cache = ();
        fn dim(&self) -> usize {
            self.dim
        }
        fn names(&self) -> Vec<String> {
            (0..self.dim).map(|j| format!("z{j}")).collect()
        }
        fn mh_coordinates(&self) -> Vec<usize> {
            (0..self.dim).collect()
        }
        fn init(&self, theta: &[f64]) -> Result<((), f64)> {
            Ok(((), self.density(theta)))
        }
        fn eval_move(&self, _: &mut (), theta: &[f64], j: usize, value: f64) -> f64 {
            let mut t = theta.to_vec();
            t[j] = value;
            self.density(&t)
        }
        fn commit_move(&self, _: &mut (), theta: &mut [f64], j: usize, value: f64) {
            theta[j] = value;
        }
    }

    impl Gauss {
        fn density(&self, theta: &[f64]) -> f64 {
            if self.flat {
                0.0
            } else {
                -0.5 * theta.iter().map(|t| t * t).sum::<f64>()
            }
        }
    }

    fn config(n_iter: usize, burn_in: usize) -> SamplerConfig {
        SamplerConfig {
            n_iter,
            burn_in,
            n_chains: 1,
            master_seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn flat_target_always_accepts() {
        let t = Gauss { dim: 1, flat: true };
        let s = run(&t, &[0.0], &config(10_000, 0)).unwrap();
        assert_eq!(s.acceptance_rates[0][0], 1.0);
    }

    #[test]
    fn standard_normal_moments() {
        let t = Gauss { dim: 1, flat: false };
        let s = run(&t, &[0.0], &config(100_000, 1_000)).unwrap();
        let x = s.pooled_column(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // batch-means standard errors
        let se = |series: &[f64]| {
            let b = 100;
            let m = series.len() / b;
            let means: Vec<f64> = series.chunks(m).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
            let g = means.iter().sum::<f64>() / b as f64;
            (means.iter().map(|v| (v - g).powi(2)).sum::<f64>() / ((b - 1) * b) as f64).sqrt()
        };
        let sq: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
        assert!(mean.abs() < 3.0 * se(&x), "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * se(&sq), "var {var}");
    }

    #[test]
    fn scale_adaptation_direction() {
        let mut s = vec![1.0, 1.0];
        adapt_scales(&mut s, &[1.0, 0.0], 1, 0.44);
        assert!(s[0] > 1.0 && s[1] < 1.0);
    }

    #[test]
    fn scales_frozen_after_adaptation() {
        let t = Gauss { dim: 2, flat: false };
        let cfg = config(500, 200);
        let mut a = chain_rng(3, 0);
        let mut b = chain_rng(3, 0);
        let long = run_chain(&t, vec![0.0; 2], &cfg, &mut a).unwrap();
        let short = run_chain(&t, vec![0.0; 2], &SamplerConfig { n_iter: 10, ..cfg.clone() }, &mut b).unwrap();
        assert_eq!(long.final_scales, short.final_scales);
    }

    #[test]
    fn deterministic_and_chain_keyed() {
        let t = Gauss { dim: 2, flat: false };
        let cfg = SamplerConfig { n_chains: 3, ..config(200, 50) };
        let a = run(&t, &[0.0, 0.0], &cfg).unwrap();
        let b = run(&t, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(a.draws, b.draws);
        let mut rng = chain_rng(cfg.master_seed, 2);
        let lone = run_chain(&t, vec![0.0, 0.0], &cfg, &mut rng).unwrap();
        assert_eq!(lone.draws, a.draws[2]);
        assert_ne!(a.draws[0], a.draws[1]);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { thin: 0, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { target_accept: 1.0, ..Default::default() }.validate().is_err());
        assert_eq!(SamplerConfig::default().adapt_until(), 1000);
    }
}
