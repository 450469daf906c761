//! Posterior summaries and model checks.

mod ks;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use ks::{kolmogorov_sf, ks_normal, ks_statistic, KsResult};

use crate::error::{Error, Result};
use crate::model::{predict_params, Dataset, Layout, ModelSpec};
use crate::sampler::PosteriorSamples;

/// Minimum series length accepted by [`effective_sample_size`] and [`geweke_z`].
pub const MIN_DRAWS: usize = 100;
/// CDF values are clamped to `[RESIDUAL_CLAMP, 1 - RESIDUAL_CLAMP]` before Φ⁻¹.
pub const RESIDUAL_CLAMP: f64 = 1e-12;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Biased (1/N) autocovariance at lag `k`.
fn autocov(x: &[f64], m: f64, k: usize) -> f64 {
    let n = x.len();
    x[..n - k].iter().zip(&x[k..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k` of pooled chains, truncated
/// by Geyer's initial positive sequence with the monotone adjustment.
/// Autocorrelations combine chains as `1 - (W - mean acov_k) / var⁺`.
fn integrated_time(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return Err(Error::data("autocorrelation needs at least 4 draws per chain"));
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov0: Vec<f64> = chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, 0)).collect();
    let nf = n as f64;
    let w = mean(&acov0) * nf / (nf - 1.0);
    let var_plus = if m > 1 {
        let grand = mean(&means);
        let b_over_n = means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1) as f64;
        w * (nf - 1.0) / nf + b_over_n
    } else {
        w * (nf - 1.0) / nf
    };
    let scale = means.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if !(var_plus > 1e-28 * scale * scale) || !var_plus.is_finite() {
        return Err(Error::Numerical("series is constant; autocorrelation is undefined".into()));
    }
    let rho = |k: usize| -> f64 {
        let avg = chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, k)).sum::<f64>() / m as f64;
        1.0 - (w - avg) / var_plus
    };
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev);
        prev = pair;
        sum_pairs += pair;
        t += 2;
    }
    Ok((-1.0 + 2.0 * sum_pairs).max(1.0 / (nf * m as f64).log10().max(1.0)))
}

/// Effective sample size `N / (1 + 2 Σ ρ_k)` of one chain.
pub fn effective_sample_size(draws: &[f64]) -> Result<f64> {
    effective_sample_size_multi(&[draws])
}

/// Multi-chain effective sample size over `M × N` draws, capped at `M × N`.
pub fn effective_sample_size_multi(chains: &[&[f64]]) -> Result<f64> {
    if chains.iter().any(|c| c.len() < MIN_DRAWS) {
        return Err(Error::data(format!("effective sample size needs at least {MIN_DRAWS} draws per chain")));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let tau = integrated_time(chains)?.max(1.0);
    Ok((n * chains.len()) as f64 / tau)
}

/// Spectral density at frequency zero, `γ₀ (1 + 2 Σ ρ_k)`.
fn spectral_zero(x: &[f64]) -> Result<f64> {
    let tau = integrated_time(&[x])?;
    Ok(autocov(x, mean(x), 0) * tau)
}

/// Geweke z-score comparing the first `frac_a` and last `frac_b` of a chain.
pub fn geweke_z(draws: &[f64], frac_a: f64, frac_b: f64) -> Result<f64> {
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::Config(format!("Geweke fractions ({frac_a}, {frac_b}) must be positive and sum to at most 1")));
    }
    if draws.len() < MIN_DRAWS {
        return Err(Error::data(format!("Geweke diagnostic needs at least {MIN_DRAWS} draws")));
    }
    let n = draws.len();
    let na = ((frac_a * n as f64).floor() as usize).max(4);
    let nb = ((frac_b * n as f64).floor() as usize).max(4);
    let a = &draws[..na];
    let b = &draws[n - nb..];
    let va = spectral_zero(a)? / na as f64;
    let vb = spectral_zero(b)? / nb as f64;
    Ok((mean(a) - mean(b)) / (va + vb).sqrt())
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    /// Multi-chain ESS; `None` when undefined (constant or short chains).
    pub ess: Option<f64>,
    /// The per-chain Geweke z of largest magnitude.
    pub geweke_z: Option<f64>,
    /// `0 ∉ [lower, upper]`.
    pub selected: bool,
}

/// Pooled-chain summaries with equal-tailed intervals at `level`.
pub fn summarize(samples: &PosteriorSamples, level: f64) -> Result<Vec<CoefficientSummary>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level must lie in (0, 1), got {level}")));
    }
    let alpha = (1.0 - level) / 2.0;
    let mut out = Vec::with_capacity(samples.dim());
    for (j, name) in samples.coordinate_names.iter().enumerate() {
        let chains: Vec<Vec<f64>> = (0..samples.n_chains()).map(|c| samples.chain_column(c, j)).collect();
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        // sorting first makes the moments independent of chain order
        let sorted = sorted_copy(&pooled);
        let n = sorted.len() as f64;
        let mu = sorted.iter().sum::<f64>() / n;
        let sd = if sorted.len() > 1 {
            (sorted.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let lower = quantile_sorted(&sorted, alpha);
        let upper = quantile_sorted(&sorted, 1.0 - alpha);
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        let ess = effective_sample_size_multi(&refs).ok();
        let geweke = chains
            .iter()
            .filter_map(|c| geweke_z(c, 0.1, 0.5).ok())
            .max_by(|a, b| a.abs().total_cmp(&b.abs()));
        out.push(CoefficientSummary {
            name: name.clone(),
            mean: mu,
            sd,
            lower,
            upper,
            ess,
            geweke_z: geweke,
            selected: !(lower <= 0.0 && 0.0 <= upper),
        });
    }
    Ok(out)
}

/// Indices of `k` evenly spaced draws out of `total` (all when `k ≥ total`).
pub fn thin_indices(total: usize, k: Option<usize>) -> Vec<usize> {
    match k {
        Some(k) if k > 0 && k < total => (0..k).map(|i| i * total / k).collect(),
        _ => (0..total).collect(),
    }
}

fn pooled_draws<'s>(samples: &'s PosteriorSamples, max_draws: Option<usize>) -> Vec<&'s [f64]> {
    let all: Vec<&[f64]> = samples.iter_draws().collect();
    thin_indices(all.len(), max_draws).into_iter().map(|i| all[i]).collect()
}

fn check_names(layout: &Layout, samples: &PosteriorSamples) -> Result<()> {
    if layout.names() != samples.coordinate_names {
        return Err(Error::Config(format!(
            "coordinate names {:?} do not match the model layout {:?}",
            samples.coordinate_names,
            layout.names()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    /// One residual set per posterior draw.
    PerDraw,
    /// Plug-in residuals at the posterior-mean coefficients.
    PosteriorMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileResiduals {
    /// Posterior mean residual of each observation, data order.
    pub per_observation: Vec<f64>,
    /// Standard-normal quantiles `Φ⁻¹((k - 0.5)/n)`.
    pub theoretical: Vec<f64>,
    /// Posterior mean of the k-th smallest residual.
    pub sorted_mean: Vec<f64>,
    pub sorted_lower: Vec<f64>,
    pub sorted_upper: Vec<f64>,
    pub n_draws: usize,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `Φ⁻¹(F(y_i | x_i))` with the CDF clamped away from 0 and 1.
fn residuals_for(spec: &ModelSpec, layout: &Layout, theta: &[f64], data: &Dataset, out: &mut [f64]) -> Result<()> {
    let coef = layout.unflatten(theta);
    let phi = std_normal();
    for i in 0..data.n() {
        let params = predict_params(spec, &coef, data.row(i))?;
        let u = params.cdf(data.y()[i])?.clamp(RESIDUAL_CLAMP, 1.0 - RESIDUAL_CLAMP);
        out[i] = phi.inverse_cdf(u);
    }
    Ok(())
}

/// Quantile residuals with a pointwise band for the sorted residuals.
/// `max_draws` thins the pooled draws evenly.
pub fn quantile_residuals(
    spec: &ModelSpec,
    layout: &Layout,
    samples: &PosteriorSamples,
    data: &Dataset,
    mode: ResidualMode,
    max_draws: Option<usize>,
    level: f64,
) -> Result<QuantileResiduals> {
    check_names(layout, samples)?;
    let n = data.n();
    let thetas: Vec<Vec<f64>> = match mode {
        ResidualMode::PerDraw => pooled_draws(samples, max_draws).into_iter().map(|d| d.to_vec()).collect(),
        ResidualMode::PosteriorMean => {
            let total = samples.total_draws() as f64;
            let mut m = vec![0.0; samples.dim()];
            for d in samples.iter_draws() {
                for (a, b) in m.iter_mut().zip(d) {
                    *a += b;
                }
            }
            m.iter_mut().for_each(|v| *v /= total);
            vec![m]
        }
    };
    let s = thetas.len();
    let mut sorted_sets = vec![vec![0.0; s]; n];
    let mut per_obs = vec![0.0; n];
    let mut r = vec![0.0; n];
    for (k, theta) in thetas.iter().enumerate() {
        residuals_for(spec, layout, theta, data, &mut r)?;
        for (acc, v) in per_obs.iter_mut().zip(&r) {
            *acc += v;
        }
        let sorted = sorted_copy(&r);
        for (i, v) in sorted.into_iter().enumerate() {
            sorted_sets[i][k] = v;
        }
    }
    per_obs.iter_mut().for_each(|v| *v /= s as f64);
    let alpha = (1.0 - level) / 2.0;
    let mut sorted_mean = Vec::with_capacity(n);
    let mut sorted_lower = Vec::with_capacity(n);
    let mut sorted_upper = Vec::with_capacity(n);
    for set in &sorted_sets {
        let ss = sorted_copy(set);
        sorted_mean.push(mean(&ss));
        sorted_lower.push(quantile_sorted(&ss, alpha));
        sorted_upper.push(quantile_sorted(&ss, 1.0 - alpha));
    }
    let phi = std_normal();
    let theoretical = (1..=n).map(|k| phi.inverse_cdf((k as f64 - 0.5) / n as f64)).collect();
    Ok(QuantileResiduals {
        per_observation: per_obs,
        theoretical,
        sorted_mean,
        sorted_lower,
        sorted_upper,
        n_draws: s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub x_section: Vec<f64>,
    pub y: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Covariate vector `(c, …, c)`, with a leading 1 when the model has an intercept.
pub fn diagonal_section(spec: &ModelSpec, c: f64) -> Vec<f64> {
    let mut x = vec![c; spec.p];
    if spec.intercept {
        x[0] = 1.0;
    }
    x
}

/// Posterior mean conditional density on `y_grid` at covariate `x`, with a
/// pointwise equal-tailed band at `level`.
pub fn density_grid(
    spec: &ModelSpec,
    layout: &Layout,
    samples: &PosteriorSamples,
    x: &[f64],
    y_grid: &[f64],
    max_draws: Option<usize>,
    level: f64,
) -> Result<DensityGrid> {
    check_names(layout, samples)?;
    if y_grid.is_empty() || y_grid[0] < 0.0 || y_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("density grid must be non-negative and strictly increasing".into()));
    }
    let draws = pooled_draws(samples, max_draws);
    let mut values = vec![Vec::with_capacity(draws.len()); y_grid.len()];
    for theta in &draws {
        let params = predict_params(spec, &layout.unflatten(theta), x)?;
        for (k, &y) in y_grid.iter().enumerate() {
            values[k].push(params.pdf(y));
        }
    }
    let alpha = (1.0 - level) / 2.0;
    let mut grid = DensityGrid {
        x_section: x.to_vec(),
        y: y_grid.to_vec(),
        mean: Vec::with_capacity(y_grid.len()),
        lower: Vec::with_capacity(y_grid.len()),
        upper: Vec::with_capacity(y_grid.len()),
    };
    for v in &values {
        let s = sorted_copy(v);
        let m = mean(&s).clamp(s[0], s[s.len() - 1]);
        grid.mean.push(m);
        grid.lower.push(quantile_sorted(&s, alpha).min(m));
        grid.upper.push(quantile_sorted(&s, 1.0 - alpha).max(m));
    }
    Ok(grid)
}
