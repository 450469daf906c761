//! Covariate-indexed EGPD regression.
//!
//! Three linear predictors drive the conditional distribution:
//!
//! ```text
//! κ(x) = k(xᵀβ),   ν(x) = ℓ(xᵀα),   ξ(x) = μ(xᵀγ),   σ(x) = ν(x) / (1 + ξ(x))
//! ```
//!
//! `ν = σ(1 + ξ)` is the quasi-orthogonal tail parametrization. In the
//! bulk-only version `α` and `γ` collapse to scalar intercepts so only the
//! carrier depends on `x`.
//!
//! Coefficients get independent Laplace priors with rate λ/2,
//! `π(c) = (λ/4) exp(-λ|c|/2)`, intercepts get a wide Normal prior, and λ a
//! Gamma hyperprior.

mod data;
mod layout;

use serde::{Deserialize, Serialize};

pub use data::{Dataset, StandardizationStats};
pub use layout::{Channel, Coordinate, CoordinateRole, Layout};

use crate::egpd::{Carrier, EgpdParams, GpdParams};
use crate::error::{Error, Result};

/// Smallest admissible ξ(x) under the identity link.
pub const XI_LOWER_BOUND: f64 = -0.5 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Exp,
    Identity,
}

impl LinkFunction {
    #[inline]
    pub fn apply(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Exp => eta.exp(),
            LinkFunction::Identity => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CarrierFamily {
    Power,
    Beta,
    /// Two-power mixture with fixed weight `pi` on the larger exponent.
    Mixture { pi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVersion {
    /// Only κ depends on the covariates; σ and ξ are global.
    BulkOnly,
    /// κ, ν and ξ all depend on the covariates.
    Full,
}

/// Which quantity carries the Gamma(a, b) hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaPrior {
    Lambda,
    LambdaSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub carrier: CarrierFamily,
    pub link_kappa: LinkFunction,
    pub link_nu: LinkFunction,
    pub link_xi: LinkFunction,
    pub version: ModelVersion,
    /// Number of design columns, intercept included.
    pub p: usize,
    /// Column 0 of the design is an all-ones intercept.
    pub intercept: bool,
    pub lambda_prior: LambdaPrior,
}

impl ModelSpec {
    /// Power carrier, exponential links everywhere, full version.
    pub fn canonical(p: usize, intercept: bool) -> Self {
        Self {
            carrier: CarrierFamily::Power,
            link_kappa: LinkFunction::Exp,
            link_nu: LinkFunction::Exp,
            link_xi: LinkFunction::Exp,
            version: ModelVersion::Full,
            p,
            intercept,
            lambda_prior: LambdaPrior::Lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("model needs at least one design column".into()));
        }
        if self.link_kappa != LinkFunction::Exp || self.link_nu != LinkFunction::Exp {
            return Err(Error::Config("the kappa and nu channels require the exp link".into()));
        }
        if let CarrierFamily::Mixture { pi } = self.carrier {
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::Config(format!("mixture weight must lie in (0, 1), got {pi}")));
            }
        }
        Ok(())
    }

    pub fn layout(&self, column_names: &[String]) -> Result<Layout> {
        Layout::new(self, column_names)
    }

    /// Map the three linear predictors (plus the mixture offset) to an EGPD.
    ///
    /// Returns `None` when the implied parameters leave the admissible region.
    #[inline]
    pub(crate) fn params_from_predictors(
        &self,
        eta_kappa: f64,
        eta_nu: f64,
        eta_xi: f64,
        kappa2_shift: f64,
    ) -> Option<EgpdParams> {
        let gpd = self.gpd_from_predictors(eta_nu, eta_xi)?;
        let carrier = self.carrier_from_predictor(eta_kappa, kappa2_shift)?;
        Some(EgpdParams { carrier, gpd })
    }

    #[inline]
    pub(crate) fn gpd_from_predictors(&self, eta_nu: f64, eta_xi: f64) -> Option<GpdParams> {
        let xi = self.link_xi.apply(eta_xi);
        if self.link_xi == LinkFunction::Identity && !(xi > XI_LOWER_BOUND) {
            return None;
        }
        let nu = self.link_nu.apply(eta_nu);
        let sigma = nu / (1.0 + xi);
        if !(sigma > 0.0 && sigma.is_finite() && xi.is_finite()) {
            return None;
        }
        Some(GpdParams { sigma, xi })
    }

    #[inline]
    pub(crate) fn carrier_from_predictor(&self, eta_kappa: f64, kappa2_shift: f64) -> Option<Carrier> {
        let kappa = self.link_kappa.apply(eta_kappa);
        if !(kappa > 0.0 && kappa.is_finite()) {
            return None;
        }
        Some(match self.carrier {
            CarrierFamily::Power => Carrier::Power { kappa },
            CarrierFamily::Beta => Carrier::Beta { kappa },
            CarrierFamily::Mixture { pi } => {
                if !(kappa2_shift < 0.0) {
                    return None;
                }
                let kappa2 = self.link_kappa.apply(eta_kappa + kappa2_shift);
                if !(kappa2 > 0.0) {
                    return None;
                }
                Carrier::Mixture { pi, kappa1: kappa, kappa2 }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub a_lambda: f64,
    pub b_lambda: f64,
    /// Standard deviation of the Normal(0, sd²) prior on unpenalized intercepts.
    pub intercept_sd: f64,
    pub penalize_intercept: bool,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            a_lambda: 0.1,
            b_lambda: 0.1,
            intercept_sd: 100.0,
            penalize_intercept: false,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("intercept_sd", self.intercept_sd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("prior {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Regression coefficients for the three channels plus the shrinkage λ.
///
/// In the bulk-only version `alpha` and `gamma` have length one and hold the
/// global link-scale values of ν and ξ. `kappa2_shift` is present only for
/// the mixture carrier: `κ₂(x) = k(xᵀβ + shift)` with `shift < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub kappa2_shift: Option<f64>,
}

impl CoefficientSet {
    /// All coefficients zero, λ = 1.
    pub fn zeros(spec: &ModelSpec) -> Self {
        let tail_len = match spec.version {
            ModelVersion::Full => spec.p,
            ModelVersion::BulkOnly => 1,
        };
        Self {
            beta: vec![0.0; spec.p],
            alpha: vec![0.0; tail_len],
            gamma: vec![0.0; tail_len],
            lambda: 1.0,
            kappa2_shift: matches!(spec.carrier, CarrierFamily::Mixture { .. }).then_some(-0.5),
        }
    }

    pub fn check_dims(&self, spec: &ModelSpec) -> Result<()> {
        let tail_len = match spec.version {
            ModelVersion::Full => spec.p,
            ModelVersion::BulkOnly => 1,
        };
        if self.beta.len() != spec.p || self.alpha.len() != tail_len || self.gamma.len() != tail_len {
            return Err(Error::Config(format!(
                "coefficient lengths ({}, {}, {}) do not match the model (p = {}, {:?})",
                self.beta.len(),
                self.alpha.len(),
                self.gamma.len(),
                spec.p,
                spec.version
            )));
        }
        let is_mixture = matches!(spec.carrier, CarrierFamily::Mixture { .. });
        if is_mixture != self.kappa2_shift.is_some() {
            return Err(Error::Config("kappa2_shift must be set exactly for the mixture carrier".into()));
        }
        Ok(())
    }

    fn predictors(&self, spec: &ModelSpec, x: &[f64]) -> (f64, f64, f64) {
        let dot = |c: &[f64]| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let eta_kappa = dot(&self.beta);
        match spec.version {
            ModelVersion::Full => (eta_kappa, dot(&self.alpha), dot(&self.gamma)),
            ModelVersion::BulkOnly => (eta_kappa, self.alpha[0], self.gamma[0]),
        }
    }
}

/// Conditional EGPD at covariate vector `x`.
///
/// Fails with [`Error::InvalidRegion`] when ξ(x) ≤ -1/2 under the identity
/// link, when the mixture ordering is violated, or on overflow.
pub fn predict_params(spec: &ModelSpec, coef: &CoefficientSet, x: &[f64]) -> Result<EgpdParams> {
    coef.check_dims(spec)?;
    if x.len() != spec.p {
        return Err(Error::Config(format!("covariate vector has length {}, expected {}", x.len(), spec.p)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("covariates must be finite".into()));
    }
    let (ek, en, ex) = coef.predictors(spec, x);
    spec.params_from_predictors(ek, en, ex, coef.kappa2_shift.unwrap_or(0.0))
        .ok_or_else(|| {
            Error::InvalidRegion(format!(
                "predictors (kappa: {ek}, nu: {en}, xi: {ex}) give inadmissible parameters"
            ))
        })
}

/// `Σᵢ log f(yᵢ | xᵢ)`; `-∞` if any observation is outside the support or any
/// row's parameters are inadmissible.
pub fn log_likelihood(spec: &ModelSpec, coef: &CoefficientSet, data: &Dataset) -> f64 {
    let shift = coef.kappa2_shift.unwrap_or(0.0);
    let mut total = 0.0;
    for (i, &y) in data.y().iter().enumerate() {
        let (ek, en, ex) = coef.predictors(spec, data.row(i));
        let Some(params) = spec.params_from_predictors(ek, en, ex, shift) else {
            return f64::NEG_INFINITY;
        };
        let l = params.log_pdf(y);
        if !(l > f64::NEG_INFINITY) {
            return f64::NEG_INFINITY;
        }
        total += l;
    }
    total
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub(crate) fn laplace_log_density(lambda: f64, c: f64) -> f64 {
    (lambda / 4.0).ln() - 0.5 * lambda * c.abs()
}

#[inline]
pub(crate) fn normal_log_density(sd: f64, c: f64) -> f64 {
    -LN_SQRT_2PI - sd.ln() - 0.5 * (c / sd) * (c / sd)
}

/// Log hyperprior density of λ under either parametrization.
pub(crate) fn lambda_log_density(kind: LambdaPrior, prior: &PriorSpec, lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (prior.a_lambda, prior.b_lambda);
    let norm = a * b.ln() - statrs::function::gamma::ln_gamma(a);
    match kind {
        LambdaPrior::Lambda => norm + (a - 1.0) * lambda.ln() - b * lambda,
        // λ² ~ Ga(a, b), so p(λ) = Ga(λ²) · 2λ
        LambdaPrior::LambdaSquared => {
            norm + (a - 1.0) * 2.0 * lambda.ln() - b * lambda * lambda + std::f64::consts::LN_2 + lambda.ln()
        }
    }
}

/// Laplace terms for penalized coefficients, Normal terms for intercepts and
/// the λ hyperprior. `-∞` for λ ≤ 0.
pub fn log_prior(spec: &ModelSpec, prior: &PriorSpec, coef: &CoefficientSet) -> f64 {
    let names: Vec<String> = (0..spec.p).map(|j| format!("x{j}")).collect();
    let Ok(layout) = Layout::new(spec, &names) else {
        return f64::NEG_INFINITY;
    };
    if coef.check_dims(spec).is_err() {
        return f64::NEG_INFINITY;
    }
    layout.log_prior(prior, &layout.flatten(coef))
}

pub fn log_posterior(spec: &ModelSpec, prior: &PriorSpec, coef: &CoefficientSet, data: &Dataset) -> f64 {
    let lp = log_prior(spec, prior, coef);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(spec, coef, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_row(x: Vec<f64>, y: f64) -> Dataset {
        let p = x.len();
        Dataset::new(x, vec![y], (0..p).map(|j| format!("x{j}")).collect(), false).unwrap()
    }

    #[test]
    fn zero_coefficients() {
        let spec = ModelSpec::canonical(3, false);
        let coef = CoefficientSet::zeros(&spec);
        let p = predict_params(&spec, &coef, &[0.2, 0.5, 0.9]).unwrap();
        assert_eq!(p.carrier, Carrier::Power { kappa: 1.0 });
        assert_eq!(p.gpd.xi, 1.0);
        assert_eq!(p.gpd.sigma, 0.5);
    }

    #[test]
    fn scenario_coefficient() {
        let spec = ModelSpec::canonical(10, false);
        let mut coef = CoefficientSet::zeros(&spec);
        coef.beta[0] = 0.3;
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        let p = predict_params(&spec, &coef, &x).unwrap();
        let Carrier::Power { kappa } = p.carrier else { unreachable!() };
        assert!((kappa - 1.3498588075760032).abs() < 1e-15);
    }

    #[test]
    fn identity_link_region() {
        let mut spec = ModelSpec::canonical(1, false);
        spec.link_xi = LinkFunction::Identity;
        let mut coef = CoefficientSet::zeros(&spec);
        coef.gamma[0] = -0.6;
        assert!(matches!(predict_params(&spec, &coef, &[1.0]), Err(Error::InvalidRegion(_))));
        coef.gamma[0] = -0.4;
        let p = predict_params(&spec, &coef, &[1.0]).unwrap();
        assert!((p.gpd.sigma * (1.0 + p.gpd.xi) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nu_roundtrip() {
        let spec = ModelSpec::canonical(2, false);
        let coef = CoefficientSet {
            beta: vec![0.1, -0.2],
            alpha: vec![0.7, 0.3],
            gamma: vec![-1.1, 0.4],
            lambda: 1.0,
            kappa2_shift: None,
        };
        let x = [0.3, 0.8];
        let p = predict_params(&spec, &coef, &x).unwrap();
        let nu = (0.7f64 * 0.3 + 0.3 * 0.8).exp();
        assert!((p.gpd.sigma * (1.0 + p.gpd.xi) - nu).abs() < 1e-15 * nu.max(1.0) * 4.0);
    }

    #[test]
    fn single_observation_likelihood() {
        let spec = ModelSpec::canonical(1, false);
        let coef = CoefficientSet::zeros(&spec);
        let data = one_row(vec![0.4], 1.0);
        let ll = log_likelihood(&spec, &coef, &data);
        // h(1) = (1/σ)(1 + ξ y/σ)^(-1/ξ - 1) = 2 · 3^(-2) with σ = 0.5, ξ = 1
        assert!((ll - (2.0f64 / 9.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn likelihood_outside_support() {
        let mut spec = ModelSpec::canonical(1, false);
        spec.link_xi = LinkFunction::Identity;
        let mut coef = CoefficientSet::zeros(&spec);
        coef.gamma[0] = -0.4;
        // ν = 1, ξ = -0.4 ⇒ σ = 1/0.6, right endpoint σ/0.4 ≈ 4.17
        let data = one_row(vec![1.0], 5.0);
        assert_eq!(log_likelihood(&spec, &coef, &data), f64::NEG_INFINITY);
    }

    #[test]
    fn laplace_term_at_zero() {
        let spec = ModelSpec::canonical(1, false);
        let mut prior = PriorSpec::default();
        prior.a_lambda = 1.0;
        prior.b_lambda = 1.0;
        let mut coef = CoefficientSet::zeros(&spec);
        coef.lambda = 2.0;
        let gamma_term = lambda_log_density(LambdaPrior::Lambda, &prior, 2.0);
        // three penalized coefficients (β, α, γ), all zero
        let expected = 3.0 * 0.5f64.ln() + gamma_term;
        assert!((log_prior(&spec, &prior, &coef) - expected).abs() < 1e-14);
        assert!((gamma_term - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn prior_sign_symmetry_and_monotonicity() {
        let spec = ModelSpec::canonical(3, true);
        let prior = PriorSpec::default();
        let mut coef = CoefficientSet::zeros(&spec);
        coef.alpha[2] = 0.7;
        let a = log_prior(&spec, &prior, &coef);
        coef.alpha[2] = -0.7;
        assert_eq!(a, log_prior(&spec, &prior, &coef));
        coef.alpha[2] = -0.9;
        assert!(log_prior(&spec, &prior, &coef) < a);
    }

    #[test]
    fn prior_rejects_nonpositive_lambda() {
        let spec = ModelSpec::canonical(2, false);
        let mut coef = CoefficientSet::zeros(&spec);
        coef.lambda = 0.0;
        assert_eq!(log_prior(&spec, &PriorSpec::default(), &coef), f64::NEG_INFINITY);
        coef.lambda = -1.0;
        assert_eq!(log_prior(&spec, &PriorSpec::default(), &coef), f64::NEG_INFINITY);
    }

    #[test]
    fn lambda_squared_density_integrates() {
        let prior = PriorSpec { a_lambda: 2.0, b_lambda: 3.0, ..PriorSpec::default() };
        let h = 1e-4;
        let total: f64 = (1..200_000)
            .map(|k| lambda_log_density(LambdaPrior::LambdaSquared, &prior, k as f64 * h).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn mixture_ordering_enforced() {
        let mut spec = ModelSpec::canonical(1, false);
        spec.carrier = CarrierFamily::Mixture { pi: 0.4 };
        let mut coef = CoefficientSet::zeros(&spec);
        assert!(predict_params(&spec, &coef, &[0.5]).is_ok());
        coef.kappa2_shift = Some(0.1);
        assert!(predict_params(&spec, &coef, &[0.5]).is_err());
    }
}
