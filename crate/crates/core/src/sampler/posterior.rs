use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Target;
use crate::error::{Error, Result};
use crate::model::{
    lambda_log_density, Channel, CoefficientSet, Dataset, LambdaPrior, Layout, LinkFunction, ModelSpec,
    ModelVersion, PriorSpec,
};

/// Gamma full conditional `(shape, rate)` of λ under a λ ~ Ga(a, b) prior
/// with `m` penalized coefficients whose absolute values sum to `abs_sum`.
///
/// The Laplace density `(λ/4) exp(-λ|c|/2)` contributes `λ^m exp(-λ Σ|c|/2)`.
pub fn lambda_full_conditional(prior: &PriorSpec, m: usize, abs_sum: f64) -> (f64, f64) {
    (prior.a_lambda + m as f64, prior.b_lambda + 0.5 * abs_sum)
}

/// Starting point inside the support for any positive response:
/// κ = 1, σ = mean(y), ξ = 0.1 when an intercept (or a global tail
/// parameter) is available, all slopes 0, λ = a/b.
pub fn initial_coefficients(spec: &ModelSpec, prior: &PriorSpec, data: Option<&Dataset>) -> CoefficientSet {
    let mut coef = CoefficientSet::zeros(spec);
    coef.lambda = prior.a_lambda / prior.b_lambda;
    let Some(data) = data else {
        return coef;
    };
    let xi0: f64 = 0.1;
    let mean = data.y().iter().sum::<f64>() / data.n() as f64;
    let nu0 = (mean * (1.0 + xi0)).ln();
    let gamma0 = match spec.link_xi {
        LinkFunction::Exp => xi0.ln(),
        LinkFunction::Identity => xi0,
    };
    if spec.version == ModelVersion::BulkOnly || spec.intercept {
        coef.alpha[0] = nu0;
        coef.gamma[0] = gamma0;
    }
    coef
}

/// Regression posterior over the flat [`Layout`] vector. Without data the
/// likelihood is disabled and the target is the prior hierarchy.
pub struct PosteriorTarget<'a> {
    spec: &'a ModelSpec,
    prior: &'a PriorSpec,
    layout: Layout,
    data: Option<&'a Dataset>,
    shift_index: Option<usize>,
}

/// Per-row linear predictors and density pieces, with a staging area for the
/// pending single-coordinate move.
#[derive(Debug, Clone)]
pub struct PosteriorCache {
    /// Linear predictors for κ, ν, ξ.
    eta: [Vec<f64>; 3],
    log_h: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    log_g: Vec<f64>,
    staged_eta: Vec<f64>,
    staged_log_h: Vec<f64>,
    staged_v: Vec<f64>,
    staged_w: Vec<f64>,
    staged_log_g: Vec<f64>,
    loglik: f64,
    logprior: f64,
    staged: (f64, f64),
}

fn channel_slot(ch: Channel) -> usize {
    match ch {
        Channel::Kappa | Channel::KappaShift => 0,
        Channel::Nu => 1,
        Channel::Xi => 2,
        Channel::Lambda => unreachable!("lambda has no linear predictor"),
    }
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(spec: &'a ModelSpec, prior: &'a PriorSpec, data: &'a Dataset) -> Result<Self> {
        if data.p() != spec.p {
            return Err(Error::Config(format!(
                "model expects {} design columns, data has {}",
                spec.p,
                data.p()
            )));
        }
        if spec.intercept != data.has_intercept() {
            return Err(Error::Config("model and data disagree on the intercept column".into()));
        }
        Self::build(spec, prior, spec.layout(data.column_names())?, Some(data))
    }

    /// Likelihood switched off; `column_names` label the design columns.
    pub fn prior_only(spec: &'a ModelSpec, prior: &'a PriorSpec, column_names: &[String]) -> Result<Self> {
        Self::build(spec, prior, spec.layout(column_names)?, None)
    }

    fn build(spec: &'a ModelSpec, prior: &'a PriorSpec, layout: Layout, data: Option<&'a Dataset>) -> Result<Self> {
        prior.validate()?;
        let shift_index = layout.coords.iter().position(|c| c.channel == Channel::KappaShift);
        Ok(Self { spec, prior, layout, data, shift_index })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.layout.flatten(&initial_coefficients(self.spec, self.prior, self.data))
    }

    fn shift(&self, theta: &[f64]) -> f64 {
        self.shift_index.map_or(0.0, |k| theta[k])
    }

    fn fill_predictors(&self, data: &Dataset, theta: &[f64], eta: &mut [Vec<f64>; 3]) {
        let p = data.p();
        let x = data.x();
        for e in eta.iter_mut() {
            e.iter_mut().for_each(|v| *v = 0.0);
        }
        for (j, coord) in self.layout.coords.iter().enumerate() {
            if matches!(coord.channel, Channel::Lambda | Channel::KappaShift) {
                continue;
            }
            let slot = channel_slot(coord.channel);
            let c = theta[j];
            match coord.column {
                Some(col) => {
                    for (i, e) in eta[slot].iter_mut().enumerate() {
                        *e += c * x[i * p + col];
                    }
                }
                None => eta[slot].iter_mut().for_each(|e| *e += c),
            }
        }
    }

    /// Row pieces from the predictors; `Err(i)` names the first bad row.
    fn fill_rows(&self, data: &Dataset, cache: &mut PosteriorCache, shift: f64) -> std::result::Result<f64, usize> {
        let mut total = 0.0;
        for (i, &y) in data.y().iter().enumerate() {
            let gpd = self.spec.gpd_from_predictors(cache.eta[1][i], cache.eta[2][i]).ok_or(i)?;
            let carrier = self.spec.carrier_from_predictor(cache.eta[0][i], shift).ok_or(i)?;
            let log_h = gpd.log_pdf(y);
            let v = gpd.cdf_nonneg(y);
            let w = gpd.sf(y);
            let log_g = carrier.log_density_split(v, w);
            if !(log_h + log_g > f64::NEG_INFINITY) {
                return Err(i);
            }
            cache.log_h[i] = log_h;
            cache.v[i] = v;
            cache.w[i] = w;
            cache.log_g[i] = log_g;
            total += log_h + log_g;
        }
        Ok(total)
    }

    fn eval_kappa(&self, cache: &mut PosteriorCache, data: &Dataset, col: Option<usize>, delta: f64, shift: f64) -> f64 {
        let p = data.p();
        let x = data.x();
        let mut total = 0.0;
        for i in 0..data.n() {
            let e = match col {
                Some(c) => cache.eta[0][i] + delta * x[i * p + c],
                None => cache.eta[0][i],
            };
            let Some(carrier) = self.spec.carrier_from_predictor(e, shift) else {
                return f64::NEG_INFINITY;
            };
            let lg = carrier.log_density_split(cache.v[i], cache.w[i]);
            if !(lg > f64::NEG_INFINITY) {
                return f64::NEG_INFINITY;
            }
            cache.staged_eta[i] = e;
            cache.staged_log_g[i] = lg;
            total += cache.log_h[i] + lg;
        }
        total
    }

    fn eval_tail(&self, cache: &mut PosteriorCache, data: &Dataset, slot: usize, col: Option<usize>, delta: f64, shift: f64) -> f64 {
        let p = data.p();
        let x = data.x();
        let mut total = 0.0;
        for (i, &y) in data.y().iter().enumerate() {
            let e = match col {
                Some(c) => cache.eta[slot][i] + delta * x[i * p + c],
                None => cache.eta[slot][i] + delta,
            };
            let (en, ex) = if slot == 1 { (e, cache.eta[2][i]) } else { (cache.eta[1][i], e) };
            let Some(gpd) = self.spec.gpd_from_predictors(en, ex) else {
                return f64::NEG_INFINITY;
            };
            let log_h = gpd.log_pdf(y);
            if log_h == f64::NEG_INFINITY {
                return log_h;
            }
            let Some(carrier) = self.spec.carrier_from_predictor(cache.eta[0][i], shift) else {
                return f64::NEG_INFINITY;
            };
            let v = gpd.cdf_nonneg(y);
            let w = gpd.sf(y);
            let lg = carrier.log_density_split(v, w);
            if !(lg > f64::NEG_INFINITY) {
                return f64::NEG_INFINITY;
            }
            cache.staged_eta[i] = e;
            cache.staged_log_h[i] = log_h;
            cache.staged_v[i] = v;
            cache.staged_w[i] = w;
            cache.staged_log_g[i] = lg;
            total += log_h + lg;
        }
        total
    }

    fn lambda_log_conditional(&self, log_lambda: f64, m: usize, abs_sum: f64) -> f64 {
        // log p(λ | c) in u = log λ, Jacobian included
        let lambda = log_lambda.exp();
        lambda_log_density(self.layout.lambda_prior, self.prior, lambda) + log_lambda + m as f64 * log_lambda
            - 0.5 * lambda * abs_sum
    }
}

impl Target for PosteriorTarget<'_> {
    type Cache = PosteriorCache;

    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn names(&self) -> Vec<String> {
        self.layout.names()
    }

    fn mh_coordinates(&self) -> Vec<usize> {
        (0..self.layout.lambda_index()).collect()
    }

    fn init(&self, theta: &[f64]) -> Result<(PosteriorCache, f64)> {
        let n = self.data.map_or(0, |d| d.n());
        let z = vec![0.0; n];
        let mut cache = PosteriorCache {
            eta: [z.clone(), z.clone(), z.clone()],
            log_h: z.clone(),
            v: z.clone(),
            w: z.clone(),
            log_g: z.clone(),
            staged_eta: z.clone(),
            staged_log_h: z.clone(),
            staged_v: z.clone(),
            staged_w: z.clone(),
            staged_log_g: z,
            loglik: 0.0,
            logprior: 0.0,
            staged: (0.0, 0.0),
        };
        let lambda = theta[self.layout.lambda_index()];
        if lambda_log_density(self.layout.lambda_prior, self.prior, lambda) == f64::NEG_INFINITY {
            return Err(Error::Numerical(format!("initial lambda {lambda} is outside the prior support")));
        }
        for j in 0..self.layout.lambda_index() {
            if !self.layout.coordinate_log_prior(self.prior, lambda, j, theta[j]).is_finite() {
                return Err(Error::Numerical(format!(
                    "initial value {} of {} has zero prior density",
                    theta[j], self.layout.coords[j].name
                )));
            }
        }
        cache.logprior = self.layout.log_prior(self.prior, theta);
        if let Some(data) = self.data {
            self.fill_predictors(data, theta, &mut cache.eta);
            cache.loglik = self.fill_rows(data, &mut cache, self.shift(theta)).map_err(|i| {
                Error::Numerical(format!(
                    "initial log-likelihood is not finite: row {} (y = {}) has inadmissible parameters \
                     (kappa, nu, xi predictors {}, {}, {})",
                    i + 1,
                    data.y()[i],
                    cache.eta[0][i],
                    cache.eta[1][i],
                    cache.eta[2][i]
                ))
            })?;
        }
        let lp = cache.loglik + cache.logprior;
        Ok((cache, lp))
    }

    fn eval_move(&self, cache: &mut PosteriorCache, theta: &[f64], j: usize, value: f64) -> f64 {
        let lambda = theta[self.layout.lambda_index()];
        let new_prior = self.layout.coordinate_log_prior(self.prior, lambda, j, value);
        if new_prior == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let logprior = cache.logprior - self.layout.coordinate_log_prior(self.prior, lambda, j, theta[j]) + new_prior;
        let loglik = match self.data {
            None => 0.0,
            Some(data) => {
                let coord = &self.layout.coords[j];
                let delta = value - theta[j];
                match coord.channel {
                    Channel::Kappa => self.eval_kappa(cache, data, coord.column, delta, self.shift(theta)),
                    Channel::KappaShift => self.eval_kappa(cache, data, None, 0.0, value),
                    Channel::Nu => self.eval_tail(cache, data, 1, coord.column, delta, self.shift(theta)),
                    Channel::Xi => self.eval_tail(cache, data, 2, coord.column, delta, self.shift(theta)),
                    Channel::Lambda => unreachable!("lambda is not a Metropolis coordinate"),
                }
            }
        };
        cache.staged = (loglik, logprior);
        loglik + logprior
    }

    fn commit_move(&self, cache: &mut PosteriorCache, theta: &mut [f64], j: usize, value: f64) {
        theta[j] = value;
        (cache.loglik, cache.logprior) = cache.staged;
        if self.data.is_none() {
            return;
        }
        let ch = self.layout.coords[j].channel;
        match ch {
            Channel::Kappa => {
                std::mem::swap(&mut cache.eta[0], &mut cache.staged_eta);
                std::mem::swap(&mut cache.log_g, &mut cache.staged_log_g);
            }
            Channel::KappaShift => std::mem::swap(&mut cache.log_g, &mut cache.staged_log_g),
            Channel::Nu | Channel::Xi => {
                std::mem::swap(&mut cache.eta[channel_slot(ch)], &mut cache.staged_eta);
                std::mem::swap(&mut cache.log_h, &mut cache.staged_log_h);
                std::mem::swap(&mut cache.v, &mut cache.staged_v);
                std::mem::swap(&mut cache.w, &mut cache.staged_w);
                std::mem::swap(&mut cache.log_g, &mut cache.staged_log_g);
            }
            Channel::Lambda => {}
        }
    }

    fn conditional_step<R: Rng + ?Sized>(
        &self,
        cache: &mut PosteriorCache,
        theta: &mut [f64],
        log_density: f64,
        rng: &mut R,
    ) -> (f64, Vec<(usize, bool)>) {
        let k = self.layout.lambda_index();
        let (m, abs_sum) = self.layout.penalized_abs_sum(self.prior, theta);
        let moved = match self.layout.lambda_prior {
            LambdaPrior::Lambda => {
                let (shape, rate) = lambda_full_conditional(self.prior, m, abs_sum);
                let draw = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters").sample(rng);
                // guard against a zero draw from an extreme shape
                theta[k] = draw.max(f64::MIN_POSITIVE);
                true
            }
            LambdaPrior::LambdaSquared => {
                let u = theta[k].ln();
                let step = 1.5 / (2.0 * self.prior.a_lambda + m as f64 + 1.0).sqrt();
                let z: f64 = StandardNormal.sample(rng);
                let prop = u + step * z;
                let log_ratio = self.lambda_log_conditional(prop, m, abs_sum) - self.lambda_log_conditional(u, m, abs_sum);
                if rng.random::<f64>().ln() < log_ratio {
                    theta[k] = prop.exp();
                    true
                } else {
                    false
                }
            }
        };
        if !moved {
            return (log_density, vec![(k, false)]);
        }
        cache.logprior = self.layout.log_prior(self.prior, theta);
        (cache.loglik + cache.logprior, vec![(k, true)])
    }

    fn refresh(&self, cache: &mut PosteriorCache, theta: &[f64], log_density: f64) -> f64 {
        let Some(data) = self.data else {
            cache.logprior = self.layout.log_prior(self.prior, theta);
            return cache.loglik + cache.logprior;
        };
        let mut eta = std::mem::take(&mut cache.eta);
        self.fill_predictors(data, theta, &mut eta);
        cache.eta = eta;
        match self.fill_rows(data, cache, self.shift(theta)) {
            Ok(ll) => {
                cache.loglik = ll;
                cache.logprior = self.layout.log_prior(self.prior, theta);
                cache.loglik + cache.logprior
            }
            Err(_) => log_density,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_posterior, CarrierFamily};
    use crate::sampler::{chain_rng, mh_update_coordinate, ChainState};

    fn toy_data() -> Dataset {
        let x = [0.2, -1.0, 0.5, 0.3, 1.1, -0.2, 0.0, 0.7, -0.6, 1.4];
        let y = vec![0.4, 2.5, 1.1, 0.2, 3.7];
        Dataset::with_intercept(&x, y, &["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn cached_density_tracks_log_posterior() {
        let data = toy_data();
        let prior = PriorSpec::default();
        for carrier in [CarrierFamily::Power, CarrierFamily::Beta, CarrierFamily::Mixture { pi: 0.4 }] {
            for link_xi in [LinkFunction::Exp, LinkFunction::Identity] {
                let mut spec = ModelSpec::canonical(3, true);
                spec.carrier = carrier;
                spec.link_xi = link_xi;
                let target = PosteriorTarget::new(&spec, &prior, &data).unwrap();
                let mut state = ChainState::new(&target, target.initial_state()).unwrap();
                let mut rng = chain_rng(5, 0);
                for _ in 0..40 {
                    for j in target.mh_coordinates() {
                        mh_update_coordinate(&target, &mut state, j, &mut rng);
                    }
                    let (lp, _) =
                        target.conditional_step(&mut state.cache, &mut state.theta, state.log_density, &mut rng);
                    state.log_density = lp;
                    let coef = target.layout().unflatten(&state.theta);
                    let exact = log_posterior(&spec, &prior, &coef, &data);
                    assert!((state.log_density - exact).abs() < 1e-9 * exact.abs().max(1.0), "{carrier:?}");
                }
            }
        }
    }

    #[test]
    fn rejects_identity_region_violation() {
        let data = toy_data();
        let prior = PriorSpec::default();
        let mut spec = ModelSpec::canonical(3, true);
        spec.link_xi = LinkFunction::Identity;
        let target = PosteriorTarget::new(&spec, &prior, &data).unwrap();
        let mut state = ChainState::new(&target, target.initial_state()).unwrap();
        let j = target.layout().names().iter().position(|n| n == "gamma.intercept").unwrap();
        let before = state.theta.clone();
        assert_eq!(target.eval_move(&mut state.cache, &state.theta, j, -0.6), f64::NEG_INFINITY);
        assert_eq!(state.theta, before);
        let mut bad = before.clone();
        bad[j] = -0.6;
        assert!(ChainState::new(&target, bad).is_err());
    }

    #[test]
    fn gibbs_rate_is_linear_in_abs_sum() {
        let prior = PriorSpec::default();
        let (s0, r0) = lambda_full_conditional(&prior, 4, 0.0);
        assert_eq!((s0, r0), (4.1, 0.1));
        let (_, r1) = lambda_full_conditional(&prior, 4, 3.0);
        let (_, r2) = lambda_full_conditional(&prior, 4, 6.0);
        assert_eq!(r2 - r0, 2.0 * (r1 - r0));
    }

    #[test]
    fn init_error_names_the_row() {
        let mut spec = ModelSpec::canonical(3, true);
        spec.link_xi = LinkFunction::Identity;
        let data = toy_data();
        let prior = PriorSpec::default();
        let target = PosteriorTarget::new(&spec, &prior, &data).unwrap();
        let mut theta = target.initial_state();
        let j = target.layout().names().iter().position(|n| n == "gamma.intercept").unwrap();
        // small ν with ξ < 0 puts the upper endpoint below the largest observation
        theta[j] = -0.45;
        let a = target.layout().names().iter().position(|n| n == "alpha.intercept").unwrap();
        theta[a] = -3.0;
        let err = ChainState::new(&target, theta).unwrap_err();
        assert!(err.to_string().contains("row"), "{err}");
    }

    #[test]
    fn initial_state_is_inside_support() {
        let data = toy_data();
        let prior = PriorSpec::default();
        let mut spec = ModelSpec::canonical(3, true);
        spec.version = ModelVersion::BulkOnly;
        let target = PosteriorTarget::new(&spec, &prior, &data).unwrap();
        let coef = target.layout().unflatten(&target.initial_state());
        assert_eq!(coef.lambda, 1.0);
        let mean = data.y().iter().sum::<f64>() / 5.0;
        let params = crate::model::predict_params(&spec, &coef, data.row(0)).unwrap();
        assert!((params.gpd.sigma - mean).abs() < 1e-12);
        assert!((params.gpd.xi - 0.1).abs() < 1e-12);
        assert!(ChainState::new(&target, target.initial_state()).is_ok());
    }
}
