use serde::{Deserialize, Serialize};

use super::{
    lambda_log_density, laplace_log_density, normal_log_density, CarrierFamily, CoefficientSet, LambdaPrior,
    ModelSpec, ModelVersion, PriorSpec,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Kappa,
    KappaShift,
    Nu,
    Xi,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateRole {
    /// Laplace prior.
    Slope,
    /// Normal prior unless intercepts are penalized.
    Intercept,
    /// Scalar parameter with a Normal prior (bulk-only tail values, mixture offset).
    Global,
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    pub channel: Channel,
    /// Design column multiplied by this coefficient; `None` for constants.
    pub column: Option<usize>,
    pub role: CoordinateRole,
}

/// Flat ordering of every sampled quantity:
/// `beta.*`, optional `beta.kappa2_shift`, `alpha.*`, `gamma.*`, `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub coords: Vec<Coordinate>,
    pub lambda_prior: LambdaPrior,
    p: usize,
    version: ModelVersion,
    has_shift: bool,
}

impl Layout {
    pub fn new(spec: &ModelSpec, column_names: &[String]) -> Result<Self> {
        spec.validate()?;
        if column_names.len() != spec.p {
            return Err(Error::Config(format!(
                "{} column names given for {} design columns",
                column_names.len(),
                spec.p
            )));
        }
        let role_for = |j: usize| {
            if spec.intercept && j == 0 {
                CoordinateRole::Intercept
            } else {
                CoordinateRole::Slope
            }
        };
        let mut coords = Vec::new();
        let channel = |prefix: &str, channel: Channel, coords: &mut Vec<Coordinate>| {
            for (j, col) in column_names.iter().enumerate() {
                coords.push(Coordinate {
                    name: format!("{prefix}.{col}"),
                    channel,
                    column: Some(j),
                    role: role_for(j),
                });
            }
        };
        channel("beta", Channel::Kappa, &mut coords);
        let has_shift = matches!(spec.carrier, CarrierFamily::Mixture { .. });
        if has_shift {
            coords.push(Coordinate {
                name: "beta.kappa2_shift".into(),
                channel: Channel::KappaShift,
                column: None,
                role: CoordinateRole::Global,
            });
        }
        match spec.version {
            ModelVersion::Full => {
                channel("alpha", Channel::Nu, &mut coords);
                channel("gamma", Channel::Xi, &mut coords);
            }
            ModelVersion::BulkOnly => {
                for (name, ch) in [("alpha.global", Channel::Nu), ("gamma.global", Channel::Xi)] {
                    coords.push(Coordinate {
                        name: name.into(),
                        channel: ch,
                        column: None,
                        role: CoordinateRole::Global,
                    });
                }
            }
        }
        coords.push(Coordinate {
            name: "lambda".into(),
            channel: Channel::Lambda,
            column: None,
            role: CoordinateRole::Lambda,
        });
        Ok(Self {
            coords,
            lambda_prior: spec.lambda_prior,
            p: spec.p,
            version: spec.version,
            has_shift,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn lambda_index(&self) -> usize {
        self.coords.len() - 1
    }

    fn tail_len(&self) -> usize {
        match self.version {
            ModelVersion::Full => self.p,
            ModelVersion::BulkOnly => 1,
        }
    }

    pub fn flatten(&self, coef: &CoefficientSet) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.len());
        theta.extend_from_slice(&coef.beta);
        if self.has_shift {
            theta.push(coef.kappa2_shift.unwrap_or(-0.5));
        }
        theta.extend_from_slice(&coef.alpha);
        theta.extend_from_slice(&coef.gamma);
        theta.push(coef.lambda);
        theta
    }

    pub fn unflatten(&self, theta: &[f64]) -> CoefficientSet {
        let p = self.p;
        let t = self.tail_len();
        let mut at = 0;
        let mut take = |k: usize| {
            let s = theta[at..at + k].to_vec();
            at += k;
            s
        };
        let beta = take(p);
        let kappa2_shift = if self.has_shift { Some(take(1)[0]) } else { None };
        let alpha = take(t);
        let gamma = take(t);
        let lambda = take(1)[0];
        CoefficientSet { beta, alpha, gamma, lambda, kappa2_shift }
    }

    /// Whether coordinate `j` carries a Laplace prior.
    #[inline]
    pub fn is_penalized(&self, prior: &PriorSpec, j: usize) -> bool {
        match self.coords[j].role {
            CoordinateRole::Slope => true,
            CoordinateRole::Intercept => prior.penalize_intercept,
            CoordinateRole::Global | CoordinateRole::Lambda => false,
        }
    }

    /// `(m, Σ|c_j|)` over the penalized coordinates.
    pub fn penalized_abs_sum(&self, prior: &PriorSpec, theta: &[f64]) -> (usize, f64) {
        let mut m = 0;
        let mut s = 0.0;
        for j in 0..self.len() {
            if self.is_penalized(prior, j) {
                m += 1;
                s += theta[j].abs();
            }
        }
        (m, s)
    }

    /// Prior log density of coefficient `j` at `value` given `lambda`.
    ///
    /// The mixture offset is half-Normal on `(-∞, 0)`.
    #[inline]
    pub fn coordinate_log_prior(&self, prior: &PriorSpec, lambda: f64, j: usize, value: f64) -> f64 {
        if self.is_penalized(prior, j) {
            return laplace_log_density(lambda, value);
        }
        if self.coords[j].channel == Channel::KappaShift {
            return if value < 0.0 {
                normal_log_density(prior.intercept_sd, value) + std::f64::consts::LN_2
            } else {
                f64::NEG_INFINITY
            };
        }
        normal_log_density(prior.intercept_sd, value)
    }

    /// Full log prior of a flat parameter vector.
    pub fn log_prior(&self, prior: &PriorSpec, theta: &[f64]) -> f64 {
        let lambda = theta[self.lambda_index()];
        let mut total = lambda_log_density(self.lambda_prior, prior, lambda);
        if total == f64::NEG_INFINITY {
            return total;
        }
        for j in 0..self.lambda_index() {
            total += self.coordinate_log_prior(prior, lambda, j, theta[j]);
        }
        total
    }
}
