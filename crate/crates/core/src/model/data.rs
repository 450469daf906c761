use serde::{Deserialize, Serialize};

use super::{CoefficientSet, ModelSpec, ModelVersion};
use crate::error::{Error, Result};

/// Design matrix (row-major, n × p) and strictly positive response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    column_names: Vec<String>,
    intercept: bool,
    standardization: Option<StandardizationStats>,
}

/// Per-column centring and scaling applied by [`Dataset::standardize`].
/// The intercept column carries mean 0 and sd 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Dataset {
    /// `x` is row-major with `column_names.len()` columns. With `intercept`
    /// set, column 0 must be all ones.
    pub fn new(x: Vec<f64>, y: Vec<f64>, column_names: Vec<String>, intercept: bool) -> Result<Self> {
        let p = column_names.len();
        let n = y.len();
        if n == 0 {
            return Err(Error::data("dataset has no observations"));
        }
        if p == 0 {
            return Err(Error::data("dataset has no design columns"));
        }
        if x.len() != n * p {
            return Err(Error::data(format!("design has {} entries, expected {n} x {p}", x.len())));
        }
        if let Some(i) = y.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::data(format!("response in row {} must be finite and > 0, got {}", i + 1, y[i])));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite covariate in row {}", k / p + 1)));
        }
        if intercept {
            if let Some(i) = (0..n).find(|&i| x[i * p] != 1.0) {
                return Err(Error::data(format!("intercept column is not 1 in row {}", i + 1)));
            }
        }
        Ok(Self {
            x,
            y,
            column_names,
            intercept,
            standardization: None,
        })
    }

    /// Prepend an all-ones column named `intercept`.
    pub fn with_intercept(x_without: &[f64], y: Vec<f64>, names_without: &[String]) -> Result<Self> {
        let p0 = names_without.len();
        if p0 == 0 || x_without.len() % p0 != 0 {
            return Err(Error::data("design shape mismatch"));
        }
        let n = x_without.len() / p0;
        let mut x = Vec::with_capacity(n * (p0 + 1));
        for row in x_without.chunks(p0) {
            x.push(1.0);
            x.extend_from_slice(row);
        }
        let mut names = vec!["intercept".to_string()];
        names.extend(names_without.iter().cloned());
        Self::new(x, y, names, true)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.column_names.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x[i * self.p() + j]).collect()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn standardization(&self) -> Option<&StandardizationStats> {
        self.standardization.as_ref()
    }

    /// Copy with a new response vector (same design).
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.x.clone(), y, self.column_names.clone(), self.intercept)?;
        out.standardization = self.standardization.clone();
        Ok(out)
    }

    /// Replace every non-intercept column by `(x - mean) / sd` (sample sd,
    /// n - 1 denominator). Constant columns are an error.
    pub fn standardize(&self) -> Result<Dataset> {
        let n = self.n();
        let p = self.p();
        if n < 2 {
            return Err(Error::data("standardization needs at least two observations"));
        }
        let mut means = vec![0.0; p];
        let mut sds = vec![1.0; p];
        for j in 0..p {
            if self.intercept && j == 0 {
                continue;
            }
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            if !(sd > 0.0) || sd <= 1e-12 * mean.abs() {
                return Err(Error::data(format!(
                    "column '{}' has zero variance and cannot be standardized",
                    self.column_names[j]
                )));
            }
            means[j] = mean;
            sds[j] = sd;
        }
        let mut x = self.x.clone();
        for i in 0..n {
            for j in 0..p {
                x[i * p + j] = (x[i * p + j] - means[j]) / sds[j];
            }
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            column_names: self.column_names.clone(),
            intercept: self.intercept,
            standardization: Some(StandardizationStats { means, sds }),
        })
    }
}

impl StandardizationStats {
    /// Raw-scale covariate vector to the standardized scale.
    pub fn apply(&self, x_raw: &[f64]) -> Vec<f64> {
        x_raw
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    fn channel_to_raw(&self, coef: &[f64], intercept: bool) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = coef.iter().zip(&self.sds).map(|(c, s)| c / s).collect();
        let shift: f64 = coef.iter().zip(self.means.iter().zip(&self.sds)).map(|(c, (m, s))| c * m / s).sum();
        if intercept {
            out[0] = coef[0] - shift;
        } else if shift != 0.0 {
            return Err(Error::Config("back-transforming centred covariates needs an intercept column".into()));
        }
        Ok(out)
    }

    /// Coefficients acting on raw covariates that reproduce the linear
    /// predictors of `coef` acting on standardized covariates.
    pub fn to_raw_coefficients(&self, spec: &ModelSpec, coef: &CoefficientSet) -> Result<CoefficientSet> {
        coef.check_dims(spec)?;
        let mut raw = coef.clone();
        raw.beta = self.channel_to_raw(&coef.beta, spec.intercept)?;
        if spec.version == ModelVersion::Full {
            raw.alpha = self.channel_to_raw(&coef.alpha, spec.intercept)?;
            raw.gamma = self.channel_to_raw(&coef.gamma, spec.intercept)?;
        }
        Ok(raw)
    }
}
