use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |ξ| every GPD routine switches to its exponential-limit form.
pub const XI_LIMIT_THRESHOLD: f64 = 1e-8;

/// Generalized Pareto distribution with lower endpoint 0.
///
/// `H(y) = 1 - (1 + ξ y / σ)^(-1/ξ)` on `{y > 0 : 1 + ξ y / σ > 0}`; the
/// ξ = 0 member is the exponential distribution with mean σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub sigma: f64,
    pub xi: f64,
}

impl GpdParams {
    pub fn new(sigma: f64, xi: f64) -> Result<Self> {
        let params = Self { sigma, xi };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("GPD scale must be positive, got {}", self.sigma)));
        }
        if !self.xi.is_finite() {
            return Err(Error::Domain(format!("GPD shape must be finite, got {}", self.xi)));
        }
        Ok(())
    }

    #[inline]
    fn near_exponential(&self) -> bool {
        self.xi.abs() < XI_LIMIT_THRESHOLD
    }

    /// Right endpoint of the support: `-σ/ξ` for ξ < 0, `+∞` otherwise.
    pub fn upper_endpoint(&self) -> f64 {
        if self.xi < 0.0 && !self.near_exponential() {
            -self.sigma / self.xi
        } else {
            f64::INFINITY
        }
    }

    /// `log1p(ξ y / σ) / ξ`, the cumulative hazard. `None` past the right endpoint.
    #[inline]
    fn cumulative_hazard(&self, y: f64) -> Option<f64> {
        let z = y / self.sigma;
        if self.near_exponential() {
            return Some(z);
        }
        let t = self.xi * z;
        if t <= -1.0 {
            return None;
        }
        Some(t.ln_1p() / self.xi)
    }

    /// Distribution function `H(y)`.
    ///
    /// Negative or non-finite `y` is a domain error; points at or beyond a
    /// finite right endpoint return exactly 1.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("GPD cdf needs y >= 0, got {y}")));
        }
        if y == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(self.cdf_nonneg(y))
    }

    #[inline]
    pub(crate) fn cdf_nonneg(&self, y: f64) -> f64 {
        match self.cumulative_hazard(y) {
            Some(lambda) => -(-lambda).exp_m1(),
            None => 1.0,
        }
    }

    /// Survival function `1 - H(y)` for `y >= 0`, accurate deep in the tail.
    #[inline]
    pub fn sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match self.cumulative_hazard(y) {
            Some(lambda) => (-lambda).exp(),
            None => 0.0,
        }
    }

    /// Log density `log h(y)`; `-∞` outside the support.
    ///
    /// `y = 0` is accepted and returns the right-limit `-log σ`.
    pub fn log_pdf(&self, y: f64) -> f64 {
        if !(y >= 0.0) || !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        let z = y / self.sigma;
        if self.near_exponential() {
            return -z - self.sigma.ln();
        }
        let t = self.xi * z;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -self.sigma.ln() - (1.0 / self.xi + 1.0) * t.ln_1p()
    }

    /// Point `y` with `log(1 - H(y)) = log_tail`, for `log_tail <= 0`.
    pub(crate) fn quantile_from_log_tail(&self, log_tail: f64) -> f64 {
        if log_tail >= 0.0 {
            return 0.0;
        }
        if log_tail == f64::NEG_INFINITY {
            return self.upper_endpoint();
        }
        if self.near_exponential() {
            return -self.sigma * log_tail;
        }
        self.sigma / self.xi * (-self.xi * log_tail).exp_m1()
    }

    /// Quantile `H^{-1}(p)` for `p` in `[0, 1]`.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain(format!("probability must lie in [0, 1], got {prob}")));
        }
        let log_tail = if prob < 0.5 { (-prob).ln_1p() } else { (1.0 - prob).ln() };
        Ok(self.quantile_from_log_tail(log_tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_hand_values() {
        let p = GpdParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.cdf(1.0).unwrap(), 0.5);
        let p = GpdParams::new(1.0, 0.0).unwrap();
        assert_eq!(p.cdf(0.0).unwrap(), 0.0);
        let p = GpdParams::new(2.0, 0.5).unwrap();
        let expected = 1.0 - 1.5f64.powi(-2);
        assert!((p.cdf(2.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn cdf_domain() {
        let p = GpdParams::new(1.0, -0.5).unwrap();
        assert!(p.cdf(-1.0).is_err());
        assert!(p.cdf(f64::NAN).is_err());
        assert_eq!(p.cdf(2.0).unwrap(), 1.0);
        assert_eq!(p.cdf(7.0).unwrap(), 1.0);
        assert_eq!(p.upper_endpoint(), 2.0);
    }

    #[test]
    fn log_pdf_hand_values() {
        let p = GpdParams::new(1.0, 1.0).unwrap();
        assert!((p.log_pdf(1.0) - 0.25f64.ln()).abs() < 1e-15);
        let p = GpdParams::new(1.0, 0.0).unwrap();
        assert_eq!(p.log_pdf(0.0), 0.0);
        assert!(p.log_pdf(1e-300).abs() < 1e-15);
        let p = GpdParams::new(1.0, -0.5).unwrap();
        assert_eq!(p.log_pdf(2.5), f64::NEG_INFINITY);
        assert_eq!(p.log_pdf(-0.1), f64::NEG_INFINITY);
    }

    #[test]
    fn exponential_limit_is_continuous() {
        for &y in &[0.01, 0.5, 1.0, 3.0, 20.0] {
            let base = GpdParams::new(1.3, 0.0).unwrap().cdf(y).unwrap();
            for &xi in &[1e-9, -1e-9, 2e-8, -2e-8] {
                let near = GpdParams::new(1.3, xi).unwrap().cdf(y).unwrap();
                assert!((near - base).abs() < 1e-7, "xi={xi} y={y}");
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(GpdParams::new(0.0, 0.1).is_err());
        assert!(GpdParams::new(-1.0, 0.1).is_err());
        assert!(GpdParams::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &xi in &[-0.4, -1e-9, 0.0, 1e-6, 0.3, 1.5] {
            let p = GpdParams::new(0.7, xi).unwrap();
            for &u in &[1e-8, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
                let y = p.quantile(u).unwrap();
                assert!((p.cdf(y).unwrap() - u).abs() < 1e-12, "xi={xi} u={u}");
            }
        }
    }
}
