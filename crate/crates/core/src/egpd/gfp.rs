use crate::error::{Error, Result};

/// Generalized Feller–Pareto distribution, five positive parameters.
///
/// ```text
/// h(y) = a r y^(a-1) / (b^a B(p,q)) · {1 + (y/b)^a}^(-rq-1) · [1 - {1 + (y/b)^a}^(-r)]^(p-1)
/// ```
///
/// The canonical EGPD with ξ > 0 is the member `(1, σ/ξ, κ, 1, 1/ξ)`, which
/// makes this an independent check on the EGPD density. Only the density is
/// provided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfpParams {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

/// `ln B(p, q)`.
pub fn ln_beta_fn(p: f64, q: f64) -> f64 {
    statrs::function::beta::ln_beta(p, q)
}

impl GfpParams {
    pub fn new(a: f64, b: f64, p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("p", p), ("q", q), ("r", r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("GFP parameter {name} must be positive, got {v}")));
            }
        }
        Ok(Self { a, b, p, q, r })
    }

    /// Image of the canonical EGPD `(κ, σ, ξ)`, ξ > 0.
    pub fn from_canonical_egpd(kappa: f64, sigma: f64, xi: f64) -> Result<Self> {
        Self::new(1.0, sigma / xi, kappa, 1.0, 1.0 / xi)
    }

    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("GFP density needs y > 0, got {y}")));
        }
        let GfpParams { a, b, p, q, r } = *self;
        let ln_ratio = y.ln() - b.ln();
        // log{1 + (y/b)^a}
        let log_base = (a * ln_ratio).exp().ln_1p();
        // log[1 - {1 + (y/b)^a}^(-r)]
        let log_inner = (-(-r * log_base).exp_m1()).ln();
        let mut out = (a * r).ln() + (a - 1.0) * y.ln() - a * b.ln() - ln_beta_fn(p, q);
        out -= (r * q + 1.0) * log_base;
        if p != 1.0 {
            out += (p - 1.0) * log_inner;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egpd::{EgpdParams, GpdParams};

    #[test]
    fn uniform_beta_function() {
        assert!(ln_beta_fn(1.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_canonical_egpd() {
        let gfp = GfpParams::from_canonical_egpd(2.0, 1.0, 0.5).unwrap();
        let egpd = EgpdParams::canonical(2.0, 1.0, 0.5).unwrap();
        assert!((gfp.log_pdf(2.0).unwrap() - egpd.log_pdf(2.0)).abs() < 1e-12);
    }

    #[test]
    fn unit_parameters_match_gpd() {
        let gfp = GfpParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let gpd = GpdParams::new(1.0, 1.0).unwrap();
        assert!((gfp.log_pdf(1.0).unwrap() - gpd.log_pdf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(GfpParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GfpParams::new(1.0, 1.0, -1.0, 1.0, 1.0).is_err());
        let g = GfpParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(g.log_pdf(0.0).is_err());
    }
}
