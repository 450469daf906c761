use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of halvings in the carrier inverse.
pub const BISECTION_MAX_ITER: usize = 200;

/// Parametric carrier `G` on `[0, 1]`.
///
/// * `Power`: `G(v) = v^κ`.
/// * `Beta`: `G(v) = 1 - Q_κ(1 - v^κ)` with
///   `Q_κ(w) = ((1+κ)/κ) w^(1/κ) (1 - w/(1+κ))`, the Beta(1/κ, 2) distribution function.
/// * `Mixture`: `G(v) = π v^κ₁ + (1-π) v^κ₂`.
///
/// The mixture accepts any positive κ₁, κ₂; the κ₁ > κ₂ identification
/// constraint lives in the regression layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Carrier {
    Power { kappa: f64 },
    Beta { kappa: f64 },
    Mixture { pi: f64, kappa1: f64, kappa2: f64 },
}

fn check_kappa(name: &str, kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("carrier {name} must be positive and finite, got {kappa}")))
    }
}

/// `a * ln_b` with the convention `0 * (±∞) = 0`.
#[inline]
fn xlogy(a: f64, ln_b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * ln_b
    }
}

/// `1 - (1 - w)^κ`, accurate for small `w`.
#[inline]
fn power_tail(kappa: f64, w: f64) -> f64 {
    -(kappa * (-w).ln_1p()).exp_m1()
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Carrier {
    pub fn power(kappa: f64) -> Result<Self> {
        let c = Carrier::Power { kappa };
        c.validate()?;
        Ok(c)
    }

    pub fn beta(kappa: f64) -> Result<Self> {
        let c = Carrier::Beta { kappa };
        c.validate()?;
        Ok(c)
    }

    pub fn mixture(pi: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        let c = Carrier::Mixture { pi, kappa1, kappa2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Carrier::Power { kappa } | Carrier::Beta { kappa } => check_kappa("kappa", kappa),
            Carrier::Mixture { pi, kappa1, kappa2 } => {
                if !(pi > 0.0 && pi < 1.0) {
                    return Err(Error::Domain(format!("mixture weight must lie in (0, 1), got {pi}")));
                }
                check_kappa("kappa1", kappa1)?;
                check_kappa("kappa2", kappa2)
            }
        }
    }

    /// Carrier distribution function `G(v)`; domain error outside `[0, 1]`.
    pub fn cdf(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("carrier argument must lie in [0, 1], got {v}")));
        }
        Ok(self.cdf_unchecked(v))
    }

    #[inline]
    pub(crate) fn cdf_unchecked(&self, v: f64) -> f64 {
        match *self {
            Carrier::Power { kappa } => v.powf(kappa),
            Carrier::Beta { kappa } => {
                // 1 - (1-ε)^(1/κ) (1 + ε/κ) with ε = v^κ
                let eps = v.powf(kappa);
                -((-eps).ln_1p() / kappa + (eps / kappa).ln_1p()).exp_m1()
            }
            Carrier::Mixture { pi, kappa1, kappa2 } => pi * v.powf(kappa1) + (1.0 - pi) * v.powf(kappa2),
        }
    }

    /// `1 - G(1 - w)` for `w` in `[0, 1]`, accurate as `w → 0`.
    #[inline]
    pub fn tail_at(&self, w: f64) -> f64 {
        match *self {
            Carrier::Power { kappa } => power_tail(kappa, w),
            Carrier::Beta { kappa } => {
                let t = power_tail(kappa, w);
                (1.0 + kappa) / kappa * t.powf(1.0 / kappa) * (1.0 - t / (1.0 + kappa))
            }
            Carrier::Mixture { pi, kappa1, kappa2 } => {
                pi * power_tail(kappa1, w) + (1.0 - pi) * power_tail(kappa2, w)
            }
        }
    }

    /// Log of the carrier density `dG/dv`, `v` in `[0, 1]`.
    ///
    /// Boundary degeneracies return the limiting value (possibly `±∞`);
    /// arguments outside `[0, 1]` return `-∞`.
    pub fn log_density(&self, v: f64) -> f64 {
        if !(0.0..=1.0).contains(&v) {
            return f64::NEG_INFINITY;
        }
        self.log_density_split(v, 1.0 - v)
    }

    /// Log density given both `v` and its complement `1 - v`; the complement
    /// carries the precision near `v = 1`.
    #[inline]
    pub(crate) fn log_density_split(&self, v: f64, w: f64) -> f64 {
        let ln_v = v.ln();
        match *self {
            Carrier::Power { kappa } => kappa.ln() + xlogy(kappa - 1.0, ln_v),
            Carrier::Beta { kappa } => {
                // ((1+κ)/κ) v^(2κ-1) (1 - v^κ)^(1/κ - 1)
                let one_minus_vk = power_tail(kappa, w);
                ((1.0 + kappa) / kappa).ln()
                    + xlogy(2.0 * kappa - 1.0, ln_v)
                    + xlogy(1.0 / kappa - 1.0, one_minus_vk.ln())
            }
            Carrier::Mixture { pi, kappa1, kappa2 } => {
                let a = pi.ln() + kappa1.ln() + xlogy(kappa1 - 1.0, ln_v);
                let b = (1.0 - pi).ln() + kappa2.ln() + xlogy(kappa2 - 1.0, ln_v);
                log_add_exp(a, b)
            }
        }
    }

    /// Carrier inverse `G^{-1}(u)`; domain error outside `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok(self.quantile_split(u).0)
    }

    /// `(v, 1 - v)` with `G(v) = u`.
    ///
    /// Power inverts in closed form. Beta and Mixture bisect on the lower half
    /// through `G` and on the upper half through `1 - G(1 - w)`, so the
    /// complement stays accurate for `u` near 1.
    pub(crate) fn quantile_split(&self, u: f64) -> (f64, f64) {
        if let Carrier::Power { kappa } = *self {
            if kappa == 1.0 {
                return (u, 1.0 - u);
            }
            let s = u.ln() / kappa;
            return (s.exp(), -s.exp_m1());
        }
        let (lo_v, hi_v) = self.bracket(u);
        if u <= 0.5 {
            let v = bisect_increasing(|v| self.cdf_unchecked(v), u, lo_v, hi_v);
            (v, 1.0 - v)
        } else {
            let target = 1.0 - u;
            let w = bisect_increasing(|w| self.tail_at(w), target, 1.0 - hi_v, 1.0 - lo_v);
            (1.0 - w, w)
        }
    }

    /// Initial bracket for `G^{-1}(u)`.
    fn bracket(&self, u: f64) -> (f64, f64) {
        match *self {
            Carrier::Mixture { kappa1, kappa2, .. } => {
                // G is a convex combination of two powers, so the root lies
                // between the two pure-power inverses.
                let a = u.powf(1.0 / kappa1);
                let b = u.powf(1.0 / kappa2);
                (a.min(b), a.max(b))
            }
            _ => (0.0, 1.0),
        }
    }
}

pub(crate) fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must lie in (0, 1), got {u}")))
    }
}

/// Root of `f(x) = target` for nondecreasing `f` on `[lo, hi]`.
///
/// Midpoints are geometric while the bracket spans more than a factor of
/// two, so roots near zero are located to relative precision; iteration
/// stops when the bracket cannot shrink further or after
/// [`BISECTION_MAX_ITER`] halvings.
pub(crate) fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64) -> f64 {
    let mut lo = lo.max(0.0);
    let mut hi = hi;
    if f(hi) <= target {
        return hi;
    }
    if lo == 0.0 {
        let tiny = f64::MIN_POSITIVE;
        if f(tiny) >= target {
            return tiny;
        }
        lo = tiny;
    } else if f(lo) >= target {
        return lo;
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { lo + 0.5 * (hi - lo) };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + 0.5 * (hi - lo)
}
