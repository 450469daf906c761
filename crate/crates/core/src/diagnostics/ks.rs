use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Two-sided one-sample statistic `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Kolmogorov survival function `Q(t) = 2 Σ (-1)^(k-1) exp(-2k²t²)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.2 {
        // the alternating series converges slowly here and the tail is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Test against N(0, 1) with the asymptotic distribution and Stephens'
/// small-sample correction `(√n + 0.12 + 0.11/√n) D`.
pub fn ks_normal(sample: &[f64]) -> KsResult {
    let phi = Normal::new(0.0, 1.0).expect("standard normal");
    let d = ks_statistic(sample, |x| phi.cdf(x));
    let rn = (sample.len() as f64).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d),
        n: sample.len(),
    }
}
