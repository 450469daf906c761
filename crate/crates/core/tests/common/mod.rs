#![allow(dead_code)]

use egpd_lasso::egpd::{Carrier, EgpdParams, GpdParams};
use proptest::prelude::*;

/// Tanh-sinh quadrature of `f(t, 1 - t)` over `(0, 1)`. The complement is
/// passed separately so integrands can stay accurate near `t = 1`.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |x: f64| {
        let s = half_pi * x.sinh();
        let t = 1.0 / (1.0 + (-2.0 * s).exp());
        let w = 1.0 / (1.0 + (2.0 * s).exp());
        let weight = half_pi * x.cosh() / (2.0 * s.cosh() * s.cosh());
        (t, w, weight)
    };
    let term = |x: f64| {
        let (t, w, weight) = node(x);
        if t <= 0.0 || w <= 0.0 || weight == 0.0 {
            0.0
        } else {
            let v = f(t, w) * weight;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    let x_max = 6.5;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= x_max {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..10 {
        h /= 2.0;
        let mut k = 1;
        while k as f64 * h <= x_max {
            sum += term(k as f64 * h) + term(-(k as f64) * h);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() < tol {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `∫ f(y) dy` over the support of `params`.
pub fn integrate_density(params: &EgpdParams) -> f64 {
    let upper = params.gpd.upper_endpoint();
    if upper.is_finite() {
        tanh_sinh(|t, _| params.pdf(upper * t) * upper, 1e-12)
    } else {
        let s = params.quantile(0.5).unwrap();
        tanh_sinh(|t, w| params.pdf(s * t / w) * s / (w * w), 1e-12)
    }
}

pub fn carrier_strategy() -> impl Strategy<Value = Carrier> {
    prop_oneof![
        (0.3f64..5.0).prop_map(|k| Carrier::power(k).unwrap()),
        (0.3f64..5.0).prop_map(|k| Carrier::beta(k).unwrap()),
        (0.05f64..0.95, 0.5f64..5.0, 0.05f64..1.0)
            .prop_map(|(pi, k1, frac)| Carrier::mixture(pi, k1, (k1 * frac).max(0.2)).unwrap()),
    ]
}

pub fn gpd_strategy(xi_min: f64, xi_max: f64) -> impl Strategy<Value = GpdParams> {
    (0.2f64..5.0, xi_min..xi_max).prop_map(|(s, x)| GpdParams::new(s, x).unwrap())
}

pub fn egpd_strategy(xi_min: f64, xi_max: f64) -> impl Strategy<Value = EgpdParams> {
    (carrier_strategy(), gpd_strategy(xi_min, xi_max)).prop_map(|(c, g)| EgpdParams::new(c, g).unwrap())
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Random member of a carrier family for deterministic sweeps.
pub fn random_params<R: rand::Rng>(rng: &mut R, family: usize, xi_min: f64, xi_max: f64) -> EgpdParams {
    let carrier = match family {
        0 => Carrier::power(rng.random_range(0.3..5.0)).unwrap(),
        1 => Carrier::beta(rng.random_range(0.3..5.0)).unwrap(),
        _ => {
            let k1: f64 = rng.random_range(0.5..5.0);
            let k2 = (k1 * rng.random_range(0.05..1.0f64)).max(0.2);
            Carrier::mixture(rng.random_range(0.05..0.95), k1, k2).unwrap()
        }
    };
    let gpd = GpdParams::new(rng.random_range(0.2..5.0), rng.random_range(xi_min..xi_max)).unwrap();
    EgpdParams::new(carrier, gpd).unwrap()
}
