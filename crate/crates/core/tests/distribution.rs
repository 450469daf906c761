mod common;

use common::{egpd_strategy, gpd_strategy, integrate_density};
use egpd_lasso::egpd::{assumption_limits, Carrier, EgpdParams, GfpParams, GpdParams};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn cdf_is_monotone_and_anchored(params in egpd_strategy(-0.4, 0.5), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assert_eq!(params.cdf(0.0).unwrap(), 0.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let ylo = params.quantile(lo.max(1e-12)).unwrap();
        let yhi = params.quantile(hi.max(1e-12)).unwrap();
        prop_assert!(params.cdf(ylo).unwrap() <= params.cdf(yhi).unwrap());
        let top = params.quantile(1.0 - 1e-10).unwrap();
        // near a finite endpoint y itself runs out of resolution
        let resolved = params.cdf(top).unwrap() > 1.0 - 1e-9;
        prop_assert!(resolved || top.next_up() >= params.gpd.upper_endpoint());
    }

    #[test]
    fn quantile_then_cdf_round_trips(params in egpd_strategy(-0.4, 0.5), u in 1e-8f64..(1.0 - 1e-8)) {
        let y = params.quantile(u).unwrap();
        prop_assert!((params.cdf(y).unwrap() - u).abs() < 1e-9);
    }

    #[test]
    fn cdf_then_quantile_round_trips(params in egpd_strategy(-0.4, 0.5), u in 1e-6f64..(1.0 - 1e-6)) {
        let y = params.quantile(u).unwrap();
        let back = params.quantile(params.cdf(y).unwrap()).unwrap();
        prop_assert!((back - y).abs() <= 1e-9 * y.max(1.0), "y {y} back {back}");
    }

    #[test]
    fn upper_tail_survival_matches_complement(params in egpd_strategy(0.0, 0.5), u in 0.05f64..0.95) {
        let y = params.quantile(u).unwrap();
        let sf = params.sf(y).unwrap();
        prop_assert!((sf - (1.0 - params.cdf(y).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn density_is_derivative_of_cdf(params in egpd_strategy(-0.4, 0.5), u in 0.02f64..0.98) {
        let y = params.quantile(u).unwrap();
        let h = 1e-5 * y.min(params.gpd.upper_endpoint() - y);
        let fd = (params.cdf(y + h).unwrap() - params.cdf(y - h).unwrap()) / (2.0 * h);
        let f = params.pdf(y);
        prop_assert!((f - fd).abs() < 1e-6 * f.max(1.0), "f {f} fd {fd}");
    }

    #[test]
    fn unit_power_carrier_is_the_gpd(gpd in gpd_strategy(-0.4, 0.5), u in 1e-6f64..(1.0 - 1e-6)) {
        let params = EgpdParams::new(Carrier::power(1.0).unwrap(), gpd).unwrap();
        let y = gpd.quantile(u).unwrap();
        prop_assert!((params.cdf(y).unwrap() - gpd.cdf(y).unwrap()).abs() <= 1e-14);
        prop_assert!((params.log_pdf(y) - gpd.log_pdf(y)).abs() <= 1e-14 * gpd.log_pdf(y).abs().max(1.0));
        prop_assert_eq!(params.quantile(u).unwrap(), gpd.quantile(u).unwrap());
    }

    #[test]
    fn canonical_density_equals_gfp(kappa in 0.2f64..10.0, sigma in 0.1f64..10.0, xi in 0.01f64..1.0, u in 1e-4f64..0.9999) {
        let params = EgpdParams::canonical(kappa, sigma, xi).unwrap();
        let y = params.quantile(u).unwrap();
        let gfp = GfpParams::new(1.0, sigma / xi, kappa, 1.0, 1.0 / xi).unwrap().log_pdf(y).unwrap();
        let egpd = params.log_pdf(y);
        prop_assert!((egpd - gfp).abs() <= 1e-12 * gfp.abs().max(1.0), "egpd {egpd} gfp {gfp}");
    }

    #[test]
    fn tail_ratio_tends_to_the_a_limit(
        kappa in 0.3f64..5.0,
        pi in 0.05f64..0.95,
        k2 in 0.2f64..3.0,
        gpd in gpd_strategy(0.01, 0.5),
    ) {
        for (carrier, a) in [
            (Carrier::power(kappa).unwrap(), kappa),
            (Carrier::mixture(pi, kappa, k2).unwrap(), pi * kappa + (1.0 - pi) * k2),
        ] {
            let params = EgpdParams::new(carrier, gpd).unwrap();
            let y = gpd.quantile(1.0 - 1e-6).unwrap();
            let ratio = params.sf(y).unwrap() / gpd.sf(y);
            prop_assert!((ratio - a).abs() < 1e-3, "ratio {ratio} a {a}");
            let (a_est, _) = assumption_limits(&carrier, kappa.min(k2));
            prop_assert!((a_est - a).abs() < 1e-3);
        }
    }

    #[test]
    fn near_zero_shape_is_continuous(carrier in common::carrier_strategy(), sigma in 0.2f64..5.0, u in 1e-4f64..(1.0 - 1e-4)) {
        let limit = EgpdParams::new(carrier, GpdParams::new(sigma, 0.0).unwrap()).unwrap();
        let y = limit.quantile(u).unwrap();
        for xi in [1e-9, -1e-9, 2e-8, -2e-8] {
            let near = EgpdParams::new(carrier, GpdParams::new(sigma, xi).unwrap()).unwrap();
            prop_assert!((near.cdf(y).unwrap() - limit.cdf(y).unwrap()).abs() < 1e-7);
        }
        let exp = GpdParams::new(sigma, 0.0).unwrap();
        for xi in [1e-7, -1e-7] {
            let near = GpdParams::new(sigma, xi).unwrap();
            prop_assert!((near.cdf(y).unwrap() - exp.cdf(y).unwrap()).abs() < 1e-7);
        }
    }
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn density_integrates_to_one(params in egpd_strategy(-0.4, 0.5)) {
        let total = integrate_density(&params);
        prop_assert!((total - 1.0).abs() < 1e-5, "{params:?}: {total}");
    }
}

#[test]
fn power_carrier_lower_limit_is_one() {
    for kappa in [0.5, 1.0, 2.0, 4.0] {
        let (a, c) = assumption_limits(&Carrier::power(kappa).unwrap(), kappa);
        assert!((a - kappa).abs() < 1e-3);
        assert!((c - 1.0).abs() < 1e-3);
    }
}

#[test]
fn support_edges() {
    let bounded = EgpdParams::canonical(2.0, 1.0, -0.25).unwrap();
    assert_eq!(bounded.cdf(4.0).unwrap(), 1.0);
    assert_eq!(bounded.cdf(10.0).unwrap(), 1.0);
    assert_eq!(bounded.log_pdf(4.5), f64::NEG_INFINITY);
    assert!(bounded.cdf(-1.0).is_err());
    assert!(bounded.quantile(0.0).is_err());
    assert!(bounded.quantile(1.0).is_err());
}

#[test]
fn deep_tail_survival_keeps_relative_precision() {
    let params = EgpdParams::new(Carrier::beta(1.0).unwrap(), GpdParams::new(1.0, 0.2).unwrap()).unwrap();
    let u = 1.0 - 1e-13;
    let y = params.quantile(u).unwrap();
    let sf = params.sf(y).unwrap();
    assert!((sf / (1.0 - u) - 1.0).abs() < 1e-6, "{sf}");
}
