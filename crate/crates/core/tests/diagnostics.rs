use egpd_lasso::diagnostics::{
    effective_sample_size, effective_sample_size_multi, quantile_residuals, summarize, thin_indices, ResidualMode,
};
use egpd_lasso::model::{CoefficientSet, Dataset, ModelSpec, PriorSpec};
use egpd_lasso::sampler::{fit, PosteriorSamples, SamplerConfig};
use egpd_lasso::simulation::{data_rng, simulate_dataset, Scenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = phi * x + e;
            x
        })
        .collect()
}

fn samples_from(chains: Vec<Vec<f64>>, dim: usize) -> PosteriorSamples {
    let names = (0..dim).map(|j| format!("c{j}")).collect();
    PosteriorSamples::from_chains(names, chains, SamplerConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn ess_never_exceeds_draw_count(phi in 0.0f64..0.95, n in 200usize..3000, seed in any::<u64>()) {
        let x = ar1(phi, n, seed);
        let ess = effective_sample_size(&x).unwrap();
        prop_assert!(ess > 0.0 && ess <= n as f64 * 1.05, "ess {ess} of {n}");
    }

    #[test]
    fn summaries_ignore_chain_order(
        chains in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2 * 150), 2..5),
        order_seed in any::<u64>(),
    ) {
        let k = chains.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.rotate_left((order_seed % k as u64) as usize);
        let a = summarize(&samples_from(chains.clone(), 2), 0.9).unwrap();
        let b = summarize(&samples_from(order.iter().map(|&c| chains[c].clone()).collect(), 2), 0.9).unwrap();
        for (s, t) in a.iter().zip(&b) {
            prop_assert_eq!((s.mean, s.sd, s.lower, s.upper, s.selected), (t.mean, t.sd, t.lower, t.upper, t.selected));
            prop_assert_eq!(s.geweke_z.map(f64::abs), t.geweke_z.map(f64::abs));
            let (e, f) = (s.ess.unwrap(), t.ess.unwrap());
            prop_assert!((e - f).abs() <= 1e-9 * e);
        }
    }

    #[test]
    fn selection_flag_is_the_interval_predicate(
        draws in prop::collection::vec(-2.0f64..2.0, 120),
        shift in -2.5f64..2.5,
    ) {
        let shifted: Vec<f64> = draws.iter().map(|d| d + shift).collect();
        let s = &summarize(&samples_from(vec![shifted], 1), 0.95).unwrap()[0];
        prop_assert_eq!(s.selected, !(s.lower <= 0.0 && 0.0 <= s.upper));
        prop_assert!(s.lower <= s.mean && s.mean <= s.upper);
    }
}

#[test]
fn iid_ess_is_close_to_draw_count() {
    let x = ar1(0.0, 20_000, 5);
    let ess = effective_sample_size(&x).unwrap();
    assert!((ess / 20_000.0 - 1.0).abs() < 0.1, "{ess}");
    let chains: Vec<Vec<f64>> = (0..4).map(|c| ar1(0.0, 5000, 100 + c)).collect();
    let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
    let ess = effective_sample_size_multi(&refs).unwrap();
    assert!((ess / 20_000.0 - 1.0).abs() < 0.1, "{ess}");
}

#[test]
fn sampler_thinning_keeps_the_same_draws() {
    let data = simulate_dataset(&Scenario::get(2).unwrap(), 60, &mut data_rng(4)).unwrap();
    let base = SamplerConfig { n_iter: 600, burn_in: 100, n_chains: 2, master_seed: 8, ..SamplerConfig::default() };
    let all = fit(&Scenario::spec(), &PriorSpec::default(), &data, &base).unwrap();
    let thinned = fit(&Scenario::spec(), &PriorSpec::default(), &data, &SamplerConfig { thin: 3, n_iter: 200, ..base }).unwrap();
    let d = all.dim();
    let every_third: Vec<Vec<f64>> = all
        .draws
        .iter()
        .map(|chain| chain.chunks(d).skip(2).step_by(3).flatten().copied().collect())
        .collect();
    assert_eq!(thinned.draws, every_third);
    let from_subset = summarize(&samples_from(every_third, d), 0.95).unwrap();
    let direct = summarize(&thinned, 0.95).unwrap();
    for (a, b) in from_subset.iter().zip(&direct) {
        assert_eq!((a.mean, a.sd, a.lower, a.upper, a.ess), (b.mean, b.sd, b.lower, b.upper, b.ess));
    }
    assert_eq!(thin_indices(10, Some(20)), (0..10).collect::<Vec<_>>());
}

#[test]
fn residuals_increase_with_the_response() {
    let spec = ModelSpec::canonical(2, true);
    let names = vec!["x".to_string()];
    let y: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64 * k as f64).collect();
    let data = Dataset::with_intercept(&[0.3; 40], y, &names).unwrap();
    let layout = spec.layout(data.column_names()).unwrap();
    let coef = CoefficientSet { beta: vec![0.2, -0.1], alpha: vec![0.5, 0.2], gamma: vec![-1.5, 0.1], lambda: 1.0, kappa2_shift: None };
    let theta = layout.flatten(&coef);
    let samples = PosteriorSamples::from_chains(layout.names(), vec![theta], SamplerConfig::default()).unwrap();
    for mode in [ResidualMode::PerDraw, ResidualMode::PosteriorMean] {
        let r = quantile_residuals(&spec, &layout, &samples, &data, mode, None, 0.95).unwrap();
        assert!(r.per_observation.windows(2).all(|w| w[1] > w[0]));
        assert!(r.per_observation.iter().all(|v| v.is_finite()));
    }
}
