use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use censornet::censoring::{censor, censor_fractional, censor_hard, fractional_count, CensorScheme, NamingPreference};
use censornet::config::ExperimentConfig;
use censornet::inference::{build_design, fit_ols, Coef};
use censornet::montecarlo::{read_records_csv, run_replication, sample_scenario, write_records_csv};
use censornet::netgen::{generate_network, sample_gregariousness, sample_traits, GenParams, Sociomatrix, TraitVector};
use censornet::tdist::{student_t_cdf, student_t_quantile};
use censornet::trait_process::{contagion_covariate, evolve, reparameterize_pivot, EvolveParams, ModelSpec};

fn network(n: usize) -> impl Strategy<Value = Sociomatrix> {
    proptest::collection::vec(any::<bool>(), n * n).prop_map(move |cells| {
        let arcs = (0..n * n).filter(|&c| cells[c] && c / n != c % n).map(|c| (c / n, c % n));
        Sociomatrix::from_arcs(n, arcs).unwrap()
    })
}

fn traits(n: usize) -> impl Strategy<Value = TraitVector> {
    proptest::collection::vec(-3.0..3.0f64, n).prop_map(|v| TraitVector::new(v).unwrap())
}

/// Multiples of 1/8 in [-4, 4]: sums and small products stay exact.
fn dyadic() -> impl Strategy<Value = f64> {
    (-32i32..=32).prop_map(|k| k as f64 / 8.0)
}

fn traits_and_network() -> impl Strategy<Value = (TraitVector, Sociomatrix)> {
    (3usize..12).prop_flat_map(|n| (traits(n), network(n)))
}

fn quiet(mu: f64, gamma: f64, beta: f64, delta: f64) -> EvolveParams {
    EvolveParams { mu, gamma, beta, delta, sigma_eps: 0.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pivot_reparameterization_is_exact(
        (y, w) in prop_oneof![Just(4usize), Just(8usize)]
            .prop_flat_map(|n| (proptest::collection::vec(dyadic(), n), network(n))),
        (mu, gamma, beta, delta, d) in (dyadic(), dyadic(), dyadic(), dyadic(), dyadic()),
    ) {
        // Power-of-two size keeps the trait mean dyadic, so both sides are exact.
        let y0 = TraitVector::new(y).unwrap();
        let (mu2, beta2, delta2) = reparameterize_pivot(mu, beta, delta, d);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = evolve(&y0, &w, &quiet(mu, gamma, beta, delta), ModelSpec::PivotContagion(d), &mut rng).unwrap();
        let b = evolve(&y0, &w, &quiet(mu2, gamma, beta2, delta2), ModelSpec::PivotContagion(0.0), &mut rng).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pivot_reparameterization_general_reals(
        (y0, w) in traits_and_network(),
        (mu, gamma, beta, delta, d) in (-2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64),
    ) {
        let (mu2, beta2, delta2) = reparameterize_pivot(mu, beta, delta, d);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = evolve(&y0, &w, &quiet(mu, gamma, beta, delta), ModelSpec::PivotContagion(d), &mut rng).unwrap();
        let b = evolve(&y0, &w, &quiet(mu2, gamma, beta2, delta2), ModelSpec::PivotContagion(0.0), &mut rng).unwrap();
        for i in 0..y0.len() {
            prop_assert!((a[i] - b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()) * (1 + w.outdegree(i)) as f64);
        }
    }

    #[test]
    fn homophily_drive_decomposes((y0, w) in traits_and_network()) {
        let drive = contagion_covariate(&w, &y0, ModelSpec::HomophilyDrive);
        let plain = contagion_covariate(&w, &y0, ModelSpec::CenteredGeneral);
        for i in 0..y0.len() {
            let expected = plain[i] - w.outdegree(i) as f64 * y0[i];
            prop_assert!((drive[i] - expected).abs() <= 1e-12 * (1.0 + plain[i].abs() + expected.abs()));
        }
    }

    #[test]
    fn evolution_is_linear_in_coefficients(
        (y0, w) in traits_and_network(),
        a in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        b in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = |p: EvolveParams, rng: &mut ChaCha8Rng| evolve(&y0, &w, &p, ModelSpec::CenteredGeneral, rng).unwrap();
        let ya = run(quiet(a.0, a.1, a.2, a.3), &mut rng);
        let yb = run(quiet(b.0, b.1, b.2, b.3), &mut rng);
        let yab = run(quiet(a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3), &mut rng);
        for i in 0..y0.len() {
            prop_assert!((ya[i] + yb[i] - yab[i]).abs() <= 1e-10 * (1 + w.outdegree(i)) as f64 * 10.0);
        }
    }

    #[test]
    fn centred_design_columns_sum_to_zero((y0, x) in traits_and_network()) {
        let d = build_design(&y0, &x).unwrap();
        let n = y0.len() as f64;
        prop_assert!(d.column(Coef::Autocorr).iter().sum::<f64>().abs() <= 1e-12 * n * 3.0);
        prop_assert!(d.column(Coef::Outdeg).iter().sum::<f64>().abs() <= 1e-12 * n * n);
    }

    #[test]
    fn ols_is_idempotent_and_residuals_orthogonal(
        (y0, x) in (6usize..14).prop_flat_map(|n| (traits(n), network(n))),
        noise_seed in any::<u64>(),
    ) {
        let d = build_design(&y0, &x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let y1 = sample_traits(y0.len(), &mut rng).unwrap();
        let fit = fit_ols(&d, &y1).unwrap();
        let fitted = d.predict(&fit.estimates);
        for c in Coef::ALL.into_iter().filter(|c| fit.identifiable[c.index()]) {
            let dot: f64 = d.column(c).iter().zip(y1.as_slice()).zip(&fitted).map(|((a, y), f)| a * (y - f)).sum();
            let scale: f64 = d.column(c).iter().map(|a| a * a).sum::<f64>().sqrt() * y1.as_slice().iter().map(|y| y * y).sum::<f64>().sqrt();
            prop_assert!(dot.abs() <= 1e-9 * scale.max(1.0));
        }
        let refit = fit_ols(&d, &TraitVector::new(fitted).unwrap()).unwrap();
        prop_assert_eq!(refit.identifiable, fit.identifiable);
        for k in 0..4 {
            if let (Some(a), Some(b)) = (fit.estimates[k], refit.estimates[k]) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn censoring_only_removes_ties(
        (y0, w) in traits_and_network(),
        k in 1usize..4,
        f in 0.05..1.0f64,
        seed in any::<u64>(),
        attr in -1.0..1.0f64,
    ) {
        let pref = NamingPreference { lambda_attr: attr, lambda_sim: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hard = censor_hard(&w, k, pref, &y0, &mut rng).unwrap();
        let frac = censor_fractional(&w, f, pref, &y0, &mut rng).unwrap();
        prop_assert!(hard.is_subgraph_of(&w));
        prop_assert!(frac.is_subgraph_of(&w));
        for i in 0..w.n() {
            prop_assert_eq!(hard.outdegree(i), w.outdegree(i).min(k));
            prop_assert_eq!(frac.outdegree(i), fractional_count(f, w.outdegree(i)));
        }
        for label in ["flexible:1.5:poisson", "flexible:2:binomial"] {
            let scheme: CensorScheme = label.parse().unwrap();
            prop_assert!(censor(&w, &scheme, &y0, &mut rng).unwrap().is_subgraph_of(&w));
        }
    }

    #[test]
    fn network_has_exact_arc_count(n in 5usize..20, target in 0.5..4.0f64, seed in any::<u64>(), r_in in -0.6..0.6f64, h in -1.0..1.0f64) {
        let p = GenParams { n, sigma_h: 0.5, h, r_in, r_out: 0.3, target_mean_outdegree: target };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0 = sample_traits(n, &mut rng).unwrap();
        let alpha = sample_gregariousness(n, p.sigma_h, &mut rng).unwrap();
        let (w, _) = generate_network(&y0, &alpha, &p, &mut rng).unwrap();
        prop_assert_eq!(w.arc_count(), p.target_arc_count().unwrap());
        prop_assert!((0..n).all(|i| !w.get(i, i)));
    }

    #[test]
    fn trait_free_network_ignores_trait_order(n in 5usize..15, seed in any::<u64>(), a in 0usize..15, b in 0usize..15) {
        let (a, b) = (a % n, b % n);
        let p = GenParams { n, sigma_h: 0.7, h: 0.0, r_in: 0.0, r_out: 0.0, target_mean_outdegree: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0 = sample_traits(n, &mut rng).unwrap();
        let alpha = sample_gregariousness(n, p.sigma_h, &mut rng).unwrap();
        let mut swapped = y0.clone().into_inner();
        swapped.swap(a, b);
        let swapped = TraitVector::new(swapped).unwrap();
        let (w1, o1) = generate_network(&y0, &alpha, &p, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        let (w2, o2) = generate_network(&swapped, &alpha, &p, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        prop_assert_eq!(w1.arc_count(), w2.arc_count());
        prop_assert_eq!(w1, w2);
        prop_assert_eq!(o1, o2);
    }

    #[test]
    fn t_quantile_inverts_cdf(p in 0.001..0.999f64, df in 1usize..500) {
        let t = student_t_quantile(p, df as f64);
        prop_assert!((student_t_cdf(t, df as f64) - p).abs() <= 1e-10);
    }

    #[test]
    fn records_round_trip(master in any::<u64>(), r in 0u64..1000) {
        let cfg = ExperimentConfig { node_counts: vec![20], target_mean_outdegree: 3.0, ..Default::default() };
        let s = sample_scenario(&cfg, &mut censornet::montecarlo::replication_stream(master, r)).unwrap();
        let rec = run_replication(r, &s);
        let mut buf = Vec::new();
        write_records_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
        prop_assert_eq!(read_records_csv(&buf[..]).unwrap(), vec![rec]);
    }
}

#[test]
fn noise_mean_vanishes_with_size() {
    // Mean of y1 minus its noiseless counterpart is the mean noise: O(1/sqrt(n)).
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let y0 = sample_traits(n, &mut rng).unwrap();
    let w = Sociomatrix::empty(n);
    let noisy = EvolveParams { mu: 0.3, gamma: 0.2, beta: 0.0, delta: 0.0, sigma_eps: 1.0 };
    let y1 = evolve(&y0, &w, &noisy, ModelSpec::CenteredGeneral, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let y_clean = evolve(&y0, &w, &quiet(0.3, 0.2, 0.0, 0.0), ModelSpec::CenteredGeneral, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let mean_noise: f64 = (0..n).map(|i| y1[i] - y_clean[i]).sum::<f64>() / n as f64;
    assert!(mean_noise.abs() < 4.0 / (n as f64).sqrt(), "{mean_noise}");
}
