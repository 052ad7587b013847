mod common;

use common::*;
use hdtest::law::phi;
use hdtest::simharness::*;
use hdtest::{quantile, sample_covariance, Error, NullLaw};
use nalgebra::{DMatrix, DVector};

fn all_kinds() -> Vec<SigmaSpec> {
    vec![
        SigmaSpec::Identity,
        SigmaSpec::Scaled { a: 2.5 },
        SigmaSpec::Ar1 { rho: 0.7 },
        SigmaSpec::Ar1 { rho: -0.4 },
        SigmaSpec::Banded { tau: 3, coef: 0.3 },
        SigmaSpec::Spiked { base: 1.0, spike_value: 9.0, spike_count: 2 },
        SigmaSpec::Diagonal { values: (0..12).map(|i| 0.5 + i as f64).collect() },
    ]
}

#[test]
fn sigma_examples_and_reconstruction() {
    let id = make_sigma(&SigmaSpec::Identity, 4).unwrap();
    assert_eq!(id.sigma, DMatrix::identity(4, 4));
    assert_eq!(id.gamma, DMatrix::identity(4, 4));
    let ar = make_sigma(&SigmaSpec::Ar1 { rho: 0.5 }, 3).unwrap();
    let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]);
    assert!((ar.sigma - want).amax() < 1e-15);
    for spec in all_kinds() {
        let pop = make_sigma(&spec, 12).unwrap();
        assert!((&pop.gamma * pop.gamma.transpose() - &pop.sigma).amax() <= 1e-10, "{spec:?}");
        assert_eq!(pop.gamma, pop.gamma.transpose());
    }
}

#[test]
fn sigma_errors() {
    let not_psd = SigmaSpec::Banded { tau: 2, coef: 0.9 };
    assert!(matches!(make_sigma(&not_psd, 10), Err(Error::InvalidParameter(_))));
    assert!(make_sigma(&SigmaSpec::Ar1 { rho: 1.0 }, 3).is_err());
    assert!(make_sigma(&SigmaSpec::Scaled { a: 0.0 }, 3).is_err());
    assert!(make_sigma(&SigmaSpec::Diagonal { values: vec![1.0] }, 3).is_err());
}

#[test]
fn generate_with_zero_loading_returns_the_mean() {
    let pop = make_sigma(&SigmaSpec::Diagonal { values: vec![0.0; 3] }, 3).unwrap();
    let mu = DVector::from_column_slice(&[1.5, -2.0, 0.25]);
    let x = generate(7, &pop, &mu, &InnovationSpec::StandardNormal, &mut rng(1)).unwrap();
    for i in 0..7 {
        assert_eq!(x.row(i).transpose().as_slice(), mu.as_slice());
    }
}

#[test]
fn generated_moments() {
    let pop = make_sigma(&SigmaSpec::Identity, 2).unwrap();
    let x = generate(10_000, &pop, &DVector::zeros(2), &InnovationSpec::StandardNormal, &mut rng(3)).unwrap();
    let s = sample_covariance(&x).unwrap();
    assert!((s - DMatrix::identity(2, 2)).amax() < 0.1);
    let ar = make_sigma(&SigmaSpec::Ar1 { rho: 0.6 }, 3).unwrap();
    let x = generate(20_000, &ar, &DVector::zeros(3), &InnovationSpec::Rademacher, &mut rng(4)).unwrap();
    assert!((sample_covariance(&x).unwrap() - &ar.sigma).amax() < 0.05);
}

#[test]
fn standardized_gamma_skewness() {
    // Skewness of (G − 1) with G ~ Exp(1) is 2. Batch means give the standard error.
    let pop = make_sigma(&SigmaSpec::Identity, 1).unwrap();
    let mut r = rng(5);
    let skews: Vec<f64> = (0..40)
        .map(|_| {
            let x =
                generate(20_000, &pop, &DVector::zeros(1), &InnovationSpec::StandardizedGamma { shape: 1.0 }, &mut r)
                    .unwrap();
            let v: Vec<f64> = x.values().iter().copied().collect();
            let (m, _) = mean_se(&v);
            let m2 = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64;
            let m3 = v.iter().map(|a| (a - m).powi(3)).sum::<f64>() / v.len() as f64;
            m3 / m2.powf(1.5)
        })
        .collect();
    let (m, se) = mean_se(&skews);
    assert!((m - 2.0).abs() <= 3.0 * se, "skewness {m} ± {se}");
}

#[test]
fn size_report_fields() {
    let s = Scenario::normal_null("cq1", &[12], 5, 2000, 11);
    let r = empirical_size(&s, 1).unwrap();
    assert_eq!(r.failures, 0);
    assert!((r.mc_standard_error.unwrap() - 0.00487).abs() < 1e-5);
    let size = r.empirical_size.unwrap();
    assert!((0.0..=1.0).contains(&size));
    assert!((0.0..=1.0).contains(&r.ks_distance.unwrap()));
}

#[test]
fn degenerate_scenario_is_a_harness_error() {
    let mut s = Scenario::normal_null("bs1", &[20], 4, 10, 1);
    s.groups[0].sigma = SigmaSpec::Diagonal { values: vec![0.0; 4] };
    assert!(matches!(empirical_size(&s, 1), Err(Error::Harness(_))));
}

#[test]
fn determinism_across_runs_and_threads() {
    let mut s = Scenario::normal_null("sd2", &[15, 18], 30, 60, 99);
    s.groups[1].sigma = SigmaSpec::Ar1 { rho: 0.3 };
    s.groups[0].innovation = InnovationSpec::StandardizedGamma { shape: 2.0 };
    let a = simulate(&s, 1).unwrap();
    let b = simulate(&s, 1).unwrap();
    let c = simulate(&s, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d0 = replicate_data(&s, 7).unwrap();
    let d1 = replicate_data(&s, 7).unwrap();
    assert_eq!(d0[1].values(), d1[1].values());
    assert_ne!(replicate_data(&s, 8).unwrap()[0].values(), d0[0].values());
}

#[test]
fn dense_power_matches_prediction() {
    // n‖μ‖²/√(2 tr Σ²) = 2 at n = 100, p = 200 gives ‖μ‖² = 0.4 and power Φ(−ξ + 2).
    let mut s = Scenario::normal_null("bs1", &[100], 200, 300, 21);
    s.groups[0].mean = MeanSpec::Dense { norm_sq: 2.0 * (400f64).sqrt() / 100.0 };
    let r = empirical_power(&s, 1).unwrap();
    let xi = quantile(&NullLaw::StandardNormal, 0.05).unwrap();
    let want = phi(2.0 - xi);
    assert!((want - 0.64).abs() < 0.01);
    assert!((r.asymptotic_power.unwrap() - want).abs() < 1e-12);
    assert!((r.empirical_size.unwrap() - want).abs() <= 0.15, "power {:?}", r.empirical_size);
    assert!(matches!(empirical_size(&s, 1), Err(Error::InvalidParameter(_))));
}

#[test]
fn zero_alternative_has_power_near_alpha() {
    let s = Scenario::normal_null("cq2", &[30, 30], 40, 400, 5);
    let r = empirical_power(&s, 1).unwrap();
    assert!((r.empirical_size.unwrap() - 0.05).abs() < 0.035);
}

#[test]
fn diagnostics_report_moments_only() {
    let mut s = Scenario::normal_null("lw_v", &[60], 60, 50, 2);
    s.expect.mean_statistic = Some([0.9, 1.1]);
    let r = simulate(&s, 1).unwrap();
    assert!(r.empirical_size.is_none() && r.ks_distance.is_none());
    assert!(s.expect.misses(&r).is_empty(), "{:?}", s.expect.misses(&r));
    assert!(null_shape(&s, 1).is_err());
}

#[test]
fn outside_theory_warning() {
    let mut s = Scenario::normal_null("cq1", &[20], 10, 20, 2);
    s.groups[0].sigma = SigmaSpec::Spiked { base: 1.0, spike_value: 50.0, spike_count: 1 };
    let r = simulate(&s, 1).unwrap();
    assert!(r.warnings.iter().any(|w| w.starts_with("outside theory")));
    let plain = simulate(&Scenario::normal_null("cq1", &[20], 10, 20, 2), 1).unwrap();
    assert!(plain.warnings.is_empty());
}

#[test]
fn validation_lists_every_problem() {
    let mut s = Scenario::normal_null("bs1", &[3, 4], 5, 0, 1);
    s.alpha = 1.5;
    let Err(Error::InvalidParameter(msg)) = s.validate() else { panic!("expected a validation error") };
    for field in ["reps", "alpha", "groups[0].n", "groups:"] {
        assert!(msg.contains(field), "{msg} lacks {field}");
    }
    s.test = "nope".into();
    assert!(s.validate().unwrap_err().to_string().contains("unknown test"));
}

#[test]
fn scenario_json_round_trip() {
    let mut s = Scenario::normal_null("qc", &[40], 12, 10, 3);
    s.config.tau = 2;
    s.groups[0].sigma = SigmaSpec::Banded { tau: 2, coef: 0.4 };
    s.groups[0].innovation = InnovationSpec::StandardizedGamma { shape: 4.0 };
    s.expect.rejection_rate = Some([0.0, 0.2]);
    let text = serde_json::to_string_pretty(&s).unwrap();
    let back: Scenario = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    let minimal: Scenario =
        serde_json::from_str(r#"{"name":"m","test":"cq1","p":3,"groups":[{"n":10}],"reps":5}"#).unwrap();
    assert_eq!(minimal.alpha, 0.05);
    assert_eq!(minimal.groups[0], GroupSpec::normal(10));
}

#[test]
fn ks_distance_of_uniform_grid() {
    let u: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
    assert!((ks_against_uniform(&u) - 0.005).abs() < 1e-12);
}
