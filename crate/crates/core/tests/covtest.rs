mod common;

use common::*;
use hdtest::covtest::*;
use hdtest::ustat::qc_sigma_sq_hat;
use hdtest::{quantile, DataMatrix, Error, GroupedData, NullLaw};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// 2p rows ±a·e_j, whose sample covariance is exactly c·I.
fn spherical_sample(p: usize, c: f64) -> DataMatrix {
    let n = 2 * p;
    let a = (c * (n - 1) as f64 / 2.0).sqrt();
    DataMatrix::new(DMatrix::from_fn(n, p, |i, j| {
        if i / 2 == j {
            if i % 2 == 0 {
                a
            } else {
                -a
            }
        } else {
            0.0
        }
    }))
    .unwrap()
}

fn scaled(x: &DataMatrix, c: f64) -> DataMatrix {
    DataMatrix::new(x.values() * c).unwrap()
}

#[test]
fn ledoit_wolf_closed_forms() {
    let p = 6;
    let v = lw_v(&spherical_sample(p, 2.0)).unwrap();
    assert!((v.statistic - 1.0).abs() < 1e-12);
    assert!(v.null_law.is_none() && v.p_value.is_none());
    assert!(lw_v(&spherical_sample(p, 1.0)).unwrap().statistic.abs() < 1e-12);
    for c in [0.3, 1.0, 7.0] {
        assert!(lw_u(&spherical_sample(p, c)).unwrap().statistic.abs() < 1e-12);
    }
    assert!(lw_w(&spherical_sample(p, 1.0), LwRegime::Auto).unwrap().statistic.abs() < 1e-12);
}

#[test]
fn lw_u_rejects_zero_trace() {
    let x = DataMatrix::new(DMatrix::from_element(5, 3, 2.0)).unwrap();
    assert!(matches!(lw_u(&x), Err(Error::Calibration { .. })));
}

#[test]
fn lw_w_regimes() {
    let mut r = rng(3);
    let x = normal_data(&mut r, 40, 10);
    let auto = lw_w(&x, LwRegime::Auto).unwrap();
    assert_eq!(auto.null_law, Some(NullLaw::ChiSquared { df: 55.0 }));
    assert!((auto.standardized - 39.0 * 10.0 * auto.statistic / 2.0).abs() < 1e-10);
    let normal = lw_w(&x, LwRegime::Normal).unwrap();
    assert_eq!(normal.null_law, Some(NullLaw::StandardNormal));
    assert_eq!(normal.statistic, auto.statistic);
    let big = normal_data(&mut r, 40, LW_NORMAL_THRESHOLD);
    assert_eq!(lw_w(&big, LwRegime::Auto).unwrap().null_law, Some(NullLaw::StandardNormal));
    assert!(matches!(lw_w(&big, LwRegime::ChiSquared).unwrap().null_law, Some(NullLaw::ChiSquared { .. })));
}

#[test]
fn ledoit_wolf_limits_under_identity() {
    // V tends to cα² + (α − 1)² and W to c + (α − 1)², both 1 at α = 1, c = 1.
    let mut r = rng(4);
    let vs: Vec<f64> = (0..100).map(|_| lw_v(&normal_data(&mut r, 200, 200)).unwrap().statistic).collect();
    let (mv, _) = mean_se(&vs);
    assert!((mv - 1.0).abs() < 0.1, "V mean {mv}");
    let ws: Vec<f64> =
        (0..100).map(|_| lw_w(&normal_data(&mut r, 100, 100), LwRegime::Auto).unwrap().statistic).collect();
    let (mw, _) = mean_se(&ws);
    assert!((mw - 1.0).abs() < 0.1, "W mean {mw}");
}

#[test]
fn scale_invariance() {
    let mut r = rng(5);
    for _ in 0..10 {
        let x = messy_data(&mut r, 30, 12);
        let c = r.random_range(0.1..10.0);
        let y = scaled(&x, c);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs());
        assert!(close(lw_u(&x).unwrap().statistic, lw_u(&y).unwrap().statistic));
        assert!(close(srivastava_s2(&x).unwrap().statistic, srivastava_s2(&y).unwrap().statistic));
        let band = BandSpec::new(2);
        assert!(close(cj_banded(&x, band).unwrap().statistic, cj_banded(&y, band).unwrap().statistic));
    }
}

#[test]
fn cj_columnwise_scale_invariance() {
    let mut r = rng(6);
    let x = messy_data(&mut r, 40, 9);
    let s: Vec<f64> = (0..9).map(|_| r.random_range(0.01..100.0)).collect();
    let y = x.scaled_columns(&s).unwrap();
    for tau in 1..9 {
        let a = cj_banded(&x, BandSpec::new(tau)).unwrap().statistic;
        let b = cj_banded(&y, BandSpec::new(tau)).unwrap().statistic;
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn srivastava_trace_estimator_is_unbiased() {
    let mut r = rng(7);
    let a2: Vec<f64> = (0..500).map(|_| srivastava_moments(&normal_data(&mut r, 50, 20)).unwrap().1).collect();
    let (m, se) = mean_se(&a2);
    assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn srivastava_statistics() {
    let mut r = rng(8);
    let x = normal_data(&mut r, 30, 8);
    let (a1, a2) = srivastava_moments(&x).unwrap();
    let s1 = srivastava_s1(&x).unwrap();
    assert!((s1.statistic - (a2 - 2.0 * a1 + 1.0)).abs() < 1e-14);
    assert!((s1.standardized - 15.0 * s1.statistic).abs() < 1e-12);
    let s2 = srivastava_s2(&x).unwrap();
    assert!((s2.statistic - (a2 / (a1 * a1) - 1.0)).abs() < 1e-12);
    let constant = DataMatrix::new(DMatrix::from_element(5, 3, 1.0)).unwrap();
    assert!(matches!(srivastava_s2(&constant), Err(Error::Calibration { .. })));
    assert!(matches!(srivastava_s1(&normal_data(&mut r, 2, 3)), Err(Error::InsufficientData { .. })));
}

#[test]
fn lc_symmetry_and_degenerate_samples() {
    let mut r = rng(9);
    for _ in 0..20 {
        let p = r.random_range(1..10);
        let (n1, n2) = (r.random_range(4..15), r.random_range(4..15));
        let g = GroupedData::two(messy_data(&mut r, n1, p), messy_data(&mut r, n2, p)).unwrap();
        let a = lc_two(&g).unwrap();
        let b = lc_two(&g.swapped()).unwrap();
        assert_eq!(a.statistic, b.statistic);
    }
    let c = DataMatrix::new(DMatrix::from_element(6, 4, 3.0)).unwrap();
    let g = GroupedData::two(c.clone(), c).unwrap();
    assert!(matches!(lc_two(&g), Err(Error::Calibration { .. })));
}

#[test]
fn lc_is_unbiased_under_equal_covariances() {
    let mut r = rng(10);
    let t: Vec<f64> = (0..500)
        .map(|_| {
            let g = GroupedData::two(normal_data(&mut r, 50, 40), normal_data(&mut r, 50, 40)).unwrap();
            lc_two(&g).unwrap().statistic
        })
        .collect();
    let (m, se) = mean_se(&t);
    assert!(m.abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn clx_cov_identical_samples_and_threshold() {
    let mut r = rng(11);
    let x = messy_data(&mut r, 30, 6);
    let res = clx_cov(&GroupedData::two(x.clone(), x).unwrap()).unwrap();
    assert_eq!(res.statistic, 0.0);
    // q_α + 4 log p − log log p at α = 0.05 and p = 100.
    let lp = 100f64.ln();
    let q = quantile(&NullLaw::ExtremeValueB, 0.05).unwrap();
    let closed = -(8.0 * std::f64::consts::PI).ln() - 2.0 * (1.0 / 0.95f64).ln().ln();
    assert!((q - closed).abs() < 1e-9);
    assert!((q + 4.0 * lp - lp.ln() - 19.610).abs() < 5e-4);
}

#[test]
fn clx_cov_matches_direct_definition() {
    let mut r = rng(12);
    let (x1, x2) = (messy_data(&mut r, 12, 4), messy_data(&mut r, 9, 4));
    let g = GroupedData::two(x1.clone(), x2.clone()).unwrap();
    let theta = |x: &DataMatrix, i: usize, j: usize| {
        let n = x.n() as f64;
        let v = x.values();
        let (mi, mj) = (v.column(i).mean(), v.column(j).mean());
        let s = (0..x.n()).map(|k| (v[(k, i)] - mi) * (v[(k, j)] - mj)).sum::<f64>() / n;
        let t = (0..x.n()).map(|k| ((v[(k, i)] - mi) * (v[(k, j)] - mj) - s).powi(2)).sum::<f64>() / n;
        (s, t)
    };
    let mut want = 0.0f64;
    for j in 0..4 {
        for i in 0..=j {
            let (s1, t1) = theta(&x1, i, j);
            let (s2, t2) = theta(&x2, i, j);
            want = want.max((s1 - s2).powi(2) / (t1 / 12.0 + t2 / 9.0));
        }
    }
    let got = clx_cov(&g).unwrap();
    assert!((got.statistic - want).abs() < 1e-10 * want);
    let lp = 4f64.ln();
    assert!((got.standardized - (want - 4.0 * lp + lp.ln())).abs() < 1e-10 * want);
}

#[test]
fn clx_cov_errors() {
    let mut r = rng(13);
    let mut a = normal_matrix(&mut r, 10, 4);
    let mut b = normal_matrix(&mut r, 10, 4);
    for k in 0..10 {
        a[(k, 2)] = 1.0;
        b[(k, 2)] = -4.0;
    }
    let g = GroupedData::two(DataMatrix::new(a).unwrap(), DataMatrix::new(b).unwrap()).unwrap();
    assert!(matches!(clx_cov(&g), Err(Error::DegeneratePair { i: 0, j: 2, .. })));
    let small = GroupedData::two(normal_data(&mut r, 10, 2), normal_data(&mut r, 10, 2)).unwrap();
    assert!(matches!(clx_cov(&small), Err(Error::UnsupportedDimension { .. })));
}

#[test]
fn qc_index_bookkeeping() {
    let mut r = rng(14);
    let x = messy_data(&mut r, 15, 3);
    let t = qc_banded(&x, BandSpec::new(2)).unwrap();
    assert!((t.statistic - 2.0 * qc_sigma_sq_hat(&x, 0, 2).unwrap()).abs() < 1e-12);
    assert_eq!(qc_pair_count(3, 2), 1);
    assert_eq!(qc_pair_count(10, 1), 45);
    let x = messy_data(&mut r, 20, 8);
    for tau in 1..7 {
        let a = qc_banded(&x, BandSpec::new(tau)).unwrap().statistic;
        let b = qc_banded(&x, BandSpec::new(tau + 1)).unwrap().statistic;
        let lag: f64 = (0..8 - tau).map(|l| qc_sigma_sq_hat(&x, l, tau).unwrap()).sum();
        assert!((a - b - 2.0 * lag).abs() < 1e-10 * (1.0 + a.abs()));
        assert_eq!(qc_pair_count(8, tau) - qc_pair_count(8, tau + 1), 8 - tau);
    }
}

#[test]
fn qc_scale_and_standardization() {
    let mut r = rng(15);
    let x = messy_data(&mut r, 25, 7);
    let res = qc_banded(&x, BandSpec::new(2)).unwrap();
    let mut v: f64 = (0..7).map(|l| qc_sigma_sq_hat(&x, l, 0).unwrap()).sum();
    for q in 1..=2 {
        v += 2.0 * (0..7 - q).map(|l| qc_sigma_sq_hat(&x, l, q).unwrap()).sum::<f64>();
    }
    assert!((res.metadata.tuning["v"] - v).abs() < 1e-10 * v);
    assert!((res.standardized - 25.0 * res.statistic / v / 2.0).abs() < 1e-10);
}

#[test]
fn qc_is_unbiased_under_identity() {
    let mut r = rng(16);
    let t: Vec<f64> =
        (0..500).map(|_| qc_banded(&normal_data(&mut r, 50, 20), BandSpec::new(1)).unwrap().statistic).collect();
    let (m, se) = mean_se(&t);
    assert!(m.abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn cj_duplicate_column_rejects() {
    let mut r = rng(17);
    let mut m = normal_matrix(&mut r, 60, 10);
    for k in 0..60 {
        m[(k, 7)] = 2.0 * m[(k, 1)] + 3.0;
    }
    let x = DataMatrix::new(m).unwrap();
    let res = cj_banded(&x, BandSpec::new(4)).unwrap();
    assert!((res.statistic - 1.0).abs() < 1e-12);
    assert_eq!(res.rejects(0.05), Some(true));
    // The duplicated pair is at lag 6, so a bandwidth of 7 excludes it.
    assert!(cj_banded(&x, BandSpec::new(7)).unwrap().statistic < 0.9);
}

#[test]
fn cj_threshold_and_errors() {
    // Rejection at α = 0.05 and p = 100 happens exactly when nT² ≥ 19.610 (to rounding).
    let lp = 100f64.ln();
    let q = quantile(&NullLaw::ExtremeValueB, 0.05).unwrap();
    assert!((q + 4.0 * lp - lp.ln() - 19.610).abs() < 5e-4);
    let mut r = rng(18);
    let mut m = normal_matrix(&mut r, 10, 4);
    for k in 0..10 {
        m[(k, 3)] = 5.0;
    }
    let x = DataMatrix::new(m).unwrap();
    assert!(matches!(cj_banded(&x, BandSpec::new(1)), Err(Error::DegenerateVariable { index: 3, .. })));
    assert!(matches!(cj_banded(&x, BandSpec::new(4)), Err(Error::InvalidParameter(_))));
    assert!(matches!(qc_banded(&x, BandSpec::new(0)), Err(Error::InvalidParameter(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn clx_cov_nonnegative_and_zero_iff_equal(seed in any::<u64>(), p in 3usize..8, n1 in 5usize..15, n2 in 5usize..15) {
        let mut r = rng(seed);
        let g = GroupedData::two(messy_data(&mut r, n1, p), messy_data(&mut r, n2, p)).unwrap();
        let m = clx_cov(&g).unwrap().statistic;
        prop_assert!(m > 0.0);
        let same = GroupedData::two(g.groups()[0].clone(), g.groups()[0].clone()).unwrap();
        prop_assert_eq!(clx_cov(&same).unwrap().statistic, 0.0);
    }

    #[test]
    fn p_values_in_unit_interval(seed in any::<u64>(), n in 6usize..20, p in 3usize..10) {
        let mut r = rng(seed);
        let x = messy_data(&mut r, n, p);
        let g = GroupedData::two(messy_data(&mut r, n, p), messy_data(&mut r, n + 1, p)).unwrap();
        let results = [
            lw_u(&x).unwrap(),
            lw_w(&x, LwRegime::Auto).unwrap(),
            srivastava_s1(&x).unwrap(),
            srivastava_s2(&x).unwrap(),
            lc_two(&g).unwrap(),
            clx_cov(&g).unwrap(),
            qc_banded(&x, BandSpec::new(1)).unwrap(),
            cj_banded(&x, BandSpec::new(1)).unwrap(),
        ];
        for res in results {
            let pv = res.p_value.unwrap();
            prop_assert!((0.0..=1.0).contains(&pv));
        }
    }
}
