mod common;

use common::*;
use hdtest::ustat::*;
use hdtest::{DataMatrix, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn constant_rows(n: usize, row: &[f64]) -> DataMatrix {
    DataMatrix::from_rows(&vec![row.to_vec(); n]).unwrap()
}

/// Leave-two-out trace estimator of tr Σ² with explicit means.
fn tr_sigma2_literal(x: &DataMatrix) -> f64 {
    let n = x.n();
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let mut mean = DVector::zeros(x.p());
            for i in (0..n).filter(|&i| i != j && i != k) {
                mean += x.row(i);
            }
            mean /= (n - 2) as f64;
            let (xj, xk) = (x.row(j), x.row(k));
            s += xk.dot(&(&xj - &mean)) * xj.dot(&(&xk - &mean));
        }
    }
    s / (n * (n - 1)) as f64
}

fn tr_cross_literal(x1: &DataMatrix, x2: &DataMatrix) -> f64 {
    let loo = |x: &DataMatrix, j: usize| {
        let mut m = DVector::zeros(x.p());
        for i in (0..x.n()).filter(|&i| i != j) {
            m += x.row(i);
        }
        m / (x.n() - 1) as f64
    };
    let mut s = 0.0;
    for j in 0..x1.n() {
        for k in 0..x2.n() {
            let (a, b) = (x1.row(j), x2.row(k));
            s += b.dot(&(&a - loo(x1, j))) * a.dot(&(&b - loo(x2, k)));
        }
    }
    s / (x1.n() * x2.n()) as f64
}

fn tr_r2_literal(x: &DataMatrix) -> f64 {
    let (n, p) = (x.n(), x.p());
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rest: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
            let mut mean = DVector::zeros(p);
            for &k in &rest {
                mean += x.row(k);
            }
            mean /= (n - 2) as f64;
            let mut dinv = DVector::zeros(p);
            for c in 0..p {
                let v: f64 = rest.iter().map(|&k| (x.values()[(k, c)] - mean[c]).powi(2)).sum::<f64>() / (n - 3) as f64;
                dinv[c] = 1.0 / v;
            }
            let (xi, xj) = (x.row(i), x.row(j));
            let f1 = xi.component_mul(&dinv).dot(&(&xj - &mean));
            let f2 = xj.component_mul(&dinv).dot(&(&xi - &mean));
            s += f1 * f2;
        }
    }
    s / (n * (n - 1)) as f64
}

#[test]
fn power_sums_examples() {
    let x = [1.0, -2.0, 0.5];
    let nx2: f64 = x.iter().map(|v| v * v).sum();
    let ps = power_sums(&constant_rows(4, &x));
    for c in 0..3 {
        assert_eq!(ps.xsum[c], 4.0 * x[c]);
        assert_eq!(ps.x3[c], 4.0 * nx2 * x[c]);
    }
    assert_eq!(ps.a, 4.0 * nx2);
    assert_eq!(ps.b, 4.0 * nx2 * nx2);

    let single = PowerSums::from_matrix(&DMatrix::from_element(1, 1, 2.0));
    assert_eq!(single.a, 4.0);
    assert_eq!(single.b, 16.0);

    let mut r = rng(3);
    let ps = power_sums(&messy_data(&mut r, 9, 4));
    assert!((ps.x2.trace() - ps.a).abs() < 1e-12 * ps.a);
}

#[test]
fn sigma2_oracle_agreement() {
    let mut r = rng(11);
    for _ in 0..50 {
        let n = 6 + r.random_range(0usize..3);
        let p = 1 + r.random_range(0usize..5);
        let x = messy_data(&mut r, n, p);
        let fast = sigma2_hat_fast(&x).unwrap();
        let slow = sigma2_hat_oracle(&x).unwrap();
        assert!(rel_err(fast, slow) <= 1e-9, "n={n} p={p}: {fast} vs {slow}");
    }
}

#[test]
fn sigma2_degenerate_and_caps() {
    let x = constant_rows(7, &[1.0, 2.0]);
    assert_eq!(sigma2_hat_oracle(&x).unwrap(), 0.0);
    assert!(sigma2_hat_fast(&x).unwrap().abs() < 1e-12);
    let mut r = rng(1);
    let big = normal_data(&mut r, 11, 2);
    assert_eq!(sigma2_hat_oracle(&big), Err(Error::OracleCap { n: 11, cap: 10 }));
    let small = normal_data(&mut r, 5, 2);
    assert!(matches!(sigma2_hat_fast(&small), Err(Error::InsufficientData { .. })));
    assert!(matches!(sigma2_hat_oracle(&small), Err(Error::InsufficientData { .. })));
}

#[test]
fn sigma2_permutation_invariant() {
    let mut r = rng(5);
    let x = messy_data(&mut r, 7, 3);
    let y = permute_rows(&x, &mut r);
    assert!(rel_err(sigma2_hat_oracle(&x).unwrap(), sigma2_hat_oracle(&y).unwrap()) < 1e-12);
    assert!(rel_err(sigma2_hat_fast(&x).unwrap(), sigma2_hat_fast(&y).unwrap()) < 1e-12);
}

#[test]
fn sigma2_enum4_matches_fast() {
    let mut r = rng(8);
    for n in [6, 9, 14] {
        let x = messy_data(&mut r, n, 3);
        assert!(rel_err(sigma2_hat_enum4(&x).unwrap(), sigma2_hat_fast(&x).unwrap()) < 1e-9);
    }
}

#[test]
fn index_sums_match_enumeration() {
    let mut r = rng(21);
    for _ in 0..20 {
        let n = 2 + r.random_range(0usize..7);
        let p = 1 + r.random_range(0usize..4);
        let x = messy_data(&mut r, n, p);
        let closed = index_sums_closed(&power_sums(&x));
        let enumerated = index_sums_enumerated(&x).unwrap();
        for (k, (c, e)) in closed.iter().zip(&enumerated).enumerate() {
            let scale = e.abs().max(1.0);
            assert!((c - e).abs() <= 1e-9 * scale, "I{} n={n}: {c} vs {e}", k + 1);
        }
    }
}

#[test]
fn sigma2_monte_carlo_mean() {
    // Normal data, Σ = I: E σ̂² = 2 tr Σ² = 2p.
    let (n, p, reps) = (200, 50, 500);
    let mut r = rng(2024);
    let vals: Vec<f64> = (0..reps).map(|_| sigma2_hat_fast(&normal_data(&mut r, n, p)).unwrap()).collect();
    let (m, se) = mean_se(&vals);
    assert!((m - 100.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn lc_kernels_match_enumeration() {
    let mut r = rng(31);
    for _ in 0..20 {
        let n = 4 + r.random_range(0usize..5);
        let p = 1 + r.random_range(0usize..4);
        let x = messy_data(&mut r, n, p);
        let (f, o) = (lc_a(&x).unwrap(), lc_a_oracle(&x).unwrap());
        assert!(rel_err(f, o) <= 1e-9, "A: {f} vs {o}");
        let n2 = 2 + r.random_range(0usize..7);
        let y = messy_data(&mut r, n2, p);
        let n1 = 2 + r.random_range(0usize..7);
        let x2 = messy_data(&mut r, n1, p);
        let (f, o) = (lc_c(&x2, &y).unwrap(), lc_c_oracle(&x2, &y).unwrap());
        assert!(rel_err(f, o) <= 1e-9, "C: {f} vs {o}");
    }
}

#[test]
fn lc_kernels_degenerate() {
    let c = constant_rows(6, &[1.0, -1.0, 3.0]);
    assert_eq!(lc_a_oracle(&c).unwrap(), 0.0);
    assert!(lc_a(&c).unwrap().abs() < 1e-12);
    let mut r = rng(4);
    let y = messy_data(&mut r, 5, 3);
    assert!(lc_c_oracle(&c, &y).unwrap().abs() < 1e-9);
    assert!(lc_c(&c, &y).unwrap().abs() < 1e-12);
    assert!(lc_c(&y, &c).unwrap().abs() < 1e-12);
}

#[test]
fn lc_a_monte_carlo_mean() {
    // Σ = diag(2, 1): tr Σ² = 5.
    let mut r = rng(77);
    let vals: Vec<f64> = (0..500)
        .map(|_| {
            let z = normal_matrix(&mut r, 60, 2);
            let x = DMatrix::from_fn(60, 2, |i, j| z[(i, j)] * if j == 0 { 2f64.sqrt() } else { 1.0 });
            lc_a(&DataMatrix::new(x).unwrap()).unwrap()
        })
        .collect();
    let (m, se) = mean_se(&vals);
    assert!((m - 5.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn lc_c_monte_carlo_mean() {
    let mut r = rng(78);
    let vals: Vec<f64> =
        (0..500).map(|_| lc_c(&normal_data(&mut r, 50, 3), &normal_data(&mut r, 50, 3)).unwrap()).collect();
    let (m, se) = mean_se(&vals);
    assert!((m - 3.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn qc_matches_enumeration() {
    let mut r = rng(41);
    for _ in 0..20 {
        let n = 4 + r.random_range(0usize..5);
        let x = messy_data(&mut r, n, 4);
        for (l, q) in [(0, 1), (1, 2), (0, 3), (2, 1)] {
            let (f, o) = (qc_sigma_sq_hat(&x, l, q).unwrap(), qc_sigma_sq_hat_oracle(&x, l, q).unwrap());
            assert!(rel_err(f, o) <= 1e-9, "({l},{q}): {f} vs {o}");
        }
    }
}

#[test]
fn qc_edge_cases() {
    let mut r = rng(42);
    let mut m = normal_matrix(&mut r, 8, 3);
    m.column_mut(0).fill(0.0);
    let x = DataMatrix::new(m).unwrap();
    assert_eq!(qc_sigma_sq_hat(&x, 0, 1).unwrap(), 0.0);
    assert!(matches!(qc_sigma_sq_hat(&x, 1, 2), Err(Error::IndexOutOfRange(_))));
    assert!(matches!(qc_sigma_sq_hat(&x, 3, 0), Err(Error::IndexOutOfRange(_))));
}

#[test]
fn qc_monte_carlo_mean_zero() {
    let mut r = rng(43);
    let vals: Vec<f64> = (0..500).map(|_| qc_sigma_sq_hat(&normal_data(&mut r, 50, 3), 0, 1).unwrap()).collect();
    let (m, se) = mean_se(&vals);
    assert!(m.abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn cq_traces_match_literal() {
    let mut r = rng(51);
    for _ in 0..10 {
        let x = messy_data(&mut r, 7, 3);
        let y = messy_data(&mut r, 5, 3);
        assert!(rel_err(tr_sigma2_hat_cq(&x).unwrap(), tr_sigma2_literal(&x)) < 1e-10);
        assert!(rel_err(tr_cross_hat_cq(&x, &y).unwrap(), tr_cross_literal(&x, &y)) < 1e-10);
        let (a, b) = (tr_cross_hat_cq(&x, &y).unwrap(), tr_cross_hat_cq(&y, &x).unwrap());
        assert!(rel_err(a, b) < 1e-10, "swap {a} vs {b}");
        let z = permute_rows(&x, &mut r);
        assert!(rel_err(tr_sigma2_hat_cq(&x).unwrap(), tr_sigma2_hat_cq(&z).unwrap()) < 1e-12);
    }
    let c = constant_rows(6, &[2.0, 1.0]);
    assert!(tr_sigma2_hat_cq(&c).unwrap().abs() < 1e-12);
    let y = messy_data(&mut r, 5, 2);
    assert!(tr_cross_hat_cq(&c, &y).unwrap().abs() < 1e-12);
}

#[test]
fn cq_traces_monte_carlo() {
    let mut r = rng(52);
    let v: Vec<f64> = (0..500).map(|_| tr_sigma2_hat_cq(&normal_data(&mut r, 100, 20)).unwrap()).collect();
    let (m, se) = mean_se(&v);
    assert!((m - 20.0).abs() <= 3.0 * se, "tr Σ²: mean {m} se {se}");
    let v: Vec<f64> = (0..500)
        .map(|_| tr_cross_hat_cq(&normal_data(&mut r, 50, 10), &normal_data(&mut r, 50, 10)).unwrap())
        .collect();
    let (m, se) = mean_se(&v);
    assert!((m - 10.0).abs() <= 3.0 * se, "tr Σ1Σ2: mean {m} se {se}");
}

#[test]
fn tr_r2_matches_literal_and_invariances() {
    let mut r = rng(61);
    let x = messy_data(&mut r, 9, 4);
    let fast = tr_r2_hat_pa(&x).unwrap();
    assert!(rel_err(fast, tr_r2_literal(&x)) < 1e-10);
    let y = permute_rows(&x, &mut r);
    assert!(rel_err(fast, tr_r2_hat_pa(&y).unwrap()) < 1e-12);
    let scaled = x.scaled_columns(&[3.0, 0.2, 1.0, 7.5]).unwrap();
    assert!(rel_err(fast, tr_r2_hat_pa(&scaled).unwrap()) < 1e-10);
}

#[test]
fn tr_r2_monte_carlo() {
    // Normal, R = I, p = 10, n = 100. The estimator is ratio-consistent; its
    // exact mean is p·m²/((m−2)(m−4)) with m = n − 3 because of E[s⁻⁴].
    let (n, p) = (100, 10);
    let mut r = rng(62);
    let v: Vec<f64> = (0..500).map(|_| tr_r2_hat_pa(&normal_data(&mut r, n, p)).unwrap()).collect();
    let (mean, se) = mean_se(&v);
    let m = (n - 3) as f64;
    let exact = p as f64 * m * m / ((m - 2.0) * (m - 4.0));
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} se {se} exact {exact}");
    assert!((mean / p as f64 - 1.0).abs() < 0.1);
}

#[test]
fn falling_factorials() {
    assert_eq!(falling(10, 6), 151200.0);
    assert_eq!(falling(5, 0), 1.0);
    assert_eq!(falling(3, 4), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fast_forms_equal_oracles(seed in any::<u64>(), n in 6usize..=8, p in 1usize..=4) {
        let mut r = rng(seed);
        let x = messy_data(&mut r, n, p);
        prop_assert!(rel_err(sigma2_hat_fast(&x).unwrap(), sigma2_hat_oracle(&x).unwrap()) <= 1e-9);
        prop_assert!(rel_err(lc_a(&x).unwrap(), lc_a_oracle(&x).unwrap()) <= 1e-9);
        let y = messy_data(&mut r, n - 2, p);
        prop_assert!(rel_err(lc_c(&x, &y).unwrap(), lc_c_oracle(&x, &y).unwrap()) <= 1e-9);
    }

    #[test]
    fn estimators_are_row_permutation_invariant(seed in any::<u64>(), n in 6usize..=10, p in 2usize..=4) {
        let mut r = rng(seed);
        let x = messy_data(&mut r, n, p);
        let y = permute_rows(&x, &mut r);
        for (a, b) in [
            (lc_a(&x).unwrap(), lc_a(&y).unwrap()),
            (qc_sigma_sq_hat(&x, 0, 1).unwrap(), qc_sigma_sq_hat(&y, 0, 1).unwrap()),
            (tr_sigma2_hat_cq(&x).unwrap(), tr_sigma2_hat_cq(&y).unwrap()),
            (tr_r2_hat_pa(&x).unwrap(), tr_r2_hat_pa(&y).unwrap()),
        ] {
            prop_assert!(rel_err(a, b) < 1e-9);
        }
    }
}
